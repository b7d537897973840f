//! The concatenated contour Gamma(eps, R) = Gamma_- u Gamma_c u Gamma_d and
//! the contour-integral (Laplace-type) representation of the propagator:
//!
//!   <phi, exp(-itH) psi> = (1/2 pi i) int_Gamma dz exp(-itz) *
//!                          (psi^theta)^T (H^theta - z)^{-1} phi^theta
//!
//! Gamma_- runs along the real axis from -R to R with a hole around the
//! ground eigenvalue, Gamma_c hops over it through the upper half-plane,
//! and Gamma_d descends into the lower half-plane at angle nu/4 from both
//! ends, truncated where the exp(-itz) damping makes the tail negligible.

use crate::error::{Error, Result};
use crate::linalg::HermitianDecomp;
use crate::quad::{self, GradeEnd, Panels};
use num_complex::Complex64 as C64;

/// Propagator times below this are rejected: the ray truncation length
/// diverges as t -> 0.
pub const T_MIN: f64 = 0.1;
/// Ray damping threshold: rays are cut where exp(-t u sin(nu/4)) drops
/// below this.
pub const RAY_DAMPING: f64 = 1e-12;

/// One oriented piece of a contour.
#[derive(Debug, Clone)]
pub enum SegmentKind {
    /// Straight segment from `a` to `b` (complex endpoints allow rays).
    Line { a: C64, b: C64 },
    /// Circular arc z = center + radius exp(i phi), phi from phi0 to phi1.
    Arc { center: C64, radius: f64, phi0: f64, phi1: f64 },
}

/// Segment with its quadrature subdivision (panels in the parameter tau in
/// [0, 1]) and Gauss order per panel.
#[derive(Debug, Clone)]
pub struct Segment {
    pub kind: SegmentKind,
    pub panels: Panels,
    pub order: usize,
}

impl Segment {
    fn point(&self, tau: f64) -> (C64, C64) {
        match &self.kind {
            SegmentKind::Line { a, b } => (a + (b - a) * tau, b - a),
            SegmentKind::Arc { center, radius, phi0, phi1 } => {
                let phi = phi0 + (phi1 - phi0) * tau;
                let e = C64::new(0.0, phi).exp();
                (center + radius * e, C64::new(0.0, phi1 - phi0) * radius * e)
            }
        }
    }

    /// Quadrature nodes (z_k, w_k) with w_k = gauss weight * dz/dtau.
    pub fn nodes(&self) -> Vec<(C64, C64)> {
        let gl = quad::rule(self.order);
        let mut out = Vec::with_capacity(self.panels.len() * self.order);
        for &(a, b) in &self.panels {
            for (tau, w) in gl.mapped(a, b) {
                let (z, dz) = self.point(tau);
                out.push((z, dz * w));
            }
        }
        out
    }

    pub fn endpoints(&self) -> (C64, C64) {
        (self.point(0.0).0, self.point(1.0).0)
    }
}

/// Oriented chain of segments with quadrature data.
#[derive(Debug, Clone)]
pub struct Contour {
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn nodes(&self) -> Vec<(C64, C64)> {
        self.segments.iter().flat_map(|s| s.nodes()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.panels.len() * s.order).sum()
    }

    /// Same panels, doubled Gauss order: the node-doubling refinement.
    pub fn refined(&self) -> Contour {
        Contour {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { kind: s.kind.clone(), panels: s.panels.clone(), order: 2 * s.order })
                .collect(),
        }
    }

    /// Chain connectivity defect: max gap between consecutive endpoints.
    pub fn connectivity_defect(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].endpoints().1 - w[1].endpoints().0).norm())
            .fold(0.0, f64::max)
    }

    /// int f(z) dz along the contour.
    pub fn integrate<F: FnMut(C64) -> C64>(&self, mut f: F) -> C64 {
        self.nodes().iter().map(|&(z, w)| f(z) * w).sum()
    }

    /// CSV rows (re z, im z, re w, im w) for audit.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_z,im_z,re_w,im_w\n");
        for (z, w) in self.nodes() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", z.re, z.im, w.re, w.im));
        }
        s
    }
}

/// Build parameters of Gamma(eps, R).
#[derive(Debug, Clone)]
pub struct GammaSpec {
    pub epsilon: f64,
    pub r_large: f64,
    pub nu: f64,
    pub lambda0: C64,
    /// Propagator time the rays must support (sets their truncation).
    pub t_target: f64,
    /// Gauss order per panel.
    pub order: usize,
    /// Extra (center, scale) pairs on the real part to refine around, e.g.
    /// the resonance position with its width.
    pub refine: Vec<(f64, f64)>,
    /// Additional real points to hop over with an upper semicircle of the
    /// given radius. Needed when a spectral point sits exactly on the real
    /// axis, e.g. the bare level e1 in the decoupled g = 0 model.
    pub indent: Vec<(f64, f64)>,
}

impl GammaSpec {
    pub fn new(epsilon: f64, r_large: f64, nu: f64, lambda0: C64, t_target: f64) -> Self {
        GammaSpec {
            epsilon,
            r_large,
            nu,
            lambda0,
            t_target,
            order: 16,
            refine: Vec::new(),
            indent: Vec::new(),
        }
    }
}

/// Assemble the concatenated contour. Orientation: up the left ray to -R,
/// along the real axis, over the hole at lambda0 (and over any extra indent
/// points) through the upper half-plane, on to +R, and down the right ray.
pub fn build_gamma(spec: &GammaSpec) -> Result<Contour> {
    let l0 = spec.lambda0;
    let (eps, big_r, nu, t) = (spec.epsilon, spec.r_large, spec.nu, spec.t_target);
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if eps >= big_r - l0.norm() {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {eps} must be smaller than R - |lambda0| = {}",
            big_r - l0.norm()
        )));
    }
    if t < T_MIN {
        return Err(Error::InvalidParameter(format!(
            "propagator time {t} below t_min = {T_MIN}: ray truncation degrades as t -> 0"
        )));
    }
    if !(nu > 0.0 && nu < crate::modes::THETA_IM_MAX) {
        return Err(Error::InvalidParameter(format!("nu = {nu} outside (0, pi/16)")));
    }
    let u_max = (1.0 / RAY_DAMPING).ln() / (t * (nu / 4.0).sin());
    // oscillation scale of exp(-itz) on the real axis
    let osc_h = (2.0 * std::f64::consts::PI / t).min(1.0);
    let damping_scale = 1.0 / (t * (nu / 4.0).sin());

    // Holes on the real path: the lambda0 excision plus extra indents. Arcs
    // are centered on the real axis; a pole with a small imaginary part
    // (|Im| < radius) stays strictly between arc and rays either way.
    let mut holes: Vec<(f64, f64)> = vec![(l0.re, eps)];
    holes.extend_from_slice(&spec.indent);
    holes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in holes.windows(2) {
        if w[0].0 + w[0].1 >= w[1].0 - w[1].1 {
            return Err(Error::InvalidParameter(
                "contour holes overlap; shrink epsilon or the indent radii".into(),
            ));
        }
    }
    if holes.first().unwrap().0 - holes.first().unwrap().1 <= -big_r
        || holes.last().unwrap().0 + holes.last().unwrap().1 >= big_r
    {
        return Err(Error::InvalidParameter("hole extends beyond [-R, R]".into()));
    }

    let ray_dir_left = C64::new(0.0, nu / 4.0).exp();
    let ray_dir_right = C64::new(0.0, -nu / 4.0).exp();

    // exp(-itz) oscillates with u along the rays at rate t cos(nu/4);
    // a 16-point panel keeps full accuracy up to ~8 radians of phase
    let ray_panel_width = (8.0 / (t * (nu / 4.0).cos())).min(damping_scale / 4.0);
    let ray_panels = || -> Panels { quad::uniform_panels(0.0, 1.0, ray_panel_width / u_max) };

    let mut segments = Vec::new();
    segments.push(Segment {
        kind: SegmentKind::Line {
            a: C64::new(-big_r, 0.0) - u_max * ray_dir_left,
            b: C64::new(-big_r, 0.0),
        },
        panels: ray_panels(),
        order: spec.order,
    });

    // alternate real lines and hole arcs
    let real_segment = |a: f64, b: f64| -> Segment {
        let h_min = (eps / 8.0).min(osc_h / 4.0);
        let mut base = quad::graded_panels(a, b, GradeEnd::Left, h_min, osc_h, 1.6);
        // grade toward both ends: mirror the left-graded panels near b
        let tail = quad::graded_panels(a, b, GradeEnd::Right, h_min, osc_h, 1.6);
        let mid = 0.5 * (a + b);
        base.retain(|&(x, _)| x < mid);
        let mut keep: Panels = tail.into_iter().filter(|&(x, _)| x >= mid).collect();
        if let (Some(last), Some(first)) = (base.last().copied(), keep.first().copied()) {
            if (last.1 - first.0).abs() > 1e-14 {
                base.push((last.1, first.0));
            }
        }
        base.append(&mut keep);
        let panels = refine_panels(base, &spec.refine);
        Segment {
            kind: SegmentKind::Line { a: C64::new(a, 0.0), b: C64::new(b, 0.0) },
            panels: to_unit_panels(panels, a, b),
            order: spec.order,
        }
    };

    let mut cursor = -big_r;
    for &(center, radius) in &holes {
        segments.push(real_segment(cursor, center - radius));
        segments.push(Segment {
            kind: SegmentKind::Arc {
                center: C64::new(center, 0.0),
                radius,
                phi0: std::f64::consts::PI,
                phi1: 0.0,
            },
            panels: quad::uniform_panels(0.0, 1.0, 0.25),
            order: spec.order,
        });
        cursor = center + radius;
    }
    segments.push(real_segment(cursor, big_r));

    segments.push(Segment {
        kind: SegmentKind::Line {
            a: C64::new(big_r, 0.0),
            b: C64::new(big_r, 0.0) + u_max * ray_dir_right,
        },
        panels: ray_panels(),
        order: spec.order,
    });

    Ok(Contour { segments })
}

fn to_unit_panels(panels: Panels, a: f64, b: f64) -> Panels {
    let len = b - a;
    panels.into_iter().map(|(x, y)| ((x - a) / len, (y - a) / len)).collect()
}

/// Split panels further if a refinement point (center, scale) lies inside.
fn refine_panels(base: Panels, refine: &[(f64, f64)]) -> Panels {
    let mut out = Vec::new();
    for (a, b) in base {
        let mut handled = false;
        for &(c, s) in refine {
            if c > a && c < b && (b - a) > s {
                let mut sub = quad::peak_panels(a, b, c, (s / 4.0).max(1e-12), b - a);
                out.append(&mut sub);
                handled = true;
                break;
            }
        }
        if !handled {
            // also shrink panels that are merely near a refinement point
            let near = refine
                .iter()
                .any(|&(c, s)| (c - a).abs() < 3.0 * s || (c - b).abs() < 3.0 * s);
            if near {
                let quarter = (b - a) / 4.0;
                for k in 0..4 {
                    out.push((a + k as f64 * quarter, a + (k + 1) as f64 * quarter));
                }
            } else {
                out.push((a, b));
            }
        }
    }
    out
}

/// Contour quadrature of the propagator representation:
/// (1 / 2 pi i) sum_k w_k exp(-i t z_k) matel(z_k),
/// where `matel` evaluates (psi^theta)^T (H^theta - z)^{-1} phi^theta.
pub fn laplace_propagator<F>(contour: &Contour, t: f64, mut matel: F) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    if t < T_MIN {
        return Err(Error::InvalidParameter(format!(
            "propagator time {t} below t_min = {T_MIN}"
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (z, w) in contour.nodes() {
        let phase = (C64::new(0.0, -t) * z).exp();
        acc += matel(z)? * phase * w;
    }
    Ok(acc / C64::new(0.0, 2.0 * std::f64::consts::PI))
}

/// <phi, exp(-itH) psi> through the Hermitian eigendecomposition.
pub fn direct_propagator(decomp: &HermitianDecomp, phi: &[C64], psi: &[C64], t: f64) -> C64 {
    let phi_ov = decomp.overlaps(phi);
    let psi_ov = decomp.overlaps(psi);
    decomp.propagator_matel(&phi_ov, &psi_ov, t)
}

/// One refinement level of the propagator-identity check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LaplaceLevel {
    pub nodes: usize,
    pub defect: f64,
    pub contour_re: f64,
    pub contour_im: f64,
}

/// Result of `laplace_identity_defect`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LaplaceReport {
    pub t: f64,
    pub epsilon: f64,
    pub r_large: f64,
    pub direct_re: f64,
    pub direct_im: f64,
    /// |phi| |psi| normalization of the defect tolerance.
    pub scale: f64,
    pub levels: Vec<LaplaceLevel>,
}

/// Compare the contour representation against the Hermitian propagator for
/// phi = psi = sigma_1 Psi_{lambda_0}, over `levels` node-doubling stages.
pub fn laplace_identity_defect(
    model: &crate::hamiltonian::Model,
    t: f64,
    epsilon: f64,
    r_large: f64,
    base_order: usize,
    levels: usize,
) -> Result<LaplaceReport> {
    let rd = crate::spectral::resonances_refining(model, 4)?;
    let h_theta = model.hamiltonian()?.to_dense();
    let ue = crate::spectral::UEvaluator::new(model, &rd, &h_theta)?;

    // Hermitian side: sigma_1 applied to the theta = 0 ground state
    let h0 = model.hamiltonian_undilated()?.to_dense();
    let hd = HermitianDecomp::new(&h0)?;
    let gidx = hd
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty spectrum")
        .0;
    let v0 = hd.vectors.column(gidx);
    let target = model.atomic_vacuum(crate::hamiltonian::SPIN_DOWN);
    let overlap: C64 = v0.iter().zip(&target).map(|(v, t)| v.conj() * t).sum();
    let psi0: Vec<C64> = v0.iter().map(|v| v * overlap).collect();
    let sigma_psi = model.apply_sigma1(&psi0);
    let direct = direct_propagator(&hd, &sigma_psi, &sigma_psi, t);
    let scale: f64 = sigma_psi.iter().map(|v| v.norm_sqr()).sum();

    let mut spec = GammaSpec::new(epsilon, r_large, model.params.theta.im, rd.lambda0, t);
    spec.order = base_order;
    if model.params.g == 0.0 {
        // decoupled model: the bare level sits exactly on the real axis
        spec.indent = vec![(model.params.e1, epsilon)];
    } else {
        spec.refine = vec![(rd.lambda1.re, rd.lambda1.im.abs().max(1e-3))];
    }
    let mut contour = build_gamma(&spec)?;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let value = laplace_propagator(&contour, t, |z| Ok(ue.eval(z)))?;
        out.push(LaplaceLevel {
            nodes: contour.node_count(),
            defect: (value - direct).norm(),
            contour_re: value.re,
            contour_im: value.im,
        });
        contour = contour.refined();
    }
    Ok(LaplaceReport {
        t,
        epsilon,
        r_large,
        direct_re: direct.re,
        direct_im: direct.im,
        scale,
        levels: out,
    })
}
