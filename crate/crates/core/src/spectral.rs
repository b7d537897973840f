//! Non-Hermitian eigensolving for the dilated Hamiltonian: resonance
//! tracking by coupling-constant homotopy, dilated eigenstates through
//! bilinear spectral projectors, resolvent solves, the scalar function u(z),
//! and the spectral-region diagnostics.

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::linalg::{EigenDecomp, HermitianDecomp, ShiftedLu};
use crate::modes::DilationParam;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Residual tolerance for resolvent solves, relative to the data norm.
pub const RESOLVENT_TOL: f64 = 1e-10;
/// Relative eigenvalue residual accepted when tracking resonances.
pub const EIGEN_TOL: f64 = 1e-12;
/// Bilinear norms below this (for unit Euclidean vectors) flag a
/// numerically defective pair.
pub const QUASI_NULL_TOL: f64 = 1e-8;

/// Resonance eigenpairs of one dilated Hamiltonian, with the normalization
/// data the scattering formulas need.
pub struct ResonanceData {
    /// Eigenvalue continued from 0 at g = 0 (dressed ground state).
    pub lambda0: C64,
    /// Eigenvalue continued from e1 at g = 0 (the resonance).
    pub lambda1: C64,
    /// Right eigenvectors, bilinear-normalized: v^T v = 1.
    pub v0: Array1<C64>,
    pub v1: Array1<C64>,
    /// Dilated eigenstates Psi_i^theta = P_i^theta (phi_i (x) Omega).
    pub psi0_theta: Array1<C64>,
    pub psi1_theta: Array1<C64>,
    /// Euclidean norm of the undilated ground state Psi_{lambda_0} at
    /// theta = 0 (the prefactor of the scattering formulas).
    pub norm0: f64,
    /// Relative eigen-residuals.
    pub residual0: f64,
    pub residual1: f64,
}

/// Scalars of a `ResonanceData`, serializable for run summaries.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceSummary {
    pub lambda0_re: f64,
    pub lambda0_im: f64,
    pub lambda1_re: f64,
    pub lambda1_im: f64,
    pub norm0: f64,
    pub residual0: f64,
    pub residual1: f64,
    pub im_lambda0_small: bool,
    pub im_lambda1_nonpositive: bool,
}

impl ResonanceData {
    pub fn summary(&self) -> ResonanceSummary {
        ResonanceSummary {
            lambda0_re: self.lambda0.re,
            lambda0_im: self.lambda0.im,
            lambda1_re: self.lambda1.re,
            lambda1_im: self.lambda1.im,
            norm0: self.norm0,
            residual0: self.residual0,
            residual1: self.residual1,
            im_lambda0_small: self.lambda0.im.abs() <= 1e-6,
            im_lambda1_nonpositive: self.lambda1.im <= 1e-12,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }
}

/// Follow an eigenbranch by maximal bilinear spectral weight.
///
/// Plain nearest-eigenvalue tracking fails in this model: the massless
/// spectrum is gapless, so "previous state + soft boson" eigenvalues
/// accumulate arbitrarily close to the dressed levels. Euclidean vector
/// overlaps also blur, because eigenvectors of the non-normal H^theta are
/// far from orthogonal near the rotated band. The residue of the tracked
/// channel at each pole, |(v^T w)^2 / (v^T v)|, separates the branches by
/// more than an order of magnitude.
fn track_by_overlap(
    decomp: &EigenDecomp,
    prev_vec: &Array1<C64>,
    g: f64,
) -> Result<(usize, C64)> {
    let n = decomp.dim();
    let wnorm2: f64 = prev_vec.iter().map(|v| v.norm_sqr()).sum();
    let mut best = (usize::MAX, 0.0_f64);
    let mut second = (usize::MAX, 0.0_f64);
    for i in 0..n {
        let col = decomp.vectors.column(i);
        let vtw: C64 = col.iter().zip(prev_vec.iter()).map(|(v, p)| v * p).sum();
        let vtv = decomp.bilinear[i];
        if vtv.norm() < 1e-14 {
            continue; // numerically defective direction, never a clean branch
        }
        let weight = (vtw * vtw / vtv).norm() / wnorm2;
        if weight > best.1 {
            second = best;
            best = (i, weight);
        } else if weight > second.1 {
            second = (i, weight);
        }
    }
    if best.0 == usize::MAX {
        return Err(Error::Backend("empty spectrum".into()));
    }
    // Comparable weights on two branches: the continuation step is too
    // coarse to identify the branch.
    if second.0 != usize::MAX && second.1 > 0.5 * best.1 {
        return Err(Error::TrackingAmbiguity {
            g,
            first: decomp.values[best.0],
            second: decomp.values[second.0],
        });
    }
    Ok((best.0, decomp.values[best.0]))
}

/// Normalize v so that v^T v = 1. Errors on a quasi-null bilinear norm.
fn bilinear_normalize(v: &mut Array1<C64>) -> Result<()> {
    let euclid: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= euclid;
    }
    let vtv: C64 = v.iter().map(|x| x * x).sum();
    if vtv.norm() < QUASI_NULL_TOL {
        return Err(Error::DefectivePair { norm: vtv.norm() });
    }
    let root = vtv.sqrt();
    for x in v.iter_mut() {
        *x /= root;
    }
    Ok(())
}

/// Track the two distinguished eigenvalues from g = 0 to the model's g by
/// nearest-eigenvalue continuation along a homotopy in the coupling.
///
/// `steps` is clamped to >= 4; each step does a dense eigensolve.
pub fn eigen_resonances(model: &Model, steps: usize) -> Result<ResonanceData> {
    let steps = steps.max(4);
    let theta = model.params.theta;
    let mut lambda0;
    let mut lambda1 = C64::new(model.params.e1, 0.0);
    let mut w0 = Array1::from(model.atomic_vacuum(crate::hamiltonian::SPIN_DOWN));
    let mut w1 = Array1::from(model.atomic_vacuum(crate::hamiltonian::SPIN_UP));
    let mut decomp_at_g: Option<EigenDecomp> = None;
    let mut idx = (0usize, 0usize);
    lambda0 = C64::new(0.0, 0.0);
    for k in 1..=steps {
        let g_k = model.params.g * k as f64 / steps as f64;
        let mut params = model.params.clone();
        params.g = g_k;
        let m = Model::new(params)?;
        let h = m.assemble_full(&theta)?.to_dense();
        let decomp = EigenDecomp::new(&h)?;
        let (i0, l0) = track_by_overlap(&decomp, &w0, g_k)?;
        let (i1, l1) = track_by_overlap(&decomp, &w1, g_k)?;
        lambda0 = l0;
        lambda1 = l1;
        idx = (i0, i1);
        w0 = decomp.vectors.column(i0).to_owned();
        w1 = decomp.vectors.column(i1).to_owned();
        decomp_at_g = Some(decomp);
    }
    let decomp = decomp_at_g.expect("steps >= 1");
    let mut v0: Array1<C64> = decomp.vectors.column(idx.0).to_owned();
    let mut v1: Array1<C64> = decomp.vectors.column(idx.1).to_owned();
    bilinear_normalize(&mut v0)?;
    bilinear_normalize(&mut v1)?;

    let h = model.hamiltonian()?;
    let hnorm = h.csr.fro_norm().max(1e-300);
    let residual = |lam: C64, v: &Array1<C64>| {
        let mut hv = vec![C64::new(0.0, 0.0); model.dim()];
        h.csr.matvec(v.as_slice().unwrap(), &mut hv);
        let r2: f64 = hv
            .iter()
            .zip(v.iter())
            .map(|(hvi, vi)| (hvi - lam * vi).norm_sqr())
            .sum();
        let vn: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        r2.sqrt() / (hnorm * vn)
    };
    let residual0 = residual(lambda0, &v0);
    let residual1 = residual(lambda1, &v1);

    let psi0_theta = dilated_eigenstate(&v0, &model.atomic_vacuum(crate::hamiltonian::SPIN_DOWN))?;
    let psi1_theta = dilated_eigenstate(&v1, &model.atomic_vacuum(crate::hamiltonian::SPIN_UP))?;

    // norm0 comes from the Hermitian problem at theta = 0.
    let norm0 = ground_state_norm(model)?;

    Ok(ResonanceData {
        lambda0,
        lambda1,
        v0,
        v1,
        psi0_theta,
        psi1_theta,
        norm0,
        residual0,
        residual1,
    })
}

/// `eigen_resonances` with automatic homotopy refinement: on a tracking
/// ambiguity the step count doubles, up to 32 steps.
pub fn resonances_refining(model: &Model, steps: usize) -> Result<ResonanceData> {
    let mut steps = steps.max(4);
    loop {
        match eigen_resonances(model, steps) {
            Err(Error::TrackingAmbiguity { .. }) if steps < 32 => steps *= 2,
            other => return other,
        }
    }
}

/// Psi^theta = P^theta target with P = v v^T / (v^T v); invariant under
/// rescaling v -> c v.
pub fn dilated_eigenstate(v: &Array1<C64>, target: &[C64]) -> Result<Array1<C64>> {
    let vtv: C64 = v.iter().map(|x| x * x).sum();
    let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    if vtv.norm() < QUASI_NULL_TOL * vnorm2 {
        return Err(Error::DefectivePair { norm: vtv.norm() / vnorm2 });
    }
    let overlap: C64 = v.iter().zip(target).map(|(vi, t)| vi * t).sum();
    Ok(v.mapv(|vi| vi * overlap / vtv))
}

/// Norm of the theta = 0 ground state Psi_{lambda_0} = P_0 (phi_0 Omega),
/// from the Hermitian eigenproblem.
pub fn ground_state_norm(model: &Model) -> Result<f64> {
    let h = model.hamiltonian_undilated()?.to_dense();
    let decomp = HermitianDecomp::new(&h)?;
    let (gidx, _) = decomp
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty spectrum");
    let v = decomp.vectors.column(gidx);
    let target = model.atomic_vacuum(crate::hamiltonian::SPIN_DOWN);
    let overlap: C64 = v.iter().zip(&target).map(|(vi, t)| vi.conj() * t).sum();
    Ok(overlap.norm())
}

/// Solve (H^theta - z) x = b with the residual contract of the module.
pub fn resolvent_solve(h: &Array2<C64>, z: C64, b: &Array1<C64>) -> Result<Array1<C64>> {
    ShiftedLu::new(h, z)?.solve(b, RESOLVENT_TOL)
}

/// u(z) = (sigma_1 Psi_0^theta)^T (H^theta - z)^{-1} (sigma_1 Psi_0^theta).
///
/// The bilinear pairing realizes the conjugate-linear-first-slot matrix
/// element with the conjugated-dilation state in the left slot, because
/// Psi^{conj(theta)} = conj(Psi^theta) in this discretization.
pub fn u_of_z(model: &Model, rd: &ResonanceData, h: &Array2<C64>, z: C64) -> Result<C64> {
    let s = model.apply_sigma1(rd.psi0_theta.as_slice().unwrap());
    let b = Array1::from(s.clone());
    let x = resolvent_solve(h, z, &b)?;
    Ok(s.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
}

/// Fixed coefficients for evaluating u(z) at many z through the spectral
/// representation of the complex-symmetric H^theta.
pub struct UEvaluator {
    decomp: EigenDecomp,
    gamma: Vec<C64>,
}

impl UEvaluator {
    pub fn new(model: &Model, rd: &ResonanceData, h: &Array2<C64>) -> Result<Self> {
        let decomp = EigenDecomp::new(h)?;
        let s = model.apply_sigma1(rd.psi0_theta.as_slice().unwrap());
        let gamma = decomp.bilinear_coefficients(&s, &s)?;
        Ok(UEvaluator { decomp, gamma })
    }

    /// Generic bilinear matrix element psi^T (H - z)^{-1} phi evaluator.
    pub fn with_vectors(h: &Array2<C64>, psi: &[C64], phi: &[C64]) -> Result<Self> {
        let decomp = EigenDecomp::new(h)?;
        let gamma = decomp.bilinear_coefficients(psi, phi)?;
        Ok(UEvaluator { decomp, gamma })
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.decomp.resolvent_from_coefficients(&self.gamma, z)
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.decomp.values
    }
}

/// One point of a theta-trajectory diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaPoint {
    pub theta_im: f64,
    pub lambda1_re: f64,
    pub lambda1_im: f64,
    pub derivative_magnitude: f64,
    pub im_negative: bool,
}

/// Report of `theta_diagnostics`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaReport {
    pub points: Vec<ThetaPoint>,
    /// Im(theta) minimizing |d lambda1 / d theta|.
    pub theta_star: f64,
    pub min_derivative: f64,
    pub max_spread: f64,
    pub stationary: bool,
}

/// lambda_1(theta) trajectory over a theta list, its discrete derivative,
/// and the stationarity surrogate for the theta-independence of the
/// continuum resonance.
pub fn theta_diagnostics(model: &Model, theta_ims: &[f64]) -> Result<ThetaReport> {
    if theta_ims.len() < 3 {
        return Err(Error::InvalidParameter(
            "theta diagnostics need at least 3 theta values".into(),
        ));
    }
    let mut lambdas: Vec<C64> = Vec::with_capacity(theta_ims.len());
    for &im in theta_ims {
        let theta = DilationParam::new(0.0, im)?;
        let mut params = model.params.clone();
        params.theta = theta;
        let m = Model::new(params)?;
        lambdas.push(resonances_refining(&m, 4)?.lambda1);
    }
    let mut points = Vec::with_capacity(theta_ims.len());
    let mut min_derivative = f64::INFINITY;
    let mut theta_star = theta_ims[0];
    for (i, (&im, &lam)) in theta_ims.iter().zip(&lambdas).enumerate() {
        let deriv = if i == 0 {
            (lambdas[1] - lambdas[0]).norm() / (theta_ims[1] - theta_ims[0]).abs()
        } else if i == theta_ims.len() - 1 {
            (lambdas[i] - lambdas[i - 1]).norm() / (theta_ims[i] - theta_ims[i - 1]).abs()
        } else {
            (lambdas[i + 1] - lambdas[i - 1]).norm() / (theta_ims[i + 1] - theta_ims[i - 1]).abs()
        };
        if deriv < min_derivative {
            min_derivative = deriv;
            theta_star = im;
        }
        points.push(ThetaPoint {
            theta_im: im,
            lambda1_re: lam.re,
            lambda1_im: lam.im,
            derivative_magnitude: deriv,
            im_negative: lam.im < 0.0 || model.params.g == 0.0,
        });
    }
    let max_spread = lambdas
        .iter()
        .flat_map(|a| lambdas.iter().map(move |b| (a - b).norm()))
        .fold(0.0_f64, f64::max);
    // Stationarity surrogate: the flattest point of the trajectory should be
    // much flatter than the e1 scale.
    let stationary = min_derivative <= 0.5 * model.params.e1;
    Ok(ThetaReport { points, theta_star, min_derivative, max_spread, stationary })
}

/// Parameters of the spectral regions A, B_i^{(1)} and the cones C_m.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralRegions {
    /// delta = e1 - e0 = e1.
    pub delta: f64,
    /// nu = Im theta.
    pub nu: f64,
    /// First multiscale radius rho_1 (sets the lower edge of B_i^{(1)}).
    pub rho1: f64,
    /// Cone aperture parameter m >= 4.
    pub m: u32,
}

impl SpectralRegions {
    pub fn new(delta: f64, nu: f64, rho1: f64, m: u32) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!("cone parameter m = {m} must be >= 4")));
        }
        Ok(SpectralRegions { delta, nu, rho1, m })
    }

    pub fn in_a1(&self, z: C64) -> bool {
        z.re < -self.delta / 2.0
    }

    pub fn in_a2(&self, z: C64) -> bool {
        z.im > self.delta * self.nu.sin() / 8.0
    }

    pub fn in_a3(&self, z: C64) -> bool {
        z.re > self.delta + self.delta / 2.0
            && z.im >= -(self.nu / 2.0).sin() * (z.re - (self.delta + self.delta / 2.0))
    }

    pub fn in_a(&self, z: C64) -> bool {
        self.in_a1(z) || self.in_a2(z) || self.in_a3(z)
    }

    /// B_i^{(1)} around e_i (e_0 = 0, e_1 = delta).
    pub fn in_b(&self, z: C64, level: usize) -> bool {
        let ei = if level == 0 { 0.0 } else { self.delta };
        (z.re - ei).abs() <= self.delta / 2.0
            && z.im >= -0.5 * self.rho1 * self.nu.sin()
            && z.im <= self.delta * self.nu.sin() / 8.0
    }

    /// Cone C_m(apex) = { apex + x e^{-i alpha} : x >= 0, |alpha - nu| <= nu/m }.
    pub fn in_cone(&self, z: C64, apex: C64) -> bool {
        let w = z - apex;
        if w.norm() == 0.0 {
            return true;
        }
        let alpha = -w.arg();
        (alpha - self.nu).abs() <= self.nu / self.m as f64
    }
}

/// Per-eigenvalue region containment report.
#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    /// Eigenvalues that intrude into the claimed resolvent set
    /// A u (B_0 \ C(lambda0)) u (B_1 \ C(lambda1)).
    pub intrusions: Vec<(f64, f64)>,
    pub lambda0_in_b0: bool,
    pub lambda1_in_b1: bool,
    pub checked: usize,
}

/// Verify that no eigenvalue lies inside the claimed resolvent regions and
/// that the tracked eigenvalues sit in their windows B_i^{(1)}.
pub fn region_check(rd: &ResonanceData, sr: &SpectralRegions, spectrum: &[C64]) -> RegionReport {
    let mut intrusions = Vec::new();
    for &z in spectrum {
        let in_resolvent_set = sr.in_a(z)
            || (sr.in_b(z, 0) && !sr.in_cone(z, rd.lambda0))
            || (sr.in_b(z, 1) && !sr.in_cone(z, rd.lambda1));
        if in_resolvent_set {
            intrusions.push((z.re, z.im));
        }
    }
    RegionReport {
        intrusions,
        lambda0_in_b0: sr.in_b(rd.lambda0, 0),
        lambda1_in_b1: sr.in_b(rd.lambda1, 1),
        checked: spectrum.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ModelParams;
    use crate::modes::{FormFactorParams, GridRule, GridSpec};

    fn model(g: f64, m: usize, n_max: usize) -> Model {
        let params = ModelParams {
            e1: 1.0,
            g,
            form: FormFactorParams::new(1.0, 0.25).unwrap(),
            theta: DilationParam::new(0.0, 0.15).unwrap(),
            grid: GridSpec { r_min: 1e-4, r_max: 5.3, m, rule: GridRule::LogGauss },
            n_max,
        };
        Model::new(params).unwrap()
    }

    #[test]
    fn free_limit_eigenvalues_exact() {
        let m = model(0.0, 8, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        assert!(rd.lambda0.norm() < 1e-12);
        assert!((rd.lambda1 - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((rd.norm0 - 1.0).abs() < 1e-12);
        // g = 0, i = 0: the eigenstate is phi_0 Omega exactly
        let target = m.atomic_vacuum(crate::hamiltonian::SPIN_DOWN);
        let err: f64 = rd
            .psi0_theta
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn resonance_moves_into_lower_half_plane() {
        let params = ModelParams {
            e1: 1.0,
            g: 0.1,
            form: FormFactorParams::new(1.0, 0.25).unwrap(),
            theta: DilationParam::new(0.0, 0.15).unwrap(),
            grid: GridSpec { r_min: 1e-4, r_max: 5.3, m: 48, rule: GridRule::Mixed },
            n_max: 1,
        };
        let m = Model::new(params).unwrap();
        let rd = eigen_resonances(&m, 4).unwrap();
        assert!(rd.lambda1.im < 0.0, "Im lambda1 = {}", rd.lambda1.im);
        // mixed grids spend fewer nodes in the infrared; the ground state
        // picks up a ~1e-7 spurious imaginary part there (1e-8 on log grids,
        // see `ground_state_stays_real_on_log_grid`)
        assert!(rd.lambda0.im.abs() < 1e-6, "Im lambda0 = {}", rd.lambda0.im);
        assert!(rd.residual0 < 1e-10 && rd.residual1 < 1e-10);
        // second-order perturbation theory gives |Im lambda1| ~ 5.343 g^2
        // at the bare level; the on-shell shift lowers it by ~12%.
        let width = rd.lambda1.im.abs();
        assert!((width / (0.01 * 5.3428)).ln().abs() < 0.3, "width {width}");
    }

    #[test]
    fn ground_state_stays_real_on_log_grid() {
        let m = model(0.1, 32, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        assert!(rd.lambda0.im.abs() < 1e-8, "Im lambda0 = {}", rd.lambda0.im);
        // dressed level sits below the bare one
        assert!(rd.lambda0.re < -1e-3);
    }

    #[test]
    fn projector_scale_invariance() {
        let m = model(0.1, 10, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let target = m.atomic_vacuum(crate::hamiltonian::SPIN_DOWN);
        let scaled = rd.v0.mapv(|v| v * C64::new(3.0, 0.0));
        let a = dilated_eigenstate(&rd.v0, &target).unwrap();
        let b = dilated_eigenstate(&scaled, &target).unwrap();
        let err: f64 =
            a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn resolvent_solve_free_closed_form() {
        let m = model(0.0, 8, 1);
        let h = m.hamiltonian().unwrap().to_dense();
        let b = Array1::from(m.atomic_vacuum(crate::hamiltonian::SPIN_UP));
        let z = C64::new(0.35, 0.2);
        let x = resolvent_solve(&h, z, &b).unwrap();
        let expected = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - z);
        assert!((x[m.excited_vacuum_index()] - expected).norm() < 1e-12);
    }

    #[test]
    fn u_free_closed_form() {
        let m = model(0.0, 8, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        for &z in &[C64::new(0.3, 0.4), C64::new(-0.7, 0.1), C64::new(1.4, 0.9)] {
            let u = u_of_z(&m, &rd, &h, z).unwrap();
            let exact = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - z);
            assert!((u - exact).norm() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn u_conjugation_covariance() {
        // u_{conj theta}(conj z) = conj(u_theta(z))
        let m = model(0.09, 10, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let hc = h.mapv(|v| v.conj());
        let s = m.apply_sigma1(rd.psi0_theta.as_slice().unwrap());
        let sc: Vec<C64> = s.iter().map(|v| v.conj()).collect();
        let z = C64::new(1.1, 0.2);
        let u = u_of_z(&m, &rd, &h, z).unwrap();
        let x = resolvent_solve(&hc, z.conj(), &Array1::from(sc.clone())).unwrap();
        let u_conj_path: C64 = sc.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        assert!((u_conj_path - u.conj()).norm() < 1e-9);
    }

    #[test]
    fn u_evaluator_matches_direct_solve() {
        let m = model(0.08, 12, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let ue = UEvaluator::new(&m, &rd, &h).unwrap();
        for &z in &[C64::new(0.9, 0.3), C64::new(1.2, 0.05), C64::new(-0.5, 0.2)] {
            let a = ue.eval(z);
            let b = u_of_z(&m, &rd, &h, z).unwrap();
            assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "z = {z}: {a} vs {b}");
        }
    }

    #[test]
    fn u_analytic_cauchy_riemann() {
        let m = model(0.1, 12, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let ue = UEvaluator::new(&m, &rd, &h).unwrap();
        let c = rd.lambda0 + C64::new(-0.5, 0.5);
        let hstep = 1e-3;
        let dx = (ue.eval(c + hstep) - ue.eval(c - hstep)) / (2.0 * hstep);
        let dy = (ue.eval(c + C64::new(0.0, hstep)) - ue.eval(c - C64::new(0.0, hstep)))
            / C64::new(0.0, 2.0 * hstep);
        assert!((dx - dy).norm() < 1e-6, "CR defect {}", (dx - dy).norm());
    }

    #[test]
    fn u_finite_just_above_ground_energy() {
        let m = model(0.08, 12, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let z = rd.lambda0 + C64::new(0.05, 0.0);
        let u = u_of_z(&m, &rd, &h, z).unwrap();
        assert!(u.norm() < 1e3);
    }

    #[test]
    fn theta_trajectory_free_case_flat() {
        let m = model(0.0, 8, 1);
        let rep = theta_diagnostics(&m, &[0.10, 0.13, 0.16]).unwrap();
        assert!(rep.max_spread < 1e-12);
        assert!(rep.min_derivative < 1e-10);
        assert!(rep.stationary);
    }

    #[test]
    fn theta_spread_shrinks_under_refinement() {
        let thetas = [0.12, 0.14, 0.16];
        let mk = |m: usize| {
            let params = ModelParams {
                e1: 1.0,
                g: 0.1,
                form: FormFactorParams::new(1.0, 0.25).unwrap(),
                theta: DilationParam::new(0.0, 0.15).unwrap(),
                grid: GridSpec { r_min: 1e-4, r_max: 5.3, m, rule: GridRule::Mixed },
                n_max: 1,
            };
            Model::new(params).unwrap()
        };
        let coarse = theta_diagnostics(&mk(48), &thetas).unwrap();
        let fine = theta_diagnostics(&mk(96), &thetas).unwrap();
        assert!(
            fine.max_spread < coarse.max_spread,
            "spread {} -> {}",
            coarse.max_spread,
            fine.max_spread
        );
        for p in &fine.points {
            assert!(p.im_negative);
        }
    }

    #[test]
    fn regions_free_spectrum_outside_a() {
        let m = model(0.0, 12, 1);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let decomp = EigenDecomp::new(&h).unwrap();
        let sr = SpectralRegions::new(1.0, 0.15, 0.075, 4).unwrap();
        for &z in &decomp.values {
            assert!(!sr.in_a(z), "free eigenvalue {z} inside A");
        }
        let rep = region_check(&rd, &sr, &decomp.values);
        assert!(rep.intrusions.is_empty());
        assert!(rep.lambda0_in_b0 && rep.lambda1_in_b1);
    }

    #[test]
    fn cone_axis_membership() {
        let sr = SpectralRegions::new(1.0, 0.15, 0.075, 4).unwrap();
        let apex = C64::new(0.3, -0.01);
        for &x in &[1e-3, 0.1, 2.0] {
            let z = apex + x * C64::new(0.0, -0.15).exp();
            assert!(sr.in_cone(z, apex));
        }
        assert!(!sr.in_cone(apex + C64::new(1.0, 0.0), apex));
    }

    #[test]
    fn tracked_eigenvalues_sit_in_their_windows() {
        // lambda_i in B_i^{(1)} for small g. The full no-intrusion containment
        // is a small-g statement about the continuum operator; the truncated
        // model's boson bands may enter B_1 \ C(lambda_1) at finite coupling,
        // so the diagnostic only reports them.
        let m = model(0.02, 32, 2);
        let rd = eigen_resonances(&m, 4).unwrap();
        let h = m.hamiltonian().unwrap().to_dense();
        let decomp = EigenDecomp::new(&h).unwrap();
        let rho1 = 0.3 * 0.25; // rho0 * rho of the default multiscale choice
        let sr = SpectralRegions::new(1.0, 0.15, rho1, 4).unwrap();
        let rep = region_check(&rd, &sr, &decomp.values);
        assert!(rep.lambda0_in_b0 && rep.lambda1_in_b1);
        assert_eq!(rep.checked, decomp.values.len());
        // no eigenvalue may reach the far resolvent region A
        for &z in &decomp.values {
            assert!(!sr.in_a(z), "eigenvalue {z} inside A");
        }
    }
}
