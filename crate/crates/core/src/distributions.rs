//! Fourier, Heaviside, and principal-value calculus on a fixed library of
//! test functions, numerically verified: the transform conventions are
//!
//!   F[u](x) = int u(s) exp(-isx) ds,   Finv[u](x) = (2 pi)^-1 int u(s) exp(+isx) ds,
//!
//! Theta pairs as integration over [0, inf), delta as evaluation at 0, and
//! PV(1/.) as the symmetric excision limit. The mollified Heaviside
//! transform int phi(s)/(alpha + is) ds converges to pi phi(0) - i PV(phi)
//! as alpha -> 0+, which `sokhotski_defect` quantifies.

use crate::error::{Error, Result};
use crate::quad::{self, GradeEnd};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Decay class of a test function, steering integration windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// Schwartz-class with the given width scale: integrals are truncated
    /// where a Gaussian of that scale is negligible.
    Schwartz { scale: f64 },
    Compact,
}

type Evaluator = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// A smooth test function with optional compact support and an optional
/// analytic derivative (finite differences otherwise).
#[derive(Clone)]
pub struct TestFunction {
    eval: Evaluator,
    derivative: Option<Evaluator>,
    pub support: Option<(f64, f64)>,
    pub decay: Decay,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("support", &self.support)
            .field("decay", &self.decay)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(f: F, support: Option<(f64, f64)>, decay: Decay) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        TestFunction { eval: Arc::new(f), derivative: None, support, decay }
    }

    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn eval(&self, s: f64) -> C64 {
        if let Some((a, b)) = self.support {
            if s <= a || s >= b {
                return C64::new(0.0, 0.0);
            }
        }
        (self.eval)(s)
    }

    pub fn derivative(&self, s: f64) -> C64 {
        match &self.derivative {
            Some(df) => {
                if let Some((a, b)) = self.support {
                    if s <= a || s >= b {
                        return C64::new(0.0, 0.0);
                    }
                }
                df(s)
            }
            None => {
                let h = 1e-6;
                (self.eval(s + h) - self.eval(s - h)) / (2.0 * h)
            }
        }
    }

    /// Window outside which the function is negligible at the tolerance.
    pub fn window(&self, tol: f64) -> (f64, f64) {
        match (self.support, self.decay) {
            (Some(w), _) => w,
            (None, Decay::Schwartz { scale }) => {
                let half = scale * (1.0 / tol).ln().sqrt().max(2.0) * 1.3;
                (-half, half)
            }
            (None, Decay::Compact) => (-1.0, 1.0),
        }
    }

    /// Gaussian exp(-((s-c)/w)^2), Schwartz class.
    pub fn gaussian(center: f64, width: f64) -> Self {
        let w = width;
        TestFunction::new(
            move |s| C64::new((-((s - center) / w).powi(2)).exp(), 0.0),
            None,
            Decay::Schwartz { scale: width.max(1.0) + center.abs() },
        )
        .with_derivative(move |s| {
            C64::new((-((s - center) / w).powi(2)).exp() * (-2.0 * (s - center) / (w * w)), 0.0)
        })
    }

    /// s * exp(-s^2): the odd Gaussian probe.
    pub fn odd_gaussian() -> Self {
        TestFunction::new(
            |s| C64::new(s * (-s * s).exp(), 0.0),
            None,
            Decay::Schwartz { scale: 1.5 },
        )
        .with_derivative(|s| C64::new((1.0 - 2.0 * s * s) * (-s * s).exp(), 0.0))
    }

    /// Smooth bump exp(1 - 1/(1 - x^2)) on (centerformula- width, center + width).
    pub fn bump(center: f64, width: f64) -> Self {
        let c = center;
        let w = width;
        TestFunction::new(
            move |s| {
                let x = (s - c) / w;
                if x.abs() >= 1.0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new((1.0 - 1.0 / (1.0 - x * x)).exp(), 0.0)
                }
            },
            Some((c - w, c + w)),
            Decay::Compact,
        )
        .with_derivative(move |s| {
            let x = (s - c) / w;
            if x.abs() >= 1.0 {
                C64::new(0.0, 0.0)
            } else {
                let d = 1.0 - x * x;
                C64::new((1.0 - 1.0 / d).exp() * (-2.0 * x / (d * d)) / w, 0.0)
            }
        })
    }

    /// The fixed verification family: Gaussian, shifted Gaussian, bump, odd
    /// Gaussian.
    pub fn library() -> Vec<(&'static str, TestFunction)> {
        vec![
            ("gaussian", TestFunction::gaussian(0.0, 1.0)),
            ("shifted-gaussian", TestFunction::gaussian(1.0, 1.0)),
            ("bump", TestFunction::bump(0.0, 2.0)),
            ("odd-gaussian", TestFunction::odd_gaussian()),
        ]
    }
}

/// F[phi](x) = int phi(s) exp(-isx) ds by panel quadrature over the decay
/// window; errors with a tail estimate if the window does not close.
pub fn fourier(phi: &TestFunction, x: f64) -> Result<C64> {
    transform(phi, -x)
}

/// Inverse transform Finv[phi](x), carrying the (2 pi)^-1 and the +isx.
pub fn inverse_fourier(phi: &TestFunction, x: f64) -> Result<C64> {
    Ok(transform(phi, x)? / (2.0 * std::f64::consts::PI))
}

fn transform(phi: &TestFunction, omega: f64) -> Result<C64> {
    let tol = 1e-13;
    let (a, b) = phi.window(tol);
    let tail = phi.eval(a).norm().max(phi.eval(b).norm());
    if tail > 1e-10 {
        return Err(Error::QuadratureTail {
            context: "fourier window does not close".into(),
            tail_estimate: tail,
        });
    }
    // resolve the oscillation: |omega| h <= 6 per 16-point panel
    let h = (6.0 / omega.abs().max(1.0)).min((b - a) / 4.0);
    let panels = quad::uniform_panels(a, b, h);
    Ok(quad::integrate_panels(&panels, 16, |s| {
        phi.eval(s) * C64::new(0.0, omega * s).exp()
    }))
}

/// PV int phi(s)/(s - c) ds realized through the symmetric form
/// int_0^inf (phi(c+u) - phi(c-u))/u du; the excision definition is kept in
/// `pv_excision` as the slower validation path.
pub fn pv_integral(phi: &TestFunction, c: f64) -> Result<C64> {
    if !phi.eval(c).is_finite() {
        return Err(Error::Domain(format!("test function not finite at the PV center {c}")));
    }
    let (a, b) = phi.window(1e-13);
    let reach = (b - c).abs().max((c - a).abs()).max(1e-3);
    // (phi(c+u) - phi(c-u))/u is smooth; grade mildly toward u = 0 anyway
    let mut panels = quad::graded_panels(0.0, reach, GradeEnd::Left, 1e-3 * reach, reach / 6.0, 1.8);
    // support edges are only C-infinity, not analytic: make them panel cuts
    if let Some((sa, sb)) = phi.support {
        for edge in [(sa - c).abs(), (sb - c).abs()] {
            panels = split_panels_at(panels, edge);
        }
    }
    Ok(quad::integrate_panels(&panels, 16, |u| {
        (phi.eval(c + u) - phi.eval(c - u)) / u
    }))
}

fn split_panels_at(panels: Vec<(f64, f64)>, cut: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels.len() + 1);
    for (a, b) in panels {
        if cut > a + 1e-14 && cut < b - 1e-14 {
            out.push((a, cut));
            out.push((cut, b));
        } else {
            out.push((a, b));
        }
    }
    out
}

/// The excision-limit realization of the principal value, for cross-checks:
/// int_{|s-c|>eta} phi(s)/(s-c) ds at a fixed eta.
pub fn pv_excision(phi: &TestFunction, c: f64, eta: f64) -> Result<C64> {
    let (a, b) = phi.window(1e-13);
    if c - eta <= a && c + eta >= b {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut acc = C64::new(0.0, 0.0);
    if c - eta > a {
        let panels = quad::graded_panels(a, c - eta, GradeEnd::Right, eta / 4.0, (c - eta - a) / 6.0, 1.7);
        acc += quad::integrate_panels(&panels, 16, |s| phi.eval(s) / (s - c));
    }
    if c + eta < b {
        let panels = quad::graded_panels(c + eta, b, GradeEnd::Left, eta / 4.0, (b - c - eta) / 6.0, 1.7);
        acc += quad::integrate_panels(&panels, 16, |s| phi.eval(s) / (s - c));
    }
    Ok(acc)
}

/// Heaviside pairing Theta_q(phi) = int_q^inf phi(s) ds, q >= 0.
pub fn heaviside_pairing(phi: &TestFunction, q: f64) -> Result<C64> {
    if q < 0.0 {
        return Err(Error::Domain(format!("shift q = {q} must be >= 0")));
    }
    let (_, b) = phi.window(1e-14);
    if q >= b {
        return Ok(C64::new(0.0, 0.0));
    }
    let panels = quad::uniform_panels(q, b, (b - q) / 12.0);
    Ok(quad::integrate_panels(&panels, 16, |s| phi.eval(s)))
}

/// int phi(s)/(alpha + i s) ds: the Fourier transform of the mollified
/// Heaviside exp(-alpha x) Theta(x) paired with phi.
pub fn mollified_heaviside_transform(phi: &TestFunction, alpha: f64) -> Result<C64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("mollifier alpha = {alpha} must be > 0")));
    }
    let (a, b) = phi.window(1e-14);
    // 1/(alpha + is) = alpha/(alpha^2+s^2) - i s/(alpha^2+s^2): both factors
    // vary on the alpha scale near s = 0; grade panels into that scale.
    let h_min = (alpha / 8.0).min(0.05);
    let mut panels = quad::graded_panels(a, 0.0, GradeEnd::Right, h_min, (0.0 - a) / 6.0, 1.6);
    panels.extend(quad::graded_panels(0.0, b, GradeEnd::Left, h_min, b / 6.0, 1.6));
    Ok(quad::integrate_panels(&panels, 16, |s| {
        phi.eval(s) / C64::new(alpha, s)
    }))
}

/// |F[g_alpha](phi) - (pi phi(0) - i PV(phi))|: the distance of the
/// mollified transform from its distributional limit.
pub fn sokhotski_defect(phi: &TestFunction, alpha: f64) -> Result<f64> {
    let lhs = mollified_heaviside_transform(phi, alpha)?;
    let limit = sokhotski_limit(phi)?;
    Ok((lhs - limit).norm())
}

/// pi phi(0) - i PV int phi(s)/s ds.
pub fn sokhotski_limit(phi: &TestFunction) -> Result<C64> {
    Ok(C64::new(std::f64::consts::PI, 0.0) * phi.eval(0.0)
        - C64::new(0.0, 1.0) * pv_integral(phi, 0.0)?)
}
