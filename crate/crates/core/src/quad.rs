//! Panel-based Gauss-Legendre quadrature, geometric panel grading, adaptive
//! bisection, and a Filon-Legendre rule for oscillatory integrals
//! `int f(z) exp(-i s z) dz` whose nodes do not depend on the frequency `s`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::collections::HashMap;

/// Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x.abs();
            nodes[n - 1 - i] = x.abs();
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let mid = n / 2;
            nodes[mid] = 0.0;
            let (_, dp) = legendre_with_derivative(n, 0.0);
            weights[mid] = 2.0 / (dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

thread_local! {
    static RULE_CACHE: RefCell<HashMap<usize, GaussLegendre>> = RefCell::new(HashMap::new());
}

/// Cached Gauss-Legendre rule of the given order.
pub fn rule(n: usize) -> GaussLegendre {
    RULE_CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| GaussLegendre::new(n))
            .clone()
    })
}

/// A subdivision of an interval into quadrature panels.
pub type Panels = Vec<(f64, f64)>;

/// Panels of width at most `max_h` covering [a, b].
pub fn uniform_panels(a: f64, b: f64, max_h: f64) -> Panels {
    assert!(b > a && max_h > 0.0);
    let n = ((b - a) / max_h).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| (a + i as f64 * h, a + (i + 1) as f64 * h))
        .collect()
}

/// Which end of an interval receives the finest panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradeEnd {
    Left,
    Right,
}

/// Geometrically graded panels: the panel adjacent to the graded end has
/// width `h_min`, widths grow by `ratio` away from it, capped at `h_max`.
pub fn graded_panels(a: f64, b: f64, end: GradeEnd, h_min: f64, h_max: f64, ratio: f64) -> Panels {
    assert!(b > a && h_min > 0.0 && ratio > 1.0);
    let mut cuts = vec![0.0];
    let len = b - a;
    let mut pos = 0.0;
    let mut h = h_min.min(len);
    while pos < len {
        pos = (pos + h).min(len);
        cuts.push(pos);
        h = (h * ratio).min(h_max);
    }
    let map = |t: f64| match end {
        GradeEnd::Left => a + t,
        GradeEnd::Right => b - t,
    };
    let mut panels: Panels = cuts.windows(2).map(|w| (map(w[0]), map(w[1]))).collect();
    if end == GradeEnd::Right {
        panels = panels.into_iter().rev().map(|(x, y)| (y, x)).collect();
    }
    panels
}

/// Split [a, b] symmetrically about an interior point `c`, grading toward it
/// from both sides. Used when an integrand peaks sharply inside the interval.
pub fn peak_panels(a: f64, b: f64, c: f64, h_min: f64, h_max: f64) -> Panels {
    assert!(a < c && c < b);
    let mut p = graded_panels(a, c, GradeEnd::Right, h_min, h_max, 2.0);
    p.extend(graded_panels(c, b, GradeEnd::Left, h_min, h_max, 2.0));
    p
}

/// Fixed-order panel quadrature of a complex integrand.
pub fn integrate_panels<F>(panels: &[(f64, f64)], order: usize, mut f: F) -> C64
where
    F: FnMut(f64) -> C64,
{
    let gl = rule(order);
    let mut acc = C64::new(0.0, 0.0);
    for &(a, b) in panels {
        for (x, w) in gl.mapped(a, b) {
            acc += f(x) * w;
        }
    }
    acc
}

/// Adaptive bisection quadrature with an embedded error estimate
/// (order `n` against order `2n` on each panel). Deterministic.
pub fn adaptive<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> (C64, f64)
where
    F: Fn(f64) -> C64,
{
    fn recurse<F: Fn(f64) -> C64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        order: usize,
    ) -> (C64, f64) {
        let coarse = integrate_panels(&[(a, b)], order, |x| f(x));
        let fine = integrate_panels(&[(a, b)], 2 * order, |x| f(x));
        let err = (fine - coarse).norm();
        if err <= tol || depth == 0 {
            return (fine, err);
        }
        let m = 0.5 * (a + b);
        let (l, el) = recurse(f, a, m, 0.5 * tol, depth - 1, order);
        let (r, er) = recurse(f, m, b, 0.5 * tol, depth - 1, order);
        (l + r, el + er)
    }
    recurse(f, a, b, tol, max_depth, 12)
}

/// Spherical Bessel functions j_0..j_kmax at x >= 0.
///
/// Upward recurrence where it is stable (k < x), Miller's downward
/// recurrence otherwise, small-x series below 1e-3.
pub fn spherical_bessel_j(kmax: usize, x: f64) -> Vec<f64> {
    let mut j = vec![0.0; kmax + 1];
    if x < 1e-3 {
        // j_k(x) = x^k / (2k+1)!! * (1 - x^2/(2(2k+3)) + x^4/(8(2k+3)(2k+5)))
        let x2 = x * x;
        let mut dfact = 1.0; // (2k+1)!!
        let mut xk = 1.0;
        for (k, jk) in j.iter_mut().enumerate() {
            let c1 = 2.0 * (2 * k + 3) as f64;
            let c2 = 8.0 * ((2 * k + 3) * (2 * k + 5)) as f64;
            *jk = xk / dfact * (1.0 - x2 / c1 + x2 * x2 / c2);
            dfact *= (2 * k + 3) as f64;
            xk *= x;
        }
        return j;
    }
    j[0] = x.sin() / x;
    if kmax == 0 {
        return j;
    }
    j[1] = x.sin() / (x * x) - x.cos() / x;
    if (kmax as f64) < x {
        for k in 1..kmax {
            j[k + 1] = (2 * k + 1) as f64 / x * j[k] - j[k - 1];
        }
        return j;
    }
    // Miller: start above max(kmax, x) and normalize against j_0.
    let start = kmax + 16 + x as usize;
    let mut jp1 = 0.0_f64; // j_{k+2}
    let mut jk = 1e-280_f64; // j_{k+1}
    let mut out = vec![0.0; kmax + 1];
    for k in (0..=start).rev() {
        // j_k from j_{k+1}, j_{k+2}
        let jm1 = (2 * k + 3) as f64 / x * jk - jp1;
        jp1 = jk;
        jk = jm1;
        if k <= kmax {
            out[k] = jk;
        }
        // Rescale to avoid overflow on long recurrences.
        if jk.abs() > 1e250 {
            jp1 /= 1e250;
            jk /= 1e250;
            for v in out.iter_mut() {
                *v /= 1e250;
            }
        }
    }
    let scale = (x.sin() / x) / out[0];
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Legendre expansion of a smooth complex function on one panel, supporting
/// frequency-independent evaluation of `int_a^b f(z) exp(-i s z) dz`.
#[derive(Debug, Clone)]
pub struct FilonPanel {
    center: f64,
    half: f64,
    coeffs: Vec<C64>,
}

impl FilonPanel {
    /// Expand `f` on [a, b] in Legendre polynomials of degree < `order`,
    /// sampling at the `order`-point Gauss grid.
    pub fn new<F>(a: f64, b: f64, order: usize, mut f: F) -> Self
    where
        F: FnMut(f64) -> C64,
    {
        let gl = rule(order);
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let samples: Vec<C64> = gl.nodes.iter().map(|&x| f(center + half * x)).collect();
        let mut coeffs = vec![C64::new(0.0, 0.0); order];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for ((&x, &w), &fx) in gl.nodes.iter().zip(&gl.weights).zip(&samples) {
                acc += fx * w * legendre_value(k, x);
            }
            *c = acc * ((2 * k + 1) as f64 / 2.0);
        }
        FilonPanel { center, half, coeffs }
    }

    /// `int_a^b f(z) exp(-i s z) dz` using `int P_k(x) exp(-i w x) dx = 2 (-i)^k j_k(w)`.
    pub fn oscillatory(&self, s: f64) -> C64 {
        let w = s * self.half;
        let (wabs, flip) = if w < 0.0 { (-w, true) } else { (w, false) };
        let j = spherical_bessel_j(self.coeffs.len() - 1, wabs);
        let mut acc = C64::new(0.0, 0.0);
        let mut mik = C64::new(1.0, 0.0); // (-i)^k
        for (k, &c) in self.coeffs.iter().enumerate() {
            // j_k(-w) = (-1)^k j_k(w), and (-i)^k (-1)^k = i^k.
            let jk = if flip && k % 2 == 1 { -j[k] } else { j[k] };
            acc += c * mik * (2.0 * jk);
            mik *= C64::new(0.0, -1.0);
        }
        let phase = C64::new(0.0, -s * self.center).exp();
        acc * phase * self.half
    }

    /// Plain (s = 0) integral of the expansion.
    pub fn plain(&self) -> C64 {
        self.coeffs[0] * (2.0 * self.half)
    }
}

fn legendre_value(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            for n in 2..=k {
                let nf = n as f64;
                let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// A pre-sampled piecewise-Legendre representation of a smooth function on a
/// union of real panels; evaluates oscillatory transforms for many
/// frequencies at fixed sampling cost.
#[derive(Debug, Clone)]
pub struct FilonTable {
    panels: Vec<FilonPanel>,
}

impl FilonTable {
    pub fn new<F>(panels: &[(f64, f64)], order: usize, mut f: F) -> Self
    where
        F: FnMut(f64) -> C64,
    {
        FilonTable {
            panels: panels
                .iter()
                .map(|&(a, b)| FilonPanel::new(a, b, order, &mut f))
                .collect(),
        }
    }

    /// `int f(z) exp(-i s z) dz` over all panels.
    pub fn oscillatory(&self, s: f64) -> C64 {
        self.panels.iter().map(|p| p.oscillatory(s)).sum()
    }

    pub fn plain(&self) -> C64 {
        self.panels.iter().map(|p| p.plain()).sum()
    }
}

/// Integrate a decaying function over [a, inf): march panel by panel until
/// the last panel contributes less than `tol` relative to the accumulated
/// value. Errors with a tail estimate when `max_span` is exhausted first.
pub fn semi_infinite<F>(f: &F, a: f64, h0: f64, tol: f64, max_span: f64) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    let mut acc = C64::new(0.0, 0.0);
    let mut left = a;
    let mut h = h0;
    loop {
        let piece = integrate_panels(&[(left, left + h)], 16, |x| f(x));
        acc += piece;
        left += h;
        let scale = acc.norm().max(1e-300);
        if piece.norm() < tol * scale && left > a + 4.0 * h0 {
            return Ok(acc);
        }
        if left - a > max_span {
            return Err(Error::QuadratureTail {
                context: format!("semi-infinite integral from {a}"),
                tail_estimate: piece.norm(),
            });
        }
        h *= 1.25;
    }
}
