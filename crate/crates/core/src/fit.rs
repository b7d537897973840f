//! Small least-squares helpers: log-log slope fits and a Gauss-Newton
//! Lorentzian fit for line-shape scans.

use crate::error::{Error, Result};

/// Ordinary least squares y = a + b x; returns (a, b).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Fit("degenerate abscissas".into()));
    }
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    Ok((a, b))
}

/// Fit y = amplitude * x^exponent by least squares on logarithms.
/// All data must be positive.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    if x.iter().any(|&v| v <= 0.0) || y.iter().any(|&v| v <= 0.0) {
        return Err(Error::Fit("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (a, b) = linear_fit(&lx, &ly)?;
    Ok(PowerLaw { amplitude: a.exp(), exponent: b })
}

#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub exponent: f64,
}

/// Lorentzian profile A w^2 / ((x-c)^2 + w^2) fitted by Gauss-Newton.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
    /// Root-mean-square residual relative to the peak amplitude.
    pub relative_residual: f64,
}

pub fn lorentzian_fit(x: &[f64], y: &[f64]) -> Result<Lorentzian> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::Fit("need at least four points".into()));
    }
    // initial guess: peak location, height, half width at half maximum
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if !(ymax > 0.0) {
        return Err(Error::Fit("peak amplitude not positive".into()));
    }
    let mut c = x[imax];
    let mut a = ymax;
    let half = ymax / 2.0;
    let mut w = {
        let mut left = x[0];
        let mut right = *x.last().unwrap();
        for i in (0..imax).rev() {
            if y[i] < half {
                left = x[i];
                break;
            }
        }
        for i in imax..x.len() {
            if y[i] < half {
                right = x[i];
                break;
            }
        }
        (0.5 * (right - left)).abs().max(1e-6 * (x[x.len() - 1] - x[0]))
    };
    let model = |a: f64, c: f64, w: f64, xi: f64| a * w * w / ((xi - c).powi(2) + w * w);
    let mut lambda = 1e-6; // Levenberg damping
    let mut rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - model(a, c, w, xi)).powi(2))
        .sum();
    for _ in 0..200 {
        // residuals and Jacobian
        let mut jtj = [[0.0_f64; 3]; 3];
        let mut jtr = [0.0_f64; 3];
        for (&xi, &yi) in x.iter().zip(y) {
            let d2 = (xi - c).powi(2) + w * w;
            let f = a * w * w / d2;
            let r = yi - f;
            let dfda = w * w / d2;
            let dfdc = 2.0 * a * w * w * (xi - c) / (d2 * d2);
            let dfdw = 2.0 * a * w * (xi - c).powi(2) / (d2 * d2);
            let grad = [dfda, dfdc, dfdw];
            for i in 0..3 {
                jtr[i] += grad[i] * r;
                for j in 0..3 {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }
        for (i, row) in jtj.iter_mut().enumerate() {
            row[i] *= 1.0 + lambda;
        }
        let delta = solve3(jtj, jtr).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
        let (na, nc, nw) = (a + delta[0], c + delta[1], (w + delta[2]).abs().max(1e-12));
        let new_rss: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| (yi - model(na, nc, nw, xi)).powi(2))
            .sum();
        if new_rss < rss {
            let converged = (rss - new_rss) <= 1e-14 * rss.max(1e-300);
            a = na;
            c = nc;
            w = nw;
            rss = new_rss;
            lambda = (lambda * 0.3).max(1e-12);
            if converged {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                break;
            }
        }
    }
    if !(a.is_finite() && c.is_finite() && w.is_finite()) {
        return Err(Error::Fit("diverged".into()));
    }
    Ok(Lorentzian {
        amplitude: a,
        center: c,
        half_width: w.abs(),
        relative_residual: (rss / x.len() as f64).sqrt() / a.abs(),
    })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let adj = [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = inv_det * (adj[i][0] * b[0] + adj[i][1] * b[1] + adj[i][2] * b[2]);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 0.7 * v).collect();
        let (a, b) = linear_fit(&x, &y).unwrap();
        assert!((a - 2.5).abs() < 1e-12 && (b + 0.7).abs() < 1e-12);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let x = [0.1f64, 0.2, 0.4, 0.8];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(1.97)).collect();
        let p = power_law_fit(&x, &y).unwrap();
        assert!((p.exponent - 1.97).abs() < 1e-10);
        assert!((p.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn lorentzian_fit_recovers_parameters() {
        let (a0, c0, w0) = (2.2, 1.03, 0.011);
        let x: Vec<f64> = (0..80).map(|i| 0.96 + i as f64 * 0.002).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| a0 * w0 * w0 / ((xi - c0).powi(2) + w0 * w0))
            .collect();
        let fit = lorentzian_fit(&x, &y).unwrap();
        assert!((fit.center - c0).abs() < 1e-8, "center {}", fit.center);
        assert!((fit.half_width - w0).abs() < 1e-8);
        assert!((fit.amplitude - a0).abs() < 1e-7);
        assert!(fit.relative_residual < 1e-9);
    }

    #[test]
    fn lorentzian_fit_tolerates_background() {
        let (a0, c0, w0) = (1.0, 0.0, 0.05);
        let x: Vec<f64> = (0..120).map(|i| -0.3 + i as f64 * 0.005).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| a0 * w0 * w0 / (xi * xi + w0 * w0) + 0.01 * (1.0 + 0.3 * xi))
            .collect();
        let fit = lorentzian_fit(&x, &y).unwrap();
        assert!((fit.center - c0).abs() < 2e-3);
        assert!((fit.half_width - w0).abs() < 0.1 * w0);
    }
}
