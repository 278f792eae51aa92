//! Small scalar utilities shared by the solvers: bracketed root finding,
//! Richardson extrapolation and straight-line least squares.

use crate::error::{Error, Result};

/// Bisection until the bracket is small, then secant steps safeguarded by the
/// bracket. Converges when `|f| <= f_tol` or the bracket collapses.
pub fn bisect_secant<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, f_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::SearchFailure(format!(
            "non-finite objective at bracket ends [{lo}, {hi}]"
        )));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::SearchFailure(format!(
            "objective does not change sign on [{lo}, {hi}] ({f_lo:e}, {f_hi:e})"
        )));
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= f_tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        if (hi - lo).abs() < 1e-6 * (1.0 + lo.abs()) {
            break;
        }
    }
    for _ in 0..200 {
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(x > lo.min(hi) && x < lo.max(hi)) || !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
            return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
        }
    }
    Err(Error::SearchFailure(format!(
        "no convergence on [{lo}, {hi}], residuals ({f_lo:e}, {f_hi:e})"
    )))
}

/// Richardson extrapolation of values computed at `h, h/2, h/4, ...`
/// assuming an error expansion in powers `p, p + step, ...`.
/// Returns the top-left entry of the Neville table.
pub fn richardson(values: &[f64], first_order: f64, order_step: f64) -> f64 {
    let mut table = values.to_vec();
    let mut order = first_order;
    while table.len() > 1 {
        let factor = 2f64.powf(order);
        table = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        order += order_step;
    }
    table[0]
}

/// Least squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        rms_residual: (rss / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let r = bisect_secant(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        let r = bisect_secant(|x| x.cos() - x, 0.0, 1.0, 1e-15).unwrap();
        assert!((r - 0.739_085_133_215_160_6).abs() < 1e-13);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(matches!(
            bisect_secant(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::SearchFailure(_))
        ));
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let exact = 3.0;
        let vals: Vec<f64> = [0.1f64, 0.05, 0.025]
            .iter()
            .map(|&h| exact + 2.0 * h * h + 5.0 * h.powi(4))
            .collect();
        let got = richardson(&vals, 2.0, 2.0);
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!(fit.rms_residual < 1e-14);
    }
}
