//! One-dimensional root finding and maximisation.

use crate::error::{Error, Result};

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping when the
/// bracket is below `x_tol` or `|f| <= f_tol`. With `log_scale` the bracket
/// is halved geometrically.
pub(crate) fn bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
    log_scale: bool,
    what: &'static str,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (lo0, hi0) = (lo, hi);
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::BracketFailure { what, lo: lo0, hi: hi0 });
    }
    for _ in 0..400 {
        let mid = if log_scale { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid.abs() <= f_tol || f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        let width = if log_scale { (hi / lo).ln() } else { hi - lo };
        if width <= x_tol {
            break;
        }
    }
    Ok(if log_scale { (lo * hi).sqrt() } else { 0.5 * (lo + hi) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Peak {
    pub x: f64,
    pub value: f64,
    /// More than one local maximum showed up in the pre-scan.
    pub multimodal: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises `f` over `[lo, hi]` in `ln x`. A pre-scan of `scan` log-spaced
/// points locates the best cell, then golden-section search refines it until
/// the bracket is below `rel_tol` relative.
pub(crate) fn maximize_log<F>(mut f: F, lo: f64, hi: f64, scan: usize, rel_tol: f64) -> Result<Peak>
where
    F: FnMut(f64) -> Result<f64>,
{
    assert!(lo > 0.0 && hi >= lo && scan >= 3);
    if hi == lo {
        return Ok(Peak {
            x: lo,
            value: f(lo)?,
            multimodal: false,
        });
    }
    let (a, b) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..scan).map(|j| a + (b - a) * j as f64 / (scan - 1) as f64).collect();
    let values = grid.iter().map(|&u| f(u.exp())).collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(j, _)| j)
        .unwrap();
    let rises = values.windows(2).map(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-300);
    let mut peaks = 0;
    let mut prev_rise = true;
    for rise in rises.chain(std::iter::once(false)) {
        if prev_rise && !rise {
            peaks += 1;
        }
        prev_rise = rise;
    }
    let mut left = grid[best.saturating_sub(1)];
    let mut right = grid[(best + 1).min(scan - 1)];
    let mut x1 = right - INV_PHI * (right - left);
    let mut x2 = left + INV_PHI * (right - left);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    while right - left > rel_tol {
        if f1 < f2 {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + INV_PHI * (right - left);
            f2 = f(x2.exp())?;
        } else {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - INV_PHI * (right - left);
            f1 = f(x1.exp())?;
        }
    }
    let (mut x, mut value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // The scan point itself may win when the peak sits on an endpoint.
    if values[best] > value {
        x = grid[best];
        value = values[best];
    }
    Ok(Peak {
        x: x.exp(),
        value,
        multimodal: peaks > 1,
    })
}
