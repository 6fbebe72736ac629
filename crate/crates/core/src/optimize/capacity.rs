use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::specfun::{ln_factorial, CompensatedSum};

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]; the odd-indexed
// Kronrod nodes are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod on `[a, b]` with the error budget spread in
/// proportion to interval width.
fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut total = CompensatedSum::new();
    let mut stack = vec![(a, b, 0u32)];
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(f, lo, hi);
        if err <= tol * (hi - lo) / width || depth >= 48 {
            total.add(value);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total.value()
}

/// `E[log2(1 + rho G)]` with `G` the sum of `n` unit-mean exponentials: the
/// ergodic sum capacity of `n` Rayleigh users at per-user SNR `rho`.
pub fn ergodic_sum_capacity(n: usize, rho: f64) -> Result<f64> {
    const TOL: f64 = 1e-8;
    if n == 0 {
        return Err(Error::domain("ergodic capacity needs n >= 1"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("rho must be positive and finite, got {rho}")));
    }
    let shape = (n - 1) as f64;
    let ln_norm = ln_factorial(n as u64 - 1);
    let integrand = |x: f64| {
        let ln_density = if n == 1 { -x } else { shape * x.ln() - x - ln_norm };
        (rho * x).ln_1p() / LN_2 * ln_density.exp()
    };
    // Finite pieces around the bulk of the density, then the tail on
    // x = c + t / (1 - t).
    let nf = n as f64;
    let spread = 10.0 * nf.sqrt();
    let cuts = [0.0, (nf - spread).max(0.0), nf, nf + spread];
    let mut total = CompensatedSum::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total.add(integrate(&integrand, w[0], w[1], TOL / 4.0));
        }
    }
    let start = cuts[3];
    let tail = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        integrand(start + t / s) / (s * s)
    };
    total.add(integrate(&tail, 0.0, 1.0, TOL / 4.0));
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{exponential, CounterRng, Purpose};

    // Exponential integral E1 by its power series (x <= 1) or continued
    // fraction (x > 1).
    fn e1(x: f64) -> f64 {
        const EULER: f64 = 0.577_215_664_901_532_9;
        if x <= 1.0 {
            let mut sum = 0.0;
            let mut term = 1.0;
            for k in 1..200 {
                term *= -x / k as f64;
                sum += term / k as f64;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            return -EULER - x.ln() - sum;
        }
        // Modified Lentz on E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }

    #[test]
    fn single_user_matches_exponential_integral() {
        assert!((e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        for rho in [0.1f64, 1.0, 10.0, 1e3, 1e6] {
            let want = (1.0 / rho).exp() * e1(1.0 / rho) / LN_2;
            let got = ergodic_sum_capacity(1, rho).unwrap();
            assert!((got - want).abs() < 1e-8, "rho = {rho}: {got} vs {want}");
        }
        assert!((ergodic_sum_capacity(1, 1.0).unwrap() - 0.860_347).abs() < 1e-6);
    }

    #[test]
    fn matches_monte_carlo_for_many_users() {
        let (n, rho) = (20usize, 100.0);
        let rng = CounterRng::new(3);
        let samples = 400_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for s in 0..samples {
            let mut g = 0.0;
            for b in 0..5 {
                for bits in rng.block(s, b, Purpose::Sample, 0) {
                    g += exponential(bits);
                }
            }
            let v = (1.0 + rho * g).log2();
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / samples as f64;
        let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        let got = ergodic_sum_capacity(n, rho).unwrap();
        assert!(((got - mean) / se).abs() < 3.0, "{got} vs {mean} +- {se}");
    }

    #[test]
    fn limits_and_slope() {
        assert!(ergodic_sum_capacity(20, 1e-12).unwrap() < 1e-9);
        let c = |rho: f64| ergodic_sum_capacity(20, rho).unwrap();
        for rho in [1e5, 1e6] {
            let slope = (c(10.0 * rho) - c(rho)) / 10f64.log2();
            assert!((0.95..=1.0).contains(&slope), "{slope}");
        }
        assert!(ergodic_sum_capacity(0, 1.0).is_err());
        assert!(ergodic_sum_capacity(3, 0.0).is_err());
    }

    #[test]
    fn large_networks_integrate_the_whole_density() {
        // log2(1 + rho G) ~ log2(rho n) when G concentrates at n
        let got = ergodic_sum_capacity(2000, 1e3).unwrap();
        let approx = (1.0 + 1e3 * 2000.0f64).log2();
        assert!((got - approx).abs() < 1e-3, "{got} vs {approx}");
    }
}
