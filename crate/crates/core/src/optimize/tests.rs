use super::*;
use crate::receivers::{r_ordered, Capture, Collision, OrderedSic, UnorderedSic};

fn curve(n: usize, mu: f64, rho: f64, r: &dyn Receiver) -> SuccessCurve {
    success_curve(n, mu, rho, r).unwrap()
}

#[test]
fn throughput_examples() {
    let c = SuccessCurve::from_values(ReceiverModel::Capture, 1.0, 1.0, vec![0.8]).unwrap();
    assert!((throughput(1, 1.0, &c).unwrap() - 0.8).abs() < 1e-15);

    let n = 20;
    let c = curve(n, 1e-9, 1e12, &Collision);
    let got = throughput(n, 0.05, &c).unwrap();
    let want = 20.0 * 0.05 * 0.95f64.powi(19);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!((want - 0.377_353_6).abs() < 1e-7);
}

#[test]
fn derivative_limits() {
    for r in [
        &Capture as &dyn Receiver,
        &OrderedSic::default(),
        &UnorderedSic::default(),
    ] {
        let c = curve(20, 0.3, 100.0, r);
        assert!(throughput_derivative(20, 0.0, &c).unwrap() > 0.0);
        assert!((throughput_derivative(20, 0.0, &c).unwrap() - 20.0 * c.get(0)).abs() < 1e-12);
        let at_one = throughput_derivative(20, 1.0, &c).unwrap();
        let want = 20.0 * (20.0 * c.get(19) - 19.0 * c.get(18));
        assert!((at_one - want).abs() < 1e-10);
    }
    let c = SuccessCurve::from_values(ReceiverModel::Capture, 1.0, 1.0, vec![0.9, 0.3]).unwrap();
    let d = throughput_derivative(2, 1.0, &c).unwrap();
    assert!((d - 2.0 * (2.0 * 0.3 - 0.9)).abs() < 1e-15);
    assert!(d < 0.0);
}

#[test]
fn derivative_matches_central_difference() {
    let c = curve(20, 1.0, 100.0, &Capture);
    let h = 1e-6;
    let fd = (throughput(20, 0.3 + h, &c).unwrap() - throughput(20, 0.3 - h, &c).unwrap()) / (2.0 * h);
    let d = throughput_derivative(20, 0.3, &c).unwrap();
    assert!(((d - fd) / d).abs() < 1e-5, "{d} vs {fd}");
}

#[test]
fn mu_zero_examples() {
    let os = mu_zero(20, 100.0, &OrderedSic::default()).unwrap().mu_0.unwrap();
    assert!((os - 0.1205).abs() < 5e-4, "{os}");
    let ns = mu_zero(20, 100.0, &UnorderedSic::default()).unwrap().mu_0.unwrap();
    assert!((ns - 0.0532).abs() < 5e-4, "{ns}");
    let cap = mu_zero(2, 100.0, &Capture).unwrap().mu_0.unwrap();
    assert!((cap - 1.0).abs() < 1e-9);
    let cap = mu_zero(20, 100.0, &Capture).unwrap().mu_0.unwrap();
    assert!((cap - 1.0 / 19.0).abs() < 1e-9);
    assert_eq!(mu_zero(20, 100.0, &Collision).unwrap().mu_0, None);
    assert_eq!(mu_zero(2, 100.0, &Collision).unwrap().mu_0, None);
    assert!(mu_zero(1, 100.0, &Capture).is_err());
}

#[test]
fn mu_zero_residual_is_small() {
    for r in [
        &Capture as &dyn Receiver,
        &OrderedSic::default(),
        &UnorderedSic::default(),
    ] {
        let m0 = mu_zero(12, 30.0, r).unwrap().mu_0.unwrap();
        assert!(residual(12, m0, 30.0, r).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn lambda_max_low_branch_transmits_always() {
    let os = OrderedSic::default();
    let (lambda, q0) = lambda_max(20, 100.0, 0.05, &os).unwrap();
    assert_eq!(q0, 1.0);
    let r19 = r_ordered(19, 0.05, 100.0).unwrap().value();
    assert!((lambda - 20.0 * r19).abs() < 1e-12);
}

#[test]
fn lambda_max_near_n_for_small_thresholds() {
    let (lambda, _) = lambda_max(10, 1e4, 0.1, &OrderedSic::default()).unwrap();
    assert!(lambda >= 9.5, "{lambda}");
}

#[test]
fn lambda_max_beats_a_dense_grid() {
    let c = curve(20, 1.0, 100.0, &Capture);
    let (lambda, q0) = lambda_max_for_curve(20, &c).unwrap();
    assert!(q0 > 0.0 && q0 < 1.0);
    let best = (1..=10_000)
        .map(|j| throughput(20, j as f64 / 10_000.0, &c).unwrap())
        .fold(f64::MIN, f64::max);
    assert!(lambda >= best - 1e-12, "{lambda} vs {best}");
}

#[test]
fn lambda_max_is_continuous_at_mu_zero() {
    for r in [
        &Capture as &dyn Receiver,
        &OrderedSic::default(),
        &UnorderedSic::default(),
    ] {
        let m0 = mu_zero(20, 100.0, r).unwrap().mu_0.unwrap();
        let c = curve(20, m0, 100.0, r);
        let interior = lambda_max_for_curve(20, &c).unwrap().0;
        let full = 20.0 * c.get(19);
        assert!((interior - full).abs() < 1e-8, "{interior} vs {full}");
    }
}

#[test]
fn collision_closed_form_examples() {
    let e = std::f64::consts::E;
    let op = collision_optimum(20, e).unwrap();
    assert!((op.mu_star - (e - 1.0)).abs() < 1e-12);
    assert!((op.lambda_max - (-2.0 + 1.0 / e).exp()).abs() < 1e-12);
    assert!((op.mu_star - 1.718_28).abs() < 1e-4);
    assert!((op.lambda_max - 0.195_52).abs() < 1e-4);
    assert!((op.sum_rate - 0.282_08).abs() < 1e-4);
    assert_eq!(op.q0_star, 0.05);

    let tiny = collision_optimum(20, 1e-12).unwrap();
    assert!(tiny.mu_star < 1e-11 && tiny.sum_rate < 1e-11);
    assert!(collision_optimum(20, 0.0).is_err());
}

#[test]
fn collision_closed_form_matches_grid_search() {
    for rho in [0.1, 1.0, 10.0, 100.0, 1e4] {
        let op = collision_optimum(20, rho).unwrap();
        let f = |mu: f64| (-1.0 - mu / rho).exp() * mu.ln_1p() / LN_2;
        // Grid, then a local zoom around the best cell.
        let (mut lo, mut hi) = (1e-4f64, 1e6f64);
        for _ in 0..6 {
            let grid: Vec<f64> = (0..2000).map(|j| lo * (hi / lo).powf(j as f64 / 1999.0)).collect();
            let j = (0..2000).max_by(|&a, &b| f(grid[a]).total_cmp(&f(grid[b]))).unwrap();
            lo = grid[j.saturating_sub(1)];
            hi = grid[(j + 1).min(1999)];
        }
        let best = f((lo * hi).sqrt());
        assert!(((op.sum_rate - best) / best).abs() < 1e-8, "rho = {rho}");
    }
}

#[test]
fn operating_point_identities() {
    for r in [
        &Capture as &dyn Receiver,
        &Collision,
        &OrderedSic::default(),
        &UnorderedSic::default(),
    ] {
        let (op, diag) = sum_rate_max(10, 100.0, r).unwrap();
        assert!((op.sum_rate - op.lambda_max * op.mu_star.ln_1p() / LN_2).abs() < 1e-9);
        assert!(op.q0_star > 0.0 && op.q0_star <= 1.0);
        if op.branch == Branch::Low {
            assert_eq!(op.q0_star, 1.0);
        }
        assert_eq!(diag.rho_0, None);
    }
}

#[test]
fn sum_rate_max_beats_log_grid() {
    for r in [
        &Capture as &dyn Receiver,
        &Collision,
        &OrderedSic::default(),
        &UnorderedSic::default(),
    ] {
        for rho in [0.1, 10.0, 1e3] {
            let (op, _) = sum_rate_max(8, rho, r).unwrap();
            let (lo, hi) = mu_search_range(rho);
            for j in 0..2000 {
                let mu = lo * (hi / lo).powf(j as f64 / 1999.0);
                let v = sum_rate(8, rho, mu, r).unwrap();
                assert!(
                    v <= op.sum_rate * (1.0 + 1e-6),
                    "{} rho={rho} mu={mu}: {v} > {}",
                    r.name(),
                    op.sum_rate
                );
            }
        }
    }
}

#[test]
fn sum_rate_max_refuses_beyond_ordered_ceiling() {
    let err = sum_rate_max(30, 1.0, &OrderedSic::default()).unwrap_err();
    assert!(err.is_analytic_range());
}

#[test]
fn crossover_is_continuous() {
    for r in [&Capture as &dyn Receiver, &UnorderedSic::default()] {
        let rho0 = rho_zero(10, r).unwrap();
        let gap = branch_gap(10, rho0, r).unwrap();
        assert!(gap.abs() < 1e-6, "{}: gap {gap} at rho_0 = {rho0}", r.name());
        assert!(branch_gap(10, rho0 * 0.5, r).unwrap() < 0.0);
        assert!(branch_gap(10, rho0 * 2.0, r).unwrap() > 0.0);
    }
}
