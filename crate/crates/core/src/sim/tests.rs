use super::*;
use crate::receivers::{r_capture, y_ordered, Capture, Collision, OrderedSic, UnorderedMode, UnorderedSic};

fn order() -> OrderStream {
    CounterRng::new(0).stream(0, Purpose::Order)
}

#[test]
fn decode_examples() {
    let out = decode_slot(&[3.0, 3.0], 1.0, 1.0, ReceiverModel::Capture, &mut order());
    assert_eq!(out.decoded, 0);
    let out = decode_slot(&[10.0, 0.5], 1.0, 1.0, ReceiverModel::OrderedSic, &mut order());
    assert_eq!(out.decoded, 1);
    // Either visiting order decodes exactly the strong packet.
    for seed in 0..8 {
        let mut o = CounterRng::new(seed).stream(0, Purpose::Order);
        let out = decode_slot(&[0.5, 10.0], 1.0, 1.0, ReceiverModel::UnorderedSic, &mut o);
        assert_eq!(out.decoded, 1);
        assert!(out.per_packet[1].success);
    }
}

#[test]
fn collision_decodes_only_lone_packets() {
    let out = decode_slot(&[5.0], 1.0, 2.0, ReceiverModel::Collision, &mut order());
    assert_eq!((out.transmitters, out.decoded), (1, 1));
    let out = decode_slot(&[1.5], 1.0, 2.0, ReceiverModel::Collision, &mut order());
    assert_eq!(out.decoded, 0);
    let out = decode_slot(&[50.0, 0.001], 1.0, 0.01, ReceiverModel::Collision, &mut order());
    assert_eq!(out.decoded, 0);
    let out = decode_slot(&[], 1.0, 1.0, ReceiverModel::Collision, &mut order());
    assert_eq!((out.transmitters, out.decoded), (0, 0));
}

#[test]
fn single_node_matches_noise_only_success() {
    let cfg = NetworkConfig::uniform(1, 10.0, 1.0, 1.0).unwrap();
    let want = (-0.1f64).exp();
    for r in ReceiverModel::ALL {
        let s = simulate(&cfg, r.receiver().as_ref(), 10_000_000, 11).unwrap();
        assert!(s.throughput.z_score(want).abs() < 3.0, "{r}: {:?}", s.throughput);
    }
}

#[test]
fn zero_slots_is_an_error() {
    let cfg = NetworkConfig::uniform(3, 10.0, 1.0, 0.5).unwrap();
    assert!(simulate(&cfg, &Capture, 0, 1).is_err());
    let mixed = NetworkConfig::new(3, 10.0, 1.0, vec![0.5, 0.2]).unwrap();
    assert!(simulate(&mixed, &Capture, 10, 1).is_err());
}

#[test]
fn results_do_not_depend_on_threads_or_chunking() {
    let cfg = NetworkConfig::uniform(8, 30.0, 0.4, 0.3).unwrap();
    let receivers: [&dyn Receiver; 3] = [&OrderedSic::default(), &UnorderedSic::default(), &Capture];
    let base = simulate_paired(
        &cfg,
        &receivers,
        20_000,
        5,
        &SimOptions {
            workers: 1,
            chunk_slots: 20_000,
        },
    )
    .unwrap();
    for (workers, chunk_slots) in [(2, 1000), (3, 777), (4, 1)] {
        let other = simulate_paired(&cfg, &receivers, 20_000, 5, &SimOptions { workers, chunk_slots }).unwrap();
        assert_eq!(format!("{base:?}"), format!("{other:?}"));
    }
    let single = simulate_with(
        &cfg,
        &Capture,
        20_000,
        5,
        &SimOptions {
            workers: 2,
            chunk_slots: 999,
        },
    )
    .unwrap();
    assert_eq!(format!("{single:?}"), format!("{:?}", base[2]));
}

#[test]
fn collision_throughput_near_aloha_peak() {
    let n = 20;
    let cfg = NetworkConfig::uniform(n, 1e9, 1e-9, 1.0 / n as f64).unwrap();
    let s = simulate(&cfg, &Collision, 2_000_000, 3).unwrap();
    let want = (1.0 - 1.0 / n as f64).powi(n as i32 - 1);
    assert!(s.throughput.z_score(want).abs() < 3.0, "{:?} vs {want}", s.throughput);
    assert!((want - (-1.0f64).exp()).abs() < 0.01);
}

#[test]
fn capture_conditional_success_matches_closed_form() {
    let cfg = NetworkConfig::uniform(10, 100.0, 0.5, 0.3).unwrap();
    let s = simulate(&cfg, &Capture, 2_000_000, 9).unwrap();
    let mut checked = 0;
    for (i, r) in s.r_hat.iter().enumerate() {
        if let Some(r) = r.filter(|r| r.samples >= 1000) {
            let want = r_capture(i, 0.5, 100.0).unwrap().value();
            let z = (r.mean - want) / r.se;
            assert!(z.abs() < 3.0, "i = {i}: {r:?} vs {want}");
            checked += 1;
        }
    }
    assert!(checked >= 6);
}

#[test]
fn ordered_sic_decodes_at_least_capture_when_mu_at_least_one() {
    let rng = CounterRng::new(21);
    let (os, cap) = (OrderedSic::default(), Capture);
    let (mut a, mut b) = (SlotOutcome::default(), SlotOutcome::default());
    let mut powers = Vec::new();
    for mu in [1.0, 1.5, 4.0] {
        for slot in 0..50_000 {
            draw_slot(&rng, slot, 12, 0.4, 30.0, &mut powers);
            os.decode(&powers, 1.0, mu, &mut rng.stream(slot, Purpose::Order), &mut a);
            cap.decode(&powers, 1.0, mu, &mut rng.stream(slot, Purpose::Order), &mut b);
            assert!(a.decoded >= b.decoded, "slot {slot}: {powers:?}");
            assert!(b.decoded <= 1);
        }
    }
}

#[test]
fn multipass_never_decodes_less() {
    let cfg = NetworkConfig::uniform(10, 100.0, 0.3, 0.5).unwrap();
    let single = UnorderedSic::default();
    let multi = UnorderedSic::new(UnorderedMode::MultiPass);
    let s = simulate_paired(&cfg, &[&single, &multi], 200_000, 4, &SimOptions::default()).unwrap();
    assert!(s[1].decoded >= s[0].decoded);
    assert_eq!(s[1].receiver, "unordered-sic-multipass");
}

#[test]
fn sum_rate_scales_throughput() {
    let cfg = NetworkConfig::uniform(5, 100.0, 3.0, 0.2).unwrap();
    let s = simulate(&cfg, &Capture, 10_000, 2).unwrap();
    assert!((s.sum_rate.mean - s.throughput.mean * 2.0).abs() < 1e-15);
    let p = s.decoded as f64 / s.transmissions as f64;
    assert_eq!(s.p_hat.mean, p);
}

#[test]
fn estimate_y_examples() {
    let opts = SimOptions::default();
    let e = estimate_y(0, 1, 2.0, 5.0, 1_000_000, 1, &opts).unwrap();
    assert!(e.z_score((-0.4f64).exp()).abs() < 3.0);
    let e = estimate_y(1, 1, 1.0, 1e12, 1_000_000, 1, &opts).unwrap();
    assert_eq!(e.mean, 1.0);
    let e = estimate_y(4, 2, 0.5, 100.0, 10_000_000, 1, &opts).unwrap();
    let want = y_ordered(4, 2, 0.5, 100.0).unwrap().value.value();
    assert!(e.z_score(want).abs() < 3.0, "{e:?} vs {want}");
    assert!(estimate_y(2, 4, 1.0, 1.0, 10, 1, &opts).is_err());
    assert!(estimate_y(2, 1, 1.0, 1.0, 0, 1, &opts).is_err());
}

#[test]
fn layer_marginals_match_sorting_oracle() {
    let opts = SimOptions::default();
    for (i, mu, rho) in [(2usize, 1.0, 100.0), (5, 2.0, 100.0), (4, 0.5, 1.0), (6, 0.2, 10.0)] {
        for l in 1..=i + 1 {
            let want = y_ordered(i, l, mu, rho).unwrap().value.value();
            let samples = 1_000_000;
            let e = estimate_y(i, l, mu, rho, samples, 17 + l as u64, &opts).unwrap();
            // An all-hit run has zero sample spread; fall back to one count.
            let se = e.se.max(1.0 / samples as f64);
            assert!(
                (e.mean - want).abs() < 3.0 * se,
                "({i},{l},{mu},{rho}): {e:?} vs {want}"
            );
        }
    }
}

#[test]
fn r_curve_estimator_recovers_capture() {
    let est = estimate_r_curve(6, 0.7, 20.0, &Capture, 400_000, 8, &SimOptions::default()).unwrap();
    for (i, r) in est.iter().enumerate() {
        let want = r_capture(i, 0.7, 20.0).unwrap().value();
        assert!(((r.mean - want) / r.se).abs() < 3.0, "i = {i}: {r:?} vs {want}");
    }
}
