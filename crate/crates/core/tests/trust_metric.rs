mod common;

use common::{oracle_trace, DEFAULTS};
use proptest::prelude::*;
use trustgame::trust::{change_rate, fluctuation_step};
use trustgame::{current_trust, PairTrustState, TrustParams, UpdateTrace};

fn run(history: &[f64]) -> Vec<UpdateTrace> {
    let params = TrustParams::default();
    let mut s = PairTrustState::new("obs", "partner", &params);
    history.iter().map(|&p| s.apply(p, &params).unwrap()).collect()
}

fn assert_matches_oracle(history: &[f64], tol: f64) {
    let got = run(history);
    let want = oracle_trace(history, DEFAULTS);
    for (t, (g, w)) in got.iter().zip(&want).enumerate() {
        let pairs = [
            ("tc", g.current_trust, w.tc),
            ("beta", g.beta, w.beta),
            ("alpha", g.alpha, w.alpha),
            ("at", g.aggregate_trust, w.at),
            ("tf", g.trend_factor, w.tf),
            ("raw_atf", g.raw_atf, w.raw_atf),
            ("atf", g.atf, w.stored_atf),
            ("cr", g.change_rate, w.cr),
            ("trust", g.trust_value, w.trust),
        ];
        for (name, a, b) in pairs {
            assert!((a - b).abs() <= tol, "round {t} {name}: {a} vs {b}");
        }
    }
}

#[test]
fn point_values() {
    assert!(current_trust(0.0f64).unwrap().abs() < 1e-12);
    assert!((current_trust(1.0f64).unwrap() - 1.0).abs() < 1e-12);
    assert!((current_trust(0.5f64).unwrap() - 0.6201145069582775).abs() < 1e-12);
}

#[test]
fn current_trust_is_increasing_and_above_identity() {
    let mut prev = -1.0;
    for i in 0..=1000 {
        let p = i as f64 / 1000.0;
        let tc = current_trust(p).unwrap();
        assert!(tc > prev);
        assert!(tc >= p);
        if i > 0 && i < 1000 {
            assert!(tc > p);
        }
        prev = tc;
    }
}

#[test]
fn hand_traces() {
    let cooperate: Vec<f64> = vec![1.0; 5];
    let last = *run(&cooperate).last().unwrap();
    assert_eq!(last.trust_value, 1.0);

    let mut betrayal = cooperate.clone();
    betrayal.push(0.0);
    let tr = run(&betrayal);
    let b = tr[5];
    assert!((b.trust_value - common::BETRAYAL_TRUST_K5).abs() < 1e-12);
    assert!((b.raw_atf - 0.6778470565845762).abs() < 1e-12);
    assert!((b.change_rate - 0.4847144387270967).abs() < 1e-12);
    assert!((b.beta - 0.350421).abs() < 1e-12);

    betrayal.push(0.0);
    let tr = run(&betrayal);
    assert!((tr[6].raw_atf - 1.287909407510695).abs() < 1e-12);
    assert!((tr[6].aggregate_trust - 0.6100623509261186).abs() < 1e-12);
    assert_eq!(tr[6].trust_value, 0.0);

    let tr = run(&[1.0, 0.0, 1.0, 0.0]);
    let want = [1.0, 0.17440163694786562, common::ALTERNATION_ROUND3_TRUST, 0.0];
    for (g, w) in tr.iter().zip(want) {
        assert!((g.trust_value - w).abs() < 1e-12, "{} vs {w}", g.trust_value);
    }
    assert!((tr[3].raw_atf - 1.3815714320577337).abs() < 1e-12);
}

#[test]
fn fixed_point_at_half() {
    let p = (0.5f64.exp() - 1.0) / (std::f64::consts::E - 1.0);
    let tr = run(&[p; 20]);
    for t in &tr {
        assert!((t.trust_value - 0.5).abs() < 1e-12);
    }
    assert!((tr[0].beta - 0.15).abs() < 1e-12);
}

#[test]
fn constant_behavior_keeps_trust_at_current_trust() {
    for i in 0..=20 {
        let p = i as f64 / 20.0;
        let tc = current_trust(p).unwrap();
        for t in run(&[p; 12]) {
            assert!((t.trust_value - tc).abs() < 1e-12);
            assert_eq!(t.change_rate, 1.0);
        }
    }
}

#[test]
fn hand_traces_match_brute_force() {
    let p_half = (0.5f64.exp() - 1.0) / (std::f64::consts::E - 1.0);
    let histories: Vec<Vec<f64>> = vec![
        vec![p_half; 5],
        vec![1.0; 5],
        vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.3, 0.9, 0.1, 0.5, 0.5, 0.7, 0.0, 1.0, 0.2],
    ];
    for h in histories {
        assert_matches_oracle(&h, 1e-12);
    }
}

#[test]
fn asymmetric_fluctuation_step() {
    let phi = 0.05;
    for d in [0.1, 0.2, 0.4] {
        for at in [0.45, 0.5, 0.55] {
            // the same realized magnitude on both sides of the aggregate
            let dev = (at + d) - at;
            let below = at - dev;
            assert_eq!(at - below, dev);
            let up = fluctuation_step(0.0, at + d, at, phi);
            let down = fluctuation_step(0.0, below, at, phi);
            assert_eq!(down, 2.0 * up, "d={d} at={at}");
            for base in [0.3f64, 0.75] {
                let up = fluctuation_step(base, at + d, at, phi) - base;
                let down = fluctuation_step(base, below, at, phi) - base;
                assert!((down - 2.0 * up).abs() < 1e-15);
            }
        }
    }
}

/// Finds the round-t proportion whose current trust deviates from the
/// updated aggregate by exactly `d` (up or down), after `warm` rounds at p0.
fn deviating_proportion(p0: f64, warm: usize, d: f64, upward: bool) -> f64 {
    let gap = |p: f64| {
        let mut h = vec![p0; warm];
        h.push(p);
        let last = *oracle_trace(&h, DEFAULTS).last().unwrap();
        if upward {
            last.tc - last.at
        } else {
            last.at - last.tc
        }
    };
    let (mut lo, mut hi) = if upward { (p0, 1.0) } else { (0.0, p0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let inside = gap(mid) < d;
        match (upward, inside) {
            (true, true) | (false, false) => lo = mid,
            _ => hi = mid,
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn asymmetric_punishment_in_traces() {
    let p0 = (0.5f64.exp() - 1.0) / (std::f64::consts::E - 1.0);
    for d in [0.1, 0.2] {
        let up_p = deviating_proportion(p0, 4, d, true);
        let down_p = deviating_proportion(p0, 4, d, false);
        let mut up_h = vec![p0; 4];
        up_h.push(up_p);
        let mut down_h = vec![p0; 4];
        down_h.push(down_p);
        let up = run(&up_h);
        let down = run(&down_h);
        let inc_up = up[4].raw_atf - up[3].atf;
        let inc_down = down[4].raw_atf - down[3].atf;
        assert!((inc_down - 2.0 * inc_up).abs() < 1e-12, "d={d}");
        assert!((inc_down - d).abs() < 1e-9);
    }
    // At d = 0.4 no shared history reaches both sides, so each trace is
    // checked against its own realized deviation.
    for history in [vec![0.2, 0.2, 1.0], vec![0.9, 0.9, 0.0]] {
        let tr = run(&history);
        let dev = tr[2].current_trust - tr[2].aggregate_trust;
        let inc = tr[2].raw_atf - tr[1].atf;
        let want = if dev > 0.0 { dev / 2.0 } else { -dev };
        assert!(dev.abs() > 0.3);
        assert!((inc - want).abs() < 1e-12);
    }
}

#[test]
fn betrayal_beats_averaging() {
    let want = [
        0.17860035406868038,
        0.17983783454173516,
        0.18070924056636412,
        0.18132119014068285,
        0.18175029807399448,
        0.18205095582049494,
        0.18226152470233561,
        0.18240896541230373,
    ];
    for (k, w) in (3..=10).zip(want) {
        let mut h = vec![1.0; k];
        h.push(0.0);
        let trust = run(&h).last().unwrap().trust_value;
        let reputation = k as f64 / (k + 1) as f64;
        assert!((trust - w).abs() < 1e-12, "k={k}");
        assert!(trust < reputation - 0.3, "k={k}");
    }
}

#[test]
fn change_rate_is_one_at_zero_and_zero_at_max() {
    assert_eq!(change_rate(0.0f64, 1.0), 1.0);
    assert_eq!(change_rate(1.0f64, 1.0), 0.0);
    assert_eq!(change_rate(1.7f64, 1.0), 0.0);
}

fn proportion() -> impl Strategy<Value = f64> {
    prop_oneof![
        2 => 0.0f64..=1.0,
        1 => Just(0.0),
        1 => Just(1.0),
        1 => (0u32..=10).prop_map(|a| f64::from(a) / 10.0),
    ]
}

proptest! {
    #[test]
    fn matches_brute_force(history in prop::collection::vec(proportion(), 1..40)) {
        assert_matches_oracle(&history, 1e-9);
    }

    #[test]
    fn invariants_hold(history in prop::collection::vec(proportion(), 1..200)) {
        let params = TrustParams::default();
        let mut s = PairTrustState::new("a", "b", &params);
        let mut prev_atf = 0.0;
        for p in history {
            let t = s.apply(p, &params).unwrap();
            for v in [t.current_trust, t.aggregate_trust, t.trend_factor, t.change_rate, t.trust_value, t.alpha] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(t.beta >= 0.0 && t.raw_atf >= 0.0 && t.atf >= 0.0);
            prop_assert!(t.raw_atf >= prev_atf);
            prop_assert_eq!(t.change_rate == 0.0, t.raw_atf >= params.max_atf);
            if t.raw_atf > params.max_atf {
                prop_assert_eq!(t.atf, t.raw_atf / 2.0);
            } else {
                prop_assert_eq!(t.atf, t.raw_atf);
            }
            prop_assert_eq!(s.round_count as usize > 0, true);
            prev_atf = t.atf;
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let p32 = trustgame::TrustParams32::default();
    let p64 = TrustParams::default();
    let mut s32 = trustgame::PairTrustState32::new("a", "b", &p32);
    let mut s64 = PairTrustState::new("a", "b", &p64);
    for p in [0.6, 0.7, 0.65, 0.6, 0.2, 0.8] {
        let a = s32.apply(p as f32, &p32).unwrap().trust_value;
        let b = s64.apply(p, &p64).unwrap().trust_value;
        assert!((f64::from(a) - b).abs() < 1e-5);
    }
}
