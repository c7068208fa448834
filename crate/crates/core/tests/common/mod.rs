//! Independent oracles and shared simulation scenarios for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustgame::{
    run_game, Agent, GameCondition, GameConfig, GameOutput, RoundRecord, Strategy, StrategySpec,
};

/// Metric constants as plain numbers, kept apart from the crate's types.
#[derive(Clone, Copy)]
pub struct OracleParams {
    pub c: f64,
    pub floor: f64,
    pub phi: f64,
    pub eps: f64,
    pub max_atf: f64,
}

pub const DEFAULTS: OracleParams = OracleParams {
    c: 0.3,
    floor: 0.1,
    phi: 0.05,
    eps: 0.1,
    max_atf: 1.0,
};

#[derive(Debug, Clone, Copy)]
pub struct OracleRow {
    pub tc: f64,
    pub beta: f64,
    pub alpha: f64,
    pub at: f64,
    pub tf: f64,
    pub raw_atf: f64,
    pub stored_atf: f64,
    pub cr: f64,
    pub trust: f64,
}

/// Brute-force evaluation: every round recomputed from the full history,
/// one column at a time, like a spreadsheet.
pub fn oracle_trace(history: &[f64], k: OracleParams) -> Vec<OracleRow> {
    let n = history.len();
    let tc: Vec<f64> = history
        .iter()
        .map(|&p| (p * (std::f64::consts::E - 1.0) + 1.0).ln())
        .collect();
    let mut delta = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut at = vec![0.0; n];
    let mut tf = vec![0.0; n];
    let mut raw = vec![0.0; n];
    let mut stored = vec![0.0; n];
    let mut cr = vec![0.0; n];
    let mut trust = vec![0.0; n];
    for t in 0..n {
        let tc_prev = if t == 0 { 0.0 } else { tc[t - 1] };
        let beta_prev = if t == 0 { 0.0 } else { beta[t - 1] };
        delta[t] = (tc[t] - tc_prev).abs();
        beta[t] = k.c * delta[t] + (1.0 - k.c) * beta_prev;
        alpha[t] = (k.floor + k.c * delta[t] / (1.0 + beta[t])).clamp(0.0, 1.0);
        let at_prev = if t == 0 { tc[0] } else { at[t - 1] };
        at[t] = alpha[t] * tc[t] + (1.0 - alpha[t]) * at_prev;

        let tf_prev = if t == 0 { 0.5 } else { tf[t - 1] };
        let up = tc[t] - at[t];
        let down = at[t] - tc[t];
        tf[t] = if up > k.eps {
            tf_prev + k.phi
        } else if down > k.eps {
            tf_prev - k.phi
        } else {
            tf_prev
        }
        .clamp(0.0, 1.0);

        let carried = if t == 0 { 0.0 } else { stored[t - 1] };
        raw[t] = if up > k.phi {
            carried + up / 2.0
        } else if down > k.phi {
            carried + down
        } else {
            carried
        };
        stored[t] = if raw[t] > k.max_atf { raw[t] / 2.0 } else { raw[t] };
        cr[t] = if raw[t] >= k.max_atf {
            0.0
        } else {
            (std::f64::consts::PI / 2.0 * raw[t] / k.max_atf).cos()
        };
        let expect = tf[t] * tc[t] + (1.0 - tf[t]) * at[t];
        trust[t] = (expect * cr[t]).clamp(0.0, 1.0);
    }
    (0..n)
        .map(|t| OracleRow {
            tc: tc[t],
            beta: beta[t],
            alpha: alpha[t],
            at: at[t],
            tf: tf[t],
            raw_atf: raw[t],
            stored_atf: stored[t],
            cr: cr[t],
            trust: trust[t],
        })
        .collect()
}

/// Frozen from an independent high-precision evaluation.
pub const BETRAYAL_TRUST_K5: f64 = 0.18070924056636412;
pub const ALTERNATION_ROUND3_TRUST: f64 = 0.26422418250496327;

/// OLS by the normal equations and Gauss-Jordan inversion.
pub struct NormalEquationsFit {
    pub coefficients: Vec<f64>,
    pub t_values: Vec<f64>,
    pub adj_r2: f64,
    pub f: f64,
}

pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> NormalEquationsFit {
    let n = y.len();
    let k = x[0].len();
    let p = k + 1;
    let design: Vec<Vec<f64>> = x
        .iter()
        .map(|row| std::iter::once(1.0).chain(row.iter().copied()).collect())
        .collect();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    // augment with identity and reduce
    let mut aug: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut r = xtx[i].clone();
            r.extend((0..p).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = aug[r][col];
                let src = aug[col].clone();
                for (v, s) in aug[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    let inv: Vec<Vec<f64>> = aug.iter().map(|r| r[p..].to_vec()).collect();
    let beta: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum())
        .collect();
    let sse: f64 = design
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let df = (n - p) as f64;
    let s2 = sse / df;
    let t_values = (0..p).map(|i| beta[i] / (s2 * inv[i][i]).sqrt()).collect();
    let r2 = 1.0 - sse / sst;
    NormalEquationsFit {
        coefficients: beta,
        t_values,
        adj_r2: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df,
        f: ((sst - sse) / k as f64) / s2,
    }
}

/// Welch statistic straight from the textbook formula.
pub fn welch_textbook(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let t = (ma - mb) / (va / na + vb / nb).sqrt();
    let df = (va / na + vb / nb).powi(2)
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    (t, df)
}

pub fn boxed(agents: Vec<Agent>) -> Vec<Box<dyn Strategy>> {
    agents
        .into_iter()
        .map(|a| Box::new(a) as Box<dyn Strategy>)
        .collect()
}

/// One playbook attacker (A) targeting B, in the combined condition.
pub fn playbook_game(seed: u64) -> GameOutput {
    let specs = [
        ("A", StrategySpec::Playbook { victims: vec!["B".into()], good_f: 0.8 }),
        ("B", StrategySpec::TrustProportional { gain: 1.0, fallback: 0.5 }),
        ("C", StrategySpec::Cooperator),
        ("D", StrategySpec::Cooperator),
        ("E", StrategySpec::Reciprocator { f: 0.8 }),
        ("F", StrategySpec::FixedFraction { f: 0.6 }),
    ];
    let agents = specs
        .into_iter()
        .map(|(id, s)| Agent::new(id, s, seed))
        .collect();
    let config = GameConfig {
        condition: GameCondition::Combined,
        rng_seed: seed,
        ..GameConfig::default()
    };
    run_game(&config, &mut boxed(agents)).expect("playbook game runs")
}

pub const STABLE_SESSIONS: usize = 36;

/// Sessions of six agents, each sending and returning a fixed fraction plus
/// uniform noise of +/- 0.05; fractions differ across agents and sessions.
pub fn stable_population_log(seed: u64) -> Vec<RoundRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::new();
    for s in 0..STABLE_SESSIONS {
        let session_seed = seed.wrapping_add(s as u64);
        let agents = (0..6)
            .map(|i| {
                let f: f64 = rng.gen_range(0.1..0.9);
                Agent::new(
                    format!("p{i}"),
                    StrategySpec::Random { lo: f - 0.05, hi: f + 0.05 },
                    session_seed,
                )
            })
            .collect();
        let config = GameConfig {
            session_id: format!("s{s}"),
            rng_seed: session_seed,
            ..GameConfig::default()
        };
        log.extend(run_game(&config, &mut boxed(agents)).unwrap().records);
    }
    log
}

/// Sessions mixing betrayers, reciprocators, playbook attackers and noisy
/// agents, with identities shown.
pub fn adaptive_population_log(seed: u64) -> Vec<RoundRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::new();
    for s in 0..36u64 {
        let agents = (0..6)
            .map(|i| {
                let spec = match rng.gen_range(0..4) {
                    0 => StrategySpec::Betrayer { k: rng.gen_range(1..4) },
                    1 => StrategySpec::Reciprocator { f: rng.gen_range(0.2..0.9) },
                    2 => StrategySpec::Playbook {
                        victims: vec![format!("p{}", rng.gen_range(0..6))],
                        good_f: rng.gen_range(0.5..0.9),
                    },
                    _ => StrategySpec::Random { lo: 0.3, hi: 0.7 },
                };
                Agent::new(format!("p{i}"), spec, seed + s)
            })
            .collect();
        let config = GameConfig {
            session_id: format!("s{s}"),
            condition: GameCondition::Identity,
            rng_seed: seed + s,
            ..GameConfig::default()
        };
        log.extend(run_game(&config, &mut boxed(agents)).unwrap().records);
    }
    log
}
