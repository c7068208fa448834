//! Behavioral measures and the trust-versus-reputation predictive comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameCondition, RoundRecord, Stakes};
use crate::scoring::{split_streams, Scorebook};
use crate::stats::{self, ols_fit, paired_t_ci, welch_t, OlsFit, PairedInterval, WelchTest};
use crate::trust::{Role, TrustParams};

/// Per participant and condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentMeasures {
    pub session_id: String,
    pub participant_id: String,
    pub game_condition: GameCondition,
    /// Includes rounds where nothing was sent.
    pub avg_send_proportion_as_sender: Option<f64>,
    /// Over rounds with something to return; `None` if there were none.
    pub avg_send_proportion_as_receiver: Option<f64>,
    pub zero_send_rate_as_sender: Option<f64>,
    pub zero_return_rate_as_receiver: Option<f64>,
    pub sender_rounds: usize,
    pub receiver_rounds: usize,
}

#[derive(Default)]
struct Tally {
    sender: Vec<f64>,
    receiver: Vec<f64>,
    receiver_rounds: usize,
}

fn proportion_rate(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Sending-proportion measures for every participant in the log, sorted by
/// (session, participant, condition).
pub fn dependent_measures(log: &[RoundRecord], stakes: Stakes) -> Vec<DependentMeasures> {
    let mut tallies: BTreeMap<(String, String, GameCondition), Tally> = BTreeMap::new();
    for r in log {
        let s = tallies
            .entry((r.session_id.clone(), r.sender_id.clone(), r.game_condition))
            .or_default();
        s.sender
            .push(f64::from(r.amount_sent) / f64::from(stakes.endowment));
        let t = tallies
            .entry((r.session_id.clone(), r.receiver_id.clone(), r.game_condition))
            .or_default();
        t.receiver_rounds += 1;
        if r.amount_sent > 0 {
            t.receiver
                .push(f64::from(r.amount_returned) / f64::from(stakes.multiplier * r.amount_sent));
        }
    }
    tallies
        .into_iter()
        .map(|((session_id, participant_id, game_condition), t)| DependentMeasures {
            session_id,
            participant_id,
            game_condition,
            avg_send_proportion_as_sender: stats::mean(&t.sender),
            avg_send_proportion_as_receiver: stats::mean(&t.receiver),
            zero_send_rate_as_sender: proportion_rate(
                t.sender.iter().filter(|&&p| p == 0.0).count(),
                t.sender.len(),
            ),
            zero_return_rate_as_receiver: proportion_rate(
                t.receiver.iter().filter(|&&p| p == 0.0).count(),
                t.receiver.len(),
            ),
            sender_rounds: t.sender.len(),
            receiver_rounds: t.receiver_rounds,
        })
        .collect()
}

/// Fraction of a role's rounds in `condition` where nothing was sent.
///
/// For receivers only rounds with something to return count. `None` when
/// there are no such rounds.
pub fn zero_send_rate(log: &[RoundRecord], condition: GameCondition, role: Role) -> Option<f64> {
    let rows = log.iter().filter(|r| r.game_condition == condition);
    let (hits, total) = match role {
        Role::Sender => rows.fold((0, 0), |(h, t), r| (h + usize::from(r.amount_sent == 0), t + 1)),
        Role::Receiver => rows
            .filter(|r| r.amount_sent > 0)
            .fold((0, 0), |(h, t), r| (h + usize::from(r.amount_returned == 0), t + 1)),
    };
    proportion_rate(hits, total)
}

/// Slope, fit quality and significance of one single-predictor regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    pub t: f64,
    pub p_value: f64,
    pub stars: String,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
}

impl FitSummary {
    fn from_fit(fit: &OlsFit<f64>) -> Self {
        let p = fit.p_values()[1];
        Self {
            intercept: fit.coefficients[0],
            slope: fit.coefficients[1],
            intercept_se: fit.standard_errors[0],
            slope_se: fit.standard_errors[1],
            t: fit.t_values[1],
            p_value: p,
            stars: stats::significance_stars(p).to_string(),
            r_squared: fit.r_squared,
            adj_r_squared: fit.adj_r_squared,
            f_statistic: fit.f_statistic,
        }
    }

    fn is_finite(&self) -> bool {
        [self.slope, self.slope_se, self.t, self.adj_r_squared, self.f_statistic]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// One table row: the same responses regressed on trust and, separately, on reputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub round: u32,
    pub role: Role,
    pub n: usize,
    pub df: usize,
    pub t_trust: f64,
    pub adj_r2_trust: f64,
    pub t_reputation: f64,
    pub adj_r2_reputation: f64,
    pub trust_fit: FitSummary,
    pub reputation_fit: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub start_round: u32,
    /// Each regression includes an intercept.
    pub intercept: bool,
    pub rows: Vec<RegressionReport>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Sample {
    response: Vec<f64>,
    trust: Vec<f64>,
    reputation: Vec<f64>,
}

/// Regresses each round's send proportions on the actor's trust and reputation.
///
/// For round `t >= start_round` and each role, the response is the actor's
/// send proportion at `t`, the trust predictor is the trust the actor's
/// current partner held after round `t - 1`, and the reputation predictor is
/// the actor's average over rounds before `t`. Receiver rows skip zero
/// transactions. Observations whose actor has no reputation yet are dropped
/// and counted in a warning; rounds without enough data produce a warning
/// instead of a row.
pub fn predictive_comparison(
    log: &[RoundRecord],
    stakes: Stakes,
    params: &TrustParams<f64>,
    start_round: u32,
) -> Result<ComparisonReport> {
    params.validate()?;
    let mut samples: BTreeMap<(u32, Role), Sample> = BTreeMap::new();
    let mut dropped: BTreeMap<(u32, Role), usize> = BTreeMap::new();

    for ((session, condition), rows) in split_streams(log) {
        let mut book = Scorebook::new(session, condition, stakes, *params);
        let mut i = 0;
        while i < rows.len() {
            let round = rows[i].round_index;
            let end = i + rows[i..].iter().take_while(|r| r.round_index == round).count();
            let batch = &rows[i..end];
            if round >= start_round {
                for r in batch {
                    let mut push = |role: Role, actor: &str, partner: &str, y: f64| {
                        match book.reputation(actor) {
                            Some(rep) => {
                                let s = samples.entry((round, role)).or_default();
                                s.response.push(y);
                                s.trust.push(book.trust(partner, actor));
                                s.reputation.push(rep);
                            }
                            None => *dropped.entry((round, role)).or_default() += 1,
                        }
                    };
                    push(
                        Role::Sender,
                        &r.sender_id,
                        &r.receiver_id,
                        f64::from(r.amount_sent) / f64::from(stakes.endowment),
                    );
                    if r.amount_sent > 0 {
                        push(
                            Role::Receiver,
                            &r.receiver_id,
                            &r.sender_id,
                            f64::from(r.amount_returned)
                                / f64::from(stakes.multiplier * r.amount_sent),
                        );
                    }
                }
            }
            for r in batch {
                book.ingest(r)?;
            }
            i = end;
        }
    }

    let mut warnings = Vec::new();
    for ((round, role), count) in &dropped {
        warnings.push(format!(
            "round {round} {}: {count} observation(s) dropped, actor had no reputation yet",
            role.as_str()
        ));
    }
    let mut rows = Vec::new();
    for ((round, role), s) in samples {
        let trust_x: Vec<Vec<f64>> = s.trust.iter().map(|&v| vec![v]).collect();
        let rep_x: Vec<Vec<f64>> = s.reputation.iter().map(|&v| vec![v]).collect();
        let fits = ols_fit(&trust_x, &s.response).and_then(|t| {
            ols_fit(&rep_x, &s.response).map(|r| (t, r))
        });
        let (tf, rf) = match fits {
            Ok(f) => f,
            Err(e @ (Error::InsufficientData(_) | Error::Singular)) => {
                warnings.push(format!(
                    "round {round} {}: row omitted ({e}; n = {})",
                    role.as_str(),
                    s.response.len()
                ));
                continue;
            }
            Err(e) => return Err(e),
        };
        let trust_fit = FitSummary::from_fit(&tf);
        let reputation_fit = FitSummary::from_fit(&rf);
        if !trust_fit.is_finite() || !reputation_fit.is_finite() {
            warnings.push(format!(
                "round {round} {}: row omitted (degenerate fit; n = {})",
                role.as_str(),
                s.response.len()
            ));
            continue;
        }
        rows.push(RegressionReport {
            round,
            role,
            n: tf.n,
            df: tf.df_residual,
            t_trust: trust_fit.t,
            adj_r2_trust: trust_fit.adj_r_squared,
            t_reputation: reputation_fit.t,
            adj_r2_reputation: reputation_fit.adj_r_squared,
            trust_fit,
            reputation_fit,
        });
    }
    if rows.is_empty() && !log.is_empty() {
        warnings.push(format!("no round at or after {start_round} had enough data"));
    }
    Ok(ComparisonReport {
        start_round,
        intercept: true,
        rows,
        warnings,
    })
}

/// Paired and Welch tests of one condition against a baseline condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionComparison {
    pub role: Role,
    pub baseline: GameCondition,
    pub condition: GameCondition,
    /// Participants observed in both conditions.
    pub pairs: usize,
    /// Interval on `mean(baseline - condition)` over yoked participants.
    pub paired: Option<PairedInterval<f64>>,
    /// `mean(baseline) - mean(condition)` over all participants.
    pub welch: Option<WelchTest<f64>>,
}

/// Compares average send proportions in each condition with `baseline`.
pub fn compare_conditions(
    measures: &[DependentMeasures],
    baseline: GameCondition,
) -> Vec<ConditionComparison> {
    let pick = |m: &DependentMeasures, role: Role| match role {
        Role::Sender => m.avg_send_proportion_as_sender,
        Role::Receiver => m.avg_send_proportion_as_receiver,
    };
    let mut out = Vec::new();
    for role in [Role::Sender, Role::Receiver] {
        let column = |c: GameCondition| -> BTreeMap<(&str, &str), f64> {
            measures
                .iter()
                .filter(|m| m.game_condition == c)
                .filter_map(|m| {
                    pick(m, role).map(|v| ((m.session_id.as_str(), m.participant_id.as_str()), v))
                })
                .collect()
        };
        let base = column(baseline);
        if base.is_empty() {
            continue;
        }
        for condition in GameCondition::ALL {
            if condition == baseline {
                continue;
            }
            let other = column(condition);
            if other.is_empty() {
                continue;
            }
            let (a, b): (Vec<f64>, Vec<f64>) = base
                .iter()
                .filter_map(|(k, &v)| other.get(k).map(|&w| (v, w)))
                .unzip();
            let base_all: Vec<f64> = base.values().copied().collect();
            let other_all: Vec<f64> = other.values().copied().collect();
            out.push(ConditionComparison {
                role,
                baseline,
                condition,
                pairs: a.len(),
                paired: paired_t_ci(&a, &b, 0.95).ok(),
                welch: welch_t(&base_all, &other_all).ok(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRate {
    pub game_condition: GameCondition,
    pub role: Role,
    pub rate: Option<f64>,
}

/// Everything the `analyze` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub measures: Vec<DependentMeasures>,
    pub zero_rates: Vec<ZeroRate>,
    pub comparisons: Vec<ConditionComparison>,
}

pub fn analyze(log: &[RoundRecord], stakes: Stakes) -> AnalysisReport {
    let measures = dependent_measures(log, stakes);
    let mut zero_rates = Vec::new();
    for c in GameCondition::ALL {
        if log.iter().any(|r| r.game_condition == c) {
            for role in [Role::Sender, Role::Receiver] {
                zero_rates.push(ZeroRate {
                    game_condition: c,
                    role,
                    rate: zero_send_rate(log, c, role),
                });
            }
        }
    }
    let comparisons = compare_conditions(&measures, GameCondition::Simple);
    AnalysisReport {
        measures,
        zero_rates,
        comparisons,
    }
}
