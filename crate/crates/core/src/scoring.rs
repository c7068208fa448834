//! Replays exchanges into directed trust states and reputations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameCondition, RoundRecord, Stakes};
use crate::reputation::ReputationState;
use crate::trust::{observe_zero_transaction, PairTrustState, Role, TrustParams};

/// One directed trust update, as exported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub session_id: String,
    pub game_condition: GameCondition,
    pub round: u32,
    pub observer_id: String,
    pub partner_id: String,
    pub send_proportion: f64,
    pub current_trust: f64,
    pub aggregate_trust: f64,
    pub trend_factor: f64,
    pub atf: f64,
    pub change_rate: f64,
    pub trust_value: f64,
    /// The partner's reputation after this exchange.
    pub reputation_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationPoint {
    pub session_id: String,
    pub game_condition: GameCondition,
    pub round: u32,
    pub participant_id: String,
    pub observation_count: u64,
    pub reputation: f64,
}

/// What one exchange changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub trajectory: Vec<TrajectoryRow>,
    pub reputation: Vec<ReputationPoint>,
}

/// Trust and reputation bookkeeping for one game (one session and condition).
#[derive(Debug, Clone)]
pub struct Scorebook {
    session_id: String,
    condition: GameCondition,
    stakes: Stakes,
    params: TrustParams<f64>,
    pairs: HashMap<(String, String), PairTrustState<f64>>,
    reputations: HashMap<String, ReputationState<f64>>,
}

impl Scorebook {
    pub fn new(
        session_id: String,
        condition: GameCondition,
        stakes: Stakes,
        params: TrustParams<f64>,
    ) -> Self {
        Self {
            session_id,
            condition,
            stakes,
            params,
            pairs: HashMap::new(),
            reputations: HashMap::new(),
        }
    }

    pub fn state(&self, observer: &str, partner: &str) -> Option<&PairTrustState<f64>> {
        self.pairs.get(&(observer.to_string(), partner.to_string()))
    }

    /// Trust `observer` holds about `partner`; the initial value before they meet.
    pub fn trust(&self, observer: &str, partner: &str) -> f64 {
        self.state(observer, partner)
            .map_or(self.params.initial_trust, |s| s.trust_value)
    }

    pub fn displayed_trust(&self, observer: &str, partner: &str) -> f64 {
        self.state(observer, partner).map_or_else(
            || crate::scalar::two_significant(self.params.initial_trust),
            |s| s.displayed_trust(),
        )
    }

    pub fn reputation(&self, participant: &str) -> Option<f64> {
        self.reputations.get(participant).and_then(|r| r.value())
    }

    fn pair_mut(&mut self, observer: &str, partner: &str) -> &mut PairTrustState<f64> {
        let params = self.params;
        self.pairs
            .entry((observer.to_string(), partner.to_string()))
            .or_insert_with(|| PairTrustState::new(observer, partner, &params))
    }

    fn observe(
        &mut self,
        round: u32,
        observer: &str,
        partner: &str,
        p: f64,
        out: &mut Ingested,
    ) -> Result<()> {
        let params = self.params;
        let trace = self.pair_mut(observer, partner).apply(p, &params)?;
        let rep = self
            .reputations
            .entry(partner.to_string())
            .or_insert_with(|| ReputationState::new(partner));
        rep.ingest(p)?;
        let reputation = rep.mean_proportion;
        out.trajectory.push(TrajectoryRow {
            session_id: self.session_id.clone(),
            game_condition: self.condition,
            round,
            observer_id: observer.to_string(),
            partner_id: partner.to_string(),
            send_proportion: p,
            current_trust: trace.current_trust,
            aggregate_trust: trace.aggregate_trust,
            trend_factor: trace.trend_factor,
            atf: trace.atf,
            change_rate: trace.change_rate,
            trust_value: trace.trust_value,
            reputation_value: reputation,
        });
        out.reputation.push(ReputationPoint {
            session_id: self.session_id.clone(),
            game_condition: self.condition,
            round,
            participant_id: partner.to_string(),
            observation_count: rep.observation_count,
            reputation,
        });
        Ok(())
    }

    /// Applies one exchange to both directed states and both reputations.
    ///
    /// A zero transaction updates the receiver's view of the sender with
    /// `p = 0` and leaves the sender's view of the receiver untouched.
    pub fn ingest(&mut self, record: &RoundRecord) -> Result<Ingested> {
        let stakes = self.stakes;
        if record.amount_sent > stakes.endowment {
            return Err(Error::protocol(
                "amount_sent",
                format!("{} exceeds the endowment {}", record.amount_sent, stakes.endowment),
            ));
        }
        let received = stakes.multiplier * record.amount_sent;
        if record.amount_returned > received {
            return Err(Error::protocol(
                "amount_returned",
                format!("{} exceeds the amount received {received}", record.amount_returned),
            ));
        }
        let mut out = Ingested::default();
        let sender_p = f64::from(record.amount_sent) / f64::from(stakes.endowment);
        self.observe(
            record.round_index,
            &record.receiver_id,
            &record.sender_id,
            sender_p,
            &mut out,
        )?;
        if record.amount_sent == 0 {
            let key = (record.sender_id.clone(), record.receiver_id.clone());
            if let Some(state) = self.pairs.remove(&key) {
                let kept = observe_zero_transaction(state, Role::Receiver, &self.params)?;
                self.pairs.insert(key, kept);
            }
        } else {
            let receiver_p = f64::from(record.amount_returned) / f64::from(received);
            self.observe(
                record.round_index,
                &record.sender_id,
                &record.receiver_id,
                receiver_p,
                &mut out,
            )?;
        }
        Ok(out)
    }
}

/// Identifies one game inside a pooled log.
pub type StreamKey = (String, GameCondition);

/// Splits a log into games, each stably sorted by round.
pub fn split_streams(log: &[RoundRecord]) -> BTreeMap<StreamKey, Vec<&RoundRecord>> {
    let mut streams: BTreeMap<StreamKey, Vec<&RoundRecord>> = BTreeMap::new();
    for r in log {
        streams
            .entry((r.session_id.clone(), r.game_condition))
            .or_default()
            .push(r);
    }
    for rows in streams.values_mut() {
        rows.sort_by_key(|r| r.round_index);
    }
    streams
}

/// Trust and reputation trajectories for every game in a log.
///
/// One trajectory row per update: two per exchange, one for a zero transaction.
pub fn score_log(
    log: &[RoundRecord],
    stakes: Stakes,
    params: &TrustParams<f64>,
) -> Result<Ingested> {
    params.validate()?;
    let mut out = Ingested::default();
    for ((session, condition), rows) in split_streams(log) {
        let mut book = Scorebook::new(session, condition, stakes, *params);
        for r in rows {
            let step = book.ingest(r)?;
            out.trajectory.extend(step.trajectory);
            out.reputation.extend(step.reputation);
        }
    }
    Ok(out)
}
