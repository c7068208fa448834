//! Repeated trust game: scheduling, exchange mechanics and the simulation loop.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::Strategy;
use crate::error::{Error, Result};
use crate::scoring::{ReputationPoint, Scorebook, TrajectoryRow};
use crate::trust::TrustParams;

/// Which partner information is shown to participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameCondition {
    /// Neither identity nor trust.
    Simple,
    Identity,
    /// Trust score only.
    Score,
    Combined,
}

impl GameCondition {
    pub const ALL: [GameCondition; 4] = [
        GameCondition::Simple,
        GameCondition::Identity,
        GameCondition::Score,
        GameCondition::Combined,
    ];

    pub fn new(show_id: bool, show_trust: bool) -> Self {
        match (show_id, show_trust) {
            (false, false) => GameCondition::Simple,
            (true, false) => GameCondition::Identity,
            (false, true) => GameCondition::Score,
            (true, true) => GameCondition::Combined,
        }
    }

    pub fn show_id(self) -> bool {
        matches!(self, GameCondition::Identity | GameCondition::Combined)
    }

    pub fn show_trust(self) -> bool {
        matches!(self, GameCondition::Score | GameCondition::Combined)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameCondition::Simple => "simple",
            GameCondition::Identity => "identity",
            GameCondition::Score => "score",
            GameCondition::Combined => "combined",
        }
    }
}

impl fmt::Display for GameCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GameCondition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown game condition `{s}` (expected simple, identity, score or combined)"
                ))
            })
    }
}

/// Exchange rules: what a sender may send and how it grows in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stakes {
    pub endowment: u32,
    pub multiplier: u32,
}

impl Default for Stakes {
    fn default() -> Self {
        Self {
            endowment: 10,
            multiplier: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub session_id: String,
    pub endowment: u32,
    pub multiplier: u32,
    pub group_size: usize,
    pub rounds_per_pair: u32,
    pub condition: GameCondition,
    pub rng_seed: u64,
    pub trust_params: TrustParams<f64>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            session_id: "s1".into(),
            endowment: 10,
            multiplier: 3,
            group_size: 6,
            rounds_per_pair: 5,
            condition: GameCondition::Simple,
            rng_seed: 0,
            trust_params: TrustParams::default(),
        }
    }
}

impl GameConfig {
    pub fn stakes(&self) -> Stakes {
        Stakes {
            endowment: self.endowment,
            multiplier: self.multiplier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endowment == 0 {
            return Err(Error::Config("endowment must be positive".into()));
        }
        if self.multiplier == 0 {
            return Err(Error::Config("multiplier must be at least 1".into()));
        }
        if self.group_size < 2 || self.group_size % 2 != 0 {
            return Err(Error::Config(format!(
                "group size {} must be even and at least 2",
                self.group_size
            )));
        }
        if self.rounds_per_pair == 0 {
            return Err(Error::Config("rounds_per_pair must be at least 1".into()));
        }
        self.trust_params.validate()
    }
}

/// One exchange between a sender and a receiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub session_id: String,
    pub game_condition: GameCondition,
    /// 1-based.
    pub round_index: u32,
    pub sender_id: String,
    pub receiver_id: String,
    pub amount_sent: u32,
    pub amount_returned: u32,
    /// Net for the round: returned minus sent.
    pub sender_payoff: i64,
    pub receiver_payoff: i64,
    pub is_zero_transaction: bool,
}

/// Who plays whom, and when; the identifying half of a [`RoundRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundContext {
    pub session_id: String,
    pub game_condition: GameCondition,
    pub round_index: u32,
    pub sender_id: String,
    pub receiver_id: String,
}

/// Validates one exchange and computes its payoffs.
pub fn play_round(
    ctx: RoundContext,
    sender_decision: u32,
    receiver_decision: u32,
    stakes: Stakes,
) -> Result<RoundRecord> {
    if sender_decision > stakes.endowment {
        return Err(Error::protocol(
            "amount_sent",
            format!(
                "{sender_decision} exceeds the endowment {}",
                stakes.endowment
            ),
        ));
    }
    let received = u64::from(stakes.multiplier) * u64::from(sender_decision);
    if u64::from(receiver_decision) > received {
        return Err(Error::protocol(
            "amount_returned",
            format!("{receiver_decision} exceeds the amount received {received}"),
        ));
    }
    let sent = i64::from(sender_decision);
    let returned = i64::from(receiver_decision);
    Ok(RoundRecord {
        session_id: ctx.session_id,
        game_condition: ctx.game_condition,
        round_index: ctx.round_index,
        sender_id: ctx.sender_id,
        receiver_id: ctx.receiver_id,
        amount_sent: sender_decision,
        amount_returned: receiver_decision,
        sender_payoff: returned - sent,
        receiver_payoff: received as i64 - returned,
        is_zero_transaction: sender_decision == 0,
    })
}

/// What a participant sees about the partner in front of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartnerView {
    pub partner_label: Option<String>,
    /// Two significant digits.
    pub partner_trust_display: Option<f64>,
    pub own_balance: i64,
    /// Receiver only.
    pub amount_received: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub sender: usize,
    pub receiver: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledRound {
    /// 1-based.
    pub round_index: u32,
    pub pairs: Vec<Pairing>,
}

/// Derives an independent 64-bit seed for a named stream.
pub fn stream_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Builds the pairing schedule for a group.
///
/// A round-robin over participants (after a seeded relabeling) gives
/// `group_size - 1` perfect matchings; each is repeated `rounds_per_pair`
/// times and the rounds are shuffled. Within each pair the sender role
/// alternates by meeting, starting from a seeded coin flip.
pub fn schedule_game<R: Rng + ?Sized>(
    group_size: usize,
    rounds_per_pair: u32,
    rng: &mut R,
) -> Result<Vec<ScheduledRound>> {
    if group_size < 2 || group_size % 2 != 0 {
        return Err(Error::Config(format!(
            "group size {group_size} must be even and at least 2"
        )));
    }
    if rounds_per_pair == 0 {
        return Err(Error::Config("rounds_per_pair must be at least 1".into()));
    }
    let mut labels: Vec<usize> = (0..group_size).collect();
    labels.shuffle(rng);

    let n = group_size;
    let ring = n - 1;
    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::with_capacity(ring);
    for r in 0..ring {
        let mut m = Vec::with_capacity(n / 2);
        m.push((labels[n - 1], labels[r]));
        for i in 1..n / 2 {
            let a = (r + i) % ring;
            let b = (r + ring - i) % ring;
            m.push((labels[a], labels[b]));
        }
        matchings.push(m);
    }

    let mut rounds: Vec<Vec<(usize, usize)>> = (0..rounds_per_pair)
        .flat_map(|_| matchings.iter().cloned())
        .collect();
    rounds.shuffle(rng);

    let mut first_sender: HashMap<(usize, usize), usize> = HashMap::new();
    for m in &matchings {
        for &(a, b) in m {
            let key = (a.min(b), a.max(b));
            let first = if rng.gen::<bool>() { key.0 } else { key.1 };
            first_sender.insert(key, first);
        }
    }

    let mut meetings: HashMap<(usize, usize), u32> = HashMap::new();
    let mut out = Vec::with_capacity(rounds.len());
    for (i, mut pairs) in rounds.into_iter().enumerate() {
        pairs.shuffle(rng);
        let pairs = pairs
            .into_iter()
            .map(|(a, b)| {
                let key = (a.min(b), a.max(b));
                let first = first_sender[&key];
                let other = if first == key.0 { key.1 } else { key.0 };
                let count = meetings.entry(key).or_insert(0);
                let sender = if *count % 2 == 0 { first } else { other };
                *count += 1;
                let receiver = if sender == key.0 { key.1 } else { key.0 };
                Pairing { sender, receiver }
            })
            .collect();
        out.push(ScheduledRound {
            round_index: i as u32 + 1,
            pairs,
        });
    }
    Ok(out)
}

/// Everything a simulated game produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutput {
    pub config: GameConfig,
    pub records: Vec<RoundRecord>,
    pub trajectories: Vec<TrajectoryRow>,
    pub reputations: Vec<ReputationPoint>,
}

/// Runs one game with one strategy per participant.
///
/// The sender moves first; the receiver sees the tripled amount. Zero
/// transactions never reach the receiver's strategy. Both directed trust
/// states and both reputations are updated after every exchange.
pub fn run_game(config: &GameConfig, agents: &mut [Box<dyn Strategy>]) -> Result<GameOutput> {
    config.validate()?;
    if agents.len() != config.group_size {
        return Err(Error::Config(format!(
            "{} agents supplied for a group of {}",
            agents.len(),
            config.group_size
        )));
    }
    let ids: Vec<String> = agents.iter().map(|a| a.id().to_string()).collect();
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::Config(format!("duplicate participant id `{id}`")));
        }
    }

    let stakes = config.stakes();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.rng_seed, "schedule"));
    let schedule = schedule_game(config.group_size, config.rounds_per_pair, &mut rng)?;

    let mut book = Scorebook::new(
        config.session_id.clone(),
        config.condition,
        stakes,
        config.trust_params,
    );
    let mut balances = vec![0i64; ids.len()];
    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    let mut reputations = Vec::new();
    let show_id = config.condition.show_id();
    let show_trust = config.condition.show_trust();

    for round in &schedule {
        for pair in &round.pairs {
            let (s, r) = (pair.sender, pair.receiver);
            let view_of = |observer: usize, partner: usize, balance: i64, received: Option<u32>| {
                PartnerView {
                    partner_label: show_id.then(|| ids[partner].clone()),
                    partner_trust_display: show_trust
                        .then(|| book.displayed_trust(&ids[observer], &ids[partner])),
                    own_balance: balance,
                    amount_received: received,
                }
            };

            let sender_view = view_of(s, r, balances[s], None);
            let sent = agents[s].decide_send(&sender_view, stakes.endowment);
            if sent > stakes.endowment {
                return Err(Error::protocol(
                    format!("amount_sent (agent `{}`)", ids[s]),
                    format!("{sent} exceeds the endowment {}", stakes.endowment),
                ));
            }
            let received = stakes.multiplier * sent;
            let receiver_view = view_of(r, s, balances[r], Some(received));
            let returned = if sent == 0 {
                0
            } else {
                let v = agents[r].decide_return(&receiver_view, received);
                if v > received {
                    return Err(Error::protocol(
                        format!("amount_returned (agent `{}`)", ids[r]),
                        format!("{v} exceeds the amount received {received}"),
                    ));
                }
                v
            };

            let record = play_round(
                RoundContext {
                    session_id: config.session_id.clone(),
                    game_condition: config.condition,
                    round_index: round.round_index,
                    sender_id: ids[s].clone(),
                    receiver_id: ids[r].clone(),
                },
                sent,
                returned,
                stakes,
            )?;
            balances[s] += record.sender_payoff;
            balances[r] += record.receiver_payoff;

            let sender_p = f64::from(sent) / f64::from(stakes.endowment);
            let receiver_p = (sent > 0).then(|| f64::from(returned) / f64::from(received));
            agents[s].observe(&sender_view, receiver_p);
            agents[r].observe(&receiver_view, Some(sender_p));

            let update = book.ingest(&record)?;
            trajectories.extend(update.trajectory);
            reputations.extend(update.reputation);
            records.push(record);
        }
    }

    Ok(GameOutput {
        config: config.clone(),
        records,
        trajectories,
        reputations,
    })
}
