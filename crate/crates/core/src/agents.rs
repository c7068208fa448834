//! Decision strategies for simulated participants.
//!
//! Strategies see only a [`PartnerView`]: fields hidden by the game condition
//! are `None` and cannot be read. Per-partner memory (betrayer, reciprocator)
//! is keyed by the partner label, so when identities are hidden every
//! partner shares one counter.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{stream_seed, PartnerView};
use crate::scalar::Scalar;

/// Something that can sit at the table.
///
/// Decisions outside the protocol bounds are reported by the engine as a
/// protocol error naming the participant.
pub trait Strategy {
    fn id(&self) -> &str;
    fn decide_send(&mut self, view: &PartnerView, endowment: u32) -> u32;
    fn decide_return(&mut self, view: &PartnerView, amount_received: u32) -> u32;
    /// Called after every exchange, including zero transactions.
    /// `partner_proportion` is `None` when the partner's move was undefined.
    fn observe(&mut self, _view: &PartnerView, _partner_proportion: Option<f64>) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StrategySpec {
    Cooperator,
    Defector,
    FixedFraction { f: f64 },
    /// Sends and returns `gain * displayed trust`; `fallback` when trust is hidden.
    TrustProportional { gain: f64, fallback: f64 },
    /// Returns fraction `f`; as sender mirrors the partner's last proportion, `f` before any.
    Reciprocator { f: f64 },
    /// Alternates full cooperation and defection every `period` exchanges.
    Fluctuator { period: u32 },
    /// Full cooperation for the first `k` exchanges with a partner, defection after.
    Betrayer { k: u32 },
    /// Defects against `victims`, plays `good_f` with everyone else.
    Playbook { victims: Vec<String>, good_f: f64 },
    Random { lo: f64, hi: f64 },
}

const KINDS: &str = "cooperator, defector, fixed_fraction, trust_proportional, reciprocator, \
                     fluctuator, betrayer, playbook, random";

impl StrategySpec {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        match self {
            StrategySpec::Cooperator | StrategySpec::Defector => Ok(()),
            StrategySpec::FixedFraction { f } | StrategySpec::Reciprocator { f } => frac("f", *f),
            StrategySpec::TrustProportional { gain, fallback } => {
                if !(gain.is_finite() && *gain >= 0.0) {
                    return Err(Error::Config(format!("gain = {gain} must be a non-negative number")));
                }
                frac("fallback", *fallback)
            }
            StrategySpec::Fluctuator { period } => {
                if *period == 0 {
                    Err(Error::Config("period must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
            StrategySpec::Betrayer { .. } => Ok(()),
            StrategySpec::Playbook { good_f, .. } => frac("good_f", *good_f),
            StrategySpec::Random { lo, hi } => {
                frac("lo", *lo)?;
                frac("hi", *hi)?;
                if lo > hi {
                    Err(Error::Config(format!("lo = {lo} exceeds hi = {hi}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Whether decisions can depend on the partner label.
    pub fn reads_identity(&self) -> bool {
        matches!(
            self,
            StrategySpec::Reciprocator { .. }
                | StrategySpec::Betrayer { .. }
                | StrategySpec::Playbook { .. }
        )
    }

    /// Whether decisions can depend on the displayed trust.
    pub fn reads_trust(&self) -> bool {
        matches!(self, StrategySpec::TrustProportional { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub agent_id: String,
    #[serde(flatten)]
    pub spec: StrategySpec,
}

fn param_f64(params: &serde_json::Map<String, Value>, entry: usize, name: &str, default: Option<f64>) -> Result<f64> {
    match params.get(name) {
        Some(v) => v.as_f64().ok_or_else(|| {
            Error::Config(format!("roster entry {entry}: parameter `{name}` must be a number"))
        }),
        None => default.ok_or_else(|| {
            Error::Config(format!("roster entry {entry}: missing parameter `{name}`"))
        }),
    }
}

fn param_u32(params: &serde_json::Map<String, Value>, entry: usize, name: &str) -> Result<u32> {
    let v = params
        .get(name)
        .ok_or_else(|| Error::Config(format!("roster entry {entry}: missing parameter `{name}`")))?;
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| {
            Error::Config(format!(
                "roster entry {entry}: parameter `{name}` must be a non-negative integer"
            ))
        })
}

/// Parses a roster: a JSON array of `{agent_id, kind, params}` objects.
pub fn parse_roster(text: &str) -> Result<Vec<RosterEntry>> {
    let raw: Value = serde_json::from_str(text)?;
    let items = raw
        .as_array()
        .ok_or_else(|| Error::Config("roster must be a JSON array".into()))?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| Error::Config(format!("roster entry {i} is not an object")))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "agent_id" | "kind" | "params") {
                return Err(Error::Config(format!("roster entry {i}: unknown field `{key}`")));
            }
        }
        let agent_id = obj
            .get("agent_id")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Config(format!("roster entry {i}: `agent_id` must be a non-empty string")))?
            .to_string();
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config(format!("roster entry {i}: `kind` must be a string")))?;
        let empty = serde_json::Map::new();
        let params = match obj.get("params") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => {
                return Err(Error::Config(format!("roster entry {i}: `params` must be an object")))
            }
        };
        let allowed: &[&str] = match kind {
            "cooperator" | "defector" => &[],
            "fixed_fraction" | "reciprocator" => &["f"],
            "trust_proportional" => &["gain", "fallback"],
            "fluctuator" => &["period"],
            "betrayer" => &["k"],
            "playbook" => &["victims", "good_f"],
            "random" => &["lo", "hi"],
            other => {
                return Err(Error::Config(format!(
                    "roster entry {i}: unknown kind `{other}` (expected one of: {KINDS})"
                )))
            }
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "roster entry {i}: `{kind}` takes no parameter `{k}`"
            )));
        }
        let spec = match kind {
            "cooperator" => StrategySpec::Cooperator,
            "defector" => StrategySpec::Defector,
            "fixed_fraction" => StrategySpec::FixedFraction {
                f: param_f64(params, i, "f", None)?,
            },
            "reciprocator" => StrategySpec::Reciprocator {
                f: param_f64(params, i, "f", None)?,
            },
            "trust_proportional" => StrategySpec::TrustProportional {
                gain: param_f64(params, i, "gain", None)?,
                fallback: param_f64(params, i, "fallback", Some(0.5))?,
            },
            "fluctuator" => StrategySpec::Fluctuator {
                period: param_u32(params, i, "period")?,
            },
            "betrayer" => StrategySpec::Betrayer {
                k: param_u32(params, i, "k")?,
            },
            "playbook" => {
                let victims = params
                    .get("victims")
                    .and_then(Value::as_array)
                    .ok_or_else(|| {
                        Error::Config(format!("roster entry {i}: `victims` must be an array of ids"))
                    })?
                    .iter()
                    .map(|v| {
                        v.as_str().map(str::to_string).ok_or_else(|| {
                            Error::Config(format!("roster entry {i}: victim ids must be strings"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                StrategySpec::Playbook {
                    victims,
                    good_f: param_f64(params, i, "good_f", None)?,
                }
            }
            "random" => StrategySpec::Random {
                lo: param_f64(params, i, "lo", None)?,
                hi: param_f64(params, i, "hi", None)?,
            },
            _ => unreachable!(),
        };
        spec.validate()
            .map_err(|e| Error::Config(format!("roster entry {i} (`{agent_id}`): {e}")))?;
        if out.iter().any(|e: &RosterEntry| e.agent_id == agent_id) {
            return Err(Error::Config(format!("roster entry {i}: duplicate agent_id `{agent_id}`")));
        }
        out.push(RosterEntry { agent_id, spec });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
struct PartnerMemory {
    exchanges: u32,
    last_partner_proportion: Option<f64>,
}

/// A participant driven by a [`StrategySpec`].
#[derive(Debug, Clone)]
pub struct Agent {
    id: String,
    spec: StrategySpec,
    rng: ChaCha8Rng,
    memory: HashMap<Option<String>, PartnerMemory>,
    total_exchanges: u32,
    clamped: u32,
}

fn scaled(fraction: f64, amount: u32) -> u32 {
    let v = (fraction * amount as f64).round_half_even();
    v.max(0.0) as u32
}

impl Agent {
    /// The agent's random stream depends only on `(game_seed, id)`.
    pub fn new(id: impl Into<String>, spec: StrategySpec, game_seed: u64) -> Self {
        let id = id.into();
        let rng = ChaCha8Rng::seed_from_u64(stream_seed(game_seed, &format!("agent:{id}")));
        Self {
            id,
            spec,
            rng,
            memory: HashMap::new(),
            total_exchanges: 0,
            clamped: 0,
        }
    }

    pub fn from_roster(entries: &[RosterEntry], game_seed: u64) -> Vec<Agent> {
        entries
            .iter()
            .map(|e| Agent::new(e.agent_id.clone(), e.spec.clone(), game_seed))
            .collect()
    }

    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    /// How many decisions had to be clamped into the protocol bounds.
    pub fn clamped_decisions(&self) -> u32 {
        self.clamped
    }

    fn memory(&self, view: &PartnerView) -> PartnerMemory {
        self.memory
            .get(&view.partner_label)
            .cloned()
            .unwrap_or_default()
    }

    fn is_victim(&self, view: &PartnerView, victims: &[String]) -> bool {
        view.partner_label
            .as_ref()
            .is_some_and(|l| victims.iter().any(|v| v == l))
    }

    /// Fraction of the available amount to move.
    fn fraction(&mut self, view: &PartnerView, sending: bool) -> f64 {
        match &self.spec {
            StrategySpec::Cooperator => 1.0,
            StrategySpec::Defector => 0.0,
            StrategySpec::FixedFraction { f } => *f,
            StrategySpec::TrustProportional { gain, fallback } => match view.partner_trust_display {
                Some(t) => gain * t,
                None => *fallback,
            },
            StrategySpec::Reciprocator { f } => {
                if sending {
                    self.memory(view).last_partner_proportion.unwrap_or(*f)
                } else {
                    *f
                }
            }
            StrategySpec::Fluctuator { period } => {
                if (self.total_exchanges / period) % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            StrategySpec::Betrayer { k } => {
                if self.memory(view).exchanges < *k {
                    1.0
                } else {
                    0.0
                }
            }
            StrategySpec::Playbook { victims, good_f } => {
                if self.is_victim(view, victims) {
                    0.0
                } else {
                    *good_f
                }
            }
            StrategySpec::Random { lo, hi } => self.rng.gen_range(*lo..=*hi),
        }
    }

    fn bounded(&mut self, fraction: f64, cap: u32) -> u32 {
        let clamped = fraction.clamp(0.0, 1.0);
        if clamped != fraction {
            self.clamped += 1;
        }
        scaled(clamped, cap)
    }
}

impl Strategy for Agent {
    fn id(&self) -> &str {
        &self.id
    }

    fn decide_send(&mut self, view: &PartnerView, endowment: u32) -> u32 {
        let f = self.fraction(view, true);
        self.bounded(f, endowment)
    }

    fn decide_return(&mut self, view: &PartnerView, amount_received: u32) -> u32 {
        let f = self.fraction(view, false);
        self.bounded(f, amount_received)
    }

    fn observe(&mut self, view: &PartnerView, partner_proportion: Option<f64>) {
        let mem = self.memory.entry(view.partner_label.clone()).or_default();
        mem.exchanges += 1;
        if partner_proportion.is_some() {
            mem.last_partner_proportion = partner_proportion;
        }
        self.total_exchanges += 1;
    }
}
