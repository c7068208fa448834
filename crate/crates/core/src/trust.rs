//! Pairwise trust metric.
//!
//! Each directed pair (observer, partner) carries a [`PairTrustState`] that is
//! folded forward once per interaction from the partner's send proportion.
//! The update runs in constant time and the state has a fixed size no matter
//! how many rounds the pair has played.
//!
//! Pipeline for one observation `p`:
//!
//! 1. current trust `tc = ln(p(e - 1) + 1)`
//! 2. `delta = |tc - tc_prev|`, `beta = c*delta + (1 - c)*beta_prev`
//! 3. `alpha = clamp(alpha_floor + c*delta / (1 + beta), 0, 1)`
//! 4. aggregate `at = alpha*tc + (1 - alpha)*at_prev` (first observation seeds `at_prev = tc`)
//! 5. trend factor steps by `phi` when `|tc - at| > epsilon`
//! 6. accumulated fluctuation grows by `(tc - at)/2` upward, `(at - tc)` downward, past `phi`
//! 7. change rate `cos(pi/2 * atf / max_atf)`, zero at or above `max_atf`
//! 8. trust `(tf*tc + (1 - tf)*at) * change_rate`
//!
//! A fluctuation total above `max_atf` is halved before it is carried into the
//! next round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{two_significant, Scalar};

/// Role a participant played in a single exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sender,
    Receiver,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sender => "sender",
            Role::Receiver => "receiver",
        }
    }
}

/// Constants of the trust metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustParams<T> {
    /// Smoothing weight for the change estimate `beta` and the adaptive weight.
    pub c: T,
    /// Base aggregation weight added to the adaptive term.
    pub alpha_floor: T,
    /// Trend step and fluctuation deadband.
    pub phi: T,
    /// Trend deadband.
    pub epsilon: T,
    /// Fluctuation level treated as betrayal.
    pub max_atf: T,
    /// Trust published before any interaction.
    pub initial_trust: T,
}

impl<T: Scalar> Default for TrustParams<T> {
    fn default() -> Self {
        Self {
            c: T::of(0.3),
            alpha_floor: T::of(0.1),
            phi: T::of(0.05),
            epsilon: T::of(0.1),
            max_atf: T::one(),
            initial_trust: T::of(0.5),
        }
    }
}

impl<T: Scalar> TrustParams<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(self.c > zero && self.c < one, "c must lie in (0, 1)")?;
        check(
            self.alpha_floor >= zero && self.alpha_floor < one,
            "alpha_floor must lie in [0, 1)",
        )?;
        check(self.phi > zero, "phi must be positive")?;
        check(self.epsilon >= zero, "epsilon must be non-negative")?;
        check(self.max_atf > zero, "max_atf must be positive")?;
        check(
            self.initial_trust >= zero && self.initial_trust <= one,
            "initial_trust must lie in [0, 1]",
        )?;
        Ok(())
    }
}

/// Trust an observer holds about one partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTrustState<T> {
    pub observer_id: String,
    pub partner_id: String,
    pub round_count: u64,
    pub last_current_trust: T,
    pub beta: T,
    pub aggregate_trust: T,
    pub trend_factor: T,
    /// Fluctuation total carried into the next round (after halving).
    pub atf: T,
    pub trust_value: T,
}

/// Every intermediate of one update, for export and inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateTrace<T> {
    pub send_proportion: T,
    pub current_trust: T,
    pub delta: T,
    pub beta: T,
    pub alpha: T,
    pub aggregate_trust: T,
    pub trend_factor: T,
    /// Fluctuation total before the halving rule.
    pub raw_atf: T,
    /// Fluctuation total stored for the next round.
    pub atf: T,
    pub change_rate: T,
    pub expect_trust: T,
    pub trust_value: T,
}

/// Normalizes an amount by the most that could have been sent.
///
/// Returns `Ok(None)` when nothing could have been sent (`0 / 0`).
pub fn send_proportion<T: Scalar>(amount: u32, max_amount: u32) -> Result<Option<T>> {
    if amount > max_amount {
        return Err(Error::Domain(format!(
            "amount {amount} exceeds maximum {max_amount}"
        )));
    }
    if max_amount == 0 {
        return Ok(None);
    }
    Ok(Some(T::of(amount as f64) / T::of(max_amount as f64)))
}

fn check_proportion<T: Scalar>(p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "send proportion {:?} outside [0, 1]",
            p
        )))
    }
}

/// Single-round trust `ln(p(e - 1) + 1)`; maps 0 to 0 and 1 to 1.
pub fn current_trust<T: Scalar>(p: T) -> Result<T> {
    check_proportion(p)?;
    Ok((p * (T::E() - T::one()) + T::one()).ln())
}

/// Increment-gated fluctuation step: upward deviations count half, downward in full.
pub fn fluctuation_step<T: Scalar>(stored_atf: T, current: T, aggregate: T, phi: T) -> T {
    let two = T::of(2.0);
    if current - aggregate > phi {
        stored_atf + (current - aggregate) / two
    } else if aggregate - current > phi {
        stored_atf + (aggregate - current)
    } else {
        stored_atf
    }
}

/// Cosine punishment factor; zero once the fluctuation reaches `max_atf`.
pub fn change_rate<T: Scalar>(raw_atf: T, max_atf: T) -> T {
    if raw_atf >= max_atf {
        T::zero()
    } else {
        (T::FRAC_PI_2() * raw_atf / max_atf).cos()
    }
}

fn clamp01<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

fn finite<T: Scalar>(x: T, what: &'static str) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

impl<T: Scalar> PairTrustState<T> {
    /// State before any interaction; publishes `params.initial_trust`.
    pub fn new(
        observer_id: impl Into<String>,
        partner_id: impl Into<String>,
        params: &TrustParams<T>,
    ) -> Self {
        Self {
            observer_id: observer_id.into(),
            partner_id: partner_id.into(),
            round_count: 0,
            last_current_trust: T::zero(),
            beta: T::zero(),
            aggregate_trust: params.initial_trust,
            trend_factor: T::of(0.5),
            atf: T::zero(),
            trust_value: params.initial_trust,
        }
    }

    /// Computes the update for observation `p` without touching `self`.
    pub fn trace(&self, p: T, params: &TrustParams<T>) -> Result<UpdateTrace<T>> {
        let one = T::one();
        let c = params.c;

        let tc = current_trust(p)?;
        let delta = (tc - self.last_current_trust).abs();
        let beta = finite(c * delta + (one - c) * self.beta, "beta")?;
        let alpha = finite(
            clamp01(params.alpha_floor + c * delta / (one + beta)),
            "alpha",
        )?;
        let prior_aggregate = if self.round_count == 0 {
            tc
        } else {
            self.aggregate_trust
        };
        let aggregate = finite(
            clamp01(alpha * tc + (one - alpha) * prior_aggregate),
            "aggregate trust",
        )?;

        let trend = if tc - aggregate > params.epsilon {
            self.trend_factor + params.phi
        } else if aggregate - tc > params.epsilon {
            self.trend_factor - params.phi
        } else {
            self.trend_factor
        };
        let trend = clamp01(trend);

        let raw_atf = finite(
            fluctuation_step(self.atf, tc, aggregate, params.phi),
            "accumulated fluctuation",
        )?;
        let rate = finite(change_rate(raw_atf, params.max_atf), "change rate")?;
        let stored_atf = if raw_atf > params.max_atf {
            raw_atf / T::of(2.0)
        } else {
            raw_atf
        };

        let expect = trend * tc + (one - trend) * aggregate;
        let trust = finite(clamp01(expect * rate), "trust value")?;

        Ok(UpdateTrace {
            send_proportion: p,
            current_trust: tc,
            delta,
            beta,
            alpha,
            aggregate_trust: aggregate,
            trend_factor: trend,
            raw_atf,
            atf: stored_atf,
            change_rate: rate,
            expect_trust: expect,
            trust_value: trust,
        })
    }

    /// Folds observation `p` into the state in place.
    pub fn apply(&mut self, p: T, params: &TrustParams<T>) -> Result<UpdateTrace<T>> {
        let tr = self.trace(p, params)?;
        self.round_count += 1;
        self.last_current_trust = tr.current_trust;
        self.beta = tr.beta;
        self.aggregate_trust = tr.aggregate_trust;
        self.trend_factor = tr.trend_factor;
        self.atf = tr.atf;
        self.trust_value = tr.trust_value;
        Ok(tr)
    }

    /// Trust rounded to two significant digits, as shown to participants.
    pub fn displayed_trust(&self) -> T {
        two_significant(self.trust_value)
    }

    /// Fixed-width little-endian encoding; length depends only on the id lengths.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.observer_id.len() + self.partner_id.len() + 56);
        for id in [&self.observer_id, &self.partner_id] {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        out.extend_from_slice(&self.round_count.to_le_bytes());
        for v in [
            self.last_current_trust,
            self.beta,
            self.aggregate_trust,
            self.trend_factor,
            self.atf,
            self.trust_value,
        ] {
            out.extend_from_slice(&v.widen().to_le_bytes());
        }
        out
    }
}

/// Functional form of [`PairTrustState::apply`].
pub fn update_pair_trust<T: Scalar>(
    mut state: PairTrustState<T>,
    p: T,
    params: &TrustParams<T>,
) -> Result<(PairTrustState<T>, UpdateTrace<T>)> {
    let tr = state.apply(p, params)?;
    Ok((state, tr))
}

/// Handles a round in which the sender sent nothing.
///
/// The receiver's behavior is undefined (`0 / 0`) so an observer of the
/// receiver keeps its state untouched; an observer of the sender records `p = 0`.
pub fn observe_zero_transaction<T: Scalar>(
    state: PairTrustState<T>,
    role_of_partner: Role,
    params: &TrustParams<T>,
) -> Result<PairTrustState<T>> {
    match role_of_partner {
        Role::Receiver => Ok(state),
        Role::Sender => update_pair_trust(state, T::zero(), params).map(|(s, _)| s),
    }
}
