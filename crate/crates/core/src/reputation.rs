//! Global-average reputation: the plain mean of a participant's send
//! proportions over every previous exchange, in either role.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationState<T> {
    pub participant_id: String,
    pub observation_count: u64,
    pub mean_proportion: T,
}

impl<T: Scalar> ReputationState<T> {
    pub fn new(participant_id: impl Into<String>) -> Self {
        Self {
            participant_id: participant_id.into(),
            observation_count: 0,
            mean_proportion: T::zero(),
        }
    }

    /// Running-mean update.
    pub fn ingest(&mut self, p: T) -> Result<()> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain(format!(
                "send proportion {:?} outside [0, 1]",
                p
            )));
        }
        self.observation_count += 1;
        let n = T::of(self.observation_count as f64);
        let mean = self.mean_proportion + (p - self.mean_proportion) / n;
        // drift of the incremental form can step a hair outside [0, 1]
        self.mean_proportion = mean.max(T::zero()).min(T::one());
        Ok(())
    }

    /// `None` until the first observation.
    pub fn value(&self) -> Option<T> {
        (self.observation_count > 0).then_some(self.mean_proportion)
    }
}

pub fn update_reputation<T: Scalar>(
    mut state: ReputationState<T>,
    p: T,
) -> Result<ReputationState<T>> {
    state.ingest(p)?;
    Ok(state)
}

pub fn reputation_of<T: Scalar>(state: &ReputationState<T>) -> Option<T> {
    state.value()
}
