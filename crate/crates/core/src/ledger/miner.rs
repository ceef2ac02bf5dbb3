use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinerError {
    #[error("no miner has a positive fog demand")]
    NoEligibleMiner,
    #[error("fog demand of {id:?} must be finite and >= 0, got {demand}")]
    InvalidDemand { id: String, demand: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Miner {
    pub id: String,
    pub fog_demand: f64,
}

impl Miner {
    pub fn new(id: impl Into<String>, fog_demand: f64) -> Result<Self, MinerError> {
        let miner = Self {
            id: id.into(),
            fog_demand,
        };
        miner.validate()?;
        Ok(miner)
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        if !self.fog_demand.is_finite() || self.fog_demand < 0.0 {
            return Err(MinerError::InvalidDemand {
                id: self.id.clone(),
                demand: self.fog_demand,
            });
        }
        Ok(())
    }
}

/// Roulette-wheel draw: miner `m` wins with probability
/// `fog_demand(m) / sum(fog_demand)`. Consumes exactly one `f64` from `rng`.
pub fn select_miner<'a, R: Rng + ?Sized>(miners: &'a [Miner], rng: &mut R) -> Result<&'a Miner, MinerError> {
    for miner in miners {
        miner.validate()?;
    }
    let total: f64 = miners.iter().map(|m| m.fog_demand).sum();
    if total <= 0.0 {
        return Err(MinerError::NoEligibleMiner);
    }
    let spin = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for miner in miners {
        cumulative += miner.fog_demand;
        if spin < cumulative {
            return Ok(miner);
        }
    }
    // Rounding can leave `spin` at the very top of the wheel.
    Ok(miners
        .iter()
        .rev()
        .find(|m| m.fog_demand > 0.0)
        .expect("total > 0 implies a positive demand"))
}
