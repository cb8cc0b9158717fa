//! Randomized scenario sampling and tip normalization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{CustomerProfile, CHEF_ROUNDS, PATIENCE_VALUES, SEATS};

pub const CUSTOMERS: usize = SEATS * CHEF_ROUNDS;

/// Per-game randomized parameters: potato stock, customer profiles and
/// patience. Customer `i` sits at seat `i % 4 + 1` in chef round `i / 4 + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub potatoes: u32,
    pub profiles: Vec<CustomerProfile>,
    pub patience: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario needs {CUSTOMERS} profiles and patience values, got {profiles} and {patience}")]
    WrongCustomerCount { profiles: usize, patience: usize },
    #[error("patience must be positive")]
    ZeroPatience,
    #[error("degenerate scenario: no customer can tip")]
    DegenerateScenario,
}

impl ScenarioConfig {
    pub fn new(potatoes: u32, profiles: Vec<CustomerProfile>, patience: Vec<u32>) -> Result<Self, ScenarioError> {
        let s = ScenarioConfig { potatoes, profiles, patience };
        s.validate()?;
        Ok(s)
    }

    /// Every customer with the same profile and patience.
    pub fn uniform(potatoes: u32, profile: CustomerProfile, patience: u32) -> Self {
        ScenarioConfig {
            potatoes,
            profiles: vec![profile; CUSTOMERS],
            patience: vec![patience; CUSTOMERS],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.profiles.len() != CUSTOMERS || self.patience.len() != CUSTOMERS {
            return Err(ScenarioError::WrongCustomerCount {
                profiles: self.profiles.len(),
                patience: self.patience.len(),
            });
        }
        if self.patience.contains(&0) {
            return Err(ScenarioError::ZeroPatience);
        }
        Ok(())
    }

    /// Sum over customers of the best tip their profile can give.
    pub fn ideal_tips(&self) -> u32 {
        self.profiles.iter().map(|p| p.max_tip()).sum()
    }
}

/// Sample a scenario: potatoes uniform on 1..=5, each profile uniform over the
/// three kinds, each patience uniform over {70, 120}.
pub fn sample_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let potatoes = rng.gen_range(1..=5);
    let profiles = (0..CUSTOMERS)
        .map(|_| CustomerProfile::ALL[rng.gen_range(0..CustomerProfile::ALL.len())])
        .collect();
    let patience = (0..CUSTOMERS)
        .map(|_| PATIENCE_VALUES[rng.gen_range(0..PATIENCE_VALUES.len())])
        .collect();
    ScenarioConfig { potatoes, profiles, patience }
}

/// Tips as a fraction of the scenario's ideal upper bound, clamped to [0, 1].
pub fn normalize_tip(tips_total: u32, scenario: &ScenarioConfig) -> Result<f64, ScenarioError> {
    let denom = scenario.ideal_tips();
    if denom == 0 {
        return Err(ScenarioError::DegenerateScenario);
    }
    Ok((tips_total as f64 / denom as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_scenario(42), sample_scenario(42));
        let s = sample_scenario(3);
        s.validate().unwrap();
        assert!((1..=5).contains(&s.potatoes));
        assert!(s.patience.iter().all(|p| PATIENCE_VALUES.contains(p)));
    }

    #[test]
    fn normalization_examples() {
        let tourists = ScenarioConfig::uniform(3, CustomerProfile::Tourist, 70);
        assert_eq!(normalize_tip(240, &tourists).unwrap(), 1.0);
        assert_eq!(normalize_tip(0, &tourists).unwrap(), 0.0);
        let execs = ScenarioConfig::uniform(3, CustomerProfile::Executive, 70);
        assert_eq!(normalize_tip(600, &execs).unwrap(), 0.5);
        assert_eq!(normalize_tip(5000, &execs).unwrap(), 1.0);
    }

    #[test]
    fn wrong_customer_count_is_rejected() {
        let err = ScenarioConfig::new(2, vec![CustomerProfile::Hipster; 3], vec![70; 12]).unwrap_err();
        assert!(matches!(err, ScenarioError::WrongCustomerCount { profiles: 3, .. }));
    }
}
