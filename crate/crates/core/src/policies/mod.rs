//! Index policies: individual and centralized UCB baselines, the fixed-set
//! oracle, and the four information-sharing variants.

mod agent;
mod index;

pub use agent::{full_info_index, Agent, Context};
pub use index::{
    confidence_width, estimate_distortion, group_frequency, oracle_actions, part_info_index,
    pooled_index, select_actions, ucb_index, weighted_group_frequency,
};

use serde::{Deserialize, Serialize};

use crate::broadcast::Disclosure;
use crate::error::{Error, Result};

/// Largest α for which the penalty's tail series still converges:
/// `sqrt(2) - sqrt(3/2)`.
pub const ALPHA_CONVERGENCE_LIMIT: f64 = 0.189_468_690_981_506;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Always plays the user's true top-K set.
    Oracle,
    UcbIndividual,
    /// Pools every user's rewards converted with the true distortions.
    UcbCentralized,
    UFull,
    UPart,
    DFull,
    DPart,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Oracle,
        Algorithm::UcbIndividual,
        Algorithm::UcbCentralized,
        Algorithm::UFull,
        Algorithm::UPart,
        Algorithm::DFull,
        Algorithm::DPart,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Oracle => "oracle",
            Algorithm::UcbIndividual => "ucb_individual",
            Algorithm::UcbCentralized => "ucb_centralized",
            Algorithm::UFull => "u_full",
            Algorithm::UPart => "u_part",
            Algorithm::DFull => "d_full",
            Algorithm::DPart => "d_part",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == s)
    }

    /// Pools converted peer rewards; needs rewards to be disclosed.
    pub fn is_full(self) -> bool {
        matches!(self, Algorithm::UFull | Algorithm::DFull)
    }

    /// Uses the decision-frequency penalty.
    pub fn is_part(self) -> bool {
        matches!(self, Algorithm::UPart | Algorithm::DPart)
    }

    pub fn check_disclosure(self, disclosure: Disclosure) -> Result<()> {
        if self.is_full() && !disclosure.shares_rewards() {
            return Err(Error::config(
                "disclosure",
                format!("{} requires full or full_periodic disclosure", self.label()),
            ));
        }
        Ok(())
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Weight of the group recommendation in the PART indices.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Exponent applied to counts of users estimated to be in another group.
    #[serde(default = "default_omega_cross")]
    pub omega_cross: f64,
    /// Re-convert all peer sums with the latest distortion estimate instead
    /// of converting each reward once when it arrives.
    #[serde(default)]
    pub retroactive_conversion: bool,
    /// Use at most `n^i_j` samples from each peer for option `j`. Without the
    /// cap an option whose own mean started low can be starved forever.
    #[serde(default = "default_cap")]
    pub cap_peer_samples: bool,
    /// Fixes every distortion estimate to this value (diagnostics only).
    #[serde(default)]
    pub pinned_distortion: Option<f64>,
}

fn default_alpha() -> f64 {
    0.1
}

fn default_omega_cross() -> f64 {
    0.5
}

fn default_cap() -> bool {
    true
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            alpha: default_alpha(),
            omega_cross: default_omega_cross(),
            retroactive_conversion: false,
            cap_peer_samples: true,
            pinned_distortion: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("policy.alpha", "must be finite and >= 0"));
        }
        if self.alpha >= ALPHA_CONVERGENCE_LIMIT {
            log::warn!(
                "alpha = {} is at or above sqrt(2) - sqrt(3/2) = {:.4}; the logarithmic regret guarantee no longer applies",
                self.alpha,
                ALPHA_CONVERGENCE_LIMIT
            );
        }
        if !(self.omega_cross > 0.0 && self.omega_cross < 1.0) {
            return Err(Error::config("policy.omega_cross", "must lie strictly inside (0, 1)"));
        }
        if let Some(d) = self.pinned_distortion {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("policy.pinned_distortion", "must be finite and positive"));
            }
        }
        Ok(())
    }
}
