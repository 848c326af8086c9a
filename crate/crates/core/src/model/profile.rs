use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::density::PiecewiseDensity;
use crate::rational::{rat_int, Rat};

/// One participant: a unique name, a positive claim (relative entitlement,
/// default 1), and a value density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub name: String,
    pub claim: Rat,
    pub density: PiecewiseDensity,
}

impl Agent {
    pub fn new(name: impl Into<String>, claim: Rat, density: PiecewiseDensity) -> Result<Self> {
        let name = name.into();
        if claim <= Rat::zero() {
            return Err(Error::MalformedNumber(format!(
                "claim of agent `{name}` must be positive"
            )));
        }
        Ok(Agent { name, claim, density })
    }

    pub fn with_unit_claim(name: impl Into<String>, density: PiecewiseDensity) -> Self {
        Agent { name: name.into(), claim: rat_int(1), density }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    agents: Vec<Agent>,
}

impl Profile {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let mut seen = std::collections::HashSet::new();
        for agent in &agents {
            if !seen.insert(agent.name.clone()) {
                return Err(Error::DuplicateAgentName(agent.name.clone()));
            }
        }
        Ok(Profile { agents })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent(&self, i: usize) -> &Agent {
        &self.agents[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn claims(&self) -> Vec<Rat> {
        self.agents.iter().map(|a| a.claim.clone()).collect()
    }

    pub fn total_claim(&self) -> Rat {
        self.agents.iter().map(|a| a.claim.clone()).sum()
    }

    pub fn has_uniform_claims(&self) -> bool {
        self.agents.iter().all(|a| a.claim == self.agents[0].claim)
    }

    pub fn is_piecewise_uniform(&self) -> bool {
        self.agents.iter().all(|a| a.density.is_piecewise_uniform())
    }

    /// Same profile with agent `i`'s density replaced; used by the
    /// manipulation search.
    pub fn with_density(&self, i: usize, density: PiecewiseDensity) -> Profile {
        let mut agents = self.agents.clone();
        agents[i].density = density;
        Profile { agents }
    }
}
