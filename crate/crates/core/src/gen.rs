//! Seeded random instance generator. Breakpoints land on a fixed rational
//! grid and levels come from a small integer ladder, so generated profiles
//! stress the mechanisms without ever leaving exact arithmetic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Agent, PiecewiseDensity, Profile};
use crate::rational::{rat, rat_int, Rat};
use num_traits::Zero;

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub n_agents: usize,
    /// Upper bound on positive blocks per agent; also sets the breakpoint
    /// grid to multiples of 1/(n_agents * max_blocks).
    pub max_blocks: usize,
    /// Positive levels are drawn from 1..=value_ladder.
    pub value_ladder: u32,
    /// Restrict every agent to a single positive level.
    pub piecewise_uniform: bool,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_agents: 2,
            max_blocks: 8,
            value_ladder: 4,
            piecewise_uniform: false,
            seed: 0,
        }
    }
}

/// Draw a profile. The same spec always yields the same profile.
pub fn generate(spec: &GenSpec) -> Result<Profile> {
    if spec.n_agents == 0 {
        return Err(Error::EmptyProfile);
    }
    if spec.max_blocks == 0 {
        return Err(Error::InfeasibleInput("max_blocks must be positive".into()));
    }
    if spec.value_ladder == 0 {
        return Err(Error::InfeasibleInput("value ladder needs a positive level".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let denom = spec.n_agents * spec.max_blocks;
    let mut agents = Vec::with_capacity(spec.n_agents);
    for i in 0..spec.n_agents {
        let density = draw_density(&mut rng, denom, spec);
        agents.push(Agent::with_unit_claim(format!("a{}", i + 1), density));
    }
    Profile::new(agents)
}

/// Pick disjoint, non-touching blocks on the grid and give each a positive
/// level; everything between blocks stays at zero.
fn draw_density(rng: &mut ChaCha8Rng, denom: usize, spec: &GenSpec) -> PiecewiseDensity {
    let most = spec.max_blocks.min((denom + 1) / 2).max(1);
    let blocks = rng.gen_range(1..=most);
    let mut ticks: Vec<usize> = (0..=denom).collect();
    ticks.shuffle(rng);
    let mut edges: Vec<usize> = ticks.into_iter().take(2 * blocks).collect();
    edges.sort_unstable();

    let uniform_level = rat_int(rng.gen_range(1..=spec.value_ladder) as i64);
    let mut breakpoints: Vec<Rat> = vec![Rat::zero()];
    let mut values: Vec<Rat> = Vec::new();
    let push = |tick: usize, level: Rat, breakpoints: &mut Vec<Rat>, values: &mut Vec<Rat>| {
        let point = rat(tick as i64, denom as i64);
        if point != *breakpoints.last().expect("breakpoints start at 0") {
            breakpoints.push(point);
            values.push(level);
        }
    };
    for pair in edges.chunks(2) {
        let level = if spec.piecewise_uniform {
            uniform_level.clone()
        } else {
            rat_int(rng.gen_range(1..=spec.value_ladder) as i64)
        };
        push(pair[0], Rat::zero(), &mut breakpoints, &mut values);
        push(pair[1], level, &mut breakpoints, &mut values);
    }
    push(denom, Rat::zero(), &mut breakpoints, &mut values);
    PiecewiseDensity::new(breakpoints, values)
        .expect("grid construction yields a valid density")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn same_seed_same_profile() {
        let spec = GenSpec { n_agents: 3, seed: 7, ..GenSpec::default() };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for i in 0..3 {
            assert_eq!(a.agent(i).density, b.agent(i).density);
            assert_eq!(a.agent(i).name, b.agent(i).name);
        }
    }

    #[test]
    fn breakpoints_stay_on_the_grid_and_levels_on_the_ladder() {
        for seed in 0..30 {
            let spec = GenSpec { n_agents: 3, value_ladder: 4, seed, ..GenSpec::default() };
            let profile = generate(&spec).unwrap();
            let denom = rat_int(24);
            for agent in profile.agents() {
                for b in agent.density.breakpoints() {
                    assert!((b * &denom).is_integer(), "breakpoint {b} off the 1/24 grid");
                }
                for v in agent.density.values() {
                    assert!((*v >= Rat::zero()) && (*v <= rat_int(4)));
                    assert!(v.is_integer());
                }
                assert!(agent.density.total_value() > Rat::zero());
                let positive_blocks = agent
                    .density
                    .values()
                    .iter()
                    .filter(|v| !v.is_zero())
                    .count();
                assert!(positive_blocks <= 8);
            }
        }
    }

    #[test]
    fn piecewise_uniform_mode_uses_one_level_per_agent() {
        for seed in 0..30 {
            let spec = GenSpec {
                n_agents: 4,
                piecewise_uniform: true,
                seed,
                ..GenSpec::default()
            };
            let profile = generate(&spec).unwrap();
            assert!(profile.is_piecewise_uniform());
        }
    }

    #[test]
    fn distinct_seeds_vary() {
        let a = generate(&GenSpec { seed: 1, ..GenSpec::default() }).unwrap();
        let b = generate(&GenSpec { seed: 2, ..GenSpec::default() }).unwrap();
        assert!((0..2).any(|i| a.agent(i).density != b.agent(i).density));
    }
}
