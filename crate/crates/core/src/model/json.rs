//! The two document formats: profiles and allocations. All numerics are
//! strings holding exact rationals (`"7/10"`, `"0.35"`, `"10"`).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::allocation::{Allocation, Coordinates};
use crate::model::density::PiecewiseDensity;
use crate::model::interval::Interval;
use crate::model::profile::{Agent, Profile};
use crate::rational::{format_rat, parse_rat, rat_int, Rat};

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    agents: Vec<AgentDoc>,
}

#[derive(Serialize, Deserialize)]
struct AgentDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    claim: Option<String>,
    density: DensityDoc,
}

#[derive(Serialize, Deserialize)]
struct DensityDoc {
    breakpoints: Vec<String>,
    values: Vec<String>,
}

/// Parses a profile document. Claims default to 1.
pub fn parse_profile(text: &str) -> Result<Profile> {
    let doc: ProfileDoc =
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))?;
    if doc.agents.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let mut agents = Vec::with_capacity(doc.agents.len());
    for a in doc.agents {
        let breakpoints = a
            .density
            .breakpoints
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<Rat>>>()?;
        let values = a
            .density
            .values
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<Rat>>>()?;
        let density =
            PiecewiseDensity::new(breakpoints, values).map_err(|e| e.for_agent(&a.name))?;
        let claim = match &a.claim {
            Some(text) => parse_rat(text)?,
            None => rat_int(1),
        };
        agents.push(Agent::new(a.name, claim, density)?);
    }
    Profile::new(agents)
}

pub fn serialize_profile(profile: &Profile) -> String {
    let doc = ProfileDoc {
        agents: profile
            .agents()
            .iter()
            .map(|a| AgentDoc {
                name: a.name.clone(),
                claim: if a.claim == rat_int(1) { None } else { Some(format_rat(&a.claim)) },
                density: DensityDoc {
                    breakpoints: a.density.breakpoints().iter().map(format_rat).collect(),
                    values: a.density.values().iter().map(format_rat).collect(),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("profile serialization cannot fail")
}

#[derive(Serialize, Deserialize)]
struct AllocationDoc {
    pieces: BTreeMap<String, Vec<[String; 2]>>,
    #[serde(default)]
    waste: Vec<[String; 2]>,
    coordinates: String,
}

fn interval_from_pair(pair: &[String; 2]) -> Result<Interval> {
    let lo = parse_rat(&pair[0])?;
    let hi = parse_rat(&pair[1])?;
    Interval::new(lo.clone(), hi.clone()).ok_or_else(|| {
        Error::InvalidDocument(format!("interval [{}, {}] is empty or inverted", lo, hi))
    })
}

fn pair_from_interval(iv: &Interval) -> [String; 2] {
    [format_rat(&iv.lo), format_rat(&iv.hi)]
}

/// Parses an allocation for the given profile. Every named agent must exist;
/// agents without an entry hold nothing. Waste may be omitted only when the
/// listed pieces already tile the cake.
pub fn parse_allocation(text: &str, profile: &Profile) -> Result<Allocation> {
    let doc: AllocationDoc =
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))?;
    let coordinates = match doc.coordinates.as_str() {
        "original" => Coordinates::Original,
        "rescaled" => Coordinates::Rescaled,
        other => {
            return Err(Error::InvalidDocument(format!(
                "unknown coordinates `{other}`; expected `original` or `rescaled`"
            )))
        }
    };
    let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); profile.len()];
    for (name, pairs) in &doc.pieces {
        let i = profile
            .index_of(name)
            .ok_or_else(|| Error::InvalidDocument(format!("unknown agent `{name}`")))?;
        pieces[i] = pairs.iter().map(interval_from_pair).collect::<Result<Vec<_>>>()?;
    }
    let waste = doc.waste.iter().map(interval_from_pair).collect::<Result<Vec<_>>>()?;
    let span = Interval::new(Rat::from_integer(0.into()), rat_int(1)).expect("unit span");
    Allocation::new(pieces, waste, coordinates, &span)
}

pub fn serialize_allocation(alloc: &Allocation, profile: &Profile) -> String {
    let doc = AllocationDoc {
        pieces: profile
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                (a.name.clone(), alloc.pieces[i].iter().map(pair_from_interval).collect())
            })
            .collect(),
        waste: alloc.waste.iter().map(pair_from_interval).collect(),
        coordinates: match alloc.coordinates {
            Coordinates::Original => "original".into(),
            Coordinates::Rescaled => "rescaled".into(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("allocation serialization cannot fail")
}
