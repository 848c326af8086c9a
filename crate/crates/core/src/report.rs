//! Report rendering. Everything a command prints is assembled here as JSON:
//! exact rationals as strings, plus decimal twins for human eyes. Parsing the
//! exact fields back must reproduce the computed values bit for bit.

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::Error;
use crate::mea::MeaRun;
use crate::model::{serialize_allocation, Interval, Profile};
use crate::props::{
    Evaluation, Manipulation, MechanismOutput, PropertyReport, SearchOutcome, Verdict, Witness,
};
use crate::rational::{format_decimal, format_rat, rat_int, Rat};

fn number(r: &Rat) -> Value {
    json!({ "exact": format_rat(r), "decimal": format_decimal(r) })
}

fn interval_json(iv: &Interval) -> Value {
    json!([format_rat(&iv.lo), format_rat(&iv.hi)])
}

pub fn nash_product(utilities: &[Rat]) -> Rat {
    utilities.iter().fold(rat_int(1), |acc, u| acc * u)
}

fn utilities_json(profile: &Profile, utilities: &[Rat]) -> Value {
    Value::Array(
        profile
            .names()
            .iter()
            .zip(utilities)
            .map(|(name, u)| {
                json!({ "agent": name, "exact": format_rat(u), "decimal": format_decimal(u) })
            })
            .collect(),
    )
}

fn witness_json(profile: &Profile, witness: &Witness) -> Value {
    let name = |i: &usize| profile.agent(*i).name.clone();
    match witness {
        Witness::EnvyPair { envious, envied, own_value, other_value, bound } => json!({
            "kind": "envy-pair",
            "envious": name(envious),
            "envied": name(envied),
            "ownValue": format_rat(own_value),
            "otherValue": format_rat(other_value),
            "bound": format_rat(bound),
        }),
        Witness::Shortfall { agent, utility, fair_share } => json!({
            "kind": "shortfall",
            "agent": name(agent),
            "utility": format_rat(utility),
            "fairShare": format_rat(fair_share),
        }),
        Witness::RobustPrefix { agent, against, prefix, weights, own_weighted, bound_weighted } => {
            json!({
                "kind": "class-prefix",
                "agent": name(agent),
                "against": against.as_ref().map(name),
                "prefix": prefix,
                "weights": weights
                    .iter()
                    .map(|(level, weight)| json!({
                        "level": format_rat(level),
                        "weight": format_rat(weight),
                    }))
                    .collect::<Vec<_>>(),
                "ownWeighted": format_rat(own_weighted),
                "boundWeighted": format_rat(bound_weighted),
            })
        }
        Witness::Dominated { assignment, utilities, gains } => json!({
            "kind": "dominated",
            "utilities": utilities.iter().map(format_rat).collect::<Vec<_>>(),
            "gains": gains.iter().map(format_rat).collect::<Vec<_>>(),
            "fractions": (0..assignment.n_cells())
                .map(|j| assignment.row(j).iter().map(format_rat).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        Witness::WastedCell { cell, desirer, holder } => json!({
            "kind": "wasted-cell",
            "cell": interval_json(cell),
            "desirer": name(desirer),
            "holder": holder.as_ref().map(name),
        }),
        Witness::AsymmetricPair { a, b, utility_a, utility_b } => json!({
            "kind": "asymmetric-pair",
            "agents": [name(a), name(b)],
            "utilities": [format_rat(utility_a), format_rat(utility_b)],
        }),
        Witness::FavoriteMissed { agent, utility, favorite_value } => json!({
            "kind": "favorite-missed",
            "agent": name(agent),
            "utility": format_rat(utility),
            "favoriteValue": format_rat(favorite_value),
        }),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "not-applicable",
    }
}

pub fn property_json(profile: &Profile, report: &PropertyReport) -> Value {
    let mut obj = json!({
        "property": report.property.code(),
        "verdict": verdict_str(report.verdict),
        "detail": report.detail,
    });
    if let Some(witness) = &report.witness {
        obj["witness"] = witness_json(profile, witness);
    }
    obj
}

fn properties_json(profile: &Profile, reports: &[PropertyReport]) -> Value {
    Value::Array(reports.iter().map(|r| property_json(profile, r)).collect())
}

fn lottery_json(ev: &Evaluation) -> Value {
    let names = ev.profile.names();
    json!({
        "cuts": ev.part.cuts().iter().map(format_rat).collect::<Vec<_>>(),
        "cells": (0..ev.part.n_cells())
            .map(|j| {
                let mut shares = serde_json::Map::new();
                for (i, name) in names.iter().enumerate() {
                    let f = ev.shares.fraction(j, i);
                    if !f.is_zero() {
                        shares.insert(name.clone(), Value::String(format_rat(f)));
                    }
                }
                json!({ "interval": interval_json(&ev.part.cell(j)), "shares": shares })
            })
            .collect::<Vec<_>>(),
    })
}

/// The full output of `run`: who got what, what it is worth, and every
/// property verdict.
pub fn run_report(
    algorithm: &str,
    profile: &Profile,
    output: &MechanismOutput,
    ev: &Evaluation,
    reports: &[PropertyReport],
) -> Value {
    let mut doc = json!({
        "algorithm": algorithm,
        "agents": profile.names(),
        "utilities": utilities_json(profile, &ev.utilities),
        "nashProduct": number(&nash_product(&ev.utilities)),
        "properties": properties_json(profile, reports),
    });
    match output {
        MechanismOutput::Concrete(allocation) => {
            let text = serialize_allocation(allocation, profile);
            doc["allocation"] =
                serde_json::from_str(&text).expect("allocation JSON round-trips");
        }
        MechanismOutput::Lottery { .. } => {
            doc["lottery"] = lottery_json(ev);
        }
    }
    doc
}

/// Market summary attached to equilibrium runs: the supporting price of each
/// positively priced region (decimal, like all solver-facing numbers), the
/// clearing residual, and whether the equilibrium is certified in rationals.
pub fn equilibrium_json(run: &MeaRun) -> Value {
    json!({
        "prices": run
            .priced_cells
            .iter()
            .map(|(iv, p)| json!({
                "interval": interval_json(iv),
                "price": format_decimal(p),
            }))
            .collect::<Vec<_>>(),
        "residual": run.equilibrium.residual,
        "exact": run.equilibrium.exact,
    })
}

/// The output of `check`: verdicts for the requested properties on a given
/// division, plus the utilities they were judged on.
pub fn check_report(profile: &Profile, ev: &Evaluation, reports: &[PropertyReport]) -> Value {
    json!({
        "agents": profile.names(),
        "utilities": utilities_json(profile, &ev.utilities),
        "properties": properties_json(profile, reports),
        "allPassed": reports.iter().all(|r| r.verdict != Verdict::Fail),
    })
}

fn density_json(density: &crate::model::PiecewiseDensity) -> Value {
    json!({
        "breakpoints": density.breakpoints().iter().map(format_rat).collect::<Vec<_>>(),
        "values": density.values().iter().map(format_rat).collect::<Vec<_>>(),
    })
}

fn manipulation_json(profile: &Profile, m: &Manipulation) -> Value {
    json!({
        "deviators": m.deviators.iter().map(|&i| profile.agent(i).name.clone()).collect::<Vec<_>>(),
        "reports": m.reports.iter().map(density_json).collect::<Vec<_>>(),
        "truthfulUtilities": utilities_json(profile, &m.truthful_utilities),
        "deviatedUtilities": utilities_json(profile, &m.deviated_utilities),
    })
}

/// The output of `manipulate`: the searched space and the first profitable
/// deviation, if any was found.
pub fn manipulation_report(
    mechanism: &str,
    profile: &Profile,
    space_size: u128,
    outcome: &SearchOutcome,
) -> Value {
    json!({
        "mechanism": mechanism,
        "spacePerAgent": space_size.to_string(),
        "evaluated": outcome.evaluated,
        "skipped": outcome.skipped,
        "exhaustive": outcome.exhaustive,
        "manipulation": outcome
            .manipulation
            .as_ref()
            .map(|m| manipulation_json(profile, m)),
    })
}

/// The output of `compare`: per-agent signed utility differences (first
/// algorithm minus second) and the largest absolute discrepancy.
pub fn compare_report(
    alg1: &str,
    alg2: &str,
    profile: &Profile,
    u1: &[Rat],
    u2: &[Rat],
) -> Value {
    let diffs: Vec<Rat> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
    let max = diffs.iter().map(num_traits::Signed::abs).max().unwrap_or_else(Rat::zero);
    json!({
        "algorithms": [alg1, alg2],
        "agents": profile.names(),
        "discrepancies": diffs
            .iter()
            .map(|d| json!({ "exact": format_rat(d), "decimal": format_decimal(d) }))
            .collect::<Vec<_>>(),
        "maxDiscrepancy": number(&max),
    })
}

/// Machine-readable error envelope, printed to stderr before a non-zero exit.
pub fn error_json(err: &Error) -> Value {
    json!({
        "error": {
            "kind": error_kind(err),
            "message": err.to_string(),
            "exitCode": exit_code(err),
        }
    })
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::MalformedNumber(_) => "malformed-number",
        Error::NonIncreasingBreakpoints { .. } => "non-increasing-breakpoints",
        Error::BreakpointsNotSpanning { .. } => "breakpoints-not-spanning",
        Error::NegativeValue { .. } => "negative-value",
        Error::AllZeroDensity { .. } => "all-zero-density",
        Error::EmptyProfile => "empty-profile",
        Error::DuplicateAgentName(_) => "duplicate-agent-name",
        Error::InvalidDocument(_) => "invalid-document",
        Error::NothingDesired => "nothing-desired",
        Error::FractionOverflow { .. } => "fraction-overflow",
        Error::InsufficientCake { .. } => "insufficient-cake",
        Error::TooManyAgents { .. } => "too-many-agents",
        Error::NoConvergence { .. } => "no-convergence",
        Error::DegenerateAgent(_) => "degenerate-agent",
        Error::BudgetExceeded { .. } => "budget-exceeded",
        Error::InfeasibleInput(_) => "infeasible-input",
        Error::Internal(_) => "internal",
    }
}

/// Exit codes: 2 for anything wrong with the input, 3 for a broken invariant
/// or a solver that failed to do its job. 0 and 1 never come from errors.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::FractionOverflow { .. } | Error::NoConvergence { .. } | Error::Internal(_) => 3,
        _ => 2,
    }
}
