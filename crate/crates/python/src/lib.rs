//! Python bindings. Every function speaks JSON strings in the same formats
//! as the command line, so rationals survive the language boundary intact;
//! call `json.loads` on the results.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use fairslice_core::rational::rat_from_f64;
use fairslice_core::report::{
    check_report, equilibrium_json, exit_code, manipulation_report, run_report,
};
use fairslice_core::{
    find_manipulation, generate, parse_allocation, parse_profile, run_csd, run_csd_sampled,
    run_fixtures, run_mea, serialize_profile, Error, Evaluation, GenSpec, Mechanism,
    MechanismOutput, MisreportSpace, Property, SearchStrategy, SolveMode,
};

/// Input problems become ValueError, broken invariants RuntimeError,
/// mirroring the CLI's exit codes 2 and 3.
fn core_err(e: Error) -> PyErr {
    match exit_code(&e) {
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mechanism(
    alg: &str,
    exact: bool,
    tol: f64,
    seed: u64,
    perm: Option<Vec<usize>>,
) -> PyResult<Mechanism> {
    Ok(match alg {
        "ccea" => Mechanism::Ccea,
        "mea" => Mechanism::Mea(if exact {
            SolveMode::Exact
        } else {
            SolveMode::Iterative { tolerance: tol, max_iterations: 20_000 }
        }),
        "csd" => Mechanism::Csd,
        "crsd" => Mechanism::Crsd(
            perm.ok_or_else(|| PyValueError::new_err("crsd needs perm=[...]"))?,
        ),
        "cmsd" => Mechanism::Cmsd(seed),
        "uniform" => Mechanism::UniformSplit,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown algorithm {other:?}; use ccea, mea, csd, crsd, cmsd, or uniform"
            )))
        }
    })
}

/// Divide the cake described by `profile_json` and return the full run
/// report: utilities, Nash product, property verdicts, and the division.
#[pyfunction]
#[pyo3(signature = (profile_json, alg="ccea", *, exact=false, tol=1e-9, seed=0, perm=None, sample=None))]
fn divide(
    profile_json: &str,
    alg: &str,
    exact: bool,
    tol: f64,
    seed: u64,
    perm: Option<Vec<usize>>,
    sample: Option<usize>,
) -> PyResult<String> {
    let profile = parse_profile(profile_json).map_err(core_err)?;
    if sample.is_some() && alg != "csd" {
        return Err(PyValueError::new_err("sample only applies to csd"));
    }
    let doc = match alg {
        "mea" => {
            let mode = if exact {
                SolveMode::Exact
            } else {
                SolveMode::Iterative { tolerance: tol, max_iterations: 20_000 }
            };
            let run = run_mea(&profile, mode).map_err(core_err)?;
            let output = MechanismOutput::Concrete(run.allocation.clone());
            let mut ev = output.evaluation(&profile).map_err(core_err)?;
            if !run.equilibrium.exact {
                let slack = rat_from_f64(tol)
                    .ok_or_else(|| PyValueError::new_err("tol must be a finite number"))?;
                ev = ev.with_slack(slack);
            }
            let reports = ev.check_all().map_err(core_err)?;
            let mut doc = run_report("mea", &profile, &output, &ev, &reports);
            doc["equilibrium"] = equilibrium_json(&run);
            doc
        }
        "csd" => {
            let run = match sample {
                Some(k) => run_csd_sampled(&profile, k, seed).map_err(core_err)?,
                None => run_csd(&profile).map_err(core_err)?,
            };
            let n_permutations = run.n_permutations;
            let exact_table = run.exact;
            let output =
                MechanismOutput::Lottery { part: run.partition, shares: run.assignment };
            let ev = output.evaluation(&profile).map_err(core_err)?;
            let reports = ev.check_all().map_err(core_err)?;
            let mut doc = run_report("csd", &profile, &output, &ev, &reports);
            doc["permutations"] = json!(n_permutations);
            doc["exact"] = json!(exact_table);
            doc
        }
        _ => {
            let mech = mechanism(alg, exact, tol, seed, perm)?;
            let output = mech.run(&profile).map_err(core_err)?;
            let ev = output.evaluation(&profile).map_err(core_err)?;
            let reports = ev.check_all().map_err(core_err)?;
            run_report(&mech.label(), &profile, &output, &ev, &reports)
        }
    };
    Ok(doc.to_string())
}

/// Judge an existing division. `props` is a list of property codes like
/// ["ef", "r-prop"]; omit it to check everything.
#[pyfunction]
#[pyo3(signature = (profile_json, allocation_json, props=None))]
fn check(
    profile_json: &str,
    allocation_json: &str,
    props: Option<Vec<String>>,
) -> PyResult<String> {
    let profile = parse_profile(profile_json).map_err(core_err)?;
    let allocation = parse_allocation(allocation_json, &profile).map_err(core_err)?;
    let ev = Evaluation::from_allocation(&profile, &allocation).map_err(core_err)?;
    let selected: Vec<Property> = match props {
        None => Property::all().to_vec(),
        Some(codes) => codes
            .iter()
            .map(|code| {
                Property::all()
                    .into_iter()
                    .find(|p| p.code() == code)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown property {code:?}")))
            })
            .collect::<PyResult<_>>()?,
    };
    let mut reports = Vec::with_capacity(selected.len());
    for p in selected {
        reports.push(ev.check(p).map_err(core_err)?);
    }
    Ok(check_report(&profile, &ev, &reports).to_string())
}

/// Deterministically generate a profile on a rational breakpoint grid.
#[pyfunction]
#[pyo3(signature = (n, *, max_blocks=4, ladder=4, pw_uniform=false, seed=0))]
fn generate_profile(
    n: usize,
    max_blocks: usize,
    ladder: u32,
    pw_uniform: bool,
    seed: u64,
) -> PyResult<String> {
    let spec = GenSpec {
        n_agents: n,
        max_blocks,
        value_ladder: ladder,
        piecewise_uniform: pw_uniform,
        seed,
    };
    let profile = generate(&spec).map_err(core_err)?;
    Ok(serialize_profile(&profile))
}

/// Search for profitable misreports by the named agents against a mechanism.
#[pyfunction]
#[pyo3(signature = (profile_json, alg, agents, *, grid=10, ladder=5, budget=100_000, sampled=None, exact=false, tol=1e-9, seed=0, perm=None))]
#[allow(clippy::too_many_arguments)]
fn manipulate(
    profile_json: &str,
    alg: &str,
    agents: Vec<usize>,
    grid: u32,
    ladder: u32,
    budget: usize,
    sampled: Option<u64>,
    exact: bool,
    tol: f64,
    seed: u64,
    perm: Option<Vec<usize>>,
) -> PyResult<String> {
    let profile = parse_profile(profile_json).map_err(core_err)?;
    let mech = mechanism(alg, exact, tol, seed, perm)?;
    let truthful = mech.run(&profile).map_err(core_err)?;
    let space = MisreportSpace::for_instance(&profile, &truthful.cut_points(), grid, ladder)
        .map_err(core_err)?;
    let strategy = match sampled {
        Some(s) => SearchStrategy::Sampled { seed: s },
        None => SearchStrategy::Exhaustive,
    };
    let outcome = find_manipulation(&mech, &profile, &agents, &space, strategy, budget)
        .map_err(core_err)?;
    Ok(manipulation_report(&mech.label(), &profile, space.size(), &outcome).to_string())
}

/// Run the bundled golden fixtures; returns a JSON array of
/// {id, passed, detail}.
#[pyfunction]
fn fixtures() -> String {
    let results: Vec<_> = run_fixtures()
        .into_iter()
        .map(|r| json!({ "id": r.id, "passed": r.passed, "detail": r.detail }))
        .collect();
    serde_json::Value::Array(results).to_string()
}

#[pymodule]
fn _fairslice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(divide, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(generate_profile, m)?)?;
    m.add_function(wrap_pyfunction!(manipulate, m)?)?;
    m.add_function(wrap_pyfunction!(fixtures, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
