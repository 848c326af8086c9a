//! Bundled instances with hand-computed outcomes. Each fixture replays one
//! sharp phenomenon: a mechanism's exact output, a property trade-off, or a
//! profitable lie, and fails loudly if the code ever drifts from the
//! pre-computed numbers.

use crate::ccea::run_ccea;
use crate::csd::{run_crsd, run_csd};
use crate::mea::{run_mea, SolveMode};
use crate::model::{Agent, Allocation, Coordinates, Interval, PiecewiseDensity, Profile};
use crate::props::{
    check_envy_free, check_non_wasteful, check_pareto, check_robust_ef, check_robust_prop,
    find_manipulation, implication_violations, Evaluation, Mechanism, MisreportSpace,
    SearchStrategy, Verdict, Witness,
};
use crate::rational::{rat, rat_int, Rat};

fn density(breakpoints: Vec<Rat>, values: Vec<i64>) -> PiecewiseDensity {
    PiecewiseDensity::new(breakpoints, values.into_iter().map(rat_int).collect())
        .expect("fixture densities are valid")
}

fn unit_agents(densities: Vec<PiecewiseDensity>) -> Profile {
    Profile::new(
        densities
            .into_iter()
            .enumerate()
            .map(|(i, d)| Agent::with_unit_claim(format!("a{}", i + 1), d))
            .collect(),
    )
    .expect("fixture profiles are valid")
}

/// Two agents over the unit cake: one prizes a short left stretch and mildly
/// wants the right half, the other only wants the right seventy percent.
/// Nobody wants [1/10, 3/10]. The standing example throughout the suite.
pub fn demo_profile() -> Profile {
    unit_agents(vec![
        density(vec![rat(0, 1), rat(1, 10), rat(1, 2), rat(1, 1)], vec![10, 0, 2]),
        density(vec![rat(0, 1), rat(3, 10), rat(1, 1)], vec![0, 3]),
    ])
}

/// Both agents prefer the left half, with strictly ranked halves and
/// different intensity ratios: the profile where ordinal fairness and
/// efficiency part ways.
pub fn halves_profile() -> Profile {
    unit_agents(vec![
        density(vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![2, 1]),
        density(vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![3, 2]),
    ])
}

/// Three profiles chained by single-agent deviations. Any rule that is
/// simultaneously strategyproof, robustly proportional, and non-wasteful
/// contradicts itself across them.
pub fn chain_profiles() -> (Profile, Profile, Profile) {
    let both_halves = density(vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![2, 1]);
    let narrowed = density(
        vec![rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)],
        vec![2, 0, 1, 0],
    );
    let sharpened = density(
        vec![rat(0, 1), rat(1, 4), rat(1, 2), rat(1, 1)],
        vec![3, 2, 1],
    );
    let p1 = unit_agents(vec![both_halves.clone(), both_halves.clone()]);
    let p2 = unit_agents(vec![narrowed.clone(), both_halves]);
    let p3 = unit_agents(vec![narrowed, sharpened]);
    (p1, p2, p3)
}

/// Two agents desiring short uniform stretches at opposite edges of the
/// cake; the instance where the uniform split rewards a stretched report.
pub fn edge_desires_profile() -> Profile {
    unit_agents(vec![
        density(vec![rat(0, 1), rat(1, 5), rat(1, 1)], vec![1, 0]),
        density(vec![rat(0, 1), rat(4, 5), rat(1, 1)], vec![0, 1]),
    ])
}

/// Quarter-by-quarter rankings (truth, lies): under the lies, the serial
/// lottery hands each liar their two jointly-best quarters outright.
pub fn quartered_profiles() -> (Profile, Profile) {
    let quarters = |levels: [i64; 4]| {
        density(
            vec![rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)],
            levels.to_vec(),
        )
    };
    let truth = unit_agents(vec![quarters([4, 3, 2, 1]), quarters([3, 4, 1, 2])]);
    let lies = unit_agents(vec![quarters([4, 2, 3, 1]), quarters([2, 4, 1, 3])]);
    (truth, lies)
}

/// Three agents each desiring two of three thirds, pairwise overlapping;
/// the serial lottery leaves the first agent envious in expectation.
pub fn overlapping_thirds_profile() -> Profile {
    let thirds = |values: Vec<i64>| {
        PiecewiseDensity::new(
            vec![rat(0, 1), rat(1, 3), rat(2, 3), rat(1, 1)],
            values.into_iter().map(|v| rat(3 * v, 2)).collect(),
        )
        .expect("fixture densities are valid")
    };
    unit_agents(vec![
        thirds(vec![1, 1, 0]),
        thirds(vec![1, 0, 1]),
        thirds(vec![0, 1, 1]),
    ])
}

#[derive(Debug, Clone)]
pub struct FixtureResult {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Replays every bundled fixture. All of them must pass on a healthy build.
pub fn run_all() -> Vec<FixtureResult> {
    let fixtures: [(&'static str, fn() -> Result<String, String>); 8] = [
        ("eating-demo", eating_demo),
        ("market-demo", market_demo),
        ("serial-demo", serial_demo),
        ("halves-conflict", halves_conflict),
        ("deviation-chain", deviation_chain),
        ("uniform-rule-misreport", uniform_rule_misreport),
        ("quarter-coalition", quarter_coalition),
        ("three-agent-envy", three_agent_envy),
    ];
    fixtures
        .into_iter()
        .map(|(id, run)| match run() {
            Ok(detail) => FixtureResult { id, passed: true, detail },
            Err(detail) => FixtureResult { id, passed: false, detail },
        })
        .collect()
}

fn ensure(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(format!("expected {what}"))
    }
}

fn verdict(reports: &[crate::props::PropertyReport], p: crate::props::Property) -> Verdict {
    reports
        .iter()
        .find(|r| r.property == p)
        .map(|r| r.verdict)
        .expect("all properties checked")
}

fn lattice_clean(ev: &Evaluation, reports: &[crate::props::PropertyReport]) -> Result<(), String> {
    let broken = implication_violations(ev, reports);
    ensure(broken.is_empty(), &format!("no implication violations, got {broken:?}"))
}

fn eating_demo() -> Result<String, String> {
    use crate::props::Property;
    let profile = demo_profile();
    let run = run_ccea(&profile).map_err(|e| e.to_string())?;
    ensure(run.utilities == vec![rat(8, 5), rat(6, 5)], "eating utilities 8/5, 6/5")?;
    let ev = Evaluation::from_allocation(&profile, &run.allocation).map_err(|e| e.to_string())?;
    let reports = ev.check_all().map_err(|e| e.to_string())?;
    for p in [Property::RobustEnvyFree, Property::NonWasteful, Property::ParetoOptimal] {
        ensure(verdict(&reports, p) == Verdict::Pass, &format!("{p} to pass"))?;
    }
    lattice_clean(&ev, &reports)?;
    Ok("utilities 8/5 and 6/5; robustly envy-free, non-wasteful, and efficient".into())
}

fn market_demo() -> Result<String, String> {
    use crate::props::Property;
    let profile = demo_profile();
    let run = run_mea(&profile, SolveMode::Exact).map_err(|e| e.to_string())?;
    ensure(run.utilities() == [rat(6, 5), rat(9, 5)], "market utilities 6/5, 9/5")?;
    ensure(run.equilibrium.exact && run.equilibrium.residual == 0.0, "a certified equilibrium")?;
    let prices: Vec<Rat> = run.priced_cells.iter().map(|(_, p)| p.clone()).collect();
    ensure(prices == vec![rat(25, 3), rat(5, 3), rat(5, 3)], "prices 25/3, 5/3, 5/3")?;
    let ev = Evaluation::from_allocation(&profile, &run.allocation).map_err(|e| e.to_string())?;
    let reports = ev.check_all().map_err(|e| e.to_string())?;
    ensure(verdict(&reports, Property::ParetoOptimal) == Verdict::Pass, "efficiency to pass")?;
    ensure(verdict(&reports, Property::EnvyFree) == Verdict::Pass, "envy-freeness to pass")?;
    ensure(
        verdict(&reports, Property::RobustProportional) == Verdict::Fail,
        "the ordinal share guarantee to fail",
    )?;
    lattice_clean(&ev, &reports)?;
    let approx = run_mea(
        &profile,
        SolveMode::Iterative { tolerance: 1e-6, max_iterations: 20_000 },
    )
    .map_err(|e| e.to_string())?;
    for (a, b) in approx.utilities().iter().zip(run.utilities()) {
        let gap = crate::rational::rat_to_f64(&(a - b)).abs();
        ensure(gap <= 1e-6, "iterative utilities within 1e-6 of exact")?;
    }
    Ok("equilibrium prices 25/3, 5/3, 5/3; efficient and envy-free, ordinal share fails".into())
}

fn serial_demo() -> Result<String, String> {
    use crate::props::Property;
    let profile = demo_profile();
    let first = run_crsd(&profile, &[0, 1]).map_err(|e| e.to_string())?;
    ensure(first.utilities == vec![rat(9, 5), rat(9, 10)], "pass utilities 9/5, 9/10")?;
    let second = run_crsd(&profile, &[1, 0]).map_err(|e| e.to_string())?;
    ensure(second.utilities == vec![rat(7, 5), rat(3, 2)], "pass utilities 7/5, 3/2")?;
    let run = run_csd(&profile).map_err(|e| e.to_string())?;
    ensure(
        run.expected_utilities == vec![rat(8, 5), rat(6, 5)],
        "expected utilities 8/5, 6/5",
    )?;
    let ev = Evaluation::from_table(&profile, run.partition, run.assignment)
        .map_err(|e| e.to_string())?;
    let reports = ev.check_all().map_err(|e| e.to_string())?;
    ensure(verdict(&reports, Property::Proportional) == Verdict::Pass, "proportionality")?;
    lattice_clean(&ev, &reports)?;
    Ok("both serial passes and their average match the hand computation".into())
}

fn even_split(profile: &Profile) -> Result<Allocation, String> {
    // [0,1/4] and [1/2,3/4] to the first agent, the rest to the second.
    let q = |a: i64, b: i64| Interval::new(rat(a, 4), rat(b, 4)).expect("quarter");
    Allocation::new(
        vec![vec![q(0, 1), q(2, 3)], vec![q(1, 2), q(3, 4)]],
        Vec::new(),
        Coordinates::Original,
        &crate::model::unit_interval(),
    )
    .map_err(|e| e.to_string())
    .and_then(|a| {
        ensure(profile.len() == 2, "a two-agent profile")?;
        Ok(a)
    })
}

fn halves_conflict() -> Result<String, String> {
    let profile = halves_profile();
    let allocation = even_split(&profile)?;
    let ev = Evaluation::from_allocation(&profile, &allocation).map_err(|e| e.to_string())?;
    ensure(ev.utilities == vec![rat(3, 4), rat(5, 4)], "split utilities 3/4, 5/4")?;
    ensure(check_robust_prop(&ev).passed(), "the ordinal share guarantee to hold")?;
    ensure(check_robust_ef(&ev).passed(), "ordinal envy-freeness to hold")?;
    let pareto = check_pareto(&ev).map_err(|e| e.to_string())?;
    let Some(Witness::Dominated { gains, .. }) = pareto.witness else {
        return Err("expected a dominating reassignment".into());
    };
    let total: Rat = gains.iter().cloned().sum();
    ensure(total == rat(1, 8), "a dominating trade worth exactly 1/8")?;
    Ok("the only ordinally fair split leaves an exact 1/8 of utility on the table".into())
}

fn deviation_chain() -> Result<String, String> {
    let (p1, p2, p3) = chain_profiles();

    // Identical reports force the even split, which is ordinally fair.
    let split = even_split(&p1)?;
    let ev1 = Evaluation::from_allocation(&p1, &split).map_err(|e| e.to_string())?;
    ensure(check_robust_prop(&ev1).passed(), "the even split to be ordinally fair")?;
    ensure(check_non_wasteful(&ev1).passed(), "the even split to waste nothing")?;

    // A strategyproof rule must hand the narrowed first agent the same
    // pieces, leaving the second agent a truthful utility of 3/4.
    let ev2 = Evaluation::from_allocation(&p2, &split).map_err(|e| e.to_string())?;
    ensure(check_robust_prop(&ev2).passed(), "persistence to stay ordinally fair")?;
    ensure(check_non_wasteful(&ev2).passed(), "persistence to waste nothing")?;
    let truthful = &ev2.utilities[1];
    ensure(*truthful == rat(3, 4), "a truthful utility of 3/4")?;

    // Sharpening the second report forces a division that the second agent,
    // still valuing the cake as before, strictly prefers.
    let eighth = |a: i64, b: i64| Interval::new(rat(a, 8), rat(b, 8)).expect("eighth");
    let forced = Allocation::new(
        vec![vec![eighth(0, 1), eighth(4, 5)], vec![eighth(1, 4), eighth(5, 8)]],
        Vec::new(),
        Coordinates::Original,
        &crate::model::unit_interval(),
    )
    .map_err(|e| e.to_string())?;
    let ev3 = Evaluation::from_allocation(&p3, &forced).map_err(|e| e.to_string())?;
    ensure(check_robust_prop(&ev3).passed(), "the forced division to be ordinally fair")?;
    ensure(check_non_wasteful(&ev3).passed(), "the forced division to waste nothing")?;
    let after: Rat = p2.agent(1).density.value_over_pieces(&forced.pieces[1]);
    ensure(after == rat(9, 8), "a deviated utility of 9/8")?;
    ensure(after > *truthful, "the lie to strictly pay")?;
    Ok("fairness plus non-waste pin divisions whose chain rewards a lie: 9/8 > 3/4".into())
}

fn uniform_rule_misreport() -> Result<String, String> {
    let truth = edge_desires_profile();
    let truthful = Mechanism::UniformSplit.run(&truth).map_err(|e| e.to_string())?;
    let base = truthful.true_utility(&truth);
    ensure(base == vec![rat(1, 10), rat(1, 10)], "truthful utilities 1/10 each")?;
    let space = MisreportSpace::for_instance(&truth, &truthful.cut_points(), 5, 1)
        .map_err(|e| e.to_string())?;
    let outcome = find_manipulation(
        &Mechanism::UniformSplit,
        &truth,
        &[1],
        &space,
        SearchStrategy::Exhaustive,
        10_000,
    )
    .map_err(|e| e.to_string())?;
    let Some(found) = outcome.manipulation else {
        return Err("expected the uniform split to be manipulable".into());
    };
    ensure(found.deviated_utilities[1] > rat(1, 10), "a strict gain over 1/10")?;
    Ok(format!(
        "stretching the reported desire lifts true utility from 1/10 to {}",
        found.deviated_utilities[1]
    ))
}

fn quarter_coalition() -> Result<String, String> {
    let (truth, lies) = quartered_profiles();
    let honest = Mechanism::Csd.run(&truth).map_err(|e| e.to_string())?;
    ensure(
        honest.true_utility(&truth) == vec![rat(5, 4), rat(5, 4)],
        "truthful expected utilities 5/4 each",
    )?;
    let colluded = Mechanism::Csd.run(&lies).map_err(|e| e.to_string())?;
    let crate::props::MechanismOutput::Lottery { part, shares } = &colluded else {
        return Err("expected a lottery".into());
    };
    for j in 0..part.n_cells() {
        for i in 0..2 {
            let f = shares.fraction(j, i);
            ensure(
                f == &rat_int(0) || f == &rat_int(1),
                "the colluded lottery to be deterministic",
            )?;
        }
    }
    ensure(
        colluded.true_utility(&truth) == vec![rat(3, 2), rat(3, 2)],
        "colluded true utilities 3/2 each",
    )?;
    Ok("joint lies make the lottery deterministic and lift both agents 5/4 to 3/2".into())
}

fn three_agent_envy() -> Result<String, String> {
    let profile = overlapping_thirds_profile();
    let run = run_csd(&profile).map_err(|e| e.to_string())?;
    ensure(
        run.expected_utilities == vec![rat(1, 3), rat(1, 2), rat(1, 2)],
        "expected utilities 1/3, 1/2, 1/2",
    )?;
    let ev = Evaluation::from_table(&profile, run.partition, run.assignment)
        .map_err(|e| e.to_string())?;
    let report = check_envy_free(&ev);
    let Some(Witness::EnvyPair { envious, envied, own_value, other_value, .. }) = report.witness
    else {
        return Err("expected an envy pair".into());
    };
    ensure((envious, envied) == (0, 2), "the first agent to envy the third")?;
    ensure(
        own_value == rat(1, 3) && other_value == rat(5, 12),
        "envy values 1/3 against 5/12",
    )?;
    ensure(check_robust_prop(&ev).passed(), "the lottery to stay ordinally proportional")?;
    Ok("the first agent holds 1/3 in expectation but values the third's share at 5/12".into())
}
