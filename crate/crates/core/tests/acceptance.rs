//! End-to-end acceptance suite. Each test is one shipping criterion and
//! prints as a single pass/fail line under `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fairslice_core::fixtures::{
    chain_profiles, demo_profile, edge_desires_profile, halves_profile,
    overlapping_thirds_profile, quartered_profiles,
};
use fairslice_core::model::{Allocation, Coordinates, Interval, Profile};
use fairslice_core::props::{
    check_non_wasteful, check_pareto, check_robust_ef, check_robust_prop, implication_violations,
    uniform_split, Evaluation, Mechanism, MisreportSpace, Property, PropertyReport,
    SearchStrategy, Verdict, Witness,
};
use fairslice_core::rational::{rat, rat_int, rat_to_f64, Rat};
use fairslice_core::{
    find_manipulation, generate, run_ccea, run_cmsd, run_crsd, run_csd, run_mea, GenSpec,
    SolveMode,
};

fn iv(lo: Rat, hi: Rat) -> Interval {
    Interval::new(lo, hi).expect("test interval")
}

/// Runs every checker except the efficiency oracle (whose LP dominates run
/// time on large sweeps) and asserts the implication lattice over the
/// verdicts. Returns the reports for further inspection.
fn checked(ev: &Evaluation, with_efficiency: bool) -> Vec<PropertyReport> {
    let mut reports = Vec::new();
    for p in Property::all() {
        if p == Property::ParetoOptimal && !with_efficiency {
            continue;
        }
        reports.push(ev.check(p).expect("efficiency oracle"));
    }
    let broken = implication_violations(ev, &reports);
    assert!(broken.is_empty(), "implication lattice violated: {broken:?}");
    reports
}

fn verdict(reports: &[PropertyReport], p: Property) -> Verdict {
    reports.iter().find(|r| r.property == p).expect("property checked").verdict
}

/// Criterion 1: the eating mechanism reproduces the worked two-agent example
/// exactly, and does so in well under ten milliseconds.
#[test]
fn criterion_01_eating_demo_exact_division() {
    let profile = demo_profile();
    run_ccea(&profile).expect("warmup");
    let started = Instant::now();
    let run = run_ccea(&profile).expect("eating demo");
    let elapsed = started.elapsed();

    assert_eq!(run.utilities, vec![rat(8, 5), rat(6, 5)]);
    // Kept cake is [0,1/10] + [3/10,1]; the right half splits 3/5 : 2/5.
    let golden: Vec<Vec<Rat>> =
        vec![vec![rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(1)], vec![rat(3, 5), rat(2, 5)]];
    assert_eq!(run.assignment.n_cells(), 3);
    for j in 0..3 {
        for i in 0..2 {
            assert_eq!(run.assignment.fraction(j, i), &golden[j][i], "cell {j} agent {i}");
        }
    }
    assert_eq!(
        run.allocation.pieces,
        vec![
            vec![iv(rat(0, 1), rat(1, 10)), iv(rat(1, 2), rat(4, 5))],
            vec![iv(rat(3, 10), rat(1, 2)), iv(rat(4, 5), rat(1, 1))],
        ]
    );
    assert_eq!(run.allocation.waste, vec![iv(rat(1, 10), rat(3, 10))]);

    let ev = Evaluation::from_allocation(&profile, &run.allocation).expect("evaluation");
    checked(&ev, true);
    assert!(elapsed < Duration::from_millis(10), "took {elapsed:?}");
}

/// Criterion 2: the market mechanism certifies the demo equilibrium exactly,
/// with the documented prices, and the iterative solver agrees to 1e-6.
#[test]
fn criterion_02_market_demo_equilibrium() {
    let profile = demo_profile();
    let started = Instant::now();
    let run = run_mea(&profile, SolveMode::Exact).expect("market demo");
    let elapsed = started.elapsed();

    assert_eq!(run.utilities(), [rat(6, 5), rat(9, 5)]);
    assert!(run.equilibrium.exact);
    assert_eq!(run.equilibrium.residual, 0.0);
    let prices: Vec<Rat> = run.priced_cells.iter().map(|(_, p)| p.clone()).collect();
    assert_eq!(prices, vec![rat(25, 3), rat(5, 3), rat(5, 3)]);

    let ev = Evaluation::from_allocation(&profile, &run.allocation).expect("evaluation");
    let reports = checked(&ev, true);
    assert_eq!(verdict(&reports, Property::ParetoOptimal), Verdict::Pass);
    assert_eq!(verdict(&reports, Property::EnvyFree), Verdict::Pass);
    assert_eq!(verdict(&reports, Property::RobustProportional), Verdict::Fail);

    let approx = run_mea(&profile, SolveMode::Iterative { tolerance: 1e-6, max_iterations: 50_000 })
        .expect("iterative market demo");
    for (a, b) in approx.utilities().iter().zip(run.utilities()) {
        assert!(rat_to_f64(&(a - b)).abs() <= 1e-6);
    }
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

/// Criterion 3: on piecewise uniform valuations the eating mechanism IS the
/// market equilibrium: 100 seeded instances, utilities identical in exact
/// mode and within 1e-6 in iterative mode.
#[test]
fn criterion_03_pw_uniform_eating_equals_market() {
    (0..100u64).into_par_iter().for_each(|seed| {
        let spec = GenSpec {
            n_agents: 2 + (seed as usize % 3),
            max_blocks: 4,
            value_ladder: 4,
            piecewise_uniform: true,
            seed,
        };
        let profile = generate(&spec).expect("generated profile");
        let eating = run_ccea(&profile).expect("eating run");
        let market = run_mea(&profile, SolveMode::Exact).expect("exact market run");
        assert_eq!(eating.utilities, market.utilities(), "seed {seed}");

        let approx =
            run_mea(&profile, SolveMode::Iterative { tolerance: 1e-6, max_iterations: 50_000 })
                .expect("iterative market run");
        for (a, b) in approx.utilities().iter().zip(&eating.utilities) {
            assert!(rat_to_f64(&(a - b)).abs() <= 1e-6, "seed {seed}");
        }

        for allocation in [&eating.allocation, &market.allocation] {
            let ev = Evaluation::from_allocation(&profile, allocation).expect("evaluation");
            checked(&ev, true);
        }
    });
}

/// Per-agent level classes of an evaluated division: for each agent, the
/// (held mass, total mass) of every positive density level, best first.
fn class_masses(ev: &Evaluation) -> Vec<Vec<(Rat, Rat)>> {
    let part = &ev.part;
    (0..part.n_agents())
        .map(|i| {
            let mut by_level: Vec<(Rat, Rat, Rat)> = Vec::new();
            for j in 0..part.n_cells() {
                let level = part.value(j, i);
                if level.is_zero() {
                    continue;
                }
                let len = part.cell_len(j);
                let held = ev.shares.fraction(j, i) * &len;
                match by_level.iter_mut().find(|(l, _, _)| l == level) {
                    Some((_, h, t)) => {
                        *h += held;
                        *t += len;
                    }
                    None => by_level.push((level.clone(), held, len)),
                }
            }
            by_level.sort_by(|a, b| b.0.cmp(&a.0));
            by_level.into_iter().map(|(_, h, t)| (h, t)).collect()
        })
        .collect()
}

/// Criterion 4: a 500-instance random sweep. The eating mechanism is always
/// robustly envy-free and non-wasteful; the serial lottery is always
/// robustly proportional and symmetric; and the prefix-dominance checker
/// agrees with a brute-force oracle that samples a thousand strictly
/// decreasing weight vectors per instance.
#[test]
fn criterion_04_random_suite_properties_hold() {
    (0..500u64).into_par_iter().for_each(|k| {
        let seed = 1_000 + k;
        let n = 2 + (seed as usize % 4);
        let spec = GenSpec {
            n_agents: n,
            max_blocks: 8,
            value_ladder: 4,
            piecewise_uniform: false,
            seed,
        };
        let profile = generate(&spec).expect("generated profile");

        let eating = run_ccea(&profile).expect("eating run");
        let ev = Evaluation::from_allocation(&profile, &eating.allocation).expect("evaluation");
        assert!(check_robust_ef(&ev).passed(), "seed {seed}: eating must be robustly envy-free");
        assert!(check_non_wasteful(&ev).passed(), "seed {seed}: eating must waste nothing");
        checked(&ev, false);

        let serial = run_csd(&profile).expect("serial lottery");
        let evs = Evaluation::from_table(&profile, serial.partition, serial.assignment)
            .expect("lottery evaluation");
        assert!(
            check_robust_prop(&evs).passed(),
            "seed {seed}: the lottery must be robustly proportional"
        );
        assert_ne!(
            evs.check(Property::Symmetry).unwrap().verdict,
            Verdict::Fail,
            "seed {seed}: symmetric agents must get equal utility"
        );
        checked(&evs, false);

        // Oracle: the checker passed, so no strictly decreasing weighting of
        // the level classes may put any agent below 1/n of the cake's worth.
        let masses = class_masses(&evs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
        for _ in 0..1_000 {
            for classes in &masses {
                let raw: Vec<i64> = (0..classes.len()).map(|_| rng.gen_range(1..=100)).collect();
                let mut weights = vec![0i64; raw.len()];
                let mut acc = 0;
                for k in (0..raw.len()).rev() {
                    acc += raw[k];
                    weights[k] = acc;
                }
                let mut own = Rat::zero();
                let mut whole = Rat::zero();
                for (w, (held, total)) in weights.iter().zip(classes) {
                    own += held * rat_int(*w);
                    whole += total * rat_int(*w);
                }
                assert!(
                    own * rat_int(n as i64) >= whole,
                    "seed {seed}: sampled weights break the certified share bound"
                );
            }
        }
    });
}

/// Criterion 5a: on opposed halves the even split satisfies the ordinal
/// fairness notions, yet the efficiency oracle exhibits a strict improvement.
#[test]
fn criterion_05a_ordinal_fairness_forgoes_efficiency() {
    let profile = halves_profile();
    let q = |a: i64, b: i64| iv(rat(a, 4), rat(b, 4));
    let split = Allocation::new(
        vec![vec![q(0, 1), q(2, 3)], vec![q(1, 2), q(3, 4)]],
        Vec::new(),
        Coordinates::Original,
        &fairslice_core::model::unit_interval(),
    )
    .expect("even split");
    let ev = Evaluation::from_allocation(&profile, &split).expect("evaluation");
    assert_eq!(ev.utilities, vec![rat(3, 4), rat(5, 4)]);
    assert!(check_robust_prop(&ev).passed());
    assert!(check_robust_ef(&ev).passed());

    let pareto = check_pareto(&ev).expect("efficiency oracle");
    assert_eq!(pareto.verdict, Verdict::Fail);
    let Some(Witness::Dominated { gains, utilities, .. }) = pareto.witness else {
        panic!("expected a dominating reassignment");
    };
    let total: Rat = gains.iter().cloned().sum();
    assert_eq!(total, rat(1, 8), "the LP improvement is worth exactly 1/8");
    for (i, gain) in gains.iter().enumerate() {
        assert!(gain >= &Rat::zero());
        assert_eq!(utilities[i], &ev.utilities[i] + gain);
    }
    checked(&ev, true);
}

/// Criterion 5b: the three-profile deviation chain. Fairness and non-waste
/// pin the divisions at every link, and the chain ends with a lie that pays.
#[test]
fn criterion_05b_deviation_chain_inequalities() {
    let (p1, p2, p3) = chain_profiles();
    let q = |a: i64, b: i64| iv(rat(a, 4), rat(b, 4));
    let split = Allocation::new(
        vec![vec![q(0, 1), q(2, 3)], vec![q(1, 2), q(3, 4)]],
        Vec::new(),
        Coordinates::Original,
        &fairslice_core::model::unit_interval(),
    )
    .expect("even split");

    // Link 1: identical reports, the even split is ordinally fair and tight.
    let ev1 = Evaluation::from_allocation(&p1, &split).expect("evaluation");
    assert!(check_robust_prop(&ev1).passed());
    assert!(check_non_wasteful(&ev1).passed());

    // Link 2: the first agent narrows their report; a strategyproof rule
    // must keep the division, still fair and tight, and the second agent's
    // truthful utility is pinned at 3/4.
    let ev2 = Evaluation::from_allocation(&p2, &split).expect("evaluation");
    assert!(check_robust_prop(&ev2).passed());
    assert!(check_non_wasteful(&ev2).passed());
    let truthful = ev2.utilities[1].clone();
    assert_eq!(truthful, rat(3, 4));

    // Link 3: the second agent sharpens their report; fairness and non-waste
    // force a division they strictly prefer under their real tastes.
    let e = |a: i64, b: i64| iv(rat(a, 8), rat(b, 8));
    let forced = Allocation::new(
        vec![vec![e(0, 1), e(4, 5)], vec![e(1, 4), e(5, 8)]],
        Vec::new(),
        Coordinates::Original,
        &fairslice_core::model::unit_interval(),
    )
    .expect("forced division");
    let ev3 = Evaluation::from_allocation(&p3, &forced).expect("evaluation");
    assert!(check_robust_prop(&ev3).passed());
    assert!(check_non_wasteful(&ev3).passed());
    let after: Rat = p2.agent(1).density.value_over_pieces(&forced.pieces[1]);
    assert_eq!(after, rat(9, 8));
    assert!(after > truthful, "the chain must reward the lie: {after} > {truthful}");
}

/// Criterion 5c: the misreport search finds the documented manipulations,
/// one against the uniform split and one coalition against the lottery.
#[test]
fn criterion_05c_manipulations_found() {
    // A single agent stretches their desire under the uniform split.
    let truth = edge_desires_profile();
    let truthful = Mechanism::UniformSplit.run(&truth).expect("uniform run");
    assert_eq!(truthful.true_utility(&truth), vec![rat(1, 10), rat(1, 10)]);
    let space = MisreportSpace::for_instance(&truth, &truthful.cut_points(), 5, 1)
        .expect("misreport space");
    let outcome = find_manipulation(
        &Mechanism::UniformSplit,
        &truth,
        &[1],
        &space,
        SearchStrategy::Exhaustive,
        10_000,
    )
    .expect("search");
    assert!(outcome.exhaustive);
    let found = outcome.manipulation.expect("the uniform split is manipulable");
    assert!(found.deviated_utilities[1] > rat(1, 10));
    assert!(found.deviated_utilities[1] <= rat(1, 5), "gains are capped by the true desire");

    // A two-agent coalition games the serial lottery over quarter reports.
    let (quarters, _) = quartered_profiles();
    let honest = Mechanism::Csd.run(&quarters).expect("truthful lottery");
    assert_eq!(honest.true_utility(&quarters), vec![rat(5, 4), rat(5, 4)]);
    let ladder: Vec<Rat> = (0..=4).map(rat_int).collect();
    let grid = vec![rat(1, 4), rat(1, 2), rat(3, 4)];
    let space = MisreportSpace::new(grid, ladder).expect("coalition space");
    assert_eq!(space.size(), 624, "candidate reports per deviator");
    let outcome = find_manipulation(
        &Mechanism::Csd,
        &quarters,
        &[0, 1],
        &space,
        SearchStrategy::Exhaustive,
        400_000,
    )
    .expect("coalition search");
    assert!(outcome.exhaustive);
    let found = outcome.manipulation.expect("the lottery is jointly manipulable");
    assert!(found.deviated_utilities.iter().all(|u| *u >= rat(5, 4)));
    assert!(found.deviated_utilities.iter().any(|u| *u > rat(5, 4)));
}

/// Criterion 6: three overlapping agents make the serial lottery envious:
/// the probability table matches the hand computation and the envy checker
/// names the pair and the exact values.
#[test]
fn criterion_06_serial_lottery_envy_table() {
    let profile = overlapping_thirds_profile();
    let run = run_csd(&profile).expect("serial lottery");
    assert!(run.exact);
    assert_eq!(run.expected_utilities, vec![rat(1, 3), rat(1, 2), rat(1, 2)]);

    assert_eq!(run.partition.cuts(), &[rat(0, 1), rat(1, 3), rat(2, 3), rat(1, 1)]);
    let golden = [
        [rat(1, 2), rat(1, 2), rat(0, 1)],
        [rat(1, 6), rat(0, 1), rat(5, 6)],
        [rat(1, 3), rat(1, 2), rat(1, 6)],
    ];
    for (j, row) in golden.iter().enumerate() {
        for (i, expected) in row.iter().enumerate() {
            assert_eq!(run.assignment.fraction(j, i), expected, "cell {j} agent {i}");
        }
    }

    let ev = Evaluation::from_table(&profile, run.partition, run.assignment).expect("evaluation");
    let reports = checked(&ev, true);
    assert_eq!(verdict(&reports, Property::EnvyFree), Verdict::Fail);
    let report = reports.iter().find(|r| r.property == Property::EnvyFree).unwrap();
    let Some(Witness::EnvyPair { envious, envied, own_value, other_value, .. }) = &report.witness
    else {
        panic!("expected an envy pair");
    };
    assert_eq!((*envious, *envied), (0, 2));
    assert_eq!(own_value, &rat(1, 3));
    assert_eq!(other_value, &rat(5, 12));
    assert_eq!(verdict(&reports, Property::RobustProportional), Verdict::Pass);
}

/// Criterion 7: materializing a lottery by rotation is fair in expectation:
/// for random densities and shares, the sample mean of the rotated piece's
/// value stays within three standard errors of share times cell value.
#[test]
fn criterion_07_rotation_lemma_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for pair in 0..20u64 {
        let spec = GenSpec {
            n_agents: 1,
            max_blocks: 4,
            value_ladder: 4,
            piecewise_uniform: false,
            seed: 9_000 + pair,
        };
        let profile = generate(&spec).expect("generated density");
        let density = &profile.agent(0).density;
        let breaks: Vec<f64> = density.breakpoints().iter().map(rat_to_f64).collect();
        let levels: Vec<f64> = density.values().iter().map(rat_to_f64).collect();
        let segment = |lo: f64, hi: f64| -> f64 {
            let mut total = 0.0;
            for (k, level) in levels.iter().enumerate() {
                let overlap = (hi.min(breaks[k + 1]) - lo.max(breaks[k])).max(0.0);
                total += level * overlap;
            }
            total
        };
        let share: f64 = rng.gen_range(0.05..0.95);
        let target = share * rat_to_f64(&density.total_value());

        const DRAWS: usize = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..DRAWS {
            let u: f64 = rng.gen();
            let end = u + share;
            let value = if end <= 1.0 {
                segment(u, end)
            } else {
                segment(u, 1.0) + segment(0.0, end - 1.0)
            };
            sum += value;
            sum_sq += value * value;
        }
        let mean = sum / DRAWS as f64;
        let variance = (sum_sq / DRAWS as f64 - mean * mean).max(0.0);
        let std_err = (variance / DRAWS as f64).sqrt();
        assert!(
            (mean - target).abs() <= 3.0 * std_err + 1e-9,
            "pair {pair}: mean {mean} vs target {target} (3se {})",
            3.0 * std_err
        );
    }
}

/// Criterion 8: the implication lattice holds on every division any
/// mechanism produces: all five mechanisms on the demo, plus a random sweep,
/// with the efficiency oracle included.
#[test]
fn criterion_08_implication_lattice_clean() {
    let profile = demo_profile();
    let eating = run_ccea(&profile).expect("eating");
    let market = run_mea(&profile, SolveMode::Exact).expect("market");
    let single_pass = run_crsd(&profile, &[1, 0]).expect("single pass");
    let pass_allocation = Allocation::new(
        single_pass.pieces,
        Vec::new(),
        Coordinates::Original,
        &fairslice_core::model::unit_interval(),
    )
    .expect("pass allocation");
    let rotated = run_cmsd(&profile, 5).expect("rotated lottery");
    let uniform = uniform_split(&profile).expect("uniform split");
    for allocation in
        [&eating.allocation, &market.allocation, &pass_allocation, &rotated.allocation, &uniform]
    {
        let ev = Evaluation::from_allocation(&profile, allocation).expect("evaluation");
        checked(&ev, true);
    }
    let lottery = run_csd(&profile).expect("lottery");
    let ev = Evaluation::from_table(&profile, lottery.partition, lottery.assignment)
        .expect("lottery evaluation");
    checked(&ev, true);

    (0..50u64).into_par_iter().for_each(|k| {
        let seed = 3_000 + k;
        let spec = GenSpec {
            n_agents: 2 + (seed as usize % 2),
            max_blocks: 3,
            value_ladder: 3,
            piecewise_uniform: false,
            seed,
        };
        let profile = generate(&spec).expect("generated profile");
        let eating = run_ccea(&profile).expect("eating");
        let ev = Evaluation::from_allocation(&profile, &eating.allocation).expect("evaluation");
        checked(&ev, true);
        let lottery = run_csd(&profile).expect("lottery");
        let ev = Evaluation::from_table(&profile, lottery.partition, lottery.assignment)
            .expect("lottery evaluation");
        checked(&ev, true);
    });
}

/// Criterion 9: scale envelope. Twenty eaters over two hundred blocks finish
/// in five seconds; the full eight-agent lottery finishes in a minute.
#[test]
fn criterion_09_performance_envelope() {
    let spec = GenSpec {
        n_agents: 20,
        max_blocks: 10,
        value_ladder: 4,
        piecewise_uniform: false,
        seed: 4_242,
    };
    let profile = generate(&spec).expect("large profile");
    let started = Instant::now();
    let eating = run_ccea(&profile).expect("large eating run");
    let eating_time = started.elapsed();
    assert_eq!(eating.utilities.len(), 20);
    assert!(eating_time < Duration::from_secs(5), "eating took {eating_time:?}");

    let spec = GenSpec {
        n_agents: 8,
        max_blocks: 2,
        value_ladder: 3,
        piecewise_uniform: false,
        seed: 77,
    };
    let profile = generate(&spec).expect("eight-agent profile");
    let started = Instant::now();
    let lottery = run_csd(&profile).expect("eight-agent lottery");
    let lottery_time = started.elapsed();
    assert!(lottery.exact);
    assert_eq!(lottery.n_permutations, 40_320);
    assert!(lottery_time < Duration::from_secs(60), "lottery took {lottery_time:?}");
}

/// Profiles fed through mechanisms stay on the documented envelopes even
/// when the whole pipeline is driven by the instance generator.
#[test]
fn generated_profiles_round_trip_through_json() {
    for seed in 0..25u64 {
        let spec = GenSpec {
            n_agents: 2 + (seed as usize % 3),
            max_blocks: 5,
            value_ladder: 4,
            piecewise_uniform: seed % 2 == 0,
            seed,
        };
        let profile = generate(&spec).expect("generated profile");
        let text = fairslice_core::serialize_profile(&profile);
        let back: Profile = fairslice_core::parse_profile(&text).expect("parse back");
        assert_eq!(back, profile);
    }
}
