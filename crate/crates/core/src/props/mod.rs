//! Certifiers for the fairness and efficiency properties a division can
//! carry: envy-freeness and proportionality, their robust (ordinal) forms,
//! Pareto optimality, non-wastefulness, symmetry, and unanimity. Every fail
//! verdict carries a witness that replays the violation in exact arithmetic.

mod manipulate;

pub use manipulate::{
    find_manipulation, uniform_split, Manipulation, Mechanism, MechanismOutput, MisreportSpace,
    SearchOutcome, SearchStrategy,
};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::kernels::{find_improvement, Improvement};
use crate::model::{
    interior_disjoint, refine, total_len, Allocation, Coordinates, FractionalAssignment,
    Interval, Profile, RefinedPartition,
};
use crate::rational::{rat, rat_int, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    EnvyFree,
    Proportional,
    RobustEnvyFree,
    RobustProportional,
    ParetoOptimal,
    NonWasteful,
    Symmetry,
    Unanimity,
}

impl Property {
    pub fn all() -> [Property; 8] {
        [
            Property::EnvyFree,
            Property::Proportional,
            Property::RobustEnvyFree,
            Property::RobustProportional,
            Property::ParetoOptimal,
            Property::NonWasteful,
            Property::Symmetry,
            Property::Unanimity,
        ]
    }

    /// Short code used on the command line and in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Property::EnvyFree => "ef",
            Property::Proportional => "prop",
            Property::RobustEnvyFree => "r-ef",
            Property::RobustProportional => "r-prop",
            Property::ParetoOptimal => "po",
            Property::NonWasteful => "nw",
            Property::Symmetry => "sym",
            Property::Unanimity => "unan",
        }
    }

    pub fn parse(code: &str) -> Option<Property> {
        Property::all().into_iter().find(|p| p.code() == code)
    }
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// Exact evidence that a property fails; enough to replay the violating
/// inequality without rerunning the checker.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `envious` values `envied`'s share above the claim-scaled bound.
    EnvyPair {
        envious: usize,
        envied: usize,
        own_value: Rat,
        other_value: Rat,
        bound: Rat,
    },
    /// An agent's utility falls short of the claim share of the whole cake.
    Shortfall { agent: usize, utility: Rat, fair_share: Rat },
    /// A strictly decreasing reweighting of `agent`'s value classes under
    /// which the share comparison flips. `against` is the envied agent, or
    /// nothing for the proportional form. `weights` pairs each original
    /// class level with its witness weight, descending.
    RobustPrefix {
        agent: usize,
        against: Option<usize>,
        prefix: usize,
        weights: Vec<(Rat, Rat)>,
        own_weighted: Rat,
        bound_weighted: Rat,
    },
    /// A feasible reassignment with these utilities, dominating the current
    /// ones by `gains` (all nonnegative, at least one positive).
    Dominated {
        assignment: FractionalAssignment,
        utilities: Vec<Rat>,
        gains: Vec<Rat>,
    },
    /// Part of `cell` is desired by `desirer` yet held by `holder` (who does
    /// not desire it) or by nobody at all.
    WastedCell {
        cell: Interval,
        desirer: usize,
        holder: Option<usize>,
    },
    /// Two agents with identical claims and densities, different utilities.
    AsymmetricPair { a: usize, b: usize, utility_a: Rat, utility_b: Rat },
    /// The agent's utility misses the value of their favorite 1/n piece.
    FavoriteMissed { agent: usize, utility: Rat, favorite_value: Rat },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub detail: String,
}

impl PropertyReport {
    fn pass(property: Property, detail: impl Into<String>) -> Self {
        PropertyReport { property, verdict: Verdict::Pass, witness: None, detail: detail.into() }
    }

    fn fail(property: Property, witness: Witness, detail: impl Into<String>) -> Self {
        PropertyReport {
            property,
            verdict: Verdict::Fail,
            witness: Some(witness),
            detail: detail.into(),
        }
    }

    fn not_applicable(property: Property, detail: impl Into<String>) -> Self {
        PropertyReport {
            property,
            verdict: Verdict::NotApplicable,
            witness: None,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// A division in checkable form: the cake refined past every share boundary,
/// per-cell fractions for each agent, and the utilities they imply. Fractions
/// may be probabilities (a lottery's expectation) or concrete proportions; the
/// checkers read both the same way. `slack` loosens every comparison by that
/// amount, for divisions computed by approximate solvers; exact outputs are
/// checked with zero slack.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    pub profile: &'a Profile,
    pub part: RefinedPartition,
    pub shares: FractionalAssignment,
    pub utilities: Vec<Rat>,
    pub slack: Rat,
}

impl<'a> Evaluation<'a> {
    pub fn from_allocation(profile: &'a Profile, allocation: &Allocation) -> Result<Self> {
        if allocation.coordinates != Coordinates::Original {
            return Err(Error::InfeasibleInput(
                "allocation must use original cake coordinates".into(),
            ));
        }
        if allocation.n_agents() != profile.len() {
            return Err(Error::InfeasibleInput(format!(
                "allocation covers {} agents, profile has {}",
                allocation.n_agents(),
                profile.len()
            )));
        }
        let mut cuts: Vec<Rat> = Vec::new();
        for piece in allocation.pieces.iter().flatten().chain(&allocation.waste) {
            cuts.push(piece.lo.clone());
            cuts.push(piece.hi.clone());
        }
        let part = refine(profile, &cuts)?;
        let mut shares = FractionalAssignment::zero(part.n_cells(), profile.len());
        for j in 0..part.n_cells() {
            let cell = part.cell(j);
            let len = cell.len();
            for (i, pieces) in allocation.pieces.iter().enumerate() {
                let covered: Rat = pieces.iter().map(|p| cell.overlap_len(p)).sum();
                if !covered.is_zero() {
                    shares.set(j, i, covered / &len);
                }
            }
        }
        let utilities = shares.utilities(&part);
        Ok(Evaluation { profile, part, shares, utilities, slack: Rat::zero() })
    }

    pub fn from_table(
        profile: &'a Profile,
        part: RefinedPartition,
        shares: FractionalAssignment,
    ) -> Result<Self> {
        if part.n_agents() != profile.len() || shares.n_agents() != profile.len() {
            return Err(Error::InfeasibleInput("agent counts disagree".into()));
        }
        if shares.n_cells() != part.n_cells() {
            return Err(Error::InfeasibleInput("cell counts disagree".into()));
        }
        let utilities = shares.utilities(&part);
        Ok(Evaluation { profile, part, shares, utilities, slack: Rat::zero() })
    }

    /// Loosen every verdict by `slack`, for divisions that came out of an
    /// approximate solver rather than exact arithmetic.
    pub fn with_slack(mut self, slack: Rat) -> Self {
        self.slack = slack;
        self
    }

    fn name(&self, i: usize) -> &str {
        &self.profile.agent(i).name
    }

    fn claims(&self) -> Vec<Rat> {
        self.profile.claims()
    }

    /// True when every cell is handed out completely.
    pub fn fully_allocated(&self) -> bool {
        (0..self.part.n_cells()).all(|j| self.shares.column_sum(j) == rat_int(1))
    }

    pub fn check(&self, property: Property) -> Result<PropertyReport> {
        Ok(match property {
            Property::EnvyFree => check_envy_free(self),
            Property::Proportional => check_proportional(self),
            Property::RobustEnvyFree => check_robust_ef(self),
            Property::RobustProportional => check_robust_prop(self),
            Property::ParetoOptimal => check_pareto(self)?,
            Property::NonWasteful => check_non_wasteful(self),
            Property::Symmetry => check_symmetry(self),
            Property::Unanimity => check_unanimity(self),
        })
    }

    pub fn check_all(&self) -> Result<Vec<PropertyReport>> {
        Property::all().into_iter().map(|p| self.check(p)).collect()
    }
}

/// No agent may value a rival's share above his own, scaling the rival's
/// share by the claim ratio. The witness is the worst offending pair.
pub fn check_envy_free(ev: &Evaluation) -> PropertyReport {
    let n = ev.profile.len();
    let claims = ev.claims();
    let mut worst: Option<(Rat, usize, usize, Rat, Rat)> = None;
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let other = ev.shares.value_of_share(&ev.part, i, k);
            let bound = &claims[i] / &claims[k] * &other;
            let deficit = &bound - &ev.utilities[i];
            if deficit > ev.slack && worst.as_ref().map_or(true, |(d, ..)| deficit > *d) {
                worst = Some((deficit, i, k, other, bound));
            }
        }
    }
    match worst {
        None => PropertyReport::pass(
            Property::EnvyFree,
            "every share is worth at least each claim-scaled rival share",
        ),
        Some((_, i, k, other_value, bound)) => {
            let detail = format!(
                "{} values {}'s share at {} (bound {}) against their own {}",
                ev.name(i),
                ev.name(k),
                other_value,
                bound,
                ev.utilities[i]
            );
            PropertyReport::fail(
                Property::EnvyFree,
                Witness::EnvyPair {
                    envious: i,
                    envied: k,
                    own_value: ev.utilities[i].clone(),
                    other_value,
                    bound,
                },
                detail,
            )
        }
    }
}

/// Each agent's utility must reach their claim share of their whole-cake
/// value.
pub fn check_proportional(ev: &Evaluation) -> PropertyReport {
    let claims = ev.claims();
    let total_claim: Rat = claims.iter().cloned().sum();
    for i in 0..ev.profile.len() {
        let fair_share = &claims[i] / &total_claim * ev.part.agent_total(i);
        if &fair_share - &ev.utilities[i] > ev.slack {
            let detail = format!(
                "{} holds {} but a proportional share is {}",
                ev.name(i),
                ev.utilities[i],
                fair_share
            );
            return PropertyReport::fail(
                Property::Proportional,
                Witness::Shortfall { agent: i, utility: ev.utilities[i].clone(), fair_share },
                detail,
            );
        }
    }
    PropertyReport::pass(
        Property::Proportional,
        "every agent reaches their claim share of the whole cake",
    )
}

/// Lengths agent `k` holds inside each of agent `i`'s value classes, with the
/// classes in strictly descending level order.
struct ClassView {
    levels: Vec<Rat>,
    region_len: Vec<Rat>,
    held: Vec<Vec<Rat>>,
}

fn class_view(ev: &Evaluation, i: usize) -> ClassView {
    let mut levels: Vec<Rat> = (0..ev.part.n_cells())
        .map(|j| ev.part.value(j, i).clone())
        .filter(|v| !v.is_zero())
        .collect();
    levels.sort();
    levels.dedup();
    levels.reverse();
    let index = |v: &Rat| levels.iter().position(|l| l == v);
    let n = ev.profile.len();
    let mut region_len = vec![Rat::zero(); levels.len()];
    let mut held = vec![vec![Rat::zero(); levels.len()]; n];
    for j in 0..ev.part.n_cells() {
        let Some(t) = index(ev.part.value(j, i)) else { continue };
        let len = ev.part.cell_len(j);
        region_len[t] += &len;
        for (k, hk) in held.iter_mut().enumerate() {
            let p = ev.shares.fraction(j, k);
            if !p.is_zero() {
                hk[t] += p * &len;
            }
        }
    }
    ClassView { levels, region_len, held }
}

/// Strictly decreasing positive weights under which the prefix violation at
/// `prefix` becomes a weighted-value violation: Σ w·own < bound·Σ w·other.
/// Head classes get weight near 1, tail classes near 0; both sides are affine
/// in the step ε, so a small enough exact ε is solved for directly.
fn violating_weights(
    own: &[Rat],
    other: &[Rat],
    bound: &Rat,
    prefix: usize,
) -> (Vec<Rat>, Rat, Rat) {
    let k = own.len();
    let weights_at = |eps: &Rat| -> Vec<Rat> {
        (0..k)
            .map(|t| {
                if t <= prefix {
                    rat_int(1) + rat_int((prefix - t) as i64) * eps
                } else {
                    eps * rat(1, 2).pow((t - prefix) as i32)
                }
            })
            .collect()
    };
    let sides = |eps: &Rat| -> (Rat, Rat) {
        let w = weights_at(eps);
        let lhs: Rat = w.iter().zip(own).map(|(w, a)| w * a).sum();
        let rhs: Rat = w.iter().zip(other).map(|(w, b)| w * b).sum();
        (lhs, bound * rhs)
    };
    // lhs(ε) = A + Bε and rhs(ε) = C + Dε with A < C by the prefix violation.
    let (a, c) = sides(&Rat::zero());
    let (a1, c1) = sides(&rat_int(1));
    let b = a1 - &a;
    let d = c1 - &c;
    let eps = if b <= d {
        rat(1, 2)
    } else {
        let cap = (&c - &a) / (b - d);
        std::cmp::min(rat(1, 2), cap / rat_int(2))
    };
    let w = weights_at(&eps);
    let (lhs, rhs) = sides(&eps);
    debug_assert!(lhs < rhs);
    (w, lhs, rhs)
}

fn robust_prefix_failure(
    ev: &Evaluation,
    i: usize,
    against: Option<usize>,
    view: &ClassView,
    other: &[Rat],
    bound: &Rat,
) -> Option<PropertyReport> {
    let own = &view.held[i];
    let mut a = Rat::zero();
    let mut b = Rat::zero();
    for t in 0..view.levels.len() {
        a += &own[t];
        b += &other[t];
        if bound * &b - &a > ev.slack {
            let (weights, own_weighted, bound_weighted) =
                violating_weights(own, other, bound, t);
            let weights: Vec<(Rat, Rat)> =
                view.levels.iter().cloned().zip(weights).collect();
            let property = if against.is_some() {
                Property::RobustEnvyFree
            } else {
                Property::RobustProportional
            };
            let detail = match against {
                Some(k) => format!(
                    "reweighting {}'s top {} classes leaves their share at {} against {} for {}'s",
                    ev.name(i),
                    t + 1,
                    own_weighted,
                    bound_weighted,
                    ev.name(k)
                ),
                None => format!(
                    "reweighting {}'s top {} classes leaves their share at {} against a fair {}",
                    ev.name(i),
                    t + 1,
                    own_weighted,
                    bound_weighted
                ),
            };
            return Some(PropertyReport::fail(
                property,
                Witness::RobustPrefix {
                    agent: i,
                    against,
                    prefix: t,
                    weights,
                    own_weighted,
                    bound_weighted,
                },
                detail,
            ));
        }
    }
    None
}

/// Envy-freeness under every density ordinally equivalent to the reported
/// one: for each rival, the agent's cumulative length over their top t value
/// classes must claim-dominate the rival's, for every t.
pub fn check_robust_ef(ev: &Evaluation) -> PropertyReport {
    let n = ev.profile.len();
    let claims = ev.claims();
    for i in 0..n {
        let view = class_view(ev, i);
        for k in 0..n {
            if i == k {
                continue;
            }
            let bound = &claims[i] / &claims[k];
            let other = view.held[k].clone();
            if let Some(report) = robust_prefix_failure(ev, i, Some(k), &view, &other, &bound) {
                return report;
            }
        }
    }
    PropertyReport::pass(
        Property::RobustEnvyFree,
        "class prefixes claim-dominate every rival under any ordinal reweighting",
    )
}

/// Proportionality under every ordinally equivalent density: cumulative held
/// length over the top t classes must reach the claim share of the classes'
/// full length, for every t.
pub fn check_robust_prop(ev: &Evaluation) -> PropertyReport {
    let claims = ev.claims();
    let total_claim: Rat = claims.iter().cloned().sum();
    for i in 0..ev.profile.len() {
        let view = class_view(ev, i);
        let bound = &claims[i] / &total_claim;
        let other = view.region_len.clone();
        if let Some(report) = robust_prefix_failure(ev, i, None, &view, &other, &bound) {
            return report;
        }
    }
    PropertyReport::pass(
        Property::RobustProportional,
        "class prefixes reach the claim share under any ordinal reweighting",
    )
}

/// Asks the exact LP oracle for a feasible reassignment dominating the
/// current utilities; none means the division sits on the Pareto frontier.
pub fn check_pareto(ev: &Evaluation) -> Result<PropertyReport> {
    Ok(match find_improvement(&ev.part, &ev.utilities)? {
        None => PropertyReport::pass(Property::ParetoOptimal, "no feasible reassignment dominates"),
        Some(Improvement { assignment, gains }) => {
            let total: Rat = gains.iter().cloned().sum();
            if total <= ev.slack {
                return Ok(PropertyReport::pass(
                    Property::ParetoOptimal,
                    "no reassignment dominates beyond the solver slack",
                ));
            }
            let utilities = assignment.utilities(&ev.part);
            let detail = format!("a reassignment gains {total} in total utility");
            PropertyReport::fail(
                Property::ParetoOptimal,
                Witness::Dominated { assignment, utilities, gains },
                detail,
            )
        }
    })
}

/// Every desired scrap of cake must be held by someone who desires it.
pub fn check_non_wasteful(ev: &Evaluation) -> PropertyReport {
    for j in 0..ev.part.n_cells() {
        let Some(desirer) = ev.part.desirers(j).next() else { continue };
        let held: Rat = ev
            .part
            .desirers(j)
            .map(|i| ev.shares.fraction(j, i).clone())
            .sum();
        if rat_int(1) - &held > ev.slack {
            let holder = (0..ev.profile.len())
                .find(|&i| ev.part.value(j, i).is_zero() && !ev.shares.fraction(j, i).is_zero());
            let cell = ev.part.cell(j);
            let detail = match holder {
                Some(h) => format!(
                    "[{}, {}] is desired by {} but partly held by {}",
                    cell.lo,
                    cell.hi,
                    ev.name(desirer),
                    ev.name(h)
                ),
                None => format!(
                    "[{}, {}] is desired by {} but partly unallocated",
                    cell.lo,
                    cell.hi,
                    ev.name(desirer)
                ),
            };
            return PropertyReport::fail(
                Property::NonWasteful,
                Witness::WastedCell { cell, desirer, holder },
                detail,
            );
        }
    }
    PropertyReport::pass(Property::NonWasteful, "all desired cake is held by its desirers")
}

/// Agents with identical claims and densities must end up equally well off.
pub fn check_symmetry(ev: &Evaluation) -> PropertyReport {
    let n = ev.profile.len();
    let mut pairs = 0usize;
    for i in 0..n {
        for k in i + 1..n {
            let ai = ev.profile.agent(i);
            let ak = ev.profile.agent(k);
            if ai.claim != ak.claim || ai.density.canonical() != ak.density.canonical() {
                continue;
            }
            pairs += 1;
            let gap = (&ev.utilities[i] - &ev.utilities[k]).abs();
            if gap > ev.slack {
                let detail = format!(
                    "{} and {} report identical values yet hold {} and {}",
                    ev.name(i),
                    ev.name(k),
                    ev.utilities[i],
                    ev.utilities[k]
                );
                return PropertyReport::fail(
                    Property::Symmetry,
                    Witness::AsymmetricPair {
                        a: i,
                        b: k,
                        utility_a: ev.utilities[i].clone(),
                        utility_b: ev.utilities[k].clone(),
                    },
                    detail,
                );
            }
        }
    }
    if pairs == 0 {
        PropertyReport::pass(Property::Symmetry, "no two agents report identical values")
    } else {
        PropertyReport::pass(Property::Symmetry, "identical agents hold identical utilities")
    }
}

/// When every agent's favorite 1/n piece is unique (up to worthless filler)
/// and the favorites are pairwise disjoint, each agent must capture their
/// favorite's full value. Ties or overlaps make the property inapplicable.
pub fn check_unanimity(ev: &Evaluation) -> PropertyReport {
    let n = ev.profile.len();
    if !ev.profile.has_uniform_claims() {
        return PropertyReport::not_applicable(
            Property::Unanimity,
            "agents carry unequal claims",
        );
    }
    let target = Rat::new(1.into(), (n as i64).into());
    let mut cores: Vec<Vec<Interval>> = Vec::with_capacity(n);
    let mut favorite_values: Vec<Rat> = Vec::with_capacity(n);
    for i in 0..n {
        let mut need = target.clone();
        let mut core: Vec<Interval> = Vec::new();
        let mut value = Rat::zero();
        for (level, region) in ev.profile.agent(i).density.classes() {
            if need.is_zero() {
                break;
            }
            let len = total_len(&region);
            if len > need {
                return PropertyReport::not_applicable(
                    Property::Unanimity,
                    format!("{} has several equally good pieces", ev.name(i)),
                );
            }
            value += &level * &len;
            need -= len;
            core.extend(region);
        }
        cores.push(core);
        favorite_values.push(value);
    }
    for i in 0..n {
        for k in i + 1..n {
            if !interior_disjoint(&cores[i], &cores[k]) {
                return PropertyReport::not_applicable(
                    Property::Unanimity,
                    format!("favorite pieces of {} and {} overlap", ev.name(i), ev.name(k)),
                );
            }
        }
    }
    for i in 0..n {
        if &favorite_values[i] - &ev.utilities[i] > ev.slack {
            let detail = format!(
                "{} holds {} but their favorite piece is worth {}",
                ev.name(i),
                ev.utilities[i],
                favorite_values[i]
            );
            return PropertyReport::fail(
                Property::Unanimity,
                Witness::FavoriteMissed {
                    agent: i,
                    utility: ev.utilities[i].clone(),
                    favorite_value: favorite_values[i].clone(),
                },
                detail,
            );
        }
    }
    PropertyReport::pass(Property::Unanimity, "every agent captures their favorite piece")
}

/// Logical dependencies between the properties. Any verdict pattern breaking
/// one of these marks a checker bug, never a legitimate instance.
pub fn implication_violations(ev: &Evaluation, reports: &[PropertyReport]) -> Vec<String> {
    let verdict = |p: Property| reports.iter().find(|r| r.property == p).map(|r| r.verdict);
    let passes = |p: Property| verdict(p) == Some(Verdict::Pass);
    let fails = |p: Property| verdict(p) == Some(Verdict::Fail);
    let mut rules: Vec<(&str, Vec<Property>, Property)> = vec![
        ("r-ef implies ef", vec![Property::RobustEnvyFree], Property::EnvyFree),
        ("r-prop implies prop", vec![Property::RobustProportional], Property::Proportional),
        (
            "r-ef and nw imply r-prop",
            vec![Property::RobustEnvyFree, Property::NonWasteful],
            Property::RobustProportional,
        ),
        (
            "ef and nw imply prop",
            vec![Property::EnvyFree, Property::NonWasteful],
            Property::Proportional,
        ),
        ("po implies nw", vec![Property::ParetoOptimal], Property::NonWasteful),
    ];
    if ev.profile.len() == 2 && ev.fully_allocated() {
        rules.push((
            "two-agent full division: prop implies ef",
            vec![Property::Proportional],
            Property::EnvyFree,
        ));
        rules.push((
            "two-agent full division: r-prop implies r-ef",
            vec![Property::RobustProportional],
            Property::RobustEnvyFree,
        ));
    }
    rules
        .into_iter()
        .filter(|(_, ante, cons)| ante.iter().all(|&p| passes(p)) && fails(*cons))
        .map(|(name, ..)| name.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccea::run_ccea;
    use crate::csd::run_csd;
    use crate::fixtures::demo_profile;
    use crate::mea::{run_mea, SolveMode};
    use crate::model::{materialize, Agent, Layout, PiecewiseDensity};

    fn demo_ccea_eval(profile: &Profile) -> Evaluation<'_> {
        let run = run_ccea(profile).unwrap();
        Evaluation::from_allocation(profile, &run.allocation).unwrap()
    }

    #[test]
    fn eating_demo_is_robustly_envy_free_and_non_wasteful() {
        let profile = demo_profile();
        let ev = demo_ccea_eval(&profile);
        assert!(check_envy_free(&ev).passed());
        assert!(check_robust_ef(&ev).passed());
        assert!(check_proportional(&ev).passed());
        assert!(check_robust_prop(&ev).passed());
        assert!(check_non_wasteful(&ev).passed());
        assert!(check_pareto(&ev).unwrap().passed());
        assert_eq!(check_unanimity(&ev).verdict, Verdict::NotApplicable);
        assert!(implication_violations(&ev, &ev.check_all().unwrap()).is_empty());
    }

    #[test]
    fn market_demo_trades_robust_share_for_efficiency() {
        let profile = demo_profile();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        let ev = Evaluation::from_allocation(&profile, &run.allocation).unwrap();
        assert!(check_pareto(&ev).unwrap().passed());
        assert!(check_envy_free(&ev).passed());
        let report = check_robust_prop(&ev);
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::RobustPrefix { agent, prefix, weights, own_weighted, bound_weighted, .. }) =
            report.witness
        else {
            panic!("expected a prefix witness");
        };
        assert_eq!(agent, 0);
        assert_eq!(prefix, 1);
        // The weights replay the violation as an ordinally equivalent density.
        let mut last: Option<Rat> = None;
        for (_, w) in &weights {
            assert!(*w > Rat::zero());
            if let Some(prev) = last {
                assert!(*w < prev);
            }
            last = Some(w.clone());
        }
        assert!(own_weighted < bound_weighted);
        assert!(implication_violations(&ev, &ev.check_all().unwrap()).is_empty());
    }

    #[test]
    fn prefix_witness_replays_through_a_reweighted_density() {
        let profile = demo_profile();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        let ev = Evaluation::from_allocation(&profile, &run.allocation).unwrap();
        let report = check_robust_prop(&ev);
        let Some(Witness::RobustPrefix { agent, weights, own_weighted, bound_weighted, .. }) =
            report.witness
        else {
            panic!("expected a prefix witness");
        };
        // Rebuild the agent's density with witness weights as levels and
        // recompute both sides from scratch.
        let level_weight = |level: &Rat| -> Rat {
            weights
                .iter()
                .find(|(l, _)| l == level)
                .map(|(_, w)| w.clone())
                .unwrap_or_else(Rat::zero)
        };
        let mut own = Rat::zero();
        let mut fair = Rat::zero();
        for j in 0..ev.part.n_cells() {
            let level = ev.part.value(j, agent);
            if level.is_zero() {
                continue;
            }
            let w = level_weight(level);
            let len = ev.part.cell_len(j);
            own += ev.shares.fraction(j, agent) * &len * &w;
            fair += &len * &w;
        }
        let claims = ev.claims();
        let total: Rat = claims.iter().cloned().sum();
        assert_eq!(own, own_weighted);
        assert_eq!(&claims[agent] / total * fair, bound_weighted);
        assert!(own < bound_weighted);
    }

    #[test]
    fn lottery_table_shows_expected_envy() {
        // Three piecewise uniform agents; the serial lottery leaves the first
        // envying the third in expectation.
        let level = rat(3, 2);
        let density = |vals: Vec<Rat>| {
            PiecewiseDensity::new(
                vec![rat(0, 1), rat(1, 3), rat(2, 3), rat(1, 1)],
                vals,
            )
            .unwrap()
        };
        let profile = Profile::new(vec![
            Agent::with_unit_claim("a1", density(vec![level.clone(), level.clone(), rat(0, 1)])),
            Agent::with_unit_claim("a2", density(vec![level.clone(), rat(0, 1), level.clone()])),
            Agent::with_unit_claim("a3", density(vec![rat(0, 1), level.clone(), level.clone()])),
        ])
        .unwrap();
        let run = run_csd(&profile).unwrap();
        let ev = Evaluation::from_table(&profile, run.partition, run.assignment).unwrap();
        let report = check_envy_free(&ev);
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::EnvyPair { envious, envied, own_value, other_value, .. }) =
            report.witness
        else {
            panic!("expected an envy pair");
        };
        assert_eq!((envious, envied), (0, 2));
        assert_eq!(own_value, rat(1, 3));
        assert_eq!(other_value, rat(5, 12));
        // Robust proportionality still holds for the lottery.
        assert!(check_robust_prop(&ev).passed());
        assert!(check_symmetry(&ev).passed());
    }

    #[test]
    fn forced_even_split_is_dominated() {
        // Two agents on halves with strictly ranked values; splitting every
        // cell evenly is the only robustly proportional division, yet the
        // oracle finds a dominating trade worth 1/8.
        let profile = Profile::new(vec![
            Agent::with_unit_claim(
                "a1",
                PiecewiseDensity::new(
                    vec![rat(0, 1), rat(1, 2), rat(1, 1)],
                    vec![rat(2, 1), rat(1, 1)],
                )
                .unwrap(),
            ),
            Agent::with_unit_claim(
                "a2",
                PiecewiseDensity::new(
                    vec![rat(0, 1), rat(1, 2), rat(1, 1)],
                    vec![rat(3, 1), rat(2, 1)],
                )
                .unwrap(),
            ),
        ])
        .unwrap();
        let part = refine(&profile, &[]).unwrap();
        let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
        for j in 0..part.n_cells() {
            shares.set(j, 0, rat(1, 2));
            shares.set(j, 1, rat(1, 2));
        }
        let allocation = materialize(&part, &shares, Layout::Contiguous, Coordinates::Original);
        let ev = Evaluation::from_allocation(&profile, &allocation).unwrap();
        assert_eq!(ev.utilities, vec![rat(3, 4), rat(5, 4)]);
        assert!(check_robust_prop(&ev).passed());
        assert!(check_robust_ef(&ev).passed());
        let report = check_pareto(&ev).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::Dominated { gains, utilities, .. }) = report.witness else {
            panic!("expected a dominating reassignment");
        };
        let total: Rat = gains.iter().cloned().sum();
        assert_eq!(total, rat(1, 8));
        for i in 0..2 {
            assert!(gains[i] >= Rat::zero());
            assert_eq!(utilities[i], &ev.utilities[i] + &gains[i]);
        }
        assert!(implication_violations(&ev, &ev.check_all().unwrap()).is_empty());
    }

    #[test]
    fn waste_of_desired_cake_is_flagged() {
        let profile = demo_profile();
        let part = refine(&profile, &[]).unwrap();
        // Leave the second agent's exclusive cell unallocated.
        let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
        for j in 0..part.n_cells() {
            if part.value(j, 0) > &Rat::zero() {
                shares.set(j, 0, rat_int(1));
            }
        }
        let ev = Evaluation::from_table(&profile, part, shares).unwrap();
        let report = check_non_wasteful(&ev);
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::WastedCell { desirer, holder, .. }) = report.witness else {
            panic!("expected a wasted cell");
        };
        assert_eq!(desirer, 1);
        assert_eq!(holder, None);
    }

    #[test]
    fn holding_anothers_desired_cake_valuelessly_is_wasteful() {
        let profile = demo_profile();
        let part = refine(&profile, &[]).unwrap();
        let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
        // Agent 1 takes everything, including cells only agent 2 desires.
        for j in 0..part.n_cells() {
            shares.set(j, 0, rat_int(1));
        }
        let ev = Evaluation::from_table(&profile, part, shares).unwrap();
        let report = check_non_wasteful(&ev);
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::WastedCell { holder, .. }) = report.witness else {
            panic!("expected a wasted cell");
        };
        assert_eq!(holder, Some(0));
    }

    #[test]
    fn disjoint_favorites_make_unanimity_checkable() {
        let block = |lo: Rat, hi: Rat| {
            PiecewiseDensity::from_regions(&[(Interval::new(lo, hi).unwrap(), rat(2, 1))]).unwrap()
        };
        let profile = Profile::new(vec![
            Agent::with_unit_claim("l", block(rat(0, 1), rat(1, 2))),
            Agent::with_unit_claim("r", block(rat(1, 2), rat(1, 1))),
        ])
        .unwrap();
        let run = run_csd(&profile).unwrap();
        let ev = Evaluation::from_table(&profile, run.partition, run.assignment).unwrap();
        let report = check_unanimity(&ev);
        assert_eq!(report.verdict, Verdict::Pass);
        // A division swapping the halves fails it.
        let part = refine(&profile, &[]).unwrap();
        let mut swapped = FractionalAssignment::zero(part.n_cells(), 2);
        for j in 0..part.n_cells() {
            let own = part.value(j, 0) > &Rat::zero();
            swapped.set(j, if own { 1 } else { 0 }, rat_int(1));
        }
        let ev = Evaluation::from_table(&profile, part, swapped).unwrap();
        assert_eq!(check_unanimity(&ev).verdict, Verdict::Fail);
    }

    #[test]
    fn claim_weighted_envy_uses_the_ratio_bound() {
        // The heavier agent tolerates a rival share worth up to twice their
        // own; the lighter agent only half.
        let uniform = PiecewiseDensity::new(vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1)]).unwrap();
        let profile = Profile::new(vec![
            Agent::new("heavy", rat(2, 1), uniform.clone()).unwrap(),
            Agent::new("light", rat(1, 1), uniform).unwrap(),
        ])
        .unwrap();
        let part = refine(&profile, &[rat(2, 3)]).unwrap();
        let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
        for j in 0..part.n_cells() {
            let cell = part.cell(j);
            if cell.hi <= rat(2, 3) {
                shares.set(j, 0, rat_int(1));
            } else {
                shares.set(j, 1, rat_int(1));
            }
        }
        let ev = Evaluation::from_table(&profile, part, shares).unwrap();
        assert_eq!(ev.utilities, vec![rat(2, 3), rat(1, 3)]);
        assert!(check_envy_free(&ev).passed());
        assert!(check_proportional(&ev).passed());
        // Swapped, the heavy agent's bound is violated.
        let part = refine(&profile, &[rat(1, 3)]).unwrap();
        let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
        for j in 0..part.n_cells() {
            let cell = part.cell(j);
            if cell.hi <= rat(1, 3) {
                shares.set(j, 0, rat_int(1));
            } else {
                shares.set(j, 1, rat_int(1));
            }
        }
        let ev = Evaluation::from_table(&profile, part, shares).unwrap();
        let report = check_envy_free(&ev);
        assert_eq!(report.verdict, Verdict::Fail);
        let Some(Witness::EnvyPair { envious, bound, .. }) = report.witness else {
            panic!("expected an envy pair");
        };
        assert_eq!(envious, 0);
        assert_eq!(bound, rat(4, 3));
    }

    #[test]
    fn random_weight_oracle_agrees_with_prefix_dominance() {
        use rand::Rng;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        let profile = demo_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Random divisions of the demo cake, checked both ways.
        for _ in 0..40 {
            let part = refine(&profile, &[]).unwrap();
            let mut shares = FractionalAssignment::zero(part.n_cells(), 2);
            for j in 0..part.n_cells() {
                let cut = rat(rng.gen_range(0..=8), 8);
                shares.set(j, 0, cut.clone());
                shares.set(j, 1, rat_int(1) - cut);
            }
            let ev = Evaluation::from_table(&profile, part, shares).unwrap();
            let claims = ev.claims();
            let total: Rat = claims.iter().cloned().sum();
            for i in 0..2 {
                let view = class_view(&ev, i);
                let verdict = robust_prefix_failure(
                    &ev,
                    i,
                    None,
                    &view,
                    &view.region_len.clone(),
                    &(&claims[i] / &total),
                )
                .is_none();
                // Sampled strictly decreasing weights must agree.
                let mut sampled_ok = true;
                for _ in 0..200 {
                    let mut w = Rat::zero();
                    let mut weights = Vec::new();
                    for _ in 0..view.levels.len() {
                        w += rat(rng.gen_range(1..50), 1);
                        weights.push(w.clone());
                    }
                    weights.reverse();
                    let own: Rat = weights
                        .iter()
                        .zip(&view.held[i])
                        .map(|(w, a)| w * a)
                        .sum();
                    let fair: Rat = weights
                        .iter()
                        .zip(&view.region_len)
                        .map(|(w, l)| w * l)
                        .sum();
                    if own < &claims[i] / &total * fair {
                        sampled_ok = false;
                        break;
                    }
                }
                // The prefix characterization may fail where sampling finds
                // no witness, but sampling must never find one on a pass.
                if verdict {
                    assert!(sampled_ok);
                }
            }
        }
    }
}
