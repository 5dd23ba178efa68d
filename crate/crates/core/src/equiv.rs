//! Concrete equivalence checks on systems, quotient constructions, and the comparison of
//! each concrete characterisation with the presheaf-level bisimulation-map test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lts::{fair_lassos, is_simulation, lassos, FairLts, FairnessSpec, Label, Lasso, Lts, StateMap};
use crate::presheaf::{is_bisim_map_bounded, FinPresheaf, NatTrans, Point, SquareFamily};
use crate::product::{self, Query, Want};
use crate::semantics::{self, FairBounds};

/// Bounds for every truncated search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub depth: usize,
    pub stem: usize,
    pub cycle: usize,
    pub mono_stage: usize,
    pub mono_support: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { depth: 4, stem: 4, cycle: 4, mono_stage: 2, mono_support: 6 }
    }
}

impl Bounds {
    pub fn fair(&self) -> FairBounds {
        FairBounds { depth: self.depth, stem: self.stem, cycle: self.cycle }
    }
}

/// How fairness conditions over infinite runs are decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FairMode {
    /// Product graph search; falls back to `Bounded` for image fairness on the unfair side.
    Exact,
    /// Enumeration of lassos within the stem and cycle bounds.
    Bounded,
}

/// What a failed check points at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessDetail {
    /// A target state outside the image.
    Unreached(usize),
    /// A source transition whose image is not a transition.
    NotPreserved(usize, Label, usize),
    /// A target transition from `f(at)` that no step from `at` reflects.
    Unmatched { at: usize, from: usize, label: Label, to: usize },
    /// `x1 ⇒ x2 ⇒ x3` silently with `f(x1) = f(x3) != f(x2)`.
    Stutter(usize, usize, usize),
    /// A fair run whose image is unfair.
    UnfairImage(Lasso),
    /// An unfair run (a chain of executions without limit) whose image is fair.
    Chain { source: Lasso, image: Lasso },
    /// A fair target run from `f(at)` without fair lift from `at`.
    NoFairLift { at: usize, run: Lasso },
    /// Pointwise related runs, the first fair and the second not.
    LassoPair { fair: Lasso, unfair: Lasso },
    /// A pair that must be in the relation (for reflexivity, symmetry or transitivity) but is not.
    MissingPair(usize, usize),
    /// `x R y` and `x -a-> x'` without a matching move from `y`.
    Transfer { x: usize, label: Label, x2: usize, y: usize },
    /// A mono square without diagonal filler: its generating stage, and the point and
    /// target element where the filler search got stuck.
    Square { family: SquareFamily, stage: Option<String>, point: String, elem: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub detail: WitnessDetail,
    pub text: String,
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Result of a check. `certified_bounds` is set when a positive answer only covers the bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub certified_bounds: Option<Bounds>,
}

impl Verdict {
    fn ok(check: &str, bounds: Option<Bounds>) -> Verdict {
        Verdict { check: check.into(), holds: true, witness: None, certified_bounds: bounds }
    }

    fn fail(check: &str, detail: WitnessDetail, text: String) -> Verdict {
        Verdict { check: check.into(), holds: false, witness: Some(Witness { detail, text }), certified_bounds: None }
    }

    fn renamed(mut self, check: &str) -> Verdict {
        self.check = check.into();
        self
    }

    pub fn witness_text(&self) -> String {
        self.witness.as_ref().map(|w| w.text.clone()).unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdicts serialize")
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check, if self.holds { "holds" } else { "fails" })?;
        if let Some(w) = &self.witness {
            write!(f, " ({w})")?;
        }
        if let Some(b) = &self.certified_bounds {
            write!(f, " [bounded: depth {}, stem {}, cycle {}]", b.depth, b.stem, b.cycle)?;
        }
        Ok(())
    }
}

fn step(x: &Lts, s: usize, l: &Label, t: usize) -> String {
    format!("{} -{l}-> {}", x.name(s), x.name(t))
}

/// A binary relation on the states of one system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        Relation { n, pairs: pairs.into_iter().collect() }
    }

    pub fn identity(n: usize) -> Relation {
        Relation::new(n, (0..n).map(|i| (i, i)))
    }

    /// `f(a) = f(b)`.
    pub fn kernel(f: &StateMap) -> Relation {
        let n = f.len();
        Relation::new(n, (0..n).flat_map(|a| (0..n).filter(move |&b| f.apply(a) == f.apply(b)).map(move |b| (a, b))))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn union(&self, other: &Relation) -> Relation {
        Relation::new(self.n, self.pairs.union(&other.pairs).copied())
    }

    /// `{(a, c) | a other b, b self c}`: apply `other` first.
    pub fn compose(&self, other: &Relation) -> Relation {
        let mut out = BTreeSet::new();
        for &(a, b) in &other.pairs {
            for &(b2, c) in self.pairs.range((b, 0)..=(b, usize::MAX)) {
                debug_assert_eq!(b, b2);
                out.insert((a, c));
            }
        }
        Relation { n: self.n, pairs: out }
    }

    pub fn symmetric_closure(&self) -> Relation {
        Relation::new(self.n, self.pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]))
    }

    pub fn equivalence_closure(&self) -> Relation {
        let mut root: Vec<usize> = (0..self.n).collect();
        fn find(root: &mut [usize], mut i: usize) -> usize {
            while root[i] != i {
                root[i] = root[root[i]];
                i = root[i];
            }
            i
        }
        for &(a, b) in &self.pairs {
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            root[ra.max(rb)] = ra.min(rb);
        }
        let reps: Vec<usize> = (0..self.n).map(|i| find(&mut root, i)).collect();
        Relation::new(
            self.n,
            (0..self.n)
                .flat_map(|a| (0..self.n).filter(|&b| reps[a] == reps[b]).map(move |b| (a, b)).collect::<Vec<_>>()),
        )
    }

    pub fn missing_reflexive(&self) -> Option<(usize, usize)> {
        (0..self.n).find(|&i| !self.contains(i, i)).map(|i| (i, i))
    }

    pub fn missing_symmetric(&self) -> Option<(usize, usize)> {
        self.pairs.iter().find(|&&(a, b)| !self.contains(b, a)).map(|&(a, b)| (b, a))
    }

    pub fn missing_transitive(&self) -> Option<(usize, usize)> {
        for &(a, b) in &self.pairs {
            for &(_, c) in self.pairs.range((b, 0)..=(b, usize::MAX)) {
                if !self.contains(a, c) {
                    return Some((a, c));
                }
            }
        }
        None
    }

    pub fn is_equivalence(&self) -> bool {
        self.missing_reflexive().is_none() && self.missing_symmetric().is_none() && self.missing_transitive().is_none()
    }

    /// Blocks of an equivalence, each sorted, ordered by least member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for a in 0..self.n {
            if !seen[a] {
                let block: Vec<usize> = (0..self.n).filter(|&b| self.contains(a, b) || a == b).collect();
                for &b in &block {
                    seen[b] = true;
                }
                out.push(block);
            }
        }
        out
    }

    /// Sends every state to the index of its block.
    pub fn quotient_map(&self) -> StateMap {
        let mut f = vec![0; self.n];
        for (i, block) in self.blocks().iter().enumerate() {
            for &s in block {
                f[s] = i;
            }
        }
        StateMap(f)
    }

    pub fn display(&self, x: &Lts) -> String {
        let pairs: Vec<String> = self.pairs.iter().map(|&(a, b)| format!("{} ~ {}", x.name(a), x.name(b))).collect();
        pairs.join("\n")
    }
}

fn pre_simulation(f: &StateMap, x: &Lts, y: &Lts) -> Result<()> {
    if let Some((s, l, t)) = is_simulation(f, x, y)? {
        return Err(Error::pre(format!("map is not a simulation: {} has no image", step(x, s, &l, t))));
    }
    Ok(())
}

/// Every transition of `x` has an image in `y`.
pub fn check_simulation(f: &StateMap, x: &Lts, y: &Lts) -> Result<Verdict> {
    const C: &str = "simulation";
    Ok(match is_simulation(f, x, y)? {
        None => Verdict::ok(C, None),
        Some((s, l, t)) => {
            let text = format!("{} has no image", step(x, s, &l, t));
            Verdict::fail(C, WitnessDetail::NotPreserved(s, l, t), text)
        }
    })
}

fn surjectivity(check: &str, f: &StateMap, y: &Lts) -> Option<Verdict> {
    f.missed(y.num_states())
        .map(|s| Verdict::fail(check, WitnessDetail::Unreached(s), format!("{} is not in the image", y.name(s))))
}

/// Every step from `f(x)` is matched by a step from `x` with the same label into its preimage.
fn strong_reflection(check: &str, f: &StateMap, x: &Lts, y: &Lts) -> Option<Verdict> {
    for s in 0..x.num_states() {
        for (l, t) in y.successors(f.apply(s)) {
            if !x.successors_on(s, l).any(|u| f.apply(u) == *t) {
                return Some(Verdict::fail(
                    check,
                    WitnessDetail::Unmatched { at: s, from: f.apply(s), label: l.clone(), to: *t },
                    format!("{} is not reflected at {}", step(y, f.apply(s), l, *t), x.name(s)),
                ));
            }
        }
    }
    None
}

/// Surjectivity plus reflection of every target step. `f` must preserve transitions.
pub fn check_strong_bisim_fn(f: &StateMap, x: &Lts, y: &Lts) -> Result<Verdict> {
    const C: &str = "strong_bisim_fn";
    pre_simulation(f, x, y)?;
    Ok(surjectivity(C, f, y).or_else(|| strong_reflection(C, f, x, y)).unwrap_or_else(|| Verdict::ok(C, None)))
}

/// Transitions are preserved and every fair lasso within the bounds has a fair image.
pub fn check_fair_sim(f: &StateMap, x: &FairLts, y: &FairLts, b: &Bounds) -> Result<Verdict> {
    const C: &str = "fair_sim";
    if let Some((s, l, t)) = is_simulation(f, &x.lts, &y.lts)? {
        let text = format!("{} has no image", step(&x.lts, s, &l, t));
        return Ok(Verdict::fail(C, WitnessDetail::NotPreserved(s, l, t), text));
    }
    for (l, fair) in fair_lassos(x, b.stem, b.cycle)? {
        let image = l.map(f);
        if fair && !y.is_fair(&image) {
            let text = format!("fair run {} has unfair image {}", l.display(&x.lts), image.display(&y.lts));
            return Ok(Verdict::fail(C, WitnessDetail::UnfairImage(l), text));
        }
    }
    Ok(Verdict::ok(C, Some(*b)))
}

fn exact_or_bounded<T>(
    mode: FairMode,
    exact: impl FnOnce() -> Result<T>,
    bounded: impl FnOnce() -> Result<T>,
) -> Result<(T, bool)> {
    if mode == FairMode::Exact {
        match exact() {
            Ok(v) => return Ok((v, true)),
            Err(Error::Unsupported(why)) => log::info!("exact search unavailable ({why}); using bounded lassos"),
            Err(e) => return Err(e),
        }
    }
    Ok((bounded()?, false))
}

/// No infinite run of `x` is unfair while its image is fair: every chain of executions whose
/// image has a limit has a limit itself.
pub fn check_fair_reflection(f: &StateMap, x: &FairLts, y: &FairLts, mode: FairMode, b: &Bounds) -> Result<Verdict> {
    const C: &str = "fair_reflection";
    f.check_total(&x.lts, &y.lts)?;
    let exact = || {
        let q = Query {
            comps: vec![&x.lts, &y.lts],
            init: (0..x.lts.num_states()).map(|s| vec![s, f.apply(s)]).collect(),
            constraint: Box::new(|t: &[usize]| t[1] == f.apply(t[0])),
            conds: vec![(0, &x.fairness, Want::Unfair), (1, &y.fairness, Want::Fair)],
        };
        Ok(product::find_run(q)?.map(|mut r| r.swap_remove(0)))
    };
    let bounded = || {
        // Image fairness may need a search per run; many runs share an image.
        let mut seen = BTreeMap::new();
        Ok(lassos(&x.lts, b.stem, b.cycle)?
            .into_iter()
            .find(|l| !x.is_fair(l) && *seen.entry(l.map(f)).or_insert_with_key(|image: &Lasso| y.is_fair(image))))
    };
    let (found, exact) = exact_or_bounded(mode, exact, bounded)?;
    Ok(match found {
        Some(source) => {
            let image = source.map(f);
            let text = format!(
                "prefixes of {} have no limit but their images converge to the fair run {}",
                source.display(&x.lts),
                image.display(&y.lts)
            );
            Verdict::fail(C, WitnessDetail::Chain { source, image }, text)
        }
        None => Verdict::ok(C, if exact { None } else { Some(*b) }),
    })
}

/// Fair simulation, surjectivity, reflection of steps and reflection of limits.
pub fn check_fair_bisim_fn(f: &StateMap, x: &FairLts, y: &FairLts, mode: FairMode, b: &Bounds) -> Result<Verdict> {
    const C: &str = "fair_bisim_fn";
    let sim = check_fair_sim(f, x, y, b)?;
    if !sim.holds {
        return Ok(sim.renamed(C));
    }
    if let Some(v) = surjectivity(C, f, &y.lts).or_else(|| strong_reflection(C, f, &x.lts, &y.lts)) {
        return Ok(v);
    }
    let refl = check_fair_reflection(f, x, y, mode, b)?;
    if !refl.holds {
        return Ok(refl.renamed(C));
    }
    Ok(Verdict::ok(C, Some(*b)))
}

/// A fair run of `source` starting in `start` (any start when `None`) whose image under `map`
/// is `run`.
fn fair_lift(source: &FairLts, map: &StateMap, start: Option<usize>, run: &Lasso) -> Result<Option<Lasso>> {
    let (pos, under) = run.positions();
    let init = (0..source.lts.num_states())
        .filter(|&s| start.is_none_or(|x| x == s) && map.apply(s) == under[0])
        .map(|s| vec![s, 0])
        .collect();
    let q = Query {
        comps: vec![&source.lts, &pos],
        init,
        constraint: Box::new(|t: &[usize]| map.apply(t[0]) == under[t[1]]),
        conds: vec![(0, &source.fairness, Want::Fair)],
    };
    Ok(product::find_run(q)?.map(|mut r| r.swap_remove(0)))
}

/// Reflection of steps plus lifting of every fair target run (within the bounds) from every
/// preimage of its start.
pub fn check_inf_open(f: &StateMap, x: &FairLts, y: &FairLts, b: &Bounds) -> Result<Verdict> {
    const C: &str = "inf_open";
    pre_simulation(f, &x.lts, &y.lts)?;
    if let Some(v) = strong_reflection(C, f, &x.lts, &y.lts) {
        return Ok(v);
    }
    let fair_runs: Vec<Lasso> =
        fair_lassos(y, b.stem, b.cycle)?.into_iter().filter(|(_, fair)| *fair).map(|(l, _)| l).collect();
    for s in 0..x.lts.num_states() {
        for run in fair_runs.iter().filter(|r| r.start() == f.apply(s)) {
            if fair_lift(x, f, Some(s), run)?.is_none() {
                let text = format!("fair run {} has no fair lift from {}", run.display(&y.lts), x.lts.name(s));
                return Ok(Verdict::fail(C, WitnessDetail::NoFairLift { at: s, run: run.clone() }, text));
            }
        }
    }
    Ok(Verdict::ok(C, Some(*b)))
}

fn missing_pair(check: &str, x: &Lts, (a, b): (usize, usize), why: &str) -> Verdict {
    Verdict::fail(
        check,
        WitnessDetail::MissingPair(a, b),
        format!("not {why}: {} ~ {} is missing", x.name(a), x.name(b)),
    )
}

/// Step transfer: `x R y` and `x -a-> x'` give `y -a-> y'` with `x' R y'`.
fn strong_transfer(check: &str, r: &Relation, x: &Lts) -> Option<Verdict> {
    for &(s, t) in r.pairs() {
        for (l, s2) in x.successors(s) {
            if !x.successors_on(t, l).any(|t2| r.contains(*s2, t2)) {
                let text = format!("{} ~ {} but {} is not matched", x.name(s), x.name(t), step(x, s, l, *s2));
                return Some(Verdict::fail(
                    check,
                    WitnessDetail::Transfer { x: s, label: l.clone(), x2: *s2, y: t },
                    text,
                ));
            }
        }
    }
    None
}

/// An equivalence (or, with `strict = false`, a symmetric relation) with step transfer such
/// that no run related pointwise to a fair run is unfair.
pub fn check_forall_fair_bisim(r: &Relation, x: &FairLts, mode: FairMode, strict: bool, b: &Bounds) -> Result<Verdict> {
    const C: &str = "forall_fair_bisim";
    if r.size() != x.lts.num_states() {
        return Err(Error::pre("relation and system sizes differ"));
    }
    if strict {
        if let Some(p) = r.missing_reflexive() {
            return Ok(missing_pair(C, &x.lts, p, "reflexive"));
        }
        if let Some(p) = r.missing_transitive() {
            return Ok(missing_pair(C, &x.lts, p, "transitive"));
        }
    }
    if let Some(p) = r.missing_symmetric() {
        return Ok(missing_pair(C, &x.lts, p, "symmetric"));
    }
    if let Some(v) = strong_transfer(C, r, &x.lts) {
        return Ok(v);
    }
    let init: Vec<Vec<usize>> = r.pairs().iter().map(|&(a, b)| vec![a, b]).collect();
    let related = |t: &[usize]| r.contains(t[0], t[1]);
    let exact = || {
        let q = Query {
            comps: vec![&x.lts, &x.lts],
            init: init.clone(),
            constraint: Box::new(related),
            conds: vec![(0, &x.fairness, Want::Fair), (1, &x.fairness, Want::Unfair)],
        };
        Ok(product::find_run(q)?.map(|r| (r[0].clone(), r[1].clone())))
    };
    let bounded = || {
        let mut bad = |r: &[Lasso]| x.is_fair(&r[0]) && !x.is_fair(&r[1]);
        Ok(product::bounded_runs(&[&x.lts, &x.lts], &init, &related, b.stem, b.cycle, &mut bad)
            .map(|r| (r[0].clone(), r[1].clone())))
    };
    let (found, exact) = exact_or_bounded(mode, exact, bounded)?;
    Ok(match found {
        Some((fair, unfair)) => {
            let text = format!("fair run {} is related to unfair run {}", fair.display(&x.lts), unfair.display(&x.lts));
            Verdict::fail(C, WitnessDetail::LassoPair { fair, unfair }, text)
        }
        None => Verdict::ok(C, if exact { None } else { Some(*b) }),
    })
}

fn block_names(x: &Lts, blocks: &[Vec<usize>]) -> Vec<String> {
    blocks.iter().map(|bl| bl.iter().map(|&s| x.name(s)).collect::<Vec<_>>().join("|")).collect()
}

fn quotient_lts(x: &Lts, r: &Relation, drop_inert_tau: bool) -> (Lts, StateMap) {
    let blocks = r.blocks();
    let f = r.quotient_map();
    let ts: BTreeSet<(usize, Label, usize)> = x
        .transitions()
        .iter()
        .filter(|(s, l, t)| !(drop_inert_tau && l.is_tau() && f.apply(*s) == f.apply(*t)))
        .map(|(s, l, t)| (f.apply(*s), l.clone(), f.apply(*t)))
        .collect();
    (Lts::new(block_names(x, &blocks), ts).expect("quotient is well formed"), f)
}

/// The quotient of `x` by a ∀-fair bisimulation; its runs are fair iff they lift to a fair run.
pub fn forall_fair_quotient(r: &Relation, x: &FairLts) -> Result<(FairLts, StateMap)> {
    let v = check_forall_fair_bisim(r, x, FairMode::Exact, true, &Bounds::default())?;
    if !v.holds {
        return Err(Error::pre(format!("not a forall-fair bisimulation: {}", v.witness_text())));
    }
    let (lts, f) = quotient_lts(&x.lts, r, false);
    let fairness = FairnessSpec::Image { source: Box::new(x.clone()), map: f.clone() };
    Ok((FairLts::new(lts, fairness)?, f))
}

/// Visible steps preserved, silent steps preserved or collapsed, and silent paths never leave
/// and re-enter a block of `f`.
pub fn check_branching_sim(f: &StateMap, x: &Lts, y: &Lts) -> Result<Verdict> {
    const C: &str = "branching_sim";
    f.check_total(x, y)?;
    for (s, l, t) in x.transitions() {
        let ok = y.has_transition(f.apply(*s), l, f.apply(*t)) || (l.is_tau() && f.apply(*s) == f.apply(*t));
        if !ok {
            let text = format!("{} has no image", step(x, *s, l, *t));
            return Ok(Verdict::fail(C, WitnessDetail::NotPreserved(*s, l.clone(), *t), text));
        }
    }
    let closure = x.tau_closure();
    for x1 in 0..x.num_states() {
        for &x2 in &closure[x1] {
            if f.apply(x2) == f.apply(x1) {
                continue;
            }
            if let Some(&x3) = closure[x2].iter().find(|&&x3| f.apply(x3) == f.apply(x1)) {
                let text = format!(
                    "silent path {} => {} => {} leaves and re-enters the image of {}",
                    x.name(x1),
                    x.name(x2),
                    x.name(x3),
                    x.name(x1)
                );
                return Ok(Verdict::fail(C, WitnessDetail::Stutter(x1, x2, x3), text));
            }
        }
    }
    Ok(Verdict::ok(C, None))
}

/// Branching simulation, surjectivity, and weak reflection: a step `f(x) -a-> y` is matched
/// by `x => x' -a-> x''` with `f(x') = f(x)` and `f(x'') = y`.
pub fn check_branching_bisim_fn(f: &StateMap, x: &Lts, y: &Lts) -> Result<Verdict> {
    const C: &str = "branching_bisim_fn";
    let sim = check_branching_sim(f, x, y)?;
    if !sim.holds {
        return Ok(sim.renamed(C));
    }
    if let Some(v) = surjectivity(C, f, y) {
        return Ok(v);
    }
    let closure = x.tau_closure();
    for (s, reach) in closure.iter().enumerate() {
        let fs = f.apply(s);
        for (l, t) in y.successors(fs) {
            let matched = reach
                .iter()
                .filter(|&&s1| f.apply(s1) == fs)
                .any(|&s1| x.successors_on(s1, l).any(|s2| f.apply(s2) == *t));
            if !matched {
                let text = format!("{} is not reflected at {}", step(y, fs, l, *t), x.name(s));
                return Ok(Verdict::fail(
                    C,
                    WitnessDetail::Unmatched { at: s, from: fs, label: l.clone(), to: *t },
                    text,
                ));
            }
        }
    }
    Ok(Verdict::ok(C, None))
}

/// The transfer property of a branching bisimulation for one ordered pair.
fn branching_transfer_ok(
    x: &Lts,
    closure: &[BTreeSet<usize>],
    related: &dyn Fn(usize, usize) -> bool,
    s: usize,
    t: usize,
) -> bool {
    x.successors(s).iter().all(|(l, s2)| {
        (l.is_tau() && related(*s2, t))
            || closure[t].iter().any(|&t1| related(s, t1) && x.successors_on(t1, l).any(|t2| related(*s2, t2)))
    })
}

/// The largest branching bisimulation, by removing violating pairs from the full relation.
pub fn branching_bisimilarity(x: &Lts) -> Relation {
    let n = x.num_states();
    let closure = x.tau_closure();
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for s in 0..n {
            for t in 0..n {
                if rel[s][t] {
                    let snapshot = |a: usize, b: usize| rel[a][b];
                    if !branching_transfer_ok(x, &closure, &snapshot, s, t) {
                        rel[s][t] = false;
                        rel[t][s] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Relation::new(n, (0..n).flat_map(|s| (0..n).map(move |t| (s, t))).filter(|&(s, t)| rel[s][t]))
}

/// Every pair of `r` is branching bisimilar.
pub fn check_branching_bisimilar(r: &Relation, x: &Lts) -> Result<Verdict> {
    const C: &str = "branching_bisimilar";
    if r.size() != x.num_states() {
        return Err(Error::pre("relation and system sizes differ"));
    }
    let largest = branching_bisimilarity(x);
    Ok(match r.pairs().iter().find(|&&(a, b)| !largest.contains(a, b)) {
        None => Verdict::ok(C, None),
        Some(&(a, b)) => {
            let text = format!("{} and {} are not branching bisimilar", x.name(a), x.name(b));
            Verdict::fail(C, WitnessDetail::MissingPair(a, b), text)
        }
    })
}

/// The quotient by branching bisimilarity, with silent steps inside a block dropped.
pub fn branching_quotient(x: &Lts) -> (Lts, StateMap) {
    quotient_lts(x, &branching_bisimilarity(x), true)
}

/// Composes a reduction `g: x -> y` with the quotient map of `y`.
pub fn extend_reduction(g: &StateMap, y: &Lts) -> (Lts, StateMap) {
    let (q, f) = branching_quotient(y);
    (q, g.then(&f))
}

/// Which equivalence the brute-force oracle computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Strong,
    Branching,
}

/// The largest bisimulation of the given kind, as the union of all equivalences (set
/// partitions) with the transfer property. Test oracle for at most 10 states.
pub fn brute_force_largest(x: &Lts, kind: Kind) -> Result<Relation> {
    let n = x.num_states();
    if n > 10 {
        return Err(Error::pre("brute force is limited to 10 states"));
    }
    let closure = x.tau_closure();
    let mut best = BTreeSet::new();
    // Restricted growth strings enumerate set partitions.
    let mut block = vec![0usize; n];
    loop {
        let related = |a: usize, b: usize| block[a] == block[b];
        let ok = (0..n).all(|s| {
            (0..n).filter(|&t| related(s, t)).all(|t| match kind {
                Kind::Branching => branching_transfer_ok(x, &closure, &related, s, t),
                Kind::Strong => x.successors(s).iter().all(|(l, s2)| x.successors_on(t, l).any(|t2| related(*s2, t2))),
            })
        });
        if ok {
            for s in 0..n {
                for t in 0..n {
                    if related(s, t) {
                        best.insert((s, t));
                    }
                }
            }
        }
        // Next restricted growth string.
        let mut i = n;
        loop {
            if i <= 1 {
                return Ok(Relation::new(n, best));
            }
            i -= 1;
            let max_before = block[..i].iter().copied().max().unwrap_or(0);
            if block[i] <= max_before {
                block[i] += 1;
                for b in &mut block[i + 1..] {
                    *b = 0;
                }
                break;
            }
        }
    }
}

/// Presheaf model used by [`check_bisim_map`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    Strong,
    Fair,
    /// Minimal executions over visible words only.
    BranchingFailed,
    /// Minimal executions with the extra `τ̄` observation.
    Branching,
}

/// The presheaf verdict next to the concrete characterisation.
#[derive(Clone, Debug, Serialize)]
pub struct MapReport {
    pub mode: MapMode,
    pub presheaf: Verdict,
    pub concrete: Verdict,
    pub agree: bool,
    pub squares: usize,
}

fn presheaf_verdict<T>(
    fx: &FinPresheaf<Point, T>,
    gy: &FinPresheaf<Point, T>,
    m: &NatTrans,
    b: &Bounds,
    show: impl Fn(&T) -> String,
) -> Result<(Verdict, usize)> {
    const C: &str = "bisim_map";
    let r = is_bisim_map_bounded(fx, gy, m, b.mono_stage, b.mono_support)?;
    let v = match r.witness {
        None => Verdict::ok(C, Some(*b)),
        Some(w) => {
            let point = gy.base().elem(w.point).to_string();
            let elem = show(&gy.stage(w.point)[w.elem]);
            let text = match w.top {
                Some((e, j)) => format!(
                    "{} square generated by {} at {} has no filler: stuck at {elem} over {point}",
                    w.family,
                    show(&gy.stage(e)[j]),
                    gy.base().elem(e)
                ),
                None => format!("{} square has no filler: stuck at {elem} over {point}", w.family),
            };
            let stage = w.top.map(|(e, _)| gy.base().elem(e).to_string());
            Verdict::fail(C, WitnessDetail::Square { family: w.family, stage, point, elem }, text)
        }
    };
    Ok((v, r.squares))
}

fn report(mode: MapMode, (presheaf, squares): (Verdict, usize), concrete: Verdict) -> MapReport {
    let agree = presheaf.holds == concrete.holds;
    MapReport { mode, presheaf, concrete, agree, squares }
}

/// Builds the semantics of `x` and `y` for a strong or branching mode, lifts `f`, runs the
/// bounded bisimulation-map test, and compares it with the concrete check.
pub fn check_bisim_map(f: &StateMap, x: &Lts, y: &Lts, mode: MapMode, b: &Bounds) -> Result<MapReport> {
    let letters = semantics::common_letters(x, y);
    match mode {
        MapMode::Strong => {
            let fx = semantics::strong_sem(x, &letters, b.depth)?;
            let gy = semantics::strong_sem(y, &letters, b.depth)?;
            let m = semantics::strong_sem_map(f, x, y, &fx, &gy)?;
            let p = presheaf_verdict(&fx, &gy, &m, b, |e| e.display(y).to_string())?;
            Ok(report(mode, p, check_strong_bisim_fn(f, x, y)?))
        }
        MapMode::Branching | MapMode::BranchingFailed => {
            let with_taubar = mode == MapMode::Branching;
            let fx = semantics::branching_sem(x, &letters, b.depth, with_taubar)?;
            let gy = semantics::branching_sem(y, &letters, b.depth, with_taubar)?;
            let m = semantics::branching_sem_map(f, x, y, &fx, &gy)?;
            let p = presheaf_verdict(&fx, &gy, &m, b, |e| e.display(y).to_string())?;
            Ok(report(mode, p, check_branching_bisim_fn(f, x, y)?))
        }
        MapMode::Fair => Err(Error::pre("fair mode needs fair systems")),
    }
}

/// The fair-mode counterpart of [`check_bisim_map`].
pub fn check_fair_bisim_map(f: &StateMap, x: &FairLts, y: &FairLts, mode: FairMode, b: &Bounds) -> Result<MapReport> {
    let sim = check_fair_sim(f, x, y, b)?;
    if !sim.holds {
        return Err(Error::pre(format!("not a fair simulation: {}", sim.witness_text())));
    }
    let letters = semantics::common_letters(&x.lts, &y.lts);
    let base = semantics::fair_base(&[x, y], &letters, b.fair())?;
    let fx = semantics::fair_sem(x, &base, b.fair())?;
    let gy = semantics::fair_sem(y, &base, b.fair())?;
    let m = semantics::fair_sem_map(f, x, y, &fx, &gy)?;
    let p = presheaf_verdict(&fx, &gy, &m, b, |e| e.display(&y.lts))?;
    Ok(report(MapMode::Fair, p, check_fair_bisim_fn(f, x, y, mode, b)?))
}

/// Block structure of a relation keyed by state names, for display.
pub fn named_blocks(r: &Relation, x: &Lts) -> BTreeMap<usize, Vec<String>> {
    r.blocks()
        .into_iter()
        .enumerate()
        .map(|(i, bl)| (i, bl.into_iter().map(|s| x.name(s).to_string()).collect()))
        .collect()
}
