//! Presheaf semantics of systems: executions indexed by words, fair runs indexed by finite
//! and infinite words, and minimal executions indexed by visible words and `τ̄`.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lts::{fair_lassos, is_simulation, lassos, Execution, FairLts, InfWord, Label, Lasso, Lts, StateMap, Word};
use crate::presheaf::{
    barred_poset, branching_poset, fair_poset, word_poset, FinPoset, FinPresheaf, MonotoneMap, NatTrans, Point,
};

/// Letters of both systems, `tau` first.
pub fn common_letters(x: &Lts, y: &Lts) -> Vec<Label> {
    let set: BTreeSet<Label> = x.letters().into_iter().chain(y.letters()).collect();
    let mut v: Vec<Label> = set.iter().filter(|l| l.is_tau()).cloned().collect();
    v.extend(set.into_iter().filter(|l| !l.is_tau()));
    v
}

fn word_of(p: &Point) -> &Word {
    p.as_word().expect("a word point")
}

/// Executions of `x` over every word of length at most `depth`.
pub fn strong_sem(x: &Lts, letters: &[Label], depth: usize) -> Result<FinPresheaf<Point, Execution>> {
    if x.has_tau() || letters.iter().any(Label::is_tau) {
        return Err(Error::pre("strong semantics needs a system without tau"));
    }
    let base = word_poset(letters, depth);
    let stages = base.elems().iter().map(|p| x.executions_on(word_of(p))).collect();
    FinPresheaf::build(base.clone(), stages, |e, _, to| e.restrict(word_of(base.elem(to))).expect("prefix"))
}

/// `p ↦ f∘p`; `f` must preserve transitions.
pub fn strong_sem_map<P>(
    f: &StateMap,
    x: &Lts,
    y: &Lts,
    fx: &FinPresheaf<P, Execution>,
    gy: &FinPresheaf<P, Execution>,
) -> Result<NatTrans>
where
    P: Clone + Eq + std::hash::Hash + std::fmt::Debug,
{
    if let Some((s, l, t)) = is_simulation(f, x, y)? {
        return Err(Error::pre(format!("map does not preserve {} -{l}-> {}", x.name(s), x.name(t))));
    }
    NatTrans::try_build(fx, gy, |_, e| e.map(f))
        .map_err(|(e, i)| Error::Internal(format!("image of element {i} at point {e} is missing")))
}

/// An element of the fair semantics: a finite execution or a fair infinite run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FairElem {
    Fin(Execution),
    Inf(Lasso),
}

impl FairElem {
    pub fn display<'a>(&'a self, lts: &'a Lts) -> String {
        match self {
            FairElem::Fin(e) => e.display(lts).to_string(),
            FairElem::Inf(l) => l.display(lts).to_string(),
        }
    }
}

/// Truncation of the fair semantics: finite words up to `depth`, lassos within the stem and
/// cycle bounds, and prefix chains of length `stem + 2 * cycle` below every infinite word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FairBounds {
    pub depth: usize,
    pub stem: usize,
    pub cycle: usize,
}

impl FairBounds {
    pub fn chain(&self) -> usize {
        self.stem + 2 * self.cycle
    }
}

/// A base shared by several fair systems: one infinite point per trace of a fair lasso of any
/// of them.
pub fn fair_base(systems: &[&FairLts], letters: &[Label], b: FairBounds) -> Result<Arc<FinPoset<Point>>> {
    let mut omegas = BTreeSet::new();
    for x in systems {
        for (l, fair) in fair_lassos(x, b.stem, b.cycle)? {
            if fair {
                omegas.insert(l.trace());
            }
        }
    }
    let omegas: Vec<InfWord> = omegas.into_iter().collect();
    Ok(fair_poset(letters, b.depth, &omegas, b.chain()))
}

/// Finite stages up to the depth hold every execution; longer prefix stages hold prefixes of
/// bounded lassos; each infinite stage holds the fair bounded lassos with that trace.
pub fn fair_sem(x: &FairLts, base: &Arc<FinPoset<Point>>, b: FairBounds) -> Result<FinPresheaf<Point, FairElem>> {
    let all = lassos(&x.lts, b.stem, b.cycle)?;
    let fair: Vec<&Lasso> = all.iter().filter(|l| x.is_fair(l)).collect();
    let stages = base
        .elems()
        .iter()
        .map(|p| match p {
            Point::Word(w) if w.len() <= b.depth => x.lts.executions_on(w).into_iter().map(FairElem::Fin).collect(),
            Point::Word(w) => {
                all.iter().filter(|l| l.trace().has_prefix(w)).map(|l| FairElem::Fin(l.prefix(w.len()))).collect()
            }
            Point::Omega(w) => fair.iter().filter(|l| &l.trace() == w).map(|l| FairElem::Inf((*l).clone())).collect(),
            _ => Vec::new(),
        })
        .collect();
    FinPresheaf::build(base.clone(), stages, |e, _, to| match (e, base.elem(to)) {
        (FairElem::Fin(e), Point::Word(w)) => FairElem::Fin(e.restrict(w).expect("prefix")),
        (FairElem::Inf(l), Point::Word(w)) => FairElem::Fin(l.prefix(w.len())),
        (e, _) => e.clone(),
    })
}

/// `p ↦ f∘p` on finite and infinite runs; fails when a fair run has an unfair image.
pub fn fair_sem_map(
    f: &StateMap,
    x: &FairLts,
    y: &FairLts,
    fx: &FinPresheaf<Point, FairElem>,
    gy: &FinPresheaf<Point, FairElem>,
) -> Result<NatTrans> {
    if let Some((s, l, t)) = is_simulation(f, &x.lts, &y.lts)? {
        return Err(Error::pre(format!("map does not preserve {} -{l}-> {}", x.lts.name(s), x.lts.name(t))));
    }
    NatTrans::try_build(fx, gy, |_, e| match e {
        FairElem::Fin(e) => FairElem::Fin(e.map(f)),
        FairElem::Inf(l) => FairElem::Inf(l.map(f)),
    })
    .map_err(|(e, i)| match &fx.stage(e)[i] {
        FairElem::Inf(l) => {
            Error::pre(format!("fair run {} has unfair image {}", l.display(&x.lts), l.map(f).display(&y.lts)))
        }
        FairElem::Fin(p) => Error::Internal(format!("image of {} is missing", p.display(&x.lts))),
    })
}

/// Deletes `tau`; stretches become `τ̄`.
pub fn hide(p: &Point) -> Point {
    match p {
        Point::Word(w) => Point::Word(w.hide()),
        Point::Stretch(_) => Point::TauBar,
        other => other.clone(),
    }
}

/// Executions over words with `tau` up to `depth`. With `barred`, every stretch `(n, τ̄)`
/// holds all silent executions of length at most `depth`; stretches restrict to each other
/// by the identity and to `ε` by the start state.
pub fn base_presheaf(x: &Lts, letters: &[Label], depth: usize, barred: bool) -> Result<FinPresheaf<Point, Execution>> {
    let base = if barred { barred_poset(letters, depth) } else { word_poset(letters, depth) };
    let silent: Vec<Execution> = (0..=depth).flat_map(|n| x.executions_on(&Word(vec![Label::Tau; n]))).collect();
    let stages = base
        .elems()
        .iter()
        .map(|p| match p {
            Point::Word(w) => x.executions_on(w),
            _ => silent.clone(),
        })
        .collect();
    FinPresheaf::build(base.clone(), stages, |e, _, to| match base.elem(to) {
        Point::Word(w) => e.restrict(w).expect("prefix or start"),
        _ => e.clone(),
    })
}

/// The hiding map from the base of [`base_presheaf`] onto visible words (and `τ̄`).
pub fn hiding_map(source: &FinPoset<Point>, target: &FinPoset<Point>) -> Result<MonotoneMap> {
    MonotoneMap::new(source, target, hide)
}

/// Executions of trace length at most `depth` with observable trace `rho` and no proper
/// prefix with the same observable trace.
pub fn minimal_executions(x: &Lts, rho: &Word, depth: usize) -> Vec<Execution> {
    let mut out = Vec::new();
    if rho.is_empty() {
        return (0..x.num_states()).map(Execution::empty).collect();
    }
    // (execution, number of visible letters consumed)
    let mut stack: Vec<(Execution, usize)> = (0..x.num_states()).map(|s| (Execution::empty(s), 0)).collect();
    while let Some((e, k)) = stack.pop() {
        if k == rho.len() {
            out.push(e);
            continue;
        }
        if e.len() + (rho.len() - k) > depth {
            continue;
        }
        let want = &rho.letters()[k];
        for (l, t) in x.successors(e.last()) {
            if l == want {
                stack.push((e.extended(l.clone(), *t), k + 1));
            } else if l.is_tau() {
                stack.push((e.extended(Label::Tau, *t), k));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Restricts `p` to its shortest prefix with observable trace `rho`.
pub fn mpast(p: &Execution, rho: &Word) -> Result<Execution> {
    let mut seen = Word::empty();
    if rho.is_empty() {
        return Ok(p.prefix(0));
    }
    for (i, l) in p.trace.letters().iter().enumerate() {
        if !l.is_tau() {
            seen = seen.extended(l.clone());
            if &seen == rho {
                return Ok(p.prefix(i + 1));
            }
        }
    }
    Err(Error::pre(format!("{rho} is not a prefix of the observable trace {}", p.trace.hide())))
}

/// Minimal executions over visible words up to `depth`, acted on by [`mpast`]. With
/// `with_taubar`, the extra point `τ̄` holds every silent execution of length at most `depth`
/// and restricts to `ε` by the start state.
pub fn branching_sem(
    x: &Lts,
    letters: &[Label],
    depth: usize,
    with_taubar: bool,
) -> Result<FinPresheaf<Point, Execution>> {
    let visible: Vec<Label> = letters.iter().filter(|l| !l.is_tau()).cloned().collect();
    let base = if with_taubar { branching_poset(&visible, depth) } else { word_poset(&visible, depth) };
    let stages = base
        .elems()
        .iter()
        .map(|p| match p {
            Point::Word(w) => minimal_executions(x, w, depth),
            _ => (0..=depth).flat_map(|n| x.executions_on(&Word(vec![Label::Tau; n]))).collect(),
        })
        .collect();
    FinPresheaf::build(base.clone(), stages, |e, from, to| match (base.elem(from), base.elem(to)) {
        (Point::TauBar, Point::TauBar) => e.clone(),
        (_, Point::Word(w)) => mpast(e, w).expect("restriction to an observable prefix"),
        _ => unreachable!("nothing sits below a word except words"),
    })
}

/// The image of an execution under a map, folding silent steps whose endpoints `f` merges.
pub fn map_pf(f: &StateMap, y: &Lts, p: &Execution) -> Result<Execution> {
    let mut q = Execution::empty(f.apply(p.start()));
    for (s, l, t) in p.steps() {
        let (fs, ft) = (f.apply(s), f.apply(t));
        if l.is_tau() && fs == ft {
            continue;
        }
        if !y.has_transition(q.last(), l, ft) {
            return Err(Error::Internal(format!("no step {} -{l}-> {} in the target", y.name(q.last()), y.name(ft))));
        }
        q = q.extended(l.clone(), ft);
    }
    Ok(q)
}

/// `p ↦ p_f` on every stage; `f` must be a branching simulation.
pub fn branching_sem_map(
    f: &StateMap,
    x: &Lts,
    y: &Lts,
    fx: &FinPresheaf<Point, Execution>,
    gy: &FinPresheaf<Point, Execution>,
) -> Result<NatTrans> {
    let v = crate::equiv::check_branching_sim(f, x, y)?;
    if !v.holds {
        return Err(Error::pre(format!("not a branching simulation: {}", v.witness_text())));
    }
    let mut comps = Vec::new();
    for e in 0..fx.base().len() {
        let mut c = Vec::new();
        for p in fx.stage(e) {
            let q = map_pf(f, y, p)?;
            c.push(gy.find(e, &q).ok_or_else(|| {
                Error::Internal(format!("{} maps to {}, outside its stage", p.display(x), q.display(y)))
            })?);
        }
        comps.push(c);
    }
    Ok(NatTrans::from_components(comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presheaf::{left_kan, left_kan_by_components};

    fn chain() -> Lts {
        Lts::from_named(&["x0", "x1", "x2"], &[("x0", "tau", "x1"), ("x1", "a", "x2")]).unwrap()
    }

    fn branch() -> (Lts, Lts, StateMap) {
        let x = Lts::from_named(&["x1", "x2", "x3"], &[("x1", "a", "x2")]).unwrap();
        let y = Lts::from_named(&["y1", "y2", "y3"], &[("y1", "a", "y2"), ("y1", "tau", "y3")]).unwrap();
        (x, y, StateMap(vec![0, 1, 2]))
    }

    #[test]
    fn image_map_preserves_composition() {
        // The branch example followed by the quotient of its target.
        let (x, y, f) = branch();
        let (q, g) = crate::equiv::branching_quotient(&y);
        let letters = [Label::act("a"), Label::Tau];
        let (fx, fy, fq) = (
            branching_sem(&x, &letters, 3, true).unwrap(),
            branching_sem(&y, &letters, 3, true).unwrap(),
            branching_sem(&q, &letters, 3, true).unwrap(),
        );
        let one = branching_sem_map(&f, &x, &y, &fx, &fy).unwrap();
        let two = branching_sem_map(&g, &y, &q, &fy, &fq).unwrap();
        let both = branching_sem_map(&f.then(&g), &x, &q, &fx, &fq).unwrap();
        assert_eq!(one.then(&two), both);
        let id = branching_sem_map(&StateMap::identity(3), &x, &x, &fx, &fx).unwrap();
        assert_eq!(id, NatTrans::identity(&fx));
    }

    fn names(x: &Lts, es: &[Execution]) -> Vec<String> {
        es.iter().map(|e| e.display(x).to_string()).collect()
    }

    #[test]
    fn strong_stages_and_identity() {
        let x = Lts::from_named(&["s", "t"], &[("s", "a", "t")]).unwrap();
        let fx = strong_sem(&x, &x.letters(), 1).unwrap();
        assert_eq!(fx.stage(1).len(), 1);
        let id = strong_sem_map(&StateMap::identity(2), &x, &x, &fx, &fx).unwrap();
        assert_eq!(id, NatTrans::identity(&fx));
        assert!(strong_sem(&chain(), &chain().letters(), 1).is_err());
        assert!(strong_sem_map(&StateMap(vec![1, 0]), &x, &x, &fx, &fx).is_err());
    }

    #[test]
    fn hiding() {
        assert_eq!(hide(&Point::word("a.tau.b")), Point::word("a.b"));
        assert_eq!(hide(&Point::word("eps")), Point::word("eps"));
        assert_eq!(hide(&Point::Stretch(3)), Point::TauBar);
    }

    #[test]
    fn minimal_executions_of_chain() {
        let x = chain();
        let m = minimal_executions(&x, &Word::parse("a"), 3);
        assert_eq!(names(&x, &m), vec!["x0 -tau-> x1 -a-> x2", "x1 -a-> x2"]);
        assert_eq!(minimal_executions(&x, &Word::empty(), 3).len(), 3);
        let (_, y, _) = branch();
        assert_eq!(names(&y, &minimal_executions(&y, &Word::parse("a"), 4)), vec!["y1 -a-> y2"]);
    }

    #[test]
    fn mpast_restricts() {
        let x = chain();
        let p = minimal_executions(&x, &Word::parse("a"), 3).into_iter().find(|e| e.len() == 2).unwrap();
        assert_eq!(mpast(&p, &Word::empty()).unwrap(), Execution::empty(0));
        assert_eq!(mpast(&p, &Word::parse("a")).unwrap(), p);
        assert!(mpast(&p, &Word::parse("b")).is_err());
    }

    #[test]
    fn chain_branching_stages() {
        let x = chain();
        let s = branching_sem(&x, &x.letters(), 3, true).unwrap();
        assert_eq!(s.validate(), None);
        let tb = s.base().index_of(&Point::TauBar).unwrap();
        assert_eq!(names(&x, s.stage(tb)), vec!["x0", "x1", "x2", "x0 -tau-> x1"]);
    }

    #[test]
    fn kan_extension_gives_minimal_executions() {
        let x = chain();
        let letters = x.letters();
        for barred in [false, true] {
            let f = base_presheaf(&x, &letters, 3, barred).unwrap();
            assert_eq!(f.validate(), None);
            let target =
                if barred { branching_poset(&[Label::act("a")], 3) } else { word_poset(&[Label::act("a")], 3) };
            let h = hiding_map(f.base(), &target).unwrap();
            let k = left_kan(&h, &f, target.clone()).unwrap();
            assert_eq!(k.stages(), left_kan_by_components(&h, &f, target.clone()).unwrap().stages());
            let sem = branching_sem(&x, &letters, 3, barred).unwrap();
            for e in 0..target.len() {
                let mut got: Vec<Execution> = k.stage(e).iter().map(|(_, p)| p.clone()).collect();
                got.sort();
                assert_eq!(got, sem.stage(e), "at {}", target.elem(e));
                for to in target.below(e) {
                    for (i, (_, p)) in k.stage(e).iter().enumerate() {
                        let down = &k.stage(to)[k.restrict(e, i, to)].1;
                        let j = sem.find(e, p).unwrap();
                        assert_eq!(&sem.stage(to)[sem.restrict(e, j, to)], down);
                    }
                }
            }
        }
    }

    #[test]
    fn barred_stretches_agree() {
        let x = chain();
        let f = base_presheaf(&x, &x.letters(), 2, true).unwrap();
        let s1 = f.base().index_of(&Point::Stretch(1)).unwrap();
        let s2 = f.base().index_of(&Point::Stretch(2)).unwrap();
        assert_eq!(f.stage(s1), f.stage(s2));
        for (i, p) in f.stage(s2).iter().enumerate() {
            assert_eq!(f.stage(0)[f.restrict(s2, i, 0)], Execution::empty(p.start()));
        }
    }

    #[test]
    fn pf_rules() {
        let x = Lts::from_named(&["x", "x'"], &[("x", "tau", "x'")]).unwrap();
        let y = Lts::from_named(&["y"], &[]).unwrap();
        let f = StateMap(vec![0, 0]);
        let p = x.executions_on(&Word::parse("tau"))[0].clone();
        assert_eq!(map_pf(&f, &y, &p).unwrap(), Execution::empty(0));
        assert_eq!(map_pf(&f, &y, &Execution::empty(1)).unwrap(), Execution::empty(0));
        let (bx, by, bf) = branch();
        let p = bx.executions_on(&Word::parse("a"))[0].clone();
        assert_eq!(map_pf(&bf, &by, &p).unwrap().display(&by).to_string(), "y1 -a-> y2");
    }

    #[test]
    fn branching_map_on_the_branch_example() {
        let (x, y, f) = branch();
        let letters = common_letters(&x, &y);
        for with_taubar in [false, true] {
            let fx = branching_sem(&x, &letters, 3, with_taubar).unwrap();
            let gy = branching_sem(&y, &letters, 3, with_taubar).unwrap();
            let m = branching_sem_map(&f, &x, &y, &fx, &gy).unwrap();
            assert_eq!(m.naturality_failure(&fx, &gy), None);
        }
    }

    #[test]
    fn fair_stages() {
        let x = Lts::from_named(&["x", "x'"], &[("x", "a", "x"), ("x", "a", "x'"), ("x'", "a", "x'")]).unwrap();
        let fl = FairLts::new(x, crate::lts::FairnessSpec::Streett(vec![([0].into(), [1].into())])).unwrap();
        let b = FairBounds { depth: 2, stem: 2, cycle: 2 };
        let base = fair_base(&[&fl], &fl.lts.letters(), b).unwrap();
        let s = fair_sem(&fl, &base, b).unwrap();
        assert_eq!(s.validate(), None);
        let om = base.index_of(&Point::Omega(InfWord::new(vec![], vec![Label::act("a")]))).unwrap();
        assert!(!s.stage(om).is_empty());
        for e in s.stage(om) {
            let FairElem::Inf(l) = e else { panic!() };
            assert!(l.cycle_states().contains(&1) && !l.cycle_states().contains(&0));
        }
        let acyclic = FairLts::new(
            Lts::from_named(&["p", "q"], &[("p", "a", "q")]).unwrap(),
            crate::lts::FairnessSpec::all_fair(),
        )
        .unwrap();
        let base = fair_base(&[&acyclic], &acyclic.lts.letters(), b).unwrap();
        assert!(base.elems().iter().all(|p| !matches!(p, Point::Omega(_))));
    }
}
