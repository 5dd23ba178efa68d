//! Labelled transition systems, words, executions and fairness.
//!
//! Systems carry no initial state: executions start anywhere.

mod aut;
mod fairness;
mod lasso;

pub use aut::{parse_aut, write_aut};
pub use fairness::{fair_lassos, lassos, FairLts, FairnessSpec, Sidecar};
pub use lasso::{InfWord, Lasso};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A transition label. `Tau` is the silent action and never belongs to an alphabet.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tau,
    Act(Arc<str>),
}

impl Label {
    pub fn act(name: &str) -> Label {
        Label::Act(Arc::from(name))
    }

    /// Reads a file label; the literal `tau` is the silent action.
    pub fn parse(name: &str) -> Label {
        if name == "tau" {
            Label::Tau
        } else {
            Label::act(name)
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Act(a) => f.write_str(a),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite word over labels. Ordered by prefix; `Ord` is plain lexicographic.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Label>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    /// Parses `eps` or dot-separated labels such as `tau.a`.
    pub fn parse(s: &str) -> Word {
        let s = s.trim();
        if s.is_empty() || s == "eps" {
            return Word::empty();
        }
        Word(s.split('.').map(|l| Label::parse(l.trim())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Label] {
        &self.0
    }

    pub fn last(&self) -> Option<&Label> {
        self.0.last()
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn extended(&self, l: Label) -> Word {
        let mut v = self.0.clone();
        v.push(l);
        Word(v)
    }

    /// Longest common prefix.
    pub fn meet(&self, other: &Word) -> Word {
        let n = self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count();
        self.prefix(n)
    }

    /// Deletes every silent letter.
    pub fn hide(&self) -> Word {
        Word(self.0.iter().filter(|l| !l.is_tau()).cloned().collect())
    }

    pub fn is_all_tau(&self) -> bool {
        self.0.iter().all(Label::is_tau)
    }

    /// Shortlex comparison: length first, then lexicographic.
    pub fn shortlex(&self, other: &Word) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.cmp(other))
    }

    /// All words over `letters` of length at most `depth`, in shortlex order.
    pub fn all_up_to(letters: &[Label], depth: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for w in &layer {
                for l in letters {
                    next.push(w.extended(l.clone()));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("eps");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub type Transition = (usize, Label, usize);

/// A finite run: `states[i]` is the state reached after the first `i` letters of `trace`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Execution {
    pub trace: Word,
    pub states: Vec<usize>,
}

impl Execution {
    pub fn empty(state: usize) -> Execution {
        Execution { trace: Word::empty(), states: vec![state] }
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn start(&self) -> usize {
        self.states[0]
    }

    pub fn last(&self) -> usize {
        *self.states.last().expect("execution has a start state")
    }

    pub fn extended(&self, l: Label, s: usize) -> Execution {
        let mut e = self.clone();
        e.trace.0.push(l);
        e.states.push(s);
        e
    }

    /// Restriction to the first `n` letters.
    pub fn prefix(&self, n: usize) -> Execution {
        Execution { trace: self.trace.prefix(n), states: self.states[..=n.min(self.len())].to_vec() }
    }

    /// `p·σ'`: restriction to the history of a prefix of the trace.
    pub fn restrict(&self, w: &Word) -> Result<Execution> {
        if !w.is_prefix_of(&self.trace) {
            return Err(Error::pre(format!("{w} is not a prefix of {}", self.trace)));
        }
        Ok(self.prefix(w.len()))
    }

    /// Applies a state map pointwise.
    pub fn map(&self, f: &StateMap) -> Execution {
        Execution { trace: self.trace.clone(), states: self.states.iter().map(|&s| f.apply(s)).collect() }
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, &Label, usize)> + '_ {
        self.trace.0.iter().enumerate().map(move |(i, l)| (self.states[i], l, self.states[i + 1]))
    }

    pub fn is_valid_in(&self, lts: &Lts) -> bool {
        self.states.len() == self.trace.len() + 1
            && self.states.iter().all(|&s| s < lts.num_states())
            && self.steps().all(|(s, l, t)| lts.has_transition(s, l, t))
    }

    pub fn display<'a>(&'a self, lts: &'a Lts) -> impl fmt::Display + 'a {
        ExecDisplay { e: self, lts }
    }

    /// The `trace: state list` form.
    pub fn trace_line(&self, lts: &Lts) -> String {
        let states: Vec<&str> = self.states.iter().map(|&s| lts.name(s)).collect();
        format!("{}: {}", self.trace, states.join(" "))
    }
}

struct ExecDisplay<'a> {
    e: &'a Execution,
    lts: &'a Lts,
}

impl fmt::Display for ExecDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.lts.name(self.e.start()))?;
        for (_, l, t) in self.e.steps() {
            write!(f, " -{l}-> {}", self.lts.name(t))?;
        }
        Ok(())
    }
}

/// A total function between state sets, stored by index.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StateMap(pub Vec<usize>);

impl StateMap {
    pub fn identity(n: usize) -> StateMap {
        StateMap((0..n).collect())
    }

    pub fn apply(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &StateMap) -> StateMap {
        StateMap(self.0.iter().map(|&s| other.apply(s)).collect())
    }

    /// First target state outside the image, if any.
    pub fn missed(&self, target_size: usize) -> Option<usize> {
        let mut hit = vec![false; target_size];
        for &t in &self.0 {
            hit[t] = true;
        }
        hit.iter().position(|h| !h)
    }

    pub fn check_total(&self, from: &Lts, to: &Lts) -> Result<()> {
        if self.len() != from.num_states() {
            return Err(Error::pre(format!(
                "map covers {} states but the source has {}",
                self.len(),
                from.num_states()
            )));
        }
        if let Some(&t) = self.0.iter().find(|&&t| t >= to.num_states()) {
            return Err(Error::pre(format!("map target {t} is out of range")));
        }
        Ok(())
    }
}

/// Finite transition system. States are `0..n`, named for display.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Lts {
    names: Vec<String>,
    alphabet: BTreeSet<Label>,
    transitions: Vec<Transition>,
    succ: Vec<Vec<(Label, usize)>>,
}

impl Lts {
    /// Builds a system; duplicate transitions are dropped with a warning.
    pub fn new(names: Vec<String>, transitions: impl IntoIterator<Item = Transition>) -> Result<Lts> {
        let n = names.len();
        let mut set = BTreeSet::new();
        for (s, l, t) in transitions {
            if s >= n || t >= n {
                return Err(Error::pre(format!("transition ({s},{l},{t}) leaves the {n} states")));
            }
            if !set.insert((s, l.clone(), t)) {
                log::warn!("duplicate transition ({s},\"{l}\",{t}) dropped");
            }
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::pre(format!("state name {name} used twice")));
            }
        }
        let alphabet = set.iter().filter(|t| !t.1.is_tau()).map(|t| t.1.clone()).collect();
        let mut succ = vec![Vec::new(); n];
        for (s, l, t) in &set {
            succ[*s].push((l.clone(), *t));
        }
        Ok(Lts { names, alphabet, transitions: set.into_iter().collect(), succ })
    }

    /// Convenience constructor from state names and named transitions.
    pub fn from_named(states: &[&str], transitions: &[(&str, &str, &str)]) -> Result<Lts> {
        let names: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let idx = |s: &str| states.iter().position(|n| *n == s).ok_or_else(|| Error::pre(format!("unknown state {s}")));
        let mut ts = Vec::new();
        for (s, l, t) in transitions {
            ts.push((idx(s)?, Label::parse(l), idx(t)?));
        }
        Lts::new(names, ts)
    }

    /// States named by their index.
    pub fn anonymous(n: usize, transitions: impl IntoIterator<Item = Transition>) -> Result<Lts> {
        Lts::new((0..n).map(|i| i.to_string()).collect(), transitions)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    /// Looks a state up by name, falling back to a numeric index.
    pub fn state(&self, name: &str) -> Option<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&i| i < self.num_states()))
    }

    pub fn rename(&self, names: Vec<String>) -> Result<Lts> {
        if names.len() != self.num_states() {
            return Err(Error::pre(format!("{} names for {} states", names.len(), self.num_states())));
        }
        Lts::new(names, self.transitions.iter().cloned())
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    pub fn has_tau(&self) -> bool {
        self.transitions.iter().any(|t| t.1.is_tau())
    }

    /// Labels in use: the alphabet plus `tau` when present, `tau` first.
    pub fn letters(&self) -> Vec<Label> {
        let mut v = Vec::new();
        if self.has_tau() {
            v.push(Label::Tau);
        }
        v.extend(self.alphabet.iter().cloned());
        v
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn successors(&self, s: usize) -> &[(Label, usize)] {
        &self.succ[s]
    }

    pub fn successors_on<'a>(&'a self, s: usize, l: &'a Label) -> impl Iterator<Item = usize> + 'a {
        self.succ[s].iter().filter(move |(m, _)| m == l).map(|(_, t)| *t)
    }

    pub fn has_transition(&self, s: usize, l: &Label, t: usize) -> bool {
        self.succ[s].iter().any(|(m, u)| m == l && *u == t)
    }

    /// The subsystem on `states` (in the given order) and the old-to-new index map.
    pub fn induced(&self, states: &[usize]) -> (Lts, Vec<Option<usize>>) {
        let mut index = vec![None; self.num_states()];
        for (i, &s) in states.iter().enumerate() {
            index[s] = Some(i);
        }
        let names = states.iter().map(|&s| self.names[s].clone()).collect();
        let ts = self.transitions.iter().filter_map(|(s, l, t)| Some((index[*s]?, l.clone(), index[*t]?)));
        (Lts::new(names, ts).expect("induced subsystem is well formed"), index)
    }

    /// `Exec(X, σ)`: all executions from every state with trace `σ`, sorted.
    pub fn executions_on(&self, w: &Word) -> Vec<Execution> {
        let mut layer: Vec<Execution> = (0..self.num_states()).map(Execution::empty).collect();
        for l in w.letters() {
            let mut next = Vec::new();
            for e in &layer {
                for t in self.successors_on(e.last(), l) {
                    next.push(e.extended(l.clone(), t));
                }
            }
            layer = next;
        }
        layer.sort();
        layer
    }

    /// `Exec(X, σ)` for every word over the system's own letters up to `depth`.
    pub fn executions_up_to(&self, depth: usize) -> BTreeMap<Word, Vec<Execution>> {
        self.executions_over(&self.letters(), depth)
    }

    /// As [`Lts::executions_up_to`] over an explicit letter set.
    pub fn executions_over(&self, letters: &[Label], depth: usize) -> BTreeMap<Word, Vec<Execution>> {
        let mut out = BTreeMap::new();
        let start: Vec<Execution> = (0..self.num_states()).map(Execution::empty).collect();
        out.insert(Word::empty(), start.clone());
        let mut layer = vec![(Word::empty(), start)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (w, execs) in &layer {
                for l in letters {
                    let mut ext = Vec::new();
                    for e in execs {
                        for t in self.successors_on(e.last(), l) {
                            ext.push(e.extended(l.clone(), t));
                        }
                    }
                    ext.sort();
                    next.push((w.extended(l.clone()), ext));
                }
            }
            for (w, e) in &next {
                out.insert(w.clone(), e.clone());
            }
            layer = next;
        }
        out
    }

    /// Reflexive-transitive closure of the silent steps, per state.
    pub fn tau_closure(&self) -> Vec<BTreeSet<usize>> {
        (0..self.num_states())
            .map(|s| {
                let mut seen = BTreeSet::from([s]);
                let mut queue = VecDeque::from([s]);
                while let Some(u) = queue.pop_front() {
                    for t in self.successors_on(u, &Label::Tau) {
                        if seen.insert(t) {
                            queue.push_back(t);
                        }
                    }
                }
                seen
            })
            .collect()
    }

    /// The weak reachability relation `x ⇒σ x'` for visible words of length at most `bound`.
    ///
    /// Silent steps are absorbed into the empty word only; a visible step is appended to an
    /// already derived `⇒σ` without further silent steps after it.
    pub fn weak_reach(&self, bound: usize) -> BTreeSet<(usize, Word, usize)> {
        let closure = self.tau_closure();
        let mut out = BTreeSet::new();
        let mut layer = Vec::new();
        for (x, reach) in closure.iter().enumerate() {
            for &y in reach {
                out.insert((x, Word::empty(), y));
                layer.push((x, Word::empty(), y));
            }
        }
        for _ in 0..bound {
            let mut next = Vec::new();
            for (x, w, y) in &layer {
                for (l, z) in self.successors(*y) {
                    if l.is_tau() {
                        continue;
                    }
                    let item = (*x, w.extended(l.clone()), *z);
                    if out.insert(item.clone()) {
                        next.push(item);
                    }
                }
            }
            layer = next;
        }
        out
    }
}

/// Checks that `f` preserves every transition; returns a violating transition, visible ones
/// first.
pub fn is_simulation(f: &StateMap, x: &Lts, y: &Lts) -> Result<Option<Transition>> {
    f.check_total(x, y)?;
    let bad: Vec<&Transition> =
        x.transitions().iter().filter(|(s, l, t)| !y.has_transition(f.apply(*s), l, f.apply(*t))).collect();
    Ok(bad.iter().find(|(_, l, _)| !l.is_tau()).or(bad.first()).map(|&t| t.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Lts {
        Lts::from_named(&["x0", "x1", "x2"], &[("x0", "tau", "x1"), ("x1", "a", "x2")]).unwrap()
    }

    fn branch() -> Lts {
        Lts::from_named(
            &["x1", "x2", "x3", "y1", "y2", "y3"],
            &[("x1", "a", "x2"), ("y1", "a", "y2"), ("y1", "tau", "y3")],
        )
        .unwrap()
    }

    fn ex(lts: &Lts, trace: &str, states: &[&str]) -> Execution {
        Execution { trace: Word::parse(trace), states: states.iter().map(|s| lts.state(s).unwrap()).collect() }
    }

    #[test]
    fn chain_stages() {
        let c = chain();
        let m = c.executions_up_to(2);
        assert_eq!(m[&Word::parse("tau.a")], vec![ex(&c, "tau.a", &["x0", "x1", "x2"])]);
        assert_eq!(m[&Word::parse("a")], vec![ex(&c, "a", &["x1", "x2"])]);
        assert_eq!(m[&Word::empty()].len(), 3);
        assert!(m[&Word::parse("a.tau")].is_empty());
        assert_eq!(m.len(), 7);
    }

    #[test]
    fn depth_zero_has_only_empty_executions() {
        let m = branch().executions_up_to(0);
        assert_eq!(m.len(), 1);
        assert!(m[&Word::empty()].iter().all(Execution::is_empty));
        assert_eq!(m[&Word::empty()].len(), 6);
    }

    #[test]
    fn branch_depth_one() {
        let b = branch();
        let m = b.executions_up_to(1);
        assert_eq!(m[&Word::parse("a")], vec![ex(&b, "a", &["x1", "x2"]), ex(&b, "a", &["y1", "y2"])]);
        assert_eq!(m[&Word::parse("tau")], vec![ex(&b, "tau", &["y1", "y3"])]);
    }

    #[test]
    fn restriction() {
        let c = chain();
        let p = ex(&c, "tau.a", &["x0", "x1", "x2"]);
        assert_eq!(p.restrict(&Word::parse("tau")).unwrap(), ex(&c, "tau", &["x0", "x1"]));
        assert_eq!(p.restrict(&p.trace).unwrap(), p);
        assert!(p.restrict(&Word::parse("a")).is_err());
    }

    #[test]
    fn weak_reachability_examples() {
        let c = chain();
        let r = c.weak_reach(2);
        let (x0, x1, x2) = (0, 1, 2);
        assert!(r.contains(&(x0, Word::empty(), x1)));
        assert!(r.contains(&(x0, Word::parse("a"), x2)));
        for s in 0..3 {
            assert!(r.contains(&(s, Word::empty(), s)));
        }
        let b = branch();
        let r = b.weak_reach(2);
        let y = |n: &str| b.state(n).unwrap();
        assert!(r.contains(&(y("y1"), Word::empty(), y("y3"))));
        assert!(r.contains(&(y("y1"), Word::parse("a"), y("y2"))));
        assert!(!r.contains(&(y("y1"), Word::parse("a"), y("y3"))));
    }

    #[test]
    fn simulation_check() {
        let c = chain();
        assert_eq!(is_simulation(&StateMap::identity(3), &c, &c).unwrap(), None);
        let collapse = StateMap(vec![0, 0, 0]);
        // Both steps break; the visible one is reported.
        assert_eq!(is_simulation(&collapse, &c, &c).unwrap(), Some((1, Label::act("a"), 2)));
        let short = StateMap(vec![0, 0]);
        assert!(is_simulation(&short, &c, &c).is_err());
    }

    #[test]
    fn word_helpers() {
        let w = Word::parse("a.tau.b");
        assert_eq!(w.hide(), Word::parse("a.b"));
        assert_eq!(Word::empty().hide(), Word::empty());
        assert_eq!(w.meet(&Word::parse("a.b")), Word::parse("a"));
        assert_eq!(w.to_string(), "a.tau.b");
        assert_eq!(Word::empty().to_string(), "eps");
        assert_eq!(Word::all_up_to(&[Label::act("a"), Label::act("b")], 3).len(), 15);
    }

    #[test]
    fn trace_line_format() {
        let c = chain();
        let p = ex(&c, "tau.a", &["x0", "x1", "x2"]);
        assert_eq!(p.trace_line(&c), "tau.a: x0 x1 x2");
        assert_eq!(p.display(&c).to_string(), "x0 -tau-> x1 -a-> x2");
    }
}
