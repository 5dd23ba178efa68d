//! Ultimately periodic runs: a finite stem followed by a repeating cycle.

use std::collections::BTreeSet;
use std::fmt;

use super::{Execution, Label, Lts, StateMap, Word};
use crate::error::{Error, Result};

/// An ultimately periodic infinite word, kept canonical (primitive period, shortest stem).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfWord {
    pub stem: Vec<Label>,
    pub cycle: Vec<Label>,
}

impl InfWord {
    pub fn new(stem: Vec<Label>, cycle: Vec<Label>) -> InfWord {
        assert!(!cycle.is_empty(), "infinite word needs a nonempty cycle");
        let mut cycle = primitive(cycle);
        let mut stem = stem;
        while let Some(last) = stem.last() {
            if last != cycle.last().unwrap() {
                break;
            }
            let l = stem.pop().unwrap();
            cycle.pop();
            cycle.insert(0, l);
        }
        InfWord { stem, cycle }
    }

    pub fn letter(&self, i: usize) -> &Label {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }

    /// The finite prefix of length `n`.
    pub fn prefix(&self, n: usize) -> Word {
        Word((0..n).map(|i| self.letter(i).clone()).collect())
    }

    pub fn has_prefix(&self, w: &Word) -> bool {
        w.letters().iter().enumerate().all(|(i, l)| self.letter(i) == l)
    }
}

impl fmt::Display for InfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.stem {
            write!(f, "{l}.")?;
        }
        write!(f, "({})^w", Word(self.cycle.clone()))
    }
}

impl fmt::Debug for InfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn primitive<T: PartialEq + Clone>(cycle: Vec<T>) -> Vec<T> {
    let n = cycle.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (p..n).all(|i| cycle[i] == cycle[i - p]) {
            return cycle[..p].to_vec();
        }
    }
    cycle
}

/// An infinite run `stem · cycle^ω`; the cycle's last state is the stem's last state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lasso {
    pub stem: Execution,
    pub cycle: Vec<(Label, usize)>,
}

impl Lasso {
    pub fn new(stem: Execution, cycle: Vec<(Label, usize)>) -> Result<Lasso> {
        match cycle.last() {
            None => Err(Error::pre("lasso cycle is empty")),
            Some((_, s)) if *s != stem.last() => Err(Error::pre("lasso cycle does not close at its entry")),
            _ => Ok(Lasso { stem, cycle }.canonical()),
        }
    }

    /// Primitive cycle and shortest stem; two lassos denote the same run iff canonical forms agree.
    pub fn canonical(&self) -> Lasso {
        let mut cycle = primitive(self.cycle.clone());
        let mut stem = self.stem.clone();
        while !stem.is_empty() {
            let m = stem.len();
            let n = cycle.len();
            let before_entry = if n >= 2 { cycle[n - 2].1 } else { stem.last() };
            let same_label = stem.trace.0[m - 1] == cycle[n - 1].0;
            if !(same_label && stem.states[m - 1] == before_entry) {
                break;
            }
            let entry = (stem.trace.0[m - 1].clone(), stem.states[m]);
            stem = stem.prefix(m - 1);
            cycle.pop();
            cycle.insert(0, entry);
        }
        Lasso { stem, cycle }
    }

    pub fn start(&self) -> usize {
        self.stem.start()
    }

    pub fn trace(&self) -> InfWord {
        InfWord::new(self.stem.trace.0.clone(), self.cycle.iter().map(|(l, _)| l.clone()).collect())
    }

    /// State and incoming label at position `i` of the unrolled run (`i >= 1`).
    fn step(&self, i: usize) -> (&Label, usize) {
        let m = self.stem.len();
        if i <= m {
            (&self.stem.trace.0[i - 1], self.stem.states[i])
        } else {
            let (l, s) = &self.cycle[(i - m - 1) % self.cycle.len()];
            (l, *s)
        }
    }

    pub fn state_at(&self, i: usize) -> usize {
        if i == 0 {
            self.stem.start()
        } else {
            self.step(i).1
        }
    }

    /// The finite execution given by the first `n` steps.
    pub fn prefix(&self, n: usize) -> Execution {
        let mut e = Execution::empty(self.start());
        for i in 1..=n {
            let (l, s) = self.step(i);
            e = e.extended(l.clone(), s);
        }
        e
    }

    pub fn cycle_states(&self) -> BTreeSet<usize> {
        self.cycle.iter().map(|(_, s)| *s).collect()
    }

    pub fn map(&self, f: &StateMap) -> Lasso {
        Lasso { stem: self.stem.map(f), cycle: self.cycle.iter().map(|(l, s)| (l.clone(), f.apply(*s))).collect() }
            .canonical()
    }

    pub fn is_valid_in(&self, lts: &Lts) -> bool {
        self.stem.is_valid_in(lts)
            && !self.cycle.is_empty()
            && self.cycle.last().unwrap().1 == self.stem.last()
            && self.unrolled_steps().all(|(s, l, t)| lts.has_transition(s, l, t))
    }

    fn unrolled_steps(&self) -> impl Iterator<Item = (usize, &Label, usize)> + '_ {
        let mut prev = self.stem.last();
        self.cycle.iter().map(move |(l, s)| {
            let step = (prev, l, *s);
            prev = *s;
            step
        })
    }

    /// The run as a system whose states are positions of the lasso, with each
    /// position's underlying state.
    pub fn positions(&self) -> (Lts, Vec<usize>) {
        let m = self.stem.len();
        let n = self.cycle.len();
        let mut under: Vec<usize> = self.stem.states.clone();
        under.extend(self.cycle[..n - 1].iter().map(|(_, s)| *s));
        let mut ts = Vec::new();
        for i in 0..m {
            ts.push((i, self.stem.trace.0[i].clone(), i + 1));
        }
        for (j, (l, _)) in self.cycle.iter().enumerate() {
            let from = m + j;
            let to = if j + 1 == n { m } else { m + j + 1 };
            ts.push((from, l.clone(), to));
        }
        let lts = Lts::anonymous(under.len(), ts).expect("lasso positions form a system");
        (lts, under)
    }

    pub fn display<'a>(&'a self, lts: &'a Lts) -> impl fmt::Display + 'a {
        LassoDisplay { l: self, lts }
    }
}

struct LassoDisplay<'a> {
    l: &'a Lasso,
    lts: &'a Lts,
}

impl fmt::Display for LassoDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", self.l.stem.display(self.lts))?;
        for (i, (l, s)) in self.l.cycle.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "-{l}-> {}", self.lts.name(*s))?;
        }
        f.write_str("}^w")
    }
}
