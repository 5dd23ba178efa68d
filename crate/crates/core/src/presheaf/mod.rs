//! Finite presheaves over finite posets and natural transformations between them.
//!
//! A presheaf assigns a finite sorted set (a stage) to every point of its base poset and a
//! restriction function to every comparable pair. Elements are addressed by their index
//! within a stage, and natural transformations are stored as index maps.

mod colimit;
mod elements;
mod filler;
mod poset;

pub use colimit::{filtered_colimit, left_kan, left_kan_by_components, Colimit};
pub use elements::{elements_poset, observation_presheaf, simplify_observation, time_poset, Element, ObsValue};
pub use filler::{
    enumerate_mono_squares, find_filler, is_bisim_map_bounded, BisimMapReport, Filler, Square, SquareFamily,
    SquareWitness,
};
pub use poset::{barred_poset, branching_poset, fair_poset, word_poset, FinPoset, MonotoneMap, Point};

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A presheaf on a finite poset with finite stages.
#[derive(Clone, Debug)]
pub struct FinPresheaf<P, T> {
    base: Arc<FinPoset<P>>,
    stages: Vec<Vec<T>>,
    /// `res[(from, to)]` for every `to <= from`, as an index map.
    res: HashMap<(usize, usize), Vec<usize>>,
}

/// A failed functor law: restricting `elem` of stage `from` via `mid` differs from
/// restricting it directly to `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawViolation {
    pub from: usize,
    pub mid: usize,
    pub to: usize,
    pub elem: usize,
}

impl<P: Clone + Eq + Hash + fmt::Debug, T: Clone + Ord + fmt::Debug> FinPresheaf<P, T> {
    /// Builds a presheaf from its stages and its action `act(x, from, to)`. Stages are sorted
    /// and deduplicated; the action must land in the target stage.
    pub fn build(
        base: Arc<FinPoset<P>>,
        mut stages: Vec<Vec<T>>,
        act: impl Fn(&T, usize, usize) -> T,
    ) -> Result<FinPresheaf<P, T>> {
        if stages.len() != base.len() {
            return Err(Error::pre(format!("{} stages for {} points", stages.len(), base.len())));
        }
        for s in &mut stages {
            s.sort();
            s.dedup();
        }
        let mut res = HashMap::new();
        for from in 0..base.len() {
            for to in base.below(from) {
                let map = stages[from]
                    .iter()
                    .map(|x| {
                        let y = act(x, from, to);
                        stages[to].binary_search(&y).map_err(|_| {
                            Error::Internal(format!(
                                "restriction of {x:?} from {:?} to {:?} gives {y:?}, not in the stage",
                                base.elem(from),
                                base.elem(to)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                res.insert((from, to), map);
            }
        }
        Ok(FinPresheaf { base, stages, res })
    }

    /// Assembles a presheaf from raw parts without checking the functor laws.
    pub fn from_parts(base: Arc<FinPoset<P>>, stages: Vec<Vec<T>>, res: HashMap<(usize, usize), Vec<usize>>) -> Self {
        FinPresheaf { base, stages, res }
    }

    pub fn find(&self, e: usize, x: &T) -> Option<usize> {
        self.stages[e].binary_search(x).ok()
    }
}

impl<P: Clone + Eq + Hash + fmt::Debug, T> FinPresheaf<P, T> {
    pub fn base(&self) -> &Arc<FinPoset<P>> {
        &self.base
    }

    pub fn stage(&self, e: usize) -> &[T] {
        &self.stages[e]
    }

    pub fn stages(&self) -> &[Vec<T>] {
        &self.stages
    }

    pub fn res_map(&self, from: usize, to: usize) -> &[usize] {
        &self.res[&(from, to)]
    }

    /// Index of `x·to` for element `i` of stage `from`.
    pub fn restrict(&self, from: usize, i: usize, to: usize) -> usize {
        self.res[&(from, to)][i]
    }

    pub fn size(&self) -> usize {
        self.stages.iter().map(Vec::len).sum()
    }

    /// Replaces one restriction map; meant for building negative examples.
    pub fn with_restriction(mut self, from: usize, to: usize, map: Vec<usize>) -> Self {
        self.res.insert((from, to), map);
        self
    }

    /// Checks the identity and composition laws; returns the first violation found.
    pub fn validate(&self) -> Option<LawViolation> {
        let n = self.base.len();
        for e in 0..n {
            let Some(id) = self.res.get(&(e, e)) else {
                return Some(LawViolation { from: e, mid: e, to: e, elem: 0 });
            };
            if let Some(i) = (0..self.stages[e].len()).find(|&i| id.get(i) != Some(&i)) {
                return Some(LawViolation { from: e, mid: e, to: e, elem: i });
            }
        }
        for from in 0..n {
            for mid in self.base.below(from) {
                for to in self.base.below(mid) {
                    let (Some(a), Some(b), Some(c)) =
                        (self.res.get(&(from, mid)), self.res.get(&(mid, to)), self.res.get(&(from, to)))
                    else {
                        return Some(LawViolation { from, mid, to, elem: 0 });
                    };
                    for i in 0..self.stages[from].len() {
                        if b.get(a[i]) != Some(&c[i]) {
                            return Some(LawViolation { from, mid, to, elem: i });
                        }
                    }
                }
            }
        }
        None
    }

    /// The debug dump: one `stage` line per point, then one `res` block per covering pair.
    pub fn dump(&self, fmt_elem: impl Fn(&T) -> String) -> String
    where
        P: fmt::Display,
    {
        let mut out = String::new();
        for e in 0..self.base.len() {
            let elems: Vec<String> = self.stages[e].iter().map(&fmt_elem).collect();
            out.push_str(&format!("stage {}: {{{}}}\n", self.base.elem(e), elems.join(", ")));
        }
        for from in 0..self.base.len() {
            for &to in self.base.lower_covers(from) {
                out.push_str(&format!("res {} -> {}:", self.base.elem(from), self.base.elem(to)));
                if self.stages[from].is_empty() {
                    out.push_str(" {}");
                }
                out.push('\n');
                for (i, x) in self.stages[from].iter().enumerate() {
                    let y = &self.stages[to][self.restrict(from, i, to)];
                    out.push_str(&format!("  {} |-> {}\n", fmt_elem(x), fmt_elem(y)));
                }
            }
        }
        out
    }
}

/// A natural transformation, stored as one index map per point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatTrans {
    comps: Vec<Vec<usize>>,
}

impl NatTrans {
    pub fn from_components(comps: Vec<Vec<usize>>) -> NatTrans {
        NatTrans { comps }
    }

    /// Lifts an element-wise map; fails with the first `(point, element)` whose image is missing
    /// from the target stage.
    pub fn try_build<P, S, T>(
        src: &FinPresheaf<P, S>,
        tgt: &FinPresheaf<P, T>,
        f: impl Fn(usize, &S) -> T,
    ) -> std::result::Result<NatTrans, (usize, usize)>
    where
        P: Clone + Eq + Hash + fmt::Debug,
        S: Clone + Ord + fmt::Debug,
        T: Clone + Ord + fmt::Debug,
    {
        let comps = (0..src.base().len())
            .map(|e| {
                src.stage(e)
                    .iter()
                    .enumerate()
                    .map(|(i, x)| tgt.find(e, &f(e, x)).ok_or((e, i)))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(NatTrans { comps })
    }

    pub fn identity<P: Clone + Eq + Hash + fmt::Debug, T>(f: &FinPresheaf<P, T>) -> NatTrans {
        NatTrans { comps: f.stages().iter().map(|s| (0..s.len()).collect()).collect() }
    }

    pub fn component(&self, e: usize) -> &[usize] {
        &self.comps[e]
    }

    pub fn apply(&self, e: usize, i: usize) -> usize {
        self.comps[e][i]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &NatTrans) -> NatTrans {
        NatTrans {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.iter().map(|&i| b[i]).collect()).collect(),
        }
    }

    /// First naturality square that fails to commute, as `(from, to, element)`.
    pub fn naturality_failure<P, S, T>(
        &self,
        src: &FinPresheaf<P, S>,
        tgt: &FinPresheaf<P, T>,
    ) -> Option<(usize, usize, usize)>
    where
        P: Clone + Eq + Hash + fmt::Debug,
    {
        let base = src.base();
        for from in 0..base.len() {
            for to in base.below(from) {
                for i in 0..src.stage(from).len() {
                    if tgt.restrict(from, self.apply(from, i), to) != self.apply(to, src.restrict(from, i, to)) {
                        return Some((from, to, i));
                    }
                }
            }
        }
        None
    }

    /// Stage-wise injectivity, which is what monos are in a presheaf category.
    pub fn is_mono(&self) -> bool {
        self.comps.iter().all(|c| {
            let mut seen = std::collections::HashSet::new();
            c.iter().all(|i| seen.insert(*i))
        })
    }

    /// First target element outside the image, as `(point, element)`.
    pub fn first_missed<P: Clone + Eq + Hash + fmt::Debug, T>(
        &self,
        tgt: &FinPresheaf<P, T>,
    ) -> Option<(usize, usize)> {
        (0..self.comps.len()).find_map(|e| {
            let mut hit = vec![false; tgt.stage(e).len()];
            for &i in &self.comps[e] {
                hit[i] = true;
            }
            hit.iter().position(|h| !h).map(|j| (e, j))
        })
    }
}
