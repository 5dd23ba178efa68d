//! Fairness predicates on infinite runs and the JSON sidecar that declares them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Execution, Label, Lasso, Lts, StateMap, Word};
use crate::error::{Error, Result};
use crate::product::{self, Want};

/// Which infinite runs count as fair.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FairnessSpec {
    /// Fair iff for every pair `(L, U)`, visiting `L` infinitely often implies visiting `U`
    /// infinitely often. No pairs: every run is fair.
    Streett(Vec<(BTreeSet<usize>, BTreeSet<usize>)>),
    /// Fair iff the trace starts with `prefix` and every state at position `>= offset` lies in
    /// `states`.
    AlwaysAfter { offset: usize, states: BTreeSet<usize>, prefix: Word },
    /// Fair iff some fair run of `source` maps onto the run under `map`.
    Image { source: Box<FairLts>, map: StateMap },
}

impl FairnessSpec {
    pub fn all_fair() -> FairnessSpec {
        FairnessSpec::Streett(Vec::new())
    }

    fn check_states(&self, n: usize) -> Result<()> {
        let bad = |s: &BTreeSet<usize>| s.iter().any(|&x| x >= n);
        match self {
            FairnessSpec::Streett(pairs) => {
                if pairs.iter().any(|(l, u)| bad(l) || bad(u)) {
                    return Err(Error::pre("Streett pair names a missing state"));
                }
            }
            FairnessSpec::AlwaysAfter { states, .. } => {
                if bad(states) {
                    return Err(Error::pre("always-after set names a missing state"));
                }
            }
            FairnessSpec::Image { source, map } => {
                if map.len() != source.lts.num_states() || map.0.iter().any(|&t| t >= n) {
                    return Err(Error::pre("image fairness map is not total"));
                }
            }
        }
        Ok(())
    }

    /// Exact fairness of a run given as a lasso.
    pub fn is_fair(&self, l: &Lasso) -> bool {
        match self {
            FairnessSpec::Streett(pairs) => {
                let cyc = l.cycle_states();
                pairs.iter().all(|(lo, up)| cyc.is_disjoint(lo) || !cyc.is_disjoint(up))
            }
            FairnessSpec::AlwaysAfter { offset, states, prefix } => {
                let horizon = offset.max(&prefix.len()) + l.stem.len() + l.cycle.len();
                l.trace().has_prefix(prefix) && (*offset..=horizon).all(|i| states.contains(&l.state_at(i)))
            }
            FairnessSpec::Image { source, map } => lift_fair(source, map, l),
        }
    }
}

/// Searches for a fair run of `source` whose image under `map` is `l`.
fn lift_fair(source: &FairLts, map: &StateMap, l: &Lasso) -> bool {
    let (pos, under) = l.positions();
    let init: Vec<Vec<usize>> =
        (0..source.lts.num_states()).filter(|&s| map.apply(s) == under[0]).map(|s| vec![s, 0]).collect();
    let q = product::Query {
        comps: vec![&source.lts, &pos],
        init,
        constraint: Box::new(|t: &[usize]| map.apply(t[0]) == under[t[1]]),
        conds: vec![(0, &source.fairness, Want::Fair)],
    };
    match product::find_run(q) {
        Ok(r) => r.is_some(),
        Err(e) => {
            log::warn!("lifting search failed: {e}");
            false
        }
    }
}

/// A system without silent steps together with its fairness predicate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FairLts {
    pub lts: Lts,
    pub fairness: FairnessSpec,
}

impl FairLts {
    pub fn new(lts: Lts, fairness: FairnessSpec) -> Result<FairLts> {
        if lts.has_tau() {
            return Err(Error::pre("fair systems may not use tau"));
        }
        fairness.check_states(lts.num_states())?;
        Ok(FairLts { lts, fairness })
    }

    pub fn is_fair(&self, l: &Lasso) -> bool {
        self.fairness.is_fair(l)
    }

    /// The subsystem on `states`, with fairness restricted to it.
    pub fn induced(&self, states: &[usize]) -> Result<FairLts> {
        let (lts, index) = self.lts.induced(states);
        let keep = |s: &BTreeSet<usize>| s.iter().filter_map(|&x| index[x]).collect::<BTreeSet<_>>();
        let fairness = match &self.fairness {
            FairnessSpec::Streett(pairs) => {
                FairnessSpec::Streett(pairs.iter().map(|(l, u)| (keep(l), keep(u))).collect())
            }
            FairnessSpec::AlwaysAfter { offset, states, prefix } => {
                FairnessSpec::AlwaysAfter { offset: *offset, states: keep(states), prefix: prefix.clone() }
            }
            FairnessSpec::Image { .. } => return Err(Error::Unsupported("restricting image fairness".into())),
        };
        FairLts::new(lts, fairness)
    }
}

/// Every lasso with stem at most `stem_bound` and cycle at most `cycle_bound` steps, in
/// canonical form, tagged with its fairness.
pub fn fair_lassos(fl: &FairLts, stem_bound: usize, cycle_bound: usize) -> Result<Vec<(Lasso, bool)>> {
    Ok(lassos(&fl.lts, stem_bound, cycle_bound)?
        .into_iter()
        .map(|l| {
            let fair = fl.is_fair(&l);
            (l, fair)
        })
        .collect())
}

/// All canonical lassos of a plain system within the bounds.
pub fn lassos(lts: &Lts, stem_bound: usize, cycle_bound: usize) -> Result<BTreeSet<Lasso>> {
    if cycle_bound == 0 {
        return Err(Error::pre("cycle bound must be at least 1"));
    }
    let mut out = BTreeSet::new();
    let mut stems: Vec<Execution> = (0..lts.num_states()).map(Execution::empty).collect();
    for depth in 0..=stem_bound {
        for stem in &stems {
            let entry = stem.last();
            let mut paths = vec![(entry, Vec::<(Label, usize)>::new())];
            for _ in 0..cycle_bound {
                let mut next = Vec::new();
                for (at, path) in &paths {
                    for (l, t) in lts.successors(*at) {
                        let mut p = path.clone();
                        p.push((l.clone(), *t));
                        if *t == entry {
                            out.insert(Lasso { stem: stem.clone(), cycle: p.clone() }.canonical());
                        }
                        next.push((*t, p));
                    }
                }
                paths = next;
            }
        }
        if depth < stem_bound {
            stems = stems
                .iter()
                .flat_map(|e| lts.successors(e.last()).iter().map(move |(l, t)| e.extended(l.clone(), *t)))
                .collect();
        }
    }
    Ok(out)
}

/// The JSON sidecar next to a `.aut` file: state names and an optional fairness declaration.
#[derive(Clone, Default, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(Vec<String>, Vec<String>)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Vec<String>>,
}

impl Sidecar {
    pub fn from_json(text: &str) -> Result<Sidecar> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    /// A sidecar carrying only the names of `lts`.
    pub fn names_of(lts: &Lts) -> Sidecar {
        Sidecar { names: Some(lts.names().to_vec()), ..Sidecar::default() }
    }

    /// Renames `lts` and resolves the fairness declaration against the new names.
    pub fn apply(&self, lts: Lts) -> Result<(Lts, Option<FairnessSpec>)> {
        let lts = match &self.names {
            Some(names) => lts.rename(names.clone())?,
            None => lts,
        };
        let resolve = |names: &[String]| -> Result<BTreeSet<usize>> {
            names
                .iter()
                .map(|n| lts.state(n).ok_or_else(|| Error::pre(format!("sidecar names unknown state {n}"))))
                .collect()
        };
        let spec = match self.kind.as_deref() {
            None => None,
            Some("streett") => {
                let pairs = self.pairs.as_deref().unwrap_or_default();
                let pairs = pairs.iter().map(|(l, u)| Ok((resolve(l)?, resolve(u)?))).collect::<Result<_>>()?;
                Some(FairnessSpec::Streett(pairs))
            }
            Some("always_after") => {
                let states = resolve(self.states.as_deref().unwrap_or_default())?;
                let prefix = Word(self.prefix.iter().flatten().map(|l| Label::parse(l)).collect());
                Some(FairnessSpec::AlwaysAfter { offset: self.offset.unwrap_or(0), states, prefix })
            }
            Some(other) => return Err(Error::Unsupported(format!("fairness kind `{other}`"))),
        };
        Ok((lts, spec))
    }
}
