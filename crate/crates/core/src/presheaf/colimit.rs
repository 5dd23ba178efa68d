//! Colimits of a presheaf over an up-set of its base, and the left Kan extension along a
//! monotone map computed from them.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use super::{FinPoset, FinPresheaf, MonotoneMap};
use crate::error::{Error, Result};

/// Equivalence classes of `(point, element)` pairs. Each class is represented by its element
/// at the least point of the class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Colimit {
    pub classes: Vec<(usize, usize)>,
    class_of: HashMap<(usize, usize), usize>,
}

impl Colimit {
    pub fn class_of(&self, point: usize, elem: usize) -> Option<usize> {
        self.class_of.get(&(point, elem)).copied()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// The colimit of `f` restricted to `index`, glued along restrictions inside the index.
/// Errors when two index points have common lower bounds in the index but no greatest one.
pub fn filtered_colimit<P, T>(f: &FinPresheaf<P, T>, index: &[usize]) -> Result<Colimit>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    let base = f.base();
    let mut index = index.to_vec();
    index.sort_unstable();
    index.dedup();
    for (a, &i) in index.iter().enumerate() {
        for &j in &index[a + 1..] {
            let lower: Vec<usize> = index.iter().copied().filter(|&k| base.leq(k, i) && base.leq(k, j)).collect();
            if !lower.is_empty() && !lower.iter().any(|&k| lower.iter().all(|&l| base.leq(l, k))) {
                return Err(Error::pre(format!(
                    "index is not meet-closed at {:?} and {:?}",
                    base.elem(i),
                    base.elem(j)
                )));
            }
        }
    }
    let mut slot = HashMap::new();
    let mut pairs = Vec::new();
    for &e in &index {
        for x in 0..f.stage(e).len() {
            slot.insert((e, x), pairs.len());
            pairs.push((e, x));
        }
    }
    let mut parent: Vec<usize> = (0..pairs.len()).collect();
    for &e in &index {
        for &lo in &index {
            if lo != e && base.leq(lo, e) {
                for x in 0..f.stage(e).len() {
                    let a = find(&mut parent, slot[&(e, x)]);
                    let b = find(&mut parent, slot[&(lo, f.restrict(e, x, lo))]);
                    // Keep the root at the smaller slot so roots are least-point representatives.
                    let (lo_root, hi_root) = if a < b { (a, b) } else { (b, a) };
                    parent[hi_root] = lo_root;
                }
            }
        }
    }
    let mut classes = Vec::new();
    let mut root_class = HashMap::new();
    let mut class_of = HashMap::new();
    for (s, &pair) in pairs.iter().enumerate() {
        let r = find(&mut parent, s);
        let c = *root_class.entry(r).or_insert_with(|| {
            classes.push(pairs[r]);
            classes.len() - 1
        });
        class_of.insert(pair, c);
    }
    Ok(Colimit { classes, class_of })
}

fn check_map<P, Q>(h: &MonotoneMap, source: &FinPoset<P>, target: &FinPoset<Q>) -> Result<()>
where
    P: Clone + Eq + Hash + fmt::Debug,
    Q: Clone + Eq + Hash + fmt::Debug,
{
    if h.map.len() != source.len() || h.map.iter().any(|&i| i >= target.len()) {
        return Err(Error::pre("monotone map does not fit the posets"));
    }
    Ok(())
}

/// Points `σ` of the source with `ϱ <= h(σ)`.
fn index_of<Q>(h: &MonotoneMap, target: &FinPoset<Q>, rho: usize) -> Vec<usize>
where
    Q: Clone + Eq + Hash + fmt::Debug,
{
    (0..h.map.len()).filter(|&s| target.leq(rho, h.apply(s))).collect()
}

/// The left Kan extension of `f` along `h`. The stage at `ϱ` is the colimit over all source
/// points `σ` with `ϱ <= h(σ)`; its elements are `(σ, x)` with `σ` least in the class.
pub fn left_kan<P, Q, T>(
    h: &MonotoneMap,
    f: &FinPresheaf<P, T>,
    target: Arc<FinPoset<Q>>,
) -> Result<FinPresheaf<Q, (usize, T)>>
where
    P: Clone + Eq + Hash + fmt::Debug,
    Q: Clone + Eq + Hash + fmt::Debug,
    T: Clone + Ord + fmt::Debug,
{
    check_map(h, f.base(), &target)?;
    let cols =
        (0..target.len()).map(|rho| filtered_colimit(f, &index_of(h, &target, rho))).collect::<Result<Vec<_>>>()?;
    let stages: Vec<Vec<(usize, T)>> =
        cols.iter().map(|c| c.classes.iter().map(|&(s, x)| (s, f.stage(s)[x].clone())).collect()).collect();
    let mut order = Vec::new();
    let mut sorted = Vec::new();
    for st in stages {
        let mut perm: Vec<usize> = (0..st.len()).collect();
        perm.sort_by(|&a, &b| st[a].cmp(&st[b]));
        let mut pos = vec![0; st.len()];
        for (k, &i) in perm.iter().enumerate() {
            pos[i] = k;
        }
        sorted.push(perm.iter().map(|&i| st[i].clone()).collect::<Vec<_>>());
        order.push(pos);
    }
    let mut res = HashMap::new();
    for rho in 0..target.len() {
        for to in target.below(rho) {
            let mut map = vec![0; sorted[rho].len()];
            for (c, &(s, x)) in cols[rho].classes.iter().enumerate() {
                let d =
                    cols[to].class_of(s, x).ok_or_else(|| Error::Internal("colimit index is not monotone".into()))?;
                map[order[rho][c]] = order[to][d];
            }
            res.insert((rho, to), map);
        }
    }
    Ok(FinPresheaf::from_parts(target, sorted, res))
}

/// The same extension assembled from its connected components: the stage at `ϱ` is the
/// disjoint union of `f(σ)` over the least points `σ` of the index, and the action restricts
/// to the least point below `σ` in the smaller index. Needs a base where every down-set is a
/// chain.
pub fn left_kan_by_components<P, Q, T>(
    h: &MonotoneMap,
    f: &FinPresheaf<P, T>,
    target: Arc<FinPoset<Q>>,
) -> Result<FinPresheaf<Q, (usize, T)>>
where
    P: Clone + Eq + Hash + fmt::Debug,
    Q: Clone + Eq + Hash + fmt::Debug,
    T: Clone + Ord + fmt::Debug,
{
    check_map(h, f.base(), &target)?;
    let base = f.base();
    if (0..base.len()).any(|s| base.lower_covers(s).len() > 1) {
        return Err(Error::Unsupported("component decomposition needs a forest base".into()));
    }
    let indices: Vec<Vec<usize>> = (0..target.len()).map(|rho| index_of(h, &target, rho)).collect();
    let least_below = |rho: usize, s: usize| -> usize {
        base.below(s).into_iter().find(|&k| indices[rho].binary_search(&k).is_ok()).expect("s is in the index")
    };
    let stages: Vec<Vec<(usize, T)>> = (0..target.len())
        .map(|rho| {
            indices[rho]
                .iter()
                .copied()
                .filter(|&s| least_below(rho, s) == s)
                .flat_map(|s| f.stage(s).iter().map(move |x| (s, x.clone())))
                .collect()
        })
        .collect();
    FinPresheaf::build(target, stages, |(s, x), _, to| {
        let i = f.find(*s, x).expect("element of its stage");
        let lo = least_below(to, *s);
        (lo, f.stage(lo)[f.restrict(*s, i, lo)].clone())
    })
}

#[cfg(test)]
mod tests {
    use super::super::{word_poset, Point};
    use super::*;
    use crate::lts::{Execution, Label, Lts};

    fn chain() -> Lts {
        Lts::from_named(&["x0", "x1", "x2"], &[("x0", "tau", "x1"), ("x1", "a", "x2")]).unwrap()
    }

    fn exec_presheaf(x: &Lts, letters: &[Label], depth: usize) -> FinPresheaf<Point, Execution> {
        let base = word_poset(letters, depth);
        let stages = base.elems().iter().map(|p| x.executions_on(p.as_word().unwrap())).collect();
        FinPresheaf::build(base.clone(), stages, |e, _, to| e.restrict(base.elem(to).as_word().unwrap()).unwrap())
            .unwrap()
    }

    fn hiding(f: &FinPresheaf<Point, Execution>, depth: usize) -> (MonotoneMap, Arc<FinPoset<Point>>) {
        let target = word_poset(&[Label::act("a")], depth);
        let h = MonotoneMap::new(f.base(), &target, |p| Point::Word(p.as_word().unwrap().hide())).unwrap();
        (h, target)
    }

    #[test]
    fn chain_colimit_at_eps_is_the_states() {
        let f = exec_presheaf(&chain(), &[Label::Tau, Label::act("a")], 2);
        let all: Vec<usize> = (0..f.base().len()).collect();
        let c = filtered_colimit(&f, &all).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.classes.iter().all(|&(s, _)| s == 0));
        let single = filtered_colimit(&f, &[1]).unwrap();
        assert_eq!(single.len(), f.stage(1).len());
    }

    #[test]
    fn kan_extension_of_chain() {
        let f = exec_presheaf(&chain(), &[Label::Tau, Label::act("a")], 3);
        let (h, target) = hiding(&f, 3);
        let k = left_kan(&h, &f, target.clone()).unwrap();
        assert_eq!(k.validate(), None);
        let a = target.index_of(&Point::word("a")).unwrap();
        let traces: Vec<String> = k.stage(a).iter().map(|(_, e)| e.trace.to_string()).collect();
        assert_eq!(traces, vec!["a", "tau.a"]);
        let long = k.stage(a).iter().position(|(_, e)| e.states == vec![0, 1, 2]).unwrap();
        let down = k.restrict(a, long, 0);
        assert_eq!(k.stage(0)[down].1, Execution::empty(0));
        let other = left_kan_by_components(&h, &f, target).unwrap();
        assert_eq!(other.stages(), k.stages());
        for from in 0..k.base().len() {
            for to in k.base().below(from) {
                assert_eq!(other.res_map(from, to), k.res_map(from, to));
            }
        }
    }

    #[test]
    fn kan_extension_along_identity() {
        let x = Lts::from_named(&["p", "q"], &[("p", "a", "q"), ("q", "b", "p")]).unwrap();
        let f = exec_presheaf(&x, &[Label::act("a"), Label::act("b")], 3);
        let id = MonotoneMap::identity(f.base().len());
        let k = left_kan(&id, &f, f.base().clone()).unwrap();
        for e in 0..f.base().len() {
            let plain: Vec<Execution> = k.stage(e).iter().map(|(_, x)| x.clone()).collect();
            assert_eq!(plain, f.stage(e));
            assert!(k.stage(e).iter().all(|&(s, _)| s == e));
        }
    }

    #[test]
    fn non_meet_closed_index_is_rejected() {
        let base = Arc::new(
            FinPoset::new(vec!["l", "r", "u", "v"], |a: &&str, b: &&str| {
                a == b || (matches!(*a, "l" | "r") && matches!(*b, "u" | "v"))
            })
            .unwrap(),
        );
        let f = FinPresheaf::build(base, vec![vec![0]; 4], |x, _, _| *x).unwrap();
        assert!(filtered_colimit(&f, &[0, 1, 2, 3]).is_err());
        assert_eq!(filtered_colimit(&f, &[0, 2, 3]).unwrap().len(), 1);
    }
}
