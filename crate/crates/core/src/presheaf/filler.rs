//! Diagonal fillers for commuting squares and the finite square families used to test the
//! bisimulation-map property.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use super::{FinPresheaf, NatTrans};
use crate::error::{Error, Result};

/// Outcome of a filler search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Filler {
    Found(NatTrans),
    /// No filler; `elem` of `Q` at `point` is where the search ran out of candidates.
    Stuck {
        point: usize,
        elem: usize,
    },
}

/// Search for an assignment of `F`-elements to variables. Each variable lives at a point and
/// has a candidate domain; `children[v]` lists `(u, ...)` such that the value of `u` must be
/// the restriction of the value of `v`.
struct Csp<'a, P, T> {
    f: &'a FinPresheaf<P, T>,
    point: Vec<usize>,
    dom: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl<P: Clone + Eq + Hash + fmt::Debug, T> Csp<'_, P, T> {
    fn solve(&self) -> std::result::Result<Vec<usize>, usize> {
        let mut dom = self.dom.clone();
        if let Some(v) = (0..dom.len()).find(|&v| dom[v].is_empty()) {
            return Err(v);
        }
        let all = (0..dom.len()).collect();
        self.propagate(&mut dom, all)?;
        let mut order: Vec<usize> = (0..dom.len()).collect();
        order.sort_by_key(|&v| (self.point[v], v));
        match self.search(&dom, &order, 0) {
            Some(sol) => Ok(sol),
            None => Err(order.iter().copied().find(|&v| dom[v].len() > 1).unwrap_or(order[0])),
        }
    }

    fn search(&self, dom: &[Vec<usize>], order: &[usize], from: usize) -> Option<Vec<usize>> {
        let Some(pos) = (from..order.len()).find(|&i| dom[order[i]].len() > 1) else {
            return Some(dom.iter().map(|d| d[0]).collect());
        };
        let v = order[pos];
        for &x in &dom[v] {
            let mut d = dom.to_vec();
            d[v] = vec![x];
            if self.propagate(&mut d, vec![v]).is_ok() {
                if let Some(sol) = self.search(&d, order, pos + 1) {
                    return Some(sol);
                }
            }
        }
        None
    }

    /// Arc consistency along parent/child edges; fails with the first variable left empty.
    fn propagate(&self, dom: &mut [Vec<usize>], seeds: Vec<usize>) -> std::result::Result<(), usize> {
        let mut queue: VecDeque<usize> = seeds.into();
        let mut queued = vec![false; dom.len()];
        for &v in &queue {
            queued[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            let edges = self.children[v].iter().map(|&c| (v, c)).chain(self.parents[v].iter().map(|&p| (p, v)));
            for (p, c) in edges.collect::<Vec<_>>() {
                let r = self.f.res_map(self.point[p], self.point[c]);
                let keep_p: Vec<usize> =
                    dom[p].iter().copied().filter(|&x| dom[c].binary_search(&r[x]).is_ok()).collect();
                let mut img: Vec<usize> = keep_p.iter().map(|&x| r[x]).collect();
                img.sort_unstable();
                img.dedup();
                let keep_c: Vec<usize> = dom[c].iter().copied().filter(|y| img.binary_search(y).is_ok()).collect();
                for (w, keep) in [(p, keep_p), (c, keep_c)] {
                    if keep.len() != dom[w].len() {
                        if keep.is_empty() {
                            return Err(w);
                        }
                        dom[w] = keep;
                        if !queued[w] {
                            queued[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Looks for `k: Q -> F` with `k∘g = m` and `f∘k = n`, given the commuting square
/// `f∘m = n∘g` with `g` mono.
#[allow(clippy::too_many_arguments)]
pub fn find_filler<P, A, B, C, D>(
    p: &FinPresheaf<P, A>,
    q: &FinPresheaf<P, B>,
    fs: &FinPresheaf<P, C>,
    gs: &FinPresheaf<P, D>,
    g: &NatTrans,
    m: &NatTrans,
    n: &NatTrans,
    f: &NatTrans,
) -> Result<Filler>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    let base = q.base();
    if !g.is_mono() {
        return Err(Error::pre("left side of the square is not a mono"));
    }
    if (0..base.len()).any(|e| n.component(e).iter().any(|&j| j >= gs.stage(e).len())) {
        return Err(Error::pre("bottom map does not land in the target"));
    }
    for e in 0..base.len() {
        for i in 0..p.stage(e).len() {
            if f.apply(e, m.apply(e, i)) != n.apply(e, g.apply(e, i)) {
                return Err(Error::pre(format!("square does not commute at {:?}", base.elem(e))));
            }
        }
    }
    let mut var = HashMap::new();
    let mut point = Vec::new();
    let mut dom = Vec::new();
    for e in 0..base.len() {
        let pinned: HashMap<usize, usize> = (0..p.stage(e).len()).map(|i| (g.apply(e, i), m.apply(e, i))).collect();
        for j in 0..q.stage(e).len() {
            var.insert((e, j), point.len());
            point.push(e);
            let want = n.apply(e, j);
            dom.push(match pinned.get(&j) {
                Some(&x) => vec![x],
                None => (0..fs.stage(e).len()).filter(|&x| f.apply(e, x) == want).collect(),
            });
        }
    }
    let mut children = vec![Vec::new(); point.len()];
    let mut parents = vec![Vec::new(); point.len()];
    for e in 0..base.len() {
        for &lo in base.lower_covers(e) {
            for j in 0..q.stage(e).len() {
                let (v, u) = (var[&(e, j)], var[&(lo, q.restrict(e, j, lo))]);
                children[v].push(u);
                parents[u].push(v);
            }
        }
    }
    let csp = Csp { f: fs, point, dom, children, parents };
    let keys: Vec<(usize, usize)> = {
        let mut k: Vec<_> = var.iter().map(|(&key, &v)| (v, key)).collect();
        k.sort();
        k.into_iter().map(|(_, key)| key).collect()
    };
    Ok(match csp.solve() {
        Ok(sol) => {
            let mut comps: Vec<Vec<usize>> = (0..base.len()).map(|e| vec![0; q.stage(e).len()]).collect();
            for (v, &(e, j)) in keys.iter().enumerate() {
                comps[e][j] = sol[v];
            }
            Filler::Found(NatTrans::from_components(comps))
        }
        Err(v) => Filler::Stuck { point: keys[v].0, elem: keys[v].1 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareFamily {
    /// `↓p ↪ ↓q` for an element `q` of `G` and a lift `p` of one of its restrictions. Covers
    /// path extensions and, at infinite points, prefix chains with a limit.
    Extension,
    /// `∅ ↪ G` with `n` the identity: a filler is a section of `f`.
    Retract,
    /// `Q` generated by two elements of the same stage.
    Pair,
}

impl fmt::Display for SquareFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SquareFamily::Extension => "extension",
            SquareFamily::Retract => "retract",
            SquareFamily::Pair => "pair",
        })
    }
}

/// A commuting square over `f: F -> G` whose `Q` is a subpresheaf of `G` (with `n` the
/// inclusion) and whose `P` is a subpresheaf of `F` mapped by `f` injectively into `Q`.
#[derive(Clone, Debug)]
pub struct Square {
    pub family: SquareFamily,
    /// The `G`-element generating `Q`, when there is a single one.
    pub top: Option<(usize, usize)>,
    /// Elements of `Q` as `(point, index in G)`, closed under restriction.
    pub q: Vec<(usize, usize)>,
    /// `P` given by the `F`-element each pinned `Q`-element must be filled with.
    pub pins: Vec<((usize, usize), usize)>,
}

impl Square {
    /// The square as explicit presheaves `P`, `Q` (elements are indices into `F`, `G`) and
    /// the maps `g`, `m`, `n`.
    pub fn materialize<P, T, U>(
        &self,
        fs: &FinPresheaf<P, T>,
        gs: &FinPresheaf<P, U>,
    ) -> (FinPresheaf<P, usize>, FinPresheaf<P, usize>, NatTrans, NatTrans, NatTrans)
    where
        P: Clone + Eq + Hash + fmt::Debug,
    {
        let base = gs.base().clone();
        let mut qs: Vec<Vec<usize>> = vec![Vec::new(); base.len()];
        for &(e, j) in &self.q {
            qs[e].push(j);
        }
        let mut ps: Vec<Vec<usize>> = vec![Vec::new(); base.len()];
        for &((e, _), x) in &self.pins {
            ps[e].push(x);
        }
        let q = FinPresheaf::build(base.clone(), qs, |&j, from, to| gs.restrict(from, j, to)).expect("Q is closed");
        let p = FinPresheaf::build(base.clone(), ps, |&x, from, to| fs.restrict(from, x, to)).expect("P is closed");
        let pin_of: HashMap<(usize, usize), (usize, usize)> =
            self.pins.iter().map(|&((e, j), x)| ((e, x), (e, j))).collect();
        let g = NatTrans::try_build(&p, &q, |e, &x| pin_of[&(e, x)].1).expect("g lands in Q");
        let m = NatTrans::from_components(p.stages().to_vec());
        let n = NatTrans::from_components(q.stages().to_vec());
        (p, q, g, m, n)
    }
}

/// Preimages of every `G`-element under `f`, per point.
fn preimages<P: Clone + Eq + Hash + fmt::Debug, U>(gs: &FinPresheaf<P, U>, f: &NatTrans) -> Vec<Vec<Vec<usize>>> {
    (0..gs.base().len())
        .map(|e| {
            let mut pre = vec![Vec::new(); gs.stage(e).len()];
            for (x, &y) in f.component(e).iter().enumerate() {
                pre[y].push(x);
            }
            pre
        })
        .collect()
}

const PAIR_BUDGET: usize = 4096;

/// The squares over `f` used as a finite test basis: extension squares (always), the retract
/// square (always), then squares generated by two same-stage elements within the bounds.
pub fn enumerate_mono_squares<'a, P, T, U>(
    fs: &'a FinPresheaf<P, T>,
    gs: &'a FinPresheaf<P, U>,
    f: &'a NatTrans,
    stage_bound: usize,
    support_bound: usize,
) -> Result<Box<dyn Iterator<Item = Square> + 'a>>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    if stage_bound == 0 || support_bound == 0 {
        return Err(Error::pre("square bounds must be at least 1"));
    }
    let base = gs.base().clone();
    let pre = preimages(gs, f);
    let down = move |e: usize, j: usize| -> Vec<(usize, usize)> {
        gs.base().below(e).into_iter().map(|lo| (lo, gs.restrict(e, j, lo))).collect()
    };
    let pre1 = pre.clone();
    let extension = (0..base.len()).flat_map(move |e| {
        let pre = pre1.clone();
        (0..gs.stage(e).len()).flat_map(move |j| {
            let pre = pre.clone();
            let q = down(e, j);
            gs.base().below(e).into_iter().filter(move |&lo| lo != e).flat_map(move |lo| {
                let c = gs.restrict(e, j, lo);
                let q = q.clone();
                pre[lo][c].clone().into_iter().map(move |x| {
                    let pins = fs
                        .base()
                        .below(lo)
                        .into_iter()
                        .map(|l| ((l, gs.restrict(e, j, l)), fs.restrict(lo, x, l)))
                        .collect();
                    Square { family: SquareFamily::Extension, top: Some((e, j)), q: q.clone(), pins }
                })
            })
        })
    });
    let retract = std::iter::once_with(move || Square {
        family: SquareFamily::Retract,
        top: None,
        q: (0..gs.base().len()).flat_map(|e| (0..gs.stage(e).len()).map(move |j| (e, j))).collect(),
        pins: Vec::new(),
    });
    let pairs = (0..base.len())
        .filter(move |&e| stage_bound >= 2 && gs.base().below(e).len() <= support_bound)
        .flat_map(move |e| {
            let pre = pre.clone();
            (0..gs.stage(e).len()).flat_map(move |i| {
                let pre = pre.clone();
                (i + 1..gs.stage(e).len()).flat_map(move |j| {
                    let mut q = down(e, i);
                    q.extend(down(e, j));
                    q.sort_unstable();
                    q.dedup();
                    // Highest point where the two generators agree, if any.
                    let common =
                        gs.base().below(e).into_iter().rev().find(|&lo| gs.restrict(e, i, lo) == gs.restrict(e, j, lo));
                    let mut out =
                        vec![Square { family: SquareFamily::Pair, top: None, q: q.clone(), pins: Vec::new() }];
                    if let Some(lo) = common {
                        let c = gs.restrict(e, i, lo);
                        for &x in &pre[lo][c] {
                            let pins = fs
                                .base()
                                .below(lo)
                                .into_iter()
                                .map(|l| ((l, gs.restrict(e, i, l)), fs.restrict(lo, x, l)))
                                .collect();
                            out.push(Square { family: SquareFamily::Pair, top: None, q: q.clone(), pins });
                        }
                    }
                    out
                })
            })
        })
        .take(PAIR_BUDGET);
    Ok(Box::new(extension.chain(retract).chain(pairs)))
}

/// Where a square without filler got stuck.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareWitness {
    pub family: SquareFamily,
    /// Generator of the square, as in [`Square::top`].
    pub top: Option<(usize, usize)>,
    pub point: usize,
    /// Index into the stage of `G`.
    pub elem: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisimMapReport {
    pub holds: bool,
    pub witness: Option<SquareWitness>,
    pub squares: usize,
}

/// Runs the filler search on every enumerated square. `false` is definitive; `true` holds up
/// to the enumerated squares.
pub fn is_bisim_map_bounded<P, T, U>(
    fs: &FinPresheaf<P, T>,
    gs: &FinPresheaf<P, U>,
    f: &NatTrans,
    stage_bound: usize,
    support_bound: usize,
) -> Result<BisimMapReport>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    if let Some((from, to, _)) = f.naturality_failure(fs, gs) {
        return Err(Error::pre(format!(
            "map is not natural on {:?} -> {:?}",
            fs.base().elem(from),
            fs.base().elem(to)
        )));
    }
    let pre = preimages(gs, f);
    let mut squares = 0;
    for sq in enumerate_mono_squares(fs, gs, f, stage_bound, support_bound)? {
        squares += 1;
        if let Err((point, elem)) = solve_square(fs, gs, &pre, &sq)? {
            return Ok(BisimMapReport {
                holds: false,
                witness: Some(SquareWitness { family: sq.family, top: sq.top, point, elem }),
                squares,
            });
        }
    }
    Ok(BisimMapReport { holds: true, witness: None, squares })
}

/// Filler search specialised to subpresheaf squares; returns the stuck `(point, G-element)`.
fn solve_square<P, T, U>(
    fs: &FinPresheaf<P, T>,
    gs: &FinPresheaf<P, U>,
    pre: &[Vec<Vec<usize>>],
    sq: &Square,
) -> Result<std::result::Result<Vec<usize>, (usize, usize)>>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    let var: HashMap<(usize, usize), usize> = sq.q.iter().enumerate().map(|(v, &k)| (k, v)).collect();
    let pins: HashMap<(usize, usize), usize> = sq.pins.iter().copied().collect();
    let point: Vec<usize> = sq.q.iter().map(|&(e, _)| e).collect();
    let dom: Vec<Vec<usize>> =
        sq.q.iter()
            .map(|&(e, j)| match pins.get(&(e, j)) {
                Some(&x) => vec![x],
                None => pre[e][j].clone(),
            })
            .collect();
    let mut children = vec![Vec::new(); sq.q.len()];
    let mut parents = vec![Vec::new(); sq.q.len()];
    for (v, &(e, j)) in sq.q.iter().enumerate() {
        for &lo in gs.base().lower_covers(e) {
            let u = *var
                .get(&(lo, gs.restrict(e, j, lo)))
                .ok_or_else(|| Error::Internal("square Q is not closed under restriction".into()))?;
            children[v].push(u);
            parents[u].push(v);
        }
    }
    let csp = Csp { f: fs, point, dom, children, parents };
    Ok(csp.solve().map_err(|v| sq.q[v]))
}
