//! Label-synchronised products of systems and the search for runs through them whose
//! projections are fair or unfair as requested.
//!
//! Fairness of a projection is reduced to a Streett condition on the product: Streett pairs
//! carry over directly, negated Streett becomes a choice of one violated pair, and the
//! always-after predicate becomes a safety flag tracked alongside each product state.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::lts::{Execution, FairnessSpec, Label, Lasso, Lts};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Want {
    Fair,
    Unfair,
}

pub(crate) type Constraint<'a> = Box<dyn Fn(&[usize]) -> bool + 'a>;

/// Runs of `comps` moving in lockstep on equal labels, starting from one of `init`, staying
/// inside `constraint`, and meeting every fairness condition in `conds`.
pub(crate) struct Query<'a> {
    pub comps: Vec<&'a Lts>,
    pub init: Vec<Vec<usize>>,
    pub constraint: Constraint<'a>,
    pub conds: Vec<(usize, &'a FairnessSpec, Want)>,
}

/// Finds a run satisfying the query and returns its projection on every original component.
/// Image fairness is supported only where it is wanted fair.
pub(crate) fn find_run(q: Query<'_>) -> Result<Option<Vec<Lasso>>> {
    let original = q.comps.len();
    let q = expand_images(q)?;
    let tracks: Vec<Track> = q
        .conds
        .iter()
        .map(|(c, spec, want)| match spec {
            FairnessSpec::AlwaysAfter { offset, states, prefix } => Track::Safety {
                comp: *c,
                offset: *offset,
                cap: (*offset).max(prefix.len()),
                states: states.iter().copied().collect(),
                prefix: prefix.letters().to_vec(),
                want: *want,
            },
            FairnessSpec::Streett(pairs) => Track::Streett { comp: *c, pairs: pairs.clone(), want: *want },
            FairnessSpec::Image { .. } => unreachable!("images expanded"),
        })
        .collect();
    let g = build(&q.comps, &q.init, q.constraint.as_ref(), &tracks);

    // Safety tracks restrict where the cycle may live.
    let mut cycle_ok = vec![true; g.nodes.len()];
    let mut pairs: Vec<(Vec<bool>, Vec<bool>)> = Vec::new();
    // Per unfair track, one option per pair it may violate: the nodes the cycle may use and
    // an extra Streett pair the cycle must meet.
    let mut choices: Vec<Vec<Masks>> = Vec::new();
    let mut safety = 0;
    for t in &tracks {
        match t {
            Track::Safety { want, .. } => {
                for (i, n) in g.nodes.iter().enumerate() {
                    let violated = n.aux[safety].1;
                    if violated != (*want == Want::Unfair) {
                        cycle_ok[i] = false;
                    }
                }
                safety += 1;
            }
            Track::Streett { comp, pairs: ps, want: Want::Fair } => {
                for (lo, up) in ps {
                    let l = g.nodes.iter().map(|n| lo.contains(&n.tuple[*comp])).collect();
                    let u = g.nodes.iter().map(|n| up.contains(&n.tuple[*comp])).collect();
                    pairs.push((l, u));
                }
            }
            Track::Streett { comp, pairs: ps, want: Want::Unfair } => {
                // Violating pair j: cycle avoids U_j and visits L_j.
                let opts = ps
                    .iter()
                    .map(|(lo, up)| {
                        let allowed = g.nodes.iter().map(|n| !up.contains(&n.tuple[*comp])).collect();
                        let all = vec![true; g.nodes.len()];
                        let l = g.nodes.iter().map(|n| lo.contains(&n.tuple[*comp])).collect();
                        (allowed, all, l)
                    })
                    .collect();
                choices.push(opts);
            }
        }
    }
    let mut pick = vec![0usize; choices.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(None);
    }
    loop {
        let mut ok = cycle_ok.clone();
        let mut ps = pairs.clone();
        for (c, &j) in choices.iter().zip(&pick) {
            let (allowed, all, l) = &c[j];
            for (o, a) in ok.iter_mut().zip(allowed) {
                *o &= *a;
            }
            ps.push((all.clone(), l.clone()));
        }
        if let Some(run) = streett_lasso(&g, &ok, &ps) {
            return Ok(Some(project(&g, &run, original)));
        }
        // Next combination of violated pairs.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Ok(None);
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Replaces every wanted-fair image condition by a witness component of the source system.
fn expand_images(mut q: Query<'_>) -> Result<Query<'_>> {
    while let Some(pos) = q.conds.iter().position(|(_, s, _)| matches!(s, FairnessSpec::Image { .. })) {
        let (c, spec, want) = q.conds.remove(pos);
        let FairnessSpec::Image { source, map } = spec else { unreachable!() };
        if want == Want::Unfair {
            return Err(Error::Unsupported("exact search for runs with unfair image".into()));
        }
        let k = q.comps.len();
        q.comps.push(&source.lts);
        q.init = q
            .init
            .iter()
            .flat_map(|t| {
                (0..source.lts.num_states()).filter(|&s| map.apply(s) == t[c]).map(|s| {
                    let mut t = t.clone();
                    t.push(s);
                    t
                })
            })
            .collect();
        let prev = q.constraint;
        q.constraint = Box::new(move |t: &[usize]| map.apply(t[k]) == t[c] && prev(t));
        q.conds.push((k, &source.fairness, Want::Fair));
    }
    Ok(q)
}

/// Node masks: allowed cycle nodes, then a Streett pair as (lower, upper).
type Masks = (Vec<bool>, Vec<bool>, Vec<bool>);

enum Track {
    Safety {
        comp: usize,
        offset: usize,
        cap: usize,
        states: Vec<usize>,
        prefix: Vec<Label>,
        want: Want,
    },
    Streett {
        comp: usize,
        pairs: Vec<(std::collections::BTreeSet<usize>, std::collections::BTreeSet<usize>)>,
        want: Want,
    },
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Node {
    tuple: Vec<usize>,
    /// Per safety track: position (capped) and whether the predicate was already broken.
    aux: Vec<(usize, bool)>,
}

struct Graph {
    nodes: Vec<Node>,
    succ: Vec<Vec<(Label, usize)>>,
    init: Vec<usize>,
}

fn build(comps: &[&Lts], init: &[Vec<usize>], constraint: &dyn Fn(&[usize]) -> bool, tracks: &[Track]) -> Graph {
    let safety: Vec<&Track> = tracks.iter().filter(|t| matches!(t, Track::Safety { .. })).collect();
    let start_aux = |tuple: &[usize]| -> Vec<(usize, bool)> {
        safety
            .iter()
            .map(|t| match t {
                Track::Safety { comp, offset, states, .. } => (0, *offset == 0 && !states.contains(&tuple[*comp])),
                _ => unreachable!(),
            })
            .collect()
    };
    let step_aux = |aux: &[(usize, bool)], l: &Label, tuple: &[usize]| -> Vec<(usize, bool)> {
        safety
            .iter()
            .zip(aux)
            .map(|(t, &(pos, bad))| match t {
                Track::Safety { comp, offset, cap, states, prefix, .. } => {
                    let i = pos + 1;
                    let bad = bad
                        || (i <= prefix.len() && prefix[i - 1] != *l)
                        || (i >= *offset && !states.contains(&tuple[*comp]));
                    (i.min(*cap), bad)
                }
                _ => unreachable!(),
            })
            .collect()
    };

    let mut index: HashMap<Node, usize> = HashMap::new();
    let mut g = Graph { nodes: Vec::new(), succ: Vec::new(), init: Vec::new() };
    let mut queue = VecDeque::new();
    let intern = |n: Node, g: &mut Graph, index: &mut HashMap<Node, usize>, queue: &mut VecDeque<usize>| {
        *index.entry(n.clone()).or_insert_with(|| {
            g.nodes.push(n);
            g.succ.push(Vec::new());
            queue.push_back(g.nodes.len() - 1);
            g.nodes.len() - 1
        })
    };
    for t in init {
        if constraint(t) {
            let id = intern(Node { tuple: t.clone(), aux: start_aux(t) }, &mut g, &mut index, &mut queue);
            if !g.init.contains(&id) {
                g.init.push(id);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        let node = g.nodes[id].clone();
        let mut out = Vec::new();
        for (l, t0) in comps[0].successors(node.tuple[0]) {
            let mut partial = vec![vec![*t0]];
            for (c, lts) in comps.iter().enumerate().skip(1) {
                let nexts: Vec<usize> = lts.successors_on(node.tuple[c], l).collect();
                partial = partial
                    .into_iter()
                    .flat_map(|p| {
                        nexts.iter().map(move |&n| {
                            let mut p = p.clone();
                            p.push(n);
                            p
                        })
                    })
                    .collect();
            }
            for tuple in partial {
                if constraint(&tuple) {
                    let aux = step_aux(&node.aux, l, &tuple);
                    out.push((l.clone(), Node { tuple, aux }));
                }
            }
        }
        for (l, n) in out {
            let to = intern(n, &mut g, &mut index, &mut queue);
            g.succ[id].push((l, to));
        }
    }
    g
}

struct GraphRun {
    stem: Vec<usize>,
    stem_labels: Vec<Label>,
    cycle: Vec<(Label, usize)>,
}

/// Streett emptiness by repeated SCC refinement; returns a run whose cycle visits a whole
/// accepting component.
fn streett_lasso(g: &Graph, allowed: &[bool], pairs: &[(Vec<bool>, Vec<bool>)]) -> Option<GraphRun> {
    let mut work: Vec<Vec<usize>> = vec![(0..g.nodes.len()).filter(|&i| allowed[i]).collect()];
    while let Some(set) = work.pop() {
        for scc in sccs(g, &set) {
            let nontrivial = scc.len() > 1 || g.succ[scc[0]].iter().any(|(_, t)| *t == scc[0]);
            if !nontrivial {
                continue;
            }
            let bad: Vec<&(Vec<bool>, Vec<bool>)> =
                pairs.iter().filter(|(l, u)| scc.iter().any(|&v| l[v]) && !scc.iter().any(|&v| u[v])).collect();
            if bad.is_empty() {
                return Some(witness(g, &scc));
            }
            let rest: Vec<usize> = scc.into_iter().filter(|&v| !bad.iter().any(|(l, _)| l[v])).collect();
            if !rest.is_empty() {
                work.push(rest);
            }
        }
    }
    None
}

/// Strongly connected components of the subgraph induced by `set` (iterative Tarjan).
fn sccs(g: &Graph, set: &[usize]) -> Vec<Vec<usize>> {
    let mut inset = vec![false; g.nodes.len()];
    for &v in set {
        inset[v] = true;
    }
    let n = g.nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for &root in set {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if let Some((_, w)) = g.succ[v].get(*edge) {
                *edge += 1;
                let w = *w;
                if !inset[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Shortest stem into `scc`, then a closed walk inside it through all its nodes.
fn witness(g: &Graph, scc: &[usize]) -> GraphRun {
    let n = g.nodes.len();
    let mut prev: Vec<Option<(usize, Label)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &i in &g.init {
        seen[i] = true;
        queue.push_back(i);
    }
    let mut entry = None;
    while let Some(v) = queue.pop_front() {
        if scc.binary_search(&v).is_ok() {
            entry = Some(v);
            break;
        }
        for (l, w) in &g.succ[v] {
            if !seen[*w] {
                seen[*w] = true;
                prev[*w] = Some((v, l.clone()));
                queue.push_back(*w);
            }
        }
    }
    let entry = entry.expect("accepting component is reachable");
    let mut stem = vec![entry];
    let mut stem_labels = Vec::new();
    let mut at = entry;
    while let Some((p, l)) = prev[at].clone() {
        stem.push(p);
        stem_labels.push(l);
        at = p;
    }
    stem.reverse();
    stem_labels.reverse();

    let inside = |v: usize| scc.binary_search(&v).is_ok();
    let path = |from: usize, to: usize, must_move: bool| -> Vec<(Label, usize)> {
        let mut prev: HashMap<usize, (usize, Label)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut found = !must_move && from == to;
        while !found {
            let v = queue.pop_front().expect("component is strongly connected");
            for (l, w) in &g.succ[v] {
                if inside(*w) && !prev.contains_key(w) {
                    prev.insert(*w, (v, l.clone()));
                    if *w == to {
                        found = true;
                        break;
                    }
                    queue.push_back(*w);
                }
            }
        }
        let mut steps = Vec::new();
        let mut at = to;
        while at != from || (must_move && steps.is_empty()) {
            let (p, l) = prev[&at].clone();
            steps.push((l, at));
            at = p;
        }
        steps.reverse();
        steps
    };
    let mut cycle = Vec::new();
    let mut visited = vec![false; n];
    visited[entry] = true;
    let mut at = entry;
    for &v in scc {
        if !visited[v] {
            for (l, w) in path(at, v, false) {
                visited[w] = true;
                cycle.push((l, w));
            }
            at = v;
        }
    }
    cycle.extend(path(at, entry, cycle.is_empty()));
    GraphRun { stem, stem_labels, cycle }
}

fn project(g: &Graph, run: &GraphRun, comps: usize) -> Vec<Lasso> {
    (0..comps)
        .map(|c| {
            let stem = Execution {
                trace: crate::lts::Word(run.stem_labels.clone()),
                states: run.stem.iter().map(|&v| g.nodes[v].tuple[c]).collect(),
            };
            let cycle = run.cycle.iter().map(|(l, v)| (l.clone(), g.nodes[*v].tuple[c])).collect();
            Lasso::new(stem, cycle).expect("projection of a product run is a lasso")
        })
        .collect()
}

/// Runs of the plain product (no fairness bookkeeping) with stem at most `stem_bound` and
/// cycle at most `cycle_bound` steps, projected on each component, shortest stems first.
/// Returns the first run `accept` takes; every distinct run is offered once.
pub(crate) fn bounded_runs(
    comps: &[&Lts],
    init: &[Vec<usize>],
    constraint: &dyn Fn(&[usize]) -> bool,
    stem_bound: usize,
    cycle_bound: usize,
    accept: &mut dyn FnMut(&[Lasso]) -> bool,
) -> Option<Vec<Lasso>> {
    let g = build(comps, init, constraint, &[]);
    let mut seen = std::collections::BTreeSet::new();
    let mut stems: Vec<(Vec<usize>, Vec<Label>)> = g.init.iter().map(|&i| (vec![i], Vec::new())).collect();
    for depth in 0..=stem_bound {
        for (nodes, labels) in &stems {
            let entry = *nodes.last().unwrap();
            let mut paths: Vec<(usize, Vec<(Label, usize)>)> = vec![(entry, Vec::new())];
            for _ in 0..cycle_bound {
                let mut next = Vec::new();
                for (at, p) in &paths {
                    for (l, w) in &g.succ[*at] {
                        let mut p = p.clone();
                        p.push((l.clone(), *w));
                        if *w == entry {
                            let run = GraphRun { stem: nodes.clone(), stem_labels: labels.clone(), cycle: p.clone() };
                            let proj = project(&g, &run, comps.len());
                            if seen.insert(proj.clone()) && accept(&proj) {
                                return Some(proj);
                            }
                        }
                        next.push((*w, p));
                    }
                }
                paths = next;
            }
        }
        if depth < stem_bound {
            stems = stems
                .iter()
                .flat_map(|(nodes, labels)| {
                    g.succ[*nodes.last().unwrap()].iter().map(move |(l, w)| {
                        let mut n = nodes.clone();
                        n.push(*w);
                        let mut ls = labels.clone();
                        ls.push(l.clone());
                        (n, ls)
                    })
                })
                .collect();
        }
    }
    None
}
