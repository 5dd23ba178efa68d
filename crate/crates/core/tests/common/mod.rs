#![allow(dead_code)]

use presheaf_bisim::lts::{Label, Lts, StateMap};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn labels(n: usize, tau: bool) -> Vec<Label> {
    let mut out: Vec<Label> = ["a", "b", "c"][..n].iter().map(|l| Label::act(l)).collect();
    if tau {
        out.push(Label::Tau);
    }
    out
}

/// A system with `1..=max_states` states where each possible transition is present with
/// probability `density`.
pub fn random_lts(rng: &mut ChaCha8Rng, max_states: usize, labels: &[Label], density: f64) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let mut ts = Vec::new();
    for s in 0..n {
        for l in labels {
            for t in 0..n {
                if rng.gen_bool(density) {
                    ts.push((s, l.clone(), t));
                }
            }
        }
    }
    Lts::anonymous(n, ts).unwrap()
}

pub fn random_map(rng: &mut ChaCha8Rng, from: usize, to: usize) -> StateMap {
    StateMap((0..from).map(|_| rng.gen_range(0..to)).collect())
}

/// `y` with the image of every transition of `x` under `f` added, so that `f` is a
/// simulation into the result.
pub fn with_image(x: &Lts, y: &Lts, f: &StateMap) -> Lts {
    let ts: std::collections::BTreeSet<_> = y
        .transitions()
        .iter()
        .cloned()
        .chain(x.transitions().iter().map(|(s, l, t)| (f.apply(*s), l.clone(), f.apply(*t))))
        .collect();
    Lts::anonymous(y.num_states(), ts).unwrap()
}
