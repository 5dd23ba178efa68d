//! Observation presheaves over discrete time and their categories of elements.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use super::{FinPoset, FinPresheaf, MonotoneMap, Point};
use crate::error::{Error, Result};
use crate::lts::{Label, Word};

/// Time instants `0..=depth` in their usual order.
pub fn time_poset(depth: usize) -> Arc<FinPoset<usize>> {
    Arc::new(FinPoset::new((0..=depth).collect(), |a, b| a <= b).expect("a chain"))
}

/// What can be observed after `n` time units.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObsValue {
    Word(Word),
    /// An empty observation caused by zero or more silent moves; visible only after time 0.
    TauBar,
}

impl fmt::Display for ObsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsValue::Word(w) => write!(f, "{w}"),
            ObsValue::TauBar => f.write_str("taubar"),
        }
    }
}

/// Words of length exactly `n` at time `n`, restricted by truncation. With `with_taubar`,
/// every positive time also holds `τ̄`, which restricts to itself and to `ε` at time 0.
pub fn observation_presheaf(letters: &[Label], with_taubar: bool, depth: usize) -> FinPresheaf<usize, ObsValue> {
    let base = time_poset(depth);
    let stages = (0..=depth)
        .map(|n| {
            let mut s: Vec<ObsValue> =
                Word::all_up_to(letters, n).into_iter().filter(|w| w.len() == n).map(ObsValue::Word).collect();
            if with_taubar && n > 0 {
                s.push(ObsValue::TauBar);
            }
            s
        })
        .collect();
    FinPresheaf::build(base, stages, |x, _, to| match x {
        ObsValue::Word(w) => ObsValue::Word(w.prefix(to)),
        ObsValue::TauBar if to == 0 => ObsValue::Word(Word::default()),
        ObsValue::TauBar => ObsValue::TauBar,
    })
    .expect("truncation lands in the smaller stage")
}

/// An object of the category of elements: a point and an element of its stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    pub point: usize,
    pub elem: usize,
}

/// The category of elements as a poset: `(e', x') <= (e, x)` iff `e' <= e` and `x·e' = x'`.
pub fn elements_poset<P, T>(f: &FinPresheaf<P, T>) -> Arc<FinPoset<Element>>
where
    P: Clone + Eq + Hash + fmt::Debug,
{
    let elems: Vec<Element> = (0..f.base().len())
        .flat_map(|point| (0..f.stage(point).len()).map(move |elem| Element { point, elem }))
        .collect();
    let base = f.base().clone();
    Arc::new(
        FinPoset::new(elems, |a, b| base.leq(a.point, b.point) && f.restrict(b.point, b.elem, a.point) == a.elem)
            .expect("elements of a presheaf form a poset"),
    )
}

/// Drops the time component of the elements of an observation presheaf: `(n, w)` becomes the
/// word `w` and `(n, τ̄)` the stretch `(n, τ̄)`. Returns the simplified poset and the order
/// isomorphism onto it.
pub fn simplify_observation(o: &FinPresheaf<usize, ObsValue>) -> Result<(Arc<FinPoset<Point>>, MonotoneMap)> {
    let el = elements_poset(o);
    let point = |e: &Element| match &o.stage(e.point)[e.elem] {
        ObsValue::Word(w) => Point::Word(w.clone()),
        ObsValue::TauBar => Point::Stretch(e.point),
    };
    let mut pts: Vec<Point> = el.elems().iter().map(point).collect();
    pts.sort();
    pts.dedup();
    if pts.len() != el.len() {
        return Err(Error::Internal("simplification identifies distinct elements".into()));
    }
    let simple = Arc::new(FinPoset::new(pts, Point::leq)?);
    let iso = MonotoneMap::new(&el, &simple, point)?;
    for i in 0..el.len() {
        for j in 0..el.len() {
            if simple.leq(iso.apply(i), iso.apply(j)) && !el.leq(i, j) {
                return Err(Error::Internal(format!(
                    "simplification does not reflect {:?} <= {:?}",
                    el.elem(i),
                    el.elem(j)
                )));
            }
        }
    }
    Ok((simple, iso))
}
