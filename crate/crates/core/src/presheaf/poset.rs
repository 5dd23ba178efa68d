//! Finite posets, the word posets used as observation spaces, and monotone maps.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lts::{InfWord, Label, Word};

/// A point of one of the observation posets.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Point {
    Word(Word),
    /// `(n, τ̄)`: silent moves observed over `n > 0` time units.
    Stretch(usize),
    /// `τ̄`: an empty observation caused by zero or more silent moves.
    TauBar,
    /// An ultimately periodic infinite word.
    Omega(InfWord),
}

impl Point {
    pub fn word(s: &str) -> Point {
        Point::Word(Word::parse(s))
    }

    pub fn as_word(&self) -> Option<&Word> {
        match self {
            Point::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn leq(&self, other: &Point) -> bool {
        use Point::*;
        match (self, other) {
            (Word(u), Word(v)) => u.is_prefix_of(v),
            (Word(u), Stretch(_)) | (Word(u), TauBar) => u.is_empty(),
            (Stretch(m), Stretch(n)) => m <= n,
            (TauBar, TauBar) => true,
            (Word(u), Omega(w)) => w.has_prefix(u),
            (Omega(v), Omega(w)) => v == w,
            _ => false,
        }
    }

    fn rank(&self) -> (usize, usize) {
        match self {
            Point::Word(w) => (0, w.len()),
            Point::Stretch(n) => (1, *n),
            Point::TauBar => (2, 0),
            Point::Omega(_) => (3, 0),
        }
    }
}

impl Ord for Point {
    /// Words in shortlex order, then stretches, `τ̄` and infinite words.
    fn cmp(&self, other: &Point) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (Point::Word(u), Point::Word(v)) => u.cmp(v),
            (Point::Omega(u), Point::Omega(v)) => u.cmp(v),
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Point) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Word(w) => write!(f, "{w}"),
            Point::Stretch(n) => write!(f, "({n},taubar)"),
            Point::TauBar => f.write_str("taubar"),
            Point::Omega(w) => write!(f, "{w}"),
        }
    }
}

/// A finite partial order. Elements are stored so that `i < j` whenever element `i` lies
/// strictly below element `j`.
#[derive(Clone, Debug)]
pub struct FinPoset<P> {
    elems: Vec<P>,
    index: HashMap<P, usize>,
    leq: Vec<Vec<bool>>,
    covers: Vec<Vec<usize>>,
}

impl<P: Clone + Eq + Hash + fmt::Debug> FinPoset<P> {
    /// Builds the poset, checking that `leq` is a partial order on `elems`.
    pub fn new(elems: Vec<P>, leq: impl Fn(&P, &P) -> bool) -> Result<FinPoset<P>> {
        let n = elems.len();
        let raw: Vec<Vec<bool>> = elems.iter().map(|a| elems.iter().map(|b| leq(a, b)).collect()).collect();
        for i in 0..n {
            if !raw[i][i] {
                return Err(Error::pre(format!("order is not reflexive at {:?}", elems[i])));
            }
            for j in 0..n {
                if i != j && raw[i][j] && raw[j][i] {
                    return Err(Error::pre(format!("order is not antisymmetric on {:?}, {:?}", elems[i], elems[j])));
                }
                if raw[i][j] {
                    if let Some(k) = (0..n).find(|&k| raw[j][k] && !raw[i][k]) {
                        return Err(Error::pre(format!(
                            "order is not transitive on {:?} <= {:?} <= {:?}",
                            elems[i], elems[j], elems[k]
                        )));
                    }
                }
            }
        }
        // Down-set size strictly increases along the strict order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (0..n).filter(|&j| raw[j][i]).count());
        let elems: Vec<P> = order.iter().map(|&i| elems[i].clone()).collect();
        let leq: Vec<Vec<bool>> = order.iter().map(|&i| order.iter().map(|&j| raw[i][j]).collect()).collect();
        let mut index = HashMap::new();
        for (i, e) in elems.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::pre(format!("poset element {e:?} listed twice")));
            }
        }
        let covers = (0..n)
            .map(|i| (0..i).filter(|&j| leq[j][i] && !(j + 1..i).any(|k| leq[j][k] && leq[k][i])).collect())
            .collect();
        Ok(FinPoset { elems, index, leq, covers })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elem(&self, i: usize) -> &P {
        &self.elems[i]
    }

    pub fn elems(&self) -> &[P] {
        &self.elems
    }

    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Elements covered by `i`, i.e. immediately below it.
    pub fn lower_covers(&self, i: usize) -> &[usize] {
        &self.covers[i]
    }

    /// All elements below or equal to `i`, in storage order.
    pub fn below(&self, i: usize) -> Vec<usize> {
        (0..=i).filter(|&j| self.leq[j][i]).collect()
    }

    /// Greatest lower bound, if it exists.
    pub fn meet(&self, i: usize, j: usize) -> Option<usize> {
        let lower: Vec<usize> = (0..self.len()).filter(|&k| self.leq[k][i] && self.leq[k][j]).collect();
        lower.iter().copied().find(|&k| lower.iter().all(|&l| self.leq[l][k]))
    }
}

/// A monotone map between finite posets, stored by index.
#[derive(Clone, Debug)]
pub struct MonotoneMap {
    pub map: Vec<usize>,
}

impl MonotoneMap {
    pub fn new<P, Q>(source: &FinPoset<P>, target: &FinPoset<Q>, f: impl Fn(&P) -> Q) -> Result<MonotoneMap>
    where
        P: Clone + Eq + Hash + fmt::Debug,
        Q: Clone + Eq + Hash + fmt::Debug,
    {
        let map = source
            .elems()
            .iter()
            .map(|p| {
                let q = f(p);
                target.index_of(&q).ok_or_else(|| Error::pre(format!("{p:?} maps to {q:?}, outside the target")))
            })
            .collect::<Result<Vec<_>>>()?;
        for i in 0..source.len() {
            for j in 0..source.len() {
                if source.leq(i, j) && !target.leq(map[i], map[j]) {
                    return Err(Error::pre(format!(
                        "map is not monotone on {:?} <= {:?}",
                        source.elem(i),
                        source.elem(j)
                    )));
                }
            }
        }
        Ok(MonotoneMap { map })
    }

    pub fn identity(n: usize) -> MonotoneMap {
        MonotoneMap { map: (0..n).collect() }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }
}

fn build(points: Vec<Point>) -> Arc<FinPoset<Point>> {
    let mut points = points;
    points.sort();
    points.dedup();
    Arc::new(FinPoset::new(points, Point::leq).expect("word orders are partial orders"))
}

/// Words over `letters` of length at most `depth`, under prefix order.
pub fn word_poset(letters: &[Label], depth: usize) -> Arc<FinPoset<Point>> {
    build(Word::all_up_to(letters, depth).into_iter().map(Point::Word).collect())
}

/// Words over `letters` (which should include `tau`) plus the stretches `(n, τ̄)`, `1 <= n <= depth`.
pub fn barred_poset(letters: &[Label], depth: usize) -> Arc<FinPoset<Point>> {
    let mut pts: Vec<Point> = Word::all_up_to(letters, depth).into_iter().map(Point::Word).collect();
    pts.extend((1..=depth).map(Point::Stretch));
    build(pts)
}

/// Visible words of length at most `depth` plus `τ̄`.
pub fn branching_poset(letters: &[Label], depth: usize) -> Arc<FinPoset<Point>> {
    let visible: Vec<Label> = letters.iter().filter(|l| !l.is_tau()).cloned().collect();
    let mut pts: Vec<Point> = Word::all_up_to(&visible, depth).into_iter().map(Point::Word).collect();
    pts.push(Point::TauBar);
    build(pts)
}

/// Words up to `depth`, the prefixes of each infinite word up to `chain`, and the infinite
/// words themselves.
pub fn fair_poset(letters: &[Label], depth: usize, omegas: &[InfWord], chain: usize) -> Arc<FinPoset<Point>> {
    let mut pts: Vec<Point> = Word::all_up_to(letters, depth).into_iter().map(Point::Word).collect();
    for w in omegas {
        pts.extend((0..=chain).map(|n| Point::Word(w.prefix(n))));
        pts.push(Point::Omega(w.clone()));
    }
    build(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Vec<Label> {
        vec![Label::act("a"), Label::act("b")]
    }

    #[test]
    fn word_poset_is_a_tree() {
        let p = word_poset(&ab(), 3);
        assert_eq!(p.len(), 15);
        assert_eq!(p.elem(0), &Point::word("eps"));
        for i in 1..p.len() {
            assert_eq!(p.lower_covers(i).len(), 1);
        }
        let ab_ = p.index_of(&Point::word("a.b")).unwrap();
        let aa = p.index_of(&Point::word("a.a")).unwrap();
        assert_eq!(p.elem(p.meet(ab_, aa).unwrap()), &Point::word("a"));
    }

    #[test]
    fn taubar_sits_above_eps_only() {
        let p = branching_poset(&[Label::Tau, Label::act("a")], 2);
        let t = p.index_of(&Point::TauBar).unwrap();
        assert_eq!(p.below(t), vec![0, t]);
        let b = barred_poset(&[Label::Tau, Label::act("a")], 2);
        let s1 = b.index_of(&Point::Stretch(1)).unwrap();
        let s2 = b.index_of(&Point::Stretch(2)).unwrap();
        let tau = b.index_of(&Point::word("tau")).unwrap();
        assert!(b.leq(s1, s2) && b.leq(0, s1) && !b.leq(tau, s1));
        assert_eq!(b.lower_covers(s2), &[s1]);
    }

    #[test]
    fn omega_points_sit_on_their_chain() {
        let a = Label::act("a");
        let w = InfWord::new(vec![], vec![a.clone()]);
        let p = fair_poset(&[a], 2, std::slice::from_ref(&w), 5);
        assert_eq!(p.len(), 7);
        let o = p.index_of(&Point::Omega(w)).unwrap();
        assert_eq!(p.elem(p.lower_covers(o)[0]), &Point::word("a.a.a.a.a"));
        assert_eq!(Point::Stretch(3).to_string(), "(3,taubar)");
    }

    #[test]
    fn bad_orders_rejected() {
        assert!(FinPoset::new(vec![1, 2], |a, b| a != b || a == b).is_err());
        assert!(FinPoset::new(vec![1, 2, 3], |a, b| a == b || (*a == 1 && *b == 2) || (*a == 2 && *b == 3)).is_err());
        assert!(FinPoset::new(vec![1, 2], |a, b| a <= b && *a != 2).is_err());
    }

    #[test]
    fn monotone_map_checked() {
        let tau = vec![Label::Tau, Label::act("a")];
        let src = word_poset(&tau, 2);
        let dst = word_poset(&[Label::act("a")], 2);
        let h = MonotoneMap::new(&src, &dst, |p| Point::Word(p.as_word().unwrap().hide())).unwrap();
        let i = src.index_of(&Point::word("tau.a")).unwrap();
        assert_eq!(dst.elem(h.apply(i)), &Point::word("a"));
        assert!(MonotoneMap::new(&src, &dst, |p| Point::Word(Word::parse(if p.as_word().unwrap().is_empty() {
            "a"
        } else {
            "eps"
        })))
        .is_err());
    }
}
