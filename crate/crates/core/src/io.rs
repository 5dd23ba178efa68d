//! Map files (`source -> target`) and relation files (`state ~ state`). `#` starts a comment.

use crate::error::{Error, Result};
use crate::lts::{parse_aut, FairnessSpec, Lts, Sidecar, StateMap};

/// Reads a `.aut` file and its optional JSON sidecar.
pub fn read_system(aut: &str, sidecar: Option<&str>) -> Result<(Lts, Option<FairnessSpec>)> {
    let lts = parse_aut(aut)?;
    match sidecar {
        Some(text) => Sidecar::from_json(text)?.apply(lts),
        None => Ok((lts, None)),
    }
}

/// Splits a system for a map file: the source is the states named on the left (in system
/// order), the target everything else. A map over every state is an endomap.
pub fn split_for_map(text: &str, whole: &Lts) -> Result<(Vec<usize>, Vec<usize>)> {
    let domain = map_domain(text)
        .iter()
        .map(|n| whole.state(n).ok_or_else(|| Error::pre(format!("map names unknown state `{n}`"))))
        .collect::<Result<std::collections::BTreeSet<usize>>>()?;
    let all: Vec<usize> = (0..whole.num_states()).collect();
    if domain.len() == whole.num_states() {
        return Ok((all.clone(), all));
    }
    let rest = all.iter().copied().filter(|s| !domain.contains(s)).collect();
    Ok((domain.into_iter().collect(), rest))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn lookup(lts: &Lts, name: &str, line: usize) -> Result<usize> {
    lts.state(name).ok_or_else(|| Error::parse(line, format!("unknown state `{name}`")))
}

/// Reads a total map from the states of `x` to the states of `y`.
pub fn parse_map(text: &str, x: &Lts, y: &Lts) -> Result<StateMap> {
    let mut image = vec![None; x.num_states()];
    for (line, l) in content_lines(text) {
        let (s, t) = l.split_once("->").ok_or_else(|| Error::parse(line, "expected `source -> target`"))?;
        let s = lookup(x, s.trim(), line)?;
        let t = lookup(y, t.trim(), line)?;
        if image[s].is_some_and(|old| old != t) {
            return Err(Error::parse(line, format!("state `{}` mapped twice", x.name(s))));
        }
        image[s] = Some(t);
    }
    image
        .iter()
        .enumerate()
        .map(|(s, t)| t.ok_or_else(|| Error::pre(format!("map leaves `{}` unmapped", x.name(s)))))
        .collect::<Result<Vec<_>>>()
        .map(StateMap)
}

/// The states mentioned on the left of a map file, in order of first appearance.
pub fn map_domain(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (_, l) in content_lines(text) {
        if let Some((s, _)) = l.split_once("->") {
            let s = s.trim().to_string();
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

pub fn write_map(f: &StateMap, x: &Lts, y: &Lts) -> String {
    (0..x.num_states()).map(|s| format!("{} -> {}\n", x.name(s), y.name(f.apply(s)))).collect()
}

/// Reads the pairs of a relation over the states of `x`.
pub fn parse_relation(text: &str, x: &Lts) -> Result<Vec<(usize, usize)>> {
    content_lines(text)
        .map(|(line, l)| {
            let (a, b) = l.split_once('~').ok_or_else(|| Error::parse(line, "expected `state ~ state`"))?;
            Ok((lookup(x, a.trim(), line)?, lookup(x, b.trim(), line)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> (Lts, Lts) {
        let x = Lts::from_named(&["x", "x'"], &[("x", "a", "x'")]).unwrap();
        let y = Lts::from_named(&["y"], &[("y", "a", "y")]).unwrap();
        (x, y)
    }

    #[test]
    fn map_file() {
        let (x, y) = sys();
        let f = parse_map("# collapse\nx -> y\nx' -> y  # both\n", &x, &y).unwrap();
        assert_eq!(f, StateMap(vec![0, 0]));
        assert_eq!(parse_map(&write_map(&f, &x, &y), &x, &y).unwrap(), f);
        assert!(matches!(parse_map("x -> y\n", &x, &y), Err(Error::Precondition(_))));
        assert!(matches!(parse_map("x -> z\n", &x, &y), Err(Error::Parse { line: 1, .. })));
        assert!(parse_map("x -> y\nx -> q\n", &x, &x).is_err());
        assert_eq!(map_domain("x -> y\nx' -> y\nx -> y\n"), vec!["x", "x'"]);
    }

    #[test]
    fn relation_file() {
        let (x, _) = sys();
        assert_eq!(parse_relation("x ~ x'\n\nx' ~ x\n", &x).unwrap(), vec![(0, 1), (1, 0)]);
        assert!(matches!(parse_relation("x x'\n", &x), Err(Error::Parse { line: 1, .. })));
    }
}
