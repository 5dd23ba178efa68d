//! Aldebaran `.aut` reading and writing.

use super::{Label, Lts};
use crate::error::{Error, Result};

/// Parses an Aldebaran file. States are named by index until a sidecar renames them.
pub fn parse_aut(text: &str) -> Result<Lts> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing des header"))?;
    let (_, ntrans, nstates) = parse_header(header).map_err(|m| Error::parse(hline + 1, m))?;
    let mut ts = Vec::new();
    for (i, line) in lines {
        let (s, l, t) = parse_line(line).map_err(|m| Error::parse(i + 1, m))?;
        if s >= nstates || t >= nstates {
            return Err(Error::parse(i + 1, format!("state index out of range (header declares {nstates} states)")));
        }
        ts.push((s, Label::parse(&l), t));
    }
    if ts.len() != ntrans {
        return Err(Error::parse(hline + 1, format!("header declares {ntrans} transitions, body has {}", ts.len())));
    }
    Lts::anonymous(nstates, ts).map_err(|e| Error::parse(0, e.to_string()))
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize, usize), String> {
    let rest = line.trim().strip_prefix("des").ok_or("header must start with `des`")?;
    let inner = rest.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or("malformed des header")?;
    let nums: Vec<&str> = inner.split(',').map(str::trim).collect();
    if nums.len() != 3 {
        return Err("des header needs three fields".into());
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad number `{s}` in header"));
    Ok((parse(nums[0])?, parse(nums[1])?, parse(nums[2])?))
}

fn parse_line(line: &str) -> std::result::Result<(usize, String, usize), String> {
    let inner = line
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or("transition must look like (from,\"label\",to)")?;
    let (from, rest) = inner.split_once(',').ok_or("missing label")?;
    let (label, to) = rest.rsplit_once(',').ok_or("missing target")?;
    let label = label.trim();
    let label = match label.strip_prefix('"') {
        Some(l) => l.strip_suffix('"').ok_or("unterminated label")?,
        None => label,
    };
    if label.is_empty() {
        return Err("empty label".into());
    }
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad state `{}`", s.trim()));
    Ok((num(from)?, label.to_string(), num(to)?))
}

/// Writes the system in Aldebaran form; the initial-state field is always 0.
pub fn write_aut(lts: &Lts) -> String {
    let mut out = format!("des (0,{},{})\n", lts.transitions().len(), lts.num_states());
    for (s, l, t) in lts.transitions() {
        out.push_str(&format!("({s},\"{l}\",{t})\n"));
    }
    out
}
