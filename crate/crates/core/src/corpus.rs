//! The bundled example systems with their maps, relations and expected verdicts.
//!
//! Each system ships as a `.aut` file plus a JSON sidecar. A map file names the source states
//! on its left; the target is the rest of the system (or the whole system for an endomap).
//! Relation files list generators of an equivalence.

use crate::equiv::{self, Bounds, FairMode, MapMode, Relation, Verdict, WitnessDetail};
use crate::error::{Error, Result};
use crate::io::{parse_map, parse_relation, read_system, split_for_map};
use crate::lts::{is_simulation, FairLts, FairnessSpec, Lts, StateMap};
use crate::presheaf::{FinPresheaf, NatTrans, Point};
use crate::semantics;

macro_rules! corpus_file {
    ($f:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/", $f))
    };
}

const SYSTEMS: [(&str, &str, &str); 5] = [
    ("CHAIN", corpus_file!("CHAIN.aut"), corpus_file!("CHAIN.json")),
    ("SYS_FAIR_REM", corpus_file!("SYS_FAIR_REM.aut"), corpus_file!("SYS_FAIR_REM.json")),
    ("SYS_BRANCH", corpus_file!("SYS_BRANCH.aut"), corpus_file!("SYS_BRANCH.json")),
    ("SYS_COMP", corpus_file!("SYS_COMP.aut"), corpus_file!("SYS_COMP.json")),
    ("SYS_UNION", corpus_file!("SYS_UNION.aut"), corpus_file!("SYS_UNION.json")),
];

const MAPS: [(&str, &str, &str); 3] = [
    ("CHAIN", "collapse", corpus_file!("CHAIN.collapse.map")),
    ("SYS_FAIR_REM", "f", corpus_file!("SYS_FAIR_REM.f.map")),
    ("SYS_BRANCH", "f", corpus_file!("SYS_BRANCH.f.map")),
];

const RELATIONS: [(&str, &str, &str); 4] = [
    ("SYS_COMP", "T", corpus_file!("SYS_COMP.T.rel")),
    ("SYS_COMP", "Tprime", corpus_file!("SYS_COMP.Tprime.rel")),
    ("SYS_UNION", "R1", corpus_file!("SYS_UNION.R1.rel")),
    ("SYS_UNION", "R2", corpus_file!("SYS_UNION.R2.rel")),
];

#[derive(Clone, Debug)]
pub struct System {
    pub name: &'static str,
    pub aut: &'static str,
    pub sidecar: &'static str,
    pub lts: Lts,
    pub fairness: Option<FairnessSpec>,
}

impl System {
    pub fn fair(&self) -> Option<FairLts> {
        let spec = self.fairness.clone()?;
        Some(FairLts::new(self.lts.clone(), spec).expect("corpus fairness is valid"))
    }
}

#[derive(Clone, Debug)]
pub struct Morphism {
    pub system: &'static str,
    pub name: &'static str,
    pub text: &'static str,
    pub source: Lts,
    pub target: Lts,
    pub map: StateMap,
    /// Source and target with fairness, when the system has any.
    pub fair: Option<(FairLts, FairLts)>,
}

#[derive(Clone, Debug)]
pub struct NamedRelation {
    pub system: &'static str,
    pub name: &'static str,
    pub text: &'static str,
    /// Equivalence generated by the listed pairs.
    pub rel: Relation,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub systems: Vec<System>,
    pub morphisms: Vec<Morphism>,
    pub relations: Vec<NamedRelation>,
}

impl Corpus {
    pub fn system(&self, name: &str) -> &System {
        self.systems.iter().find(|s| s.name == name).unwrap_or_else(|| panic!("no corpus system {name}"))
    }

    pub fn morphism(&self, system: &str, name: &str) -> &Morphism {
        self.morphisms
            .iter()
            .find(|m| m.system == system && m.name == name)
            .unwrap_or_else(|| panic!("no corpus map {system}/{name}"))
    }

    pub fn relation(&self, system: &str, name: &str) -> &Relation {
        &self
            .relations
            .iter()
            .find(|r| r.system == system && r.name == name)
            .unwrap_or_else(|| panic!("no corpus relation {system}/{name}"))
            .rel
    }
}

/// Parses every bundled file.
pub fn load_corpus() -> Result<Corpus> {
    let systems = SYSTEMS
        .iter()
        .map(|&(name, aut, sidecar)| {
            let (lts, fairness) = read_system(aut, Some(sidecar))?;
            Ok(System { name, aut, sidecar, lts, fairness })
        })
        .collect::<Result<Vec<_>>>()?;
    let find = |name: &str| systems.iter().find(|s| s.name == name).expect("listed system");
    let morphisms = MAPS
        .iter()
        .map(|&(system, name, text)| {
            let sys = find(system);
            let (src, tgt) = split_for_map(text, &sys.lts)?;
            let source = sys.lts.induced(&src).0;
            let target = sys.lts.induced(&tgt).0;
            let map = parse_map(text, &source, &target)?;
            let fair = match sys.fair() {
                Some(fl) => Some((fl.induced(&src)?, fl.induced(&tgt)?)),
                None => None,
            };
            Ok(Morphism { system, name, text, source, target, map, fair })
        })
        .collect::<Result<Vec<_>>>()?;
    let relations = RELATIONS
        .iter()
        .map(|&(system, name, text)| {
            let lts = &find(system).lts;
            let rel = Relation::new(lts.num_states(), parse_relation(text, lts)?).equivalence_closure();
            Ok(NamedRelation { system, name, text, rel })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { systems, morphisms, relations })
}

/// A named check on the corpus.
pub struct Expectation {
    pub name: &'static str,
    /// What the check is expected to show.
    pub expect: &'static str,
    run: fn(&Corpus, &Bounds) -> Result<(bool, String)>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Outcome {
    pub name: &'static str,
    pub expect: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Expectation {
    pub fn run(&self, c: &Corpus, b: &Bounds) -> Outcome {
        let t = std::time::Instant::now();
        let (passed, detail) = match (self.run)(c, b) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        log::debug!("{} took {:?}", self.name, t.elapsed());
        Outcome { name: self.name, expect: self.expect, passed, detail }
    }
}

fn shown(v: &Verdict) -> String {
    v.to_string()
}

fn holds(v: Verdict) -> Result<(bool, String)> {
    Ok((v.holds, shown(&v)))
}

fn fair_pair(m: &Morphism) -> Result<&(FairLts, FairLts)> {
    m.fair.as_ref().ok_or_else(|| Error::pre(format!("{}/{} has no fairness", m.system, m.name)))
}

/// The quotient of a fair corpus system by one of its relations.
pub fn fair_quotient(c: &Corpus, system: &str, rel: &str) -> Result<(FairLts, FairLts, StateMap)> {
    let x = c.system(system).fair().ok_or_else(|| Error::pre(format!("{system} has no fairness")))?;
    let (y, f) = equiv::forall_fair_quotient(c.relation(system, rel), &x)?;
    Ok((x, y, f))
}

fn quotient_round_trip(c: &Corpus, b: &Bounds, rel: &str) -> Result<(bool, String)> {
    let (x, y, f) = fair_quotient(c, "SYS_UNION", rel)?;
    let v = equiv::check_fair_bisim_fn(&f, &x, &y, FairMode::Exact, b)?;
    let kernel_ok = Relation::kernel(&f) == *c.relation("SYS_UNION", rel);
    let ok = y.lts.num_states() == 2 && kernel_ok && v.holds;
    Ok((ok, format!("{} states, kernel matches: {kernel_ok}; {}", y.lts.num_states(), shown(&v))))
}

/// Every bundled expectation, in a fixed order.
pub fn expectations() -> Vec<Expectation> {
    vec![
        Expectation {
            name: "CHAIN/collapse-not-simulation",
            expect: "collapsing every state loses x1 -a-> x2",
            run: |c, _| {
                let m = c.morphism("CHAIN", "collapse");
                let bad = is_simulation(&m.map, &m.source, &m.target)?;
                let shown = bad.as_ref().map(|(s, l, t)| format!("{} -{l}-> {}", m.source.name(*s), m.source.name(*t)));
                Ok((shown.as_deref() == Some("x1 -a-> x2"), format!("{shown:?}")))
            },
        },
        Expectation {
            name: "CHAIN/branching-quotient",
            expect: "two-state quotient whose map is a branching bisimulation function",
            run: |c, _| {
                let x = &c.system("CHAIN").lts;
                let (q, f) = equiv::branching_quotient(x);
                let v = equiv::check_branching_bisim_fn(&f, x, &q)?;
                Ok((q.num_states() == 2 && v.holds, format!("{} states; {}", q.num_states(), shown(&v))))
            },
        },
        Expectation {
            name: "SYS_FAIR_REM/fair-sim",
            expect: "f is a fair simulation",
            run: |c, b| {
                let (x, y) = fair_pair(c.morphism("SYS_FAIR_REM", "f"))?;
                holds(equiv::check_fair_sim(&c.morphism("SYS_FAIR_REM", "f").map, x, y, b)?)
            },
        },
        Expectation {
            name: "SYS_FAIR_REM/inf-open",
            expect: "f reflects steps and lifts fair runs",
            run: |c, b| {
                let m = c.morphism("SYS_FAIR_REM", "f");
                let (x, y) = fair_pair(m)?;
                holds(equiv::check_inf_open(&m.map, x, y, b)?)
            },
        },
        Expectation {
            name: "SYS_FAIR_REM/fair-bisim-fn",
            expect: "f is not a fair bisimulation: the x self-loop chain has a fair image but no limit",
            run: |c, b| {
                let m = c.morphism("SYS_FAIR_REM", "f");
                let (x, y) = fair_pair(m)?;
                let v = equiv::check_fair_bisim_fn(&m.map, x, y, FairMode::Exact, b)?;
                let chain = matches!(&v.witness, Some(w) if matches!(&w.detail,
                    WitnessDetail::Chain { source, .. } if source.cycle_states() == [0].into()));
                Ok((!v.holds && chain, shown(&v)))
            },
        },
        Expectation {
            name: "SYS_FAIR_REM/fair-presheaf",
            expect: "the presheaf map is not a bisimulation map, in agreement with the concrete check",
            run: |c, b| {
                let m = c.morphism("SYS_FAIR_REM", "f");
                let (x, y) = fair_pair(m)?;
                let r = equiv::check_fair_bisim_map(&m.map, x, y, FairMode::Exact, b)?;
                Ok((!r.presheaf.holds && r.agree, shown(&r.presheaf)))
            },
        },
        Expectation {
            name: "SYS_BRANCH/branching-sim",
            expect: "f is a branching simulation",
            run: |c, _| {
                let m = c.morphism("SYS_BRANCH", "f");
                holds(equiv::check_branching_sim(&m.map, &m.source, &m.target)?)
            },
        },
        Expectation {
            name: "SYS_BRANCH/branching-bisim-fn",
            expect: "f fails to reflect y1 -tau-> y3",
            run: |c, _| {
                let m = c.morphism("SYS_BRANCH", "f");
                let v = equiv::check_branching_bisim_fn(&m.map, &m.source, &m.target)?;
                Ok((!v.holds && v.witness_text().contains("y1 -tau-> y3"), shown(&v)))
            },
        },
        Expectation {
            name: "SYS_BRANCH/branching-failed-mismatch",
            expect: "over visible words only, the presheaf verdict holds while the concrete one fails",
            run: |c, b| {
                let m = c.morphism("SYS_BRANCH", "f");
                let r = equiv::check_bisim_map(&m.map, &m.source, &m.target, MapMode::BranchingFailed, b)?;
                Ok((
                    r.presheaf.holds && !r.concrete.holds,
                    format!("presheaf: {}; concrete: {}", r.presheaf, r.concrete),
                ))
            },
        },
        Expectation {
            name: "SYS_BRANCH/branching-taubar",
            expect: "with taubar the presheaf verdict fails on a square at the taubar stage",
            run: |c, b| {
                let m = c.morphism("SYS_BRANCH", "f");
                let r = equiv::check_bisim_map(&m.map, &m.source, &m.target, MapMode::Branching, b)?;
                let at_taubar = matches!(&r.presheaf.witness, Some(w) if matches!(&w.detail,
                    WitnessDetail::Square { stage: Some(s), .. } if s == "taubar"));
                Ok((!r.presheaf.holds && r.agree && at_taubar, shown(&r.presheaf)))
            },
        },
        Expectation {
            name: "SYS_BRANCH/x1-y1-not-bisimilar",
            expect: "x1 and y1 are not branching bisimilar",
            run: |c, _| {
                let x = &c.system("SYS_BRANCH").lts;
                let r = equiv::branching_bisimilarity(x);
                let (x1, y1) = (x.state("x1").unwrap(), x.state("y1").unwrap());
                Ok((!r.contains(x1, y1), format!("bisimilar: {}", r.contains(x1, y1))))
            },
        },
        Expectation {
            name: "SYS_COMP/T",
            expect: "T is a forall-fair bisimulation",
            run: |c, b| {
                let x = c.system("SYS_COMP").fair().unwrap();
                holds(equiv::check_forall_fair_bisim(c.relation("SYS_COMP", "T"), &x, FairMode::Exact, true, b)?)
            },
        },
        Expectation {
            name: "SYS_COMP/Tprime",
            expect: "T' is a forall-fair bisimulation",
            run: |c, b| {
                let x = c.system("SYS_COMP").fair().unwrap();
                holds(equiv::check_forall_fair_bisim(c.relation("SYS_COMP", "Tprime"), &x, FairMode::Exact, true, b)?)
            },
        },
        Expectation {
            name: "SYS_COMP/composition",
            expect: "TT' relates x1 to z1 and z1 to y1 but not x1 to y1, so it is not an equivalence",
            run: |c, b| {
                let sys = c.system("SYS_COMP");
                let x = sys.fair().unwrap();
                let tt = c.relation("SYS_COMP", "T").compose(c.relation("SYS_COMP", "Tprime"));
                let v = equiv::check_forall_fair_bisim(&tt, &x, FairMode::Exact, true, b)?;
                let s = |n: &str| sys.lts.state(n).unwrap();
                let ok =
                    tt.contains(s("x1"), s("z1")) && tt.contains(s("z1"), s("y1")) && !tt.contains(s("x1"), s("y1"));
                let missing = matches!(&v.witness, Some(w) if w.detail == WitnessDetail::MissingPair(s("x1"), s("y1")));
                Ok((ok && !v.holds && missing, shown(&v)))
            },
        },
        Expectation {
            name: "SYS_UNION/R1",
            expect: "R1 with its reflexive pairs is a forall-fair bisimulation",
            run: |c, b| {
                let x = c.system("SYS_UNION").fair().unwrap();
                holds(equiv::check_forall_fair_bisim(c.relation("SYS_UNION", "R1"), &x, FairMode::Exact, true, b)?)
            },
        },
        Expectation {
            name: "SYS_UNION/R2",
            expect: "R2 with its reflexive pairs is a forall-fair bisimulation",
            run: |c, b| {
                let x = c.system("SYS_UNION").fair().unwrap();
                holds(equiv::check_forall_fair_bisim(c.relation("SYS_UNION", "R2"), &x, FairMode::Exact, true, b)?)
            },
        },
        Expectation {
            name: "SYS_UNION/union",
            expect: "the closure of R1 and R2 relates a fair run to an unfair one",
            run: |c, b| {
                let x = c.system("SYS_UNION").fair().unwrap();
                let u = c.relation("SYS_UNION", "R1").union(c.relation("SYS_UNION", "R2")).equivalence_closure();
                let v = equiv::check_forall_fair_bisim(&u, &x, FairMode::Exact, true, b)?;
                let pair = matches!(&v.witness, Some(w) if matches!(&w.detail,
                    WitnessDetail::LassoPair { fair, unfair } if x.is_fair(fair) && !x.is_fair(unfair)));
                Ok((!v.holds && pair, shown(&v)))
            },
        },
        Expectation {
            name: "SYS_UNION/quotient-R1",
            expect: "quotient by R1 has two states, kernel R1, and is a fair bisimulation function",
            run: |c, b| quotient_round_trip(c, b, "R1"),
        },
        Expectation {
            name: "SYS_UNION/quotient-R2",
            expect: "quotient by R2 has two states, kernel R2, and is a fair bisimulation function",
            run: |c, b| quotient_round_trip(c, b, "R2"),
        },
        Expectation {
            name: "SYS_UNION/quotient-presheaf",
            expect: "the quotient maps are bisimulation maps of fair presheaves",
            run: |c, b| {
                let mut lines = Vec::new();
                let mut ok = true;
                for rel in ["R1", "R2"] {
                    let (x, y, f) = fair_quotient(c, "SYS_UNION", rel)?;
                    let r = equiv::check_fair_bisim_map(&f, &x, &y, FairMode::Exact, b)?;
                    ok &= r.presheaf.holds && r.agree;
                    lines.push(format!("{rel}: {}", r.presheaf));
                }
                Ok((ok, lines.join("; ")))
            },
        },
        Expectation {
            name: "fairness-modes-agree",
            expect: "exact and bounded fairness searches give the same verdicts on every fair corpus case",
            run: |c, b| {
                let diffs = fairness_mode_disagreements(c, b)?;
                Ok((diffs.is_empty(), if diffs.is_empty() { "all agree".into() } else { diffs.join("; ") }))
            },
        },
        Expectation {
            name: "kan-extension-minimal",
            expect: "the left Kan extension along hiding is the presheaf of minimal executions",
            run: |c, b| {
                let mut bad = Vec::new();
                for s in &c.systems {
                    for barred in [false, true] {
                        if let Some(why) = kan_mismatch(&s.lts, b.depth, barred)? {
                            bad.push(format!("{} ({}): {why}", s.name, if barred { "barred" } else { "plain" }));
                        }
                    }
                }
                Ok((bad.is_empty(), if bad.is_empty() { "equal on every system".into() } else { bad.join("; ") }))
            },
        },
    ]
}

/// Runs every expectation.
pub fn run_corpus(b: &Bounds) -> Result<Vec<Outcome>> {
    let c = load_corpus()?;
    Ok(expectations().iter().map(|e| e.run(&c, b)).collect())
}

/// Cases where the exact and bounded fairness searches disagree: reflection for every fair
/// corpus map and every quotient, and the forall-fair check for every corpus relation and
/// the closure of their union.
pub fn fairness_mode_disagreements(c: &Corpus, b: &Bounds) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut refl = |name: String, f: &StateMap, x: &FairLts, y: &FairLts| -> Result<()> {
        let e = equiv::check_fair_reflection(f, x, y, FairMode::Exact, b)?;
        let d = equiv::check_fair_reflection(f, x, y, FairMode::Bounded, b)?;
        if e.holds != d.holds {
            out.push(format!("{name}: exact {} bounded {}", e.holds, d.holds));
        }
        Ok(())
    };
    for m in &c.morphisms {
        if let Some((x, y)) = &m.fair {
            if is_simulation(&m.map, &x.lts, &y.lts)?.is_none() {
                refl(format!("{}/{} reflection", m.system, m.name), &m.map, x, y)?;
            }
        }
    }
    for r in &c.relations {
        if let Ok((x, y, f)) = fair_quotient(c, r.system, r.name) {
            refl(format!("{}/{} quotient reflection", r.system, r.name), &f, &x, &y)?;
        }
    }
    for s in c.systems.iter().filter(|s| s.fairness.is_some()) {
        let x = s.fair().unwrap();
        let id = StateMap::identity(x.lts.num_states());
        refl(format!("{} identity reflection", s.name), &id, &x, &x)?;
    }
    let mut rels: Vec<(String, Relation)> =
        c.relations.iter().map(|r| (format!("{}/{}", r.system, r.name), r.rel.clone())).collect();
    rels.push((
        "SYS_UNION/R1+R2".into(),
        c.relation("SYS_UNION", "R1").union(c.relation("SYS_UNION", "R2")).equivalence_closure(),
    ));
    rels.push(("SYS_COMP/T;Tprime".into(), c.relation("SYS_COMP", "T").compose(c.relation("SYS_COMP", "Tprime"))));
    for (name, r) in rels {
        let system = name.split('/').next().unwrap();
        let x = c.system(system).fair().unwrap();
        for strict in [true, false] {
            let e = equiv::check_forall_fair_bisim(&r, &x, FairMode::Exact, strict, b)?;
            let d = equiv::check_forall_fair_bisim(&r, &x, FairMode::Bounded, strict, b)?;
            if e.holds != d.holds {
                out.push(format!("{name} (strict {strict}): exact {} bounded {}", e.holds, d.holds));
            }
        }
    }
    Ok(out)
}

/// Compares the left Kan extension of the execution presheaf along hiding with the
/// branching semantics: stages after forgetting the source point, and restrictions
/// element-wise. Returns the first difference.
pub fn kan_mismatch(x: &Lts, depth: usize, barred: bool) -> Result<Option<String>> {
    let letters = x.letters();
    let visible: Vec<_> = letters.iter().filter(|l| !l.is_tau()).cloned().collect();
    let f = semantics::base_presheaf(x, &letters, depth, barred)?;
    let target = if barred {
        crate::presheaf::branching_poset(&visible, depth)
    } else {
        crate::presheaf::word_poset(&visible, depth)
    };
    let h = semantics::hiding_map(f.base(), &target)?;
    let k = crate::presheaf::left_kan(&h, &f, target.clone())?;
    let sem = semantics::branching_sem(x, &letters, depth, barred)?;
    Ok(kan_vs_sem(&k, &sem))
}

fn kan_vs_sem(
    k: &FinPresheaf<Point, (usize, crate::lts::Execution)>,
    sem: &FinPresheaf<Point, crate::lts::Execution>,
) -> Option<String> {
    let base = k.base();
    for e in 0..base.len() {
        let mut got: Vec<_> = k.stage(e).iter().map(|(_, p)| p.clone()).collect();
        got.sort();
        if got != sem.stage(e) {
            return Some(format!("stage {} differs", base.elem(e)));
        }
        for to in base.below(e) {
            for (i, (_, p)) in k.stage(e).iter().enumerate() {
                let down = &k.stage(to)[k.restrict(e, i, to)].1;
                let j = sem.find(e, p).expect("same stage");
                if &sem.stage(to)[sem.restrict(e, j, to)] != down {
                    return Some(format!("restriction {} -> {} differs", base.elem(e), base.elem(to)));
                }
            }
        }
    }
    None
}

/// The natural transformation `p ↦ p_f` for a corpus branching simulation, for tests.
pub fn branching_map(m: &Morphism, depth: usize, with_taubar: bool) -> Result<NatTrans> {
    let letters = semantics::common_letters(&m.source, &m.target);
    let fx = semantics::branching_sem(&m.source, &letters, depth, with_taubar)?;
    let gy = semantics::branching_sem(&m.target, &letters, depth, with_taubar)?;
    semantics::branching_sem_map(&m.map, &m.source, &m.target, &fx, &gy)
}
