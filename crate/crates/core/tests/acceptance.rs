//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use presheaf_bisim::corpus::{self, load_corpus, Corpus};
use presheaf_bisim::equiv::{self, Bounds, FairMode, Kind, MapMode, Relation, WitnessDetail};
use presheaf_bisim::lts::{Execution, Label, Lts, StateMap, Word};
use presheaf_bisim::presheaf::{branching_poset, is_bisim_map_bounded, left_kan, Point};
use presheaf_bisim::semantics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random strong-mode samples: a source, a target containing the image of the source under
/// each sampled map (so the map is a simulation), and the map.
fn strong_sample() -> Vec<(Lts, Lts, StateMap)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    for i in 0..200 {
        let labels = common::labels(1 + i % 2, false);
        let x = common::random_lts(&mut rng, 5, &labels, 0.3);
        let y0 = common::random_lts(&mut rng, 5, &labels, 0.15);
        for _ in 0..20 {
            let f = common::random_map(&mut rng, x.num_states(), y0.num_states());
            out.push((x.clone(), common::with_image(&x, &y0, &f), f));
        }
    }
    out
}

fn strong_agreement(sample: &[(Lts, Lts, StateMap)], b: &Bounds) -> Outcome {
    let mut holds = 0;
    for (x, y, f) in sample {
        let r = equiv::check_bisim_map(f, x, y, MapMode::Strong, b).map_err(|e| e.to_string())?;
        ensure(r.agree, || {
            format!("disagreement on {:?} -> {:?} via {:?}: presheaf {}, concrete {}", x, y, f, r.presheaf, r.concrete)
        })?;
        holds += r.concrete.holds as usize;
    }
    Ok(format!("{} maps agree ({holds} bisimulation functions)", sample.len()))
}

fn accepted_maps_are_surjective(sample: &[(Lts, Lts, StateMap)], b: &Bounds) -> Outcome {
    let mut accepted = 0;
    for (x, y, f) in sample {
        let letters = semantics::common_letters(x, y);
        let fx = semantics::strong_sem(x, &letters, b.depth).map_err(|e| e.to_string())?;
        let gy = semantics::strong_sem(y, &letters, b.depth).map_err(|e| e.to_string())?;
        let m = semantics::strong_sem_map(f, x, y, &fx, &gy).map_err(|e| e.to_string())?;
        let r = is_bisim_map_bounded(&fx, &gy, &m, b.mono_stage, b.mono_support).map_err(|e| e.to_string())?;
        if r.holds {
            accepted += 1;
            ensure(m.first_missed(&gy).is_none(), || format!("accepted map {f:?} misses an element"))?;
        }
    }
    Ok(format!("{accepted} accepted maps, all stage-wise surjective"))
}

/// Minimal executions by their characterisation: observable trace `rho`, at most `depth`
/// steps, and either empty or ending in a visible step.
fn minimal_by_filter(x: &Lts, rho: &Word, depth: usize) -> Vec<Execution> {
    let mut out: Vec<Execution> = x
        .executions_up_to(depth)
        .into_values()
        .flatten()
        .filter(|e| &e.trace.hide() == rho && (e.is_empty() || e.trace.last().is_some_and(|l| !l.is_tau())))
        .collect();
    if rho.is_empty() {
        out.retain(|e| e.is_empty());
    }
    out.sort();
    out
}

fn kan_is_minimal(c: &Corpus) -> Outcome {
    let mut stages = 0;
    for s in &c.systems {
        let x = &s.lts;
        for barred in [false, true] {
            if let Some(why) = corpus::kan_mismatch(x, 4, barred).map_err(|e| e.to_string())? {
                return Err(format!("{}: {why}", s.name));
            }
        }
        let letters = x.letters();
        let f = semantics::base_presheaf(x, &letters, 4, false).map_err(|e| e.to_string())?;
        let visible: Vec<Label> = letters.iter().filter(|l| !l.is_tau()).cloned().collect();
        let target = presheaf_bisim::presheaf::word_poset(&visible, 4);
        let h = semantics::hiding_map(f.base(), &target).map_err(|e| e.to_string())?;
        let k = left_kan(&h, &f, target.clone()).map_err(|e| e.to_string())?;
        for (e, p) in target.elems().iter().enumerate() {
            let rho = p.as_word().unwrap();
            if rho.len() > 3 {
                continue;
            }
            let mut got: Vec<Execution> = k.stage(e).iter().map(|(_, p)| p.clone()).collect();
            got.sort();
            ensure(got == minimal_by_filter(x, rho, 4), || format!("{} at {rho}: {got:?}", s.name))?;
            ensure(got == semantics::minimal_executions(x, rho, 4), || format!("{} at {rho}: search differs", s.name))?;
            // Restrictions are the shortest prefixes with the smaller observable trace.
            for to in target.below(e) {
                let sigma = target.elem(to).as_word().unwrap();
                for (i, (_, p)) in k.stage(e).iter().enumerate() {
                    let down = &k.stage(to)[k.restrict(e, i, to)].1;
                    let expect = semantics::mpast(p, sigma).map_err(|e| e.to_string())?;
                    ensure(*down == expect, || format!("{}: {p:?} restricts to {down:?} at {sigma}", s.name))?;
                }
            }
            stages += 1;
        }
    }
    Ok(format!("{stages} stages equal on {} systems, restrictions commute", c.systems.len()))
}

fn barred_taubar_stage(c: &Corpus) -> Outcome {
    for s in &c.systems {
        let x = &s.lts;
        let letters = x.letters();
        let f = semantics::base_presheaf(x, &letters, 4, true).map_err(|e| e.to_string())?;
        let visible: Vec<Label> = letters.iter().filter(|l| !l.is_tau()).cloned().collect();
        let target = branching_poset(&visible, 4);
        let h = semantics::hiding_map(f.base(), &target).map_err(|e| e.to_string())?;
        let k = left_kan(&h, &f, target.clone()).map_err(|e| e.to_string())?;
        let tb = target.index_of(&Point::TauBar).unwrap();
        let eps = target.index_of(&Point::Word(Word::empty())).unwrap();
        let mut got: Vec<Execution> = k.stage(tb).iter().map(|(_, p)| p.clone()).collect();
        got.sort();
        let mut expect: Vec<Execution> = (0..=4).flat_map(|n| x.executions_on(&Word(vec![Label::Tau; n]))).collect();
        expect.sort();
        expect.dedup();
        ensure(got == expect, || format!("{}: taubar stage {got:?}", s.name))?;
        for (i, (_, p)) in k.stage(tb).iter().enumerate() {
            let down = &k.stage(eps)[k.restrict(tb, i, eps)].1;
            ensure(*down == Execution::empty(p.start()), || format!("{}: {p:?} restricts to {down:?}", s.name))?;
        }
    }
    Ok(format!("taubar stages and start restriction exact on {} systems", c.systems.len()))
}

fn branching_failed_attempt(c: &Corpus, b: &Bounds) -> Outcome {
    let m = c.morphism("SYS_BRANCH", "f");
    let plain =
        equiv::check_bisim_map(&m.map, &m.source, &m.target, MapMode::BranchingFailed, b).map_err(|e| e.to_string())?;
    ensure(plain.presheaf.holds && !plain.concrete.holds, || format!("over visible words: {}", plain.presheaf))?;
    let barred =
        equiv::check_bisim_map(&m.map, &m.source, &m.target, MapMode::Branching, b).map_err(|e| e.to_string())?;
    let stage = match barred.presheaf.witness.as_ref().map(|w| &w.detail) {
        Some(WitnessDetail::Square { stage, .. }) => stage.clone(),
        _ => None,
    };
    ensure(!barred.presheaf.holds && stage.as_deref() == Some("taubar"), || {
        format!("with taubar: {}", barred.presheaf)
    })?;
    Ok(format!("plain holds / concrete fails; with taubar: {}", barred.presheaf.witness_text()))
}

fn fair_separation(c: &Corpus, b: &Bounds) -> Outcome {
    let m = c.morphism("SYS_FAIR_REM", "f");
    let (x, y) = m.fair.as_ref().unwrap();
    let sim = equiv::check_fair_sim(&m.map, x, y, b).map_err(|e| e.to_string())?;
    let open = equiv::check_inf_open(&m.map, x, y, b).map_err(|e| e.to_string())?;
    let bis = equiv::check_fair_bisim_fn(&m.map, x, y, FairMode::Exact, b).map_err(|e| e.to_string())?;
    ensure(sim.holds && open.holds, || format!("{sim}; {open}"))?;
    let self_loop = match bis.witness.as_ref().map(|w| &w.detail) {
        Some(WitnessDetail::Chain { source, image }) => {
            source.cycle_states() == BTreeSet::from([x.lts.state("x").unwrap()])
                && y.is_fair(image)
                && !x.is_fair(source)
        }
        _ => false,
    };
    ensure(!bis.holds && self_loop, || bis.to_string())?;
    Ok(bis.witness_text())
}

fn forall_fair_round_trip(c: &Corpus, b: &Bounds) -> Outcome {
    let x = c.system("SYS_UNION").fair().unwrap();
    let mut fns = Vec::new();
    for name in ["R1", "R2"] {
        let r = c.relation("SYS_UNION", name);
        let (y, f) = equiv::forall_fair_quotient(r, &x).map_err(|e| e.to_string())?;
        ensure(Relation::kernel(&f) == *r, || format!("kernel of the {name} quotient differs"))?;
        let v = equiv::check_fair_bisim_fn(&f, &x, &y, FairMode::Exact, b).map_err(|e| e.to_string())?;
        ensure(v.holds, || format!("{name} quotient: {v}"))?;
        fns.push((x.clone(), y, f));
    }
    // Identities are fair bisimulation functions too.
    for s in c.systems.iter().filter(|s| s.fairness.is_some()) {
        let fx = s.fair().unwrap();
        fns.push((fx.clone(), fx.clone(), StateMap::identity(fx.lts.num_states())));
    }
    for (x, y, f) in &fns {
        let v = equiv::check_fair_bisim_fn(f, x, y, FairMode::Exact, b).map_err(|e| e.to_string())?;
        if v.holds {
            let k = equiv::check_forall_fair_bisim(&Relation::kernel(f), x, FairMode::Exact, true, b)
                .map_err(|e| e.to_string())?;
            ensure(k.holds, || format!("kernel fails: {k}"))?;
        }
    }
    Ok(format!("R1 and R2 quotients round-trip; {} kernels checked", fns.len()))
}

fn closure_failures(c: &Corpus, b: &Bounds) -> Outcome {
    let x = c.system("SYS_UNION").fair().unwrap();
    let u = c.relation("SYS_UNION", "R1").union(c.relation("SYS_UNION", "R2")).equivalence_closure();
    let v = equiv::check_forall_fair_bisim(&u, &x, FairMode::Exact, true, b).map_err(|e| e.to_string())?;
    let pair = match v.witness.as_ref().map(|w| &w.detail) {
        Some(WitnessDetail::LassoPair { fair, unfair }) => x.is_fair(fair) && !x.is_fair(unfair),
        _ => false,
    };
    ensure(!v.holds && pair, || format!("union: {v}"))?;
    let comp = c.system("SYS_COMP");
    let tt = c.relation("SYS_COMP", "T").compose(c.relation("SYS_COMP", "Tprime"));
    let w = equiv::check_forall_fair_bisim(&tt, &comp.fair().unwrap(), FairMode::Exact, true, b)
        .map_err(|e| e.to_string())?;
    let s = |n: &str| comp.lts.state(n).unwrap();
    let missing = matches!(w.witness.as_ref().map(|w| &w.detail), Some(WitnessDetail::MissingPair(a, c)) if (*a, *c) == (s("x1"), s("y1")));
    ensure(!w.holds && missing, || format!("composition: {w}"))?;
    Ok(format!("{}; {}", v.witness_text(), w.witness_text()))
}

fn branching_round_trip(c: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut systems: Vec<Lts> = c.systems.iter().map(|s| s.lts.clone()).collect();
    for i in 0..100 {
        let labels = common::labels(1 + i % 2, true);
        systems.push(common::random_lts(&mut rng, 6, &labels, 0.12));
    }
    for x in &systems {
        let largest = equiv::branching_bisimilarity(x);
        let (q, f) = equiv::branching_quotient(x);
        ensure(Relation::kernel(&f) == largest, || format!("kernel differs on {x:?}"))?;
        let v = equiv::check_branching_bisim_fn(&f, x, &q).map_err(|e| e.to_string())?;
        ensure(v.holds, || format!("quotient map fails on {x:?}: {v}"))?;
        let brute = equiv::brute_force_largest(x, Kind::Branching).map_err(|e| e.to_string())?;
        ensure(brute == largest, || format!("brute force differs on {x:?}"))?;
    }
    Ok(format!("{} systems", systems.len()))
}

fn pf_preserves_minimality(c: &Corpus) -> Outcome {
    let mut maps: Vec<(Lts, Lts, StateMap)> = Vec::new();
    let m = c.morphism("SYS_BRANCH", "f");
    maps.push((m.source.clone(), m.target.clone(), m.map.clone()));
    for s in &c.systems {
        let (q, f) = equiv::branching_quotient(&s.lts);
        maps.push((s.lts.clone(), q, f));
        maps.push((s.lts.clone(), s.lts.clone(), StateMap::identity(s.lts.num_states())));
    }
    let mut checked = 0;
    for (x, y, f) in &maps {
        let sim = equiv::check_branching_sim(f, x, y).map_err(|e| e.to_string())?;
        if !sim.holds {
            continue;
        }
        for rho in Word::all_up_to(&x.letters().into_iter().filter(|l| !l.is_tau()).collect::<Vec<_>>(), 4) {
            for p in semantics::minimal_executions(x, &rho, 4) {
                let q = semantics::map_pf(f, y, &p).map_err(|e| e.to_string())?;
                let minimal = q.is_empty() || q.trace.last().is_some_and(|l| !l.is_tau());
                ensure(minimal && q.trace.hide() == rho && q.is_valid_in(y), || format!("{p:?} maps to {q:?}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} minimal executions over {} simulations", maps.len()))
}

fn fairness_modes(c: &Corpus) -> Outcome {
    let b = Bounds { stem: 4, cycle: 4, ..Bounds::default() };
    let diffs = corpus::fairness_mode_disagreements(c, &b).map_err(|e| e.to_string())?;
    ensure(diffs.is_empty(), || diffs.join("; "))?;
    Ok("exact and bounded agree".into())
}

fn main() -> ExitCode {
    let c = load_corpus().expect("corpus loads");
    let b = Bounds::default();
    let sample = strong_sample();
    let sample = &sample;
    let c = &c;
    let criteria: Vec<Criterion> = vec![
        ("strong bisimulation functions match bisimulation maps", Box::new(move || strong_agreement(sample, &b))),
        ("accepted bisimulation maps are surjective", Box::new(move || accepted_maps_are_surjective(sample, &b))),
        ("left Kan extension gives minimal executions", Box::new(move || kan_is_minimal(c))),
        ("barred extension has all silent executions at taubar", Box::new(move || barred_taubar_stage(c))),
        ("taubar separates the branching example", Box::new(move || branching_failed_attempt(c, &b))),
        ("fair simulation, open map, not fair bisimulation", Box::new(move || fair_separation(c, &b))),
        ("forall-fair quotients round-trip", Box::new(move || forall_fair_round_trip(c, &b))),
        ("forall-fair closure counterexamples", Box::new(move || closure_failures(c, &b))),
        ("branching quotient is bisimilarity", Box::new(move || branching_round_trip(c))),
        ("image executions stay minimal", Box::new(move || pf_preserves_minimality(c))),
        ("exact and bounded fairness searches agree", Box::new(move || fairness_modes(c))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {:>2}: {name} ({msg}) [{secs:.2}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {msg} [{secs:.2}s]", i + 1)
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
