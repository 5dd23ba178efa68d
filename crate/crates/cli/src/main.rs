use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use presheaf_bisim::corpus::{self, Outcome};
use presheaf_bisim::equiv::{self, Bounds, FairMode, MapMode, Relation, Verdict};
use presheaf_bisim::io::{parse_map, parse_relation, read_system, write_map};
use presheaf_bisim::lts::{write_aut, FairLts, FairnessSpec, Lts, Sidecar, StateMap};
use presheaf_bisim::presheaf::observation_presheaf;
use presheaf_bisim::{semantics, Error};

#[derive(Parser)]
#[command(name = "psbisim", version, about = "Check strong, fair and branching bisimulations of finite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    bounds: BoundArgs,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct BoundArgs {
    /// Longest finite word in the semantics.
    #[arg(long, global = true, default_value_t = 4)]
    depth: usize,
    /// Longest lasso stem enumerated.
    #[arg(long, global = true, default_value_t = 4)]
    stem_bound: usize,
    /// Longest lasso cycle enumerated.
    #[arg(long, global = true, default_value_t = 4)]
    cycle_bound: usize,
    /// Generators per mono square (1 disables pair squares).
    #[arg(long, global = true, default_value_t = 2)]
    mono_stage_bound: usize,
    /// Largest down-set for a pair square.
    #[arg(long, global = true, default_value_t = 6)]
    mono_support_bound: usize,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            depth: self.depth,
            stem: self.stem_bound,
            cycle: self.cycle_bound,
            mono_stage: self.mono_stage_bound,
            mono_support: self.mono_support_bound,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Run one checker and print its verdict (exit 0 iff it holds).
    Check {
        #[arg(long, value_enum)]
        kind: CheckKind,
        /// State map file (`source -> target` lines).
        #[arg(long)]
        map: Option<PathBuf>,
        /// Relation file (`state ~ state` lines).
        #[arg(long)]
        rel: Option<PathBuf>,
        /// Presheaf model for `bisim-map`.
        #[arg(long, value_enum, default_value_t = ModeArg::Strong)]
        mode: ModeArg,
        /// How runs are searched for fairness conditions.
        #[arg(long, value_enum, default_value_t = FairArg::ExactStreett)]
        fairness: FairArg,
        /// Accept symmetric relations that are not equivalences.
        #[arg(long)]
        relaxed: bool,
        /// Use the equivalence generated by the relation file.
        #[arg(long)]
        close: bool,
        /// Source system (`.aut`; a `.json` sidecar next to it is read when present).
        x: PathBuf,
        /// Target system; defaults to the source.
        y: Option<PathBuf>,
    },
    /// Build a quotient and write `<out>.aut`, `<out>.json` and `<out>.map`.
    Quotient {
        #[arg(long, value_enum)]
        kind: QuotientKind,
        /// Relation file, for `forall-fair`.
        #[arg(long)]
        rel: Option<PathBuf>,
        /// Use the equivalence generated by the relation file.
        #[arg(long)]
        close: bool,
        /// Output path prefix; defaults to `<input>.quotient`.
        #[arg(long)]
        out: Option<PathBuf>,
        x: PathBuf,
    },
    /// Print a semantic presheaf stage by stage.
    Dump {
        #[arg(long, value_enum, default_value_t = ModeArg::Strong)]
        mode: ModeArg,
        x: PathBuf,
    },
    /// Run the bundled example suite.
    Corpus {
        /// Write the bundled files (and per-map source and target systems) to a directory
        /// instead of running the suite.
        #[arg(long)]
        extract: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Simulation,
    StrongBisimFn,
    FairSim,
    FairReflection,
    FairBisimFn,
    InfOpen,
    ForallFairBisim,
    BranchingSim,
    BranchingBisimFn,
    BranchingBisimilar,
    BisimMap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuotientKind {
    Branching,
    ForallFair,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strong,
    Fair,
    BranchingFailed,
    Branching,
    Observation,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FairArg {
    ExactStreett,
    Bounded,
}

impl From<FairArg> for FairMode {
    fn from(f: FairArg) -> FairMode {
        match f {
            FairArg::ExactStreett => FairMode::Exact,
            FairArg::Bounded => FairMode::Bounded,
        }
    }
}

/// Failures other than a negative verdict.
enum Failure {
    Io(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

struct Loaded {
    lts: Lts,
    fairness: Option<FairnessSpec>,
}

impl Loaded {
    fn fair(&self) -> Res<FairLts> {
        let spec = self.fairness.clone().unwrap_or_else(FairnessSpec::all_fair);
        Ok(FairLts::new(self.lts.clone(), spec)?)
    }
}

fn load(path: &Path) -> Res<Loaded> {
    let aut = read(path)?;
    let side = path.with_extension("json");
    let sidecar = if side.exists() { Some(read(&side)?) } else { None };
    let (lts, fairness) = read_system(&aut, sidecar.as_deref())?;
    Ok(Loaded { lts, fairness })
}

fn need<'a>(p: &'a Option<PathBuf>, what: &str) -> Res<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Failure::Lib(Error::pre(format!("this check needs --{what}"))))
}

fn read_relation(path: &Path, x: &Lts, close: bool) -> Res<Relation> {
    let r = Relation::new(x.num_states(), parse_relation(&read(path)?, x)?);
    Ok(if close { r.equivalence_closure() } else { r })
}

fn print_verdict(v: &Verdict, format: Format) {
    match format {
        Format::Text => println!("{v}"),
        Format::Machine => println!("{}", v.to_json()),
    }
}

fn run_check(cli: &Cli) -> Res<bool> {
    let Command::Check { kind, map, rel, mode, fairness, relaxed, close, x, y } = &cli.command else { unreachable!() };
    let b = cli.bounds.bounds();
    let fm = FairMode::from(*fairness);
    let xs = load(x)?;
    let ys = match y {
        Some(p) => load(p)?,
        None => Loaded { lts: xs.lts.clone(), fairness: xs.fairness.clone() },
    };
    let f = || -> Res<StateMap> { Ok(parse_map(&read(need(map, "map")?)?, &xs.lts, &ys.lts)?) };
    let r = || read_relation(need(rel, "rel")?, &xs.lts, *close);
    let verdict = match kind {
        CheckKind::Simulation => equiv::check_simulation(&f()?, &xs.lts, &ys.lts)?,
        CheckKind::StrongBisimFn => equiv::check_strong_bisim_fn(&f()?, &xs.lts, &ys.lts)?,
        CheckKind::FairSim => equiv::check_fair_sim(&f()?, &xs.fair()?, &ys.fair()?, &b)?,
        CheckKind::FairReflection => equiv::check_fair_reflection(&f()?, &xs.fair()?, &ys.fair()?, fm, &b)?,
        CheckKind::FairBisimFn => equiv::check_fair_bisim_fn(&f()?, &xs.fair()?, &ys.fair()?, fm, &b)?,
        CheckKind::InfOpen => equiv::check_inf_open(&f()?, &xs.fair()?, &ys.fair()?, &b)?,
        CheckKind::ForallFairBisim => equiv::check_forall_fair_bisim(&r()?, &xs.fair()?, fm, !relaxed, &b)?,
        CheckKind::BranchingSim => equiv::check_branching_sim(&f()?, &xs.lts, &ys.lts)?,
        CheckKind::BranchingBisimFn => equiv::check_branching_bisim_fn(&f()?, &xs.lts, &ys.lts)?,
        CheckKind::BranchingBisimilar => equiv::check_branching_bisimilar(&r()?, &xs.lts)?,
        CheckKind::BisimMap => {
            let f = f()?;
            let report = match mode {
                ModeArg::Strong => equiv::check_bisim_map(&f, &xs.lts, &ys.lts, MapMode::Strong, &b)?,
                ModeArg::Branching => equiv::check_bisim_map(&f, &xs.lts, &ys.lts, MapMode::Branching, &b)?,
                ModeArg::BranchingFailed => equiv::check_bisim_map(&f, &xs.lts, &ys.lts, MapMode::BranchingFailed, &b)?,
                ModeArg::Fair => equiv::check_fair_bisim_map(&f, &xs.fair()?, &ys.fair()?, fm, &b)?,
                ModeArg::Observation => return Err(Error::pre("observation mode only applies to dump").into()),
            };
            match cli.format {
                Format::Text => {
                    println!("{}", report.presheaf);
                    println!("concrete {}", report.concrete);
                    println!("squares tested: {}; verdicts agree: {}", report.squares, report.agree);
                }
                Format::Machine => println!("{}", serde_json::to_string(&report).expect("report serializes")),
            }
            return Ok(report.presheaf.holds);
        }
    };
    print_verdict(&verdict, cli.format);
    Ok(verdict.holds)
}

fn run_quotient(cli: &Cli) -> Res<bool> {
    let Command::Quotient { kind, rel, close, out, x } = &cli.command else { unreachable!() };
    let xs = load(x)?;
    let (q, f, note) = match kind {
        QuotientKind::Branching => {
            let (q, f) = equiv::branching_quotient(&xs.lts);
            (q, f, None)
        }
        QuotientKind::ForallFair => {
            let r = read_relation(need(rel, "rel")?, &xs.lts, *close)?;
            let (q, f) = equiv::forall_fair_quotient(&r, &xs.fair()?)?;
            (q.lts, f, Some("fairness of the quotient is the image of the source fairness and is not written"))
        }
    };
    let prefix = out.clone().unwrap_or_else(|| x.with_extension("quotient"));
    let path = |ext: &str| PathBuf::from(format!("{}.{ext}", prefix.display()));
    write(&path("aut"), &write_aut(&q))?;
    write(&path("json"), &Sidecar::names_of(&q).to_json())?;
    write(&path("map"), &write_map(&f, &xs.lts, &q))?;
    match cli.format {
        Format::Text => {
            println!("quotient: {} states, {} transitions", q.num_states(), q.transitions().len());
            println!("wrote {}, {}, {}", path("aut").display(), path("json").display(), path("map").display());
            if let Some(n) = note {
                println!("note: {n}");
            }
        }
        Format::Machine => println!(
            "{}",
            serde_json::json!({ "states": q.num_states(), "transitions": q.transitions().len(),
                "aut": path("aut"), "map": path("map") })
        ),
    }
    Ok(true)
}

fn run_dump(cli: &Cli) -> Res<bool> {
    let Command::Dump { mode, x } = &cli.command else { unreachable!() };
    let b = cli.bounds.bounds();
    let xs = load(x)?;
    let letters = xs.lts.letters();
    let text = match mode {
        ModeArg::Strong => semantics::strong_sem(&xs.lts, &letters, b.depth)?.dump(|e| e.display(&xs.lts).to_string()),
        ModeArg::BranchingFailed | ModeArg::Branching => {
            semantics::branching_sem(&xs.lts, &letters, b.depth, *mode == ModeArg::Branching)?
                .dump(|e| e.display(&xs.lts).to_string())
        }
        ModeArg::Fair => {
            let fx = xs.fair()?;
            let base = semantics::fair_base(&[&fx], &letters, b.fair())?;
            semantics::fair_sem(&fx, &base, b.fair())?.dump(|e| e.display(&fx.lts))
        }
        ModeArg::Observation => observation_presheaf(&letters, true, b.depth).dump(|o| o.to_string()),
    };
    match cli.format {
        Format::Text => print!("{text}"),
        Format::Machine => println!("{}", serde_json::json!({ "dump": text })),
    }
    Ok(true)
}

fn extract(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let c = corpus::load_corpus()?;
    for s in &c.systems {
        write(&dir.join(format!("{}.aut", s.name)), s.aut)?;
        write(&dir.join(format!("{}.json", s.name)), s.sidecar)?;
    }
    for m in &c.morphisms {
        let stem = format!("{}.{}", m.system, m.name);
        write(&dir.join(format!("{stem}.map")), m.text)?;
        for (part, lts, fair) in
            [("source", &m.source, m.fair.as_ref().map(|p| &p.0)), ("target", &m.target, m.fair.as_ref().map(|p| &p.1))]
        {
            write(&dir.join(format!("{stem}.{part}.aut")), &write_aut(lts))?;
            let mut side = Sidecar::names_of(lts);
            if let Some(FairnessSpec::Streett(pairs)) = fair.map(|f| &f.fairness) {
                let names =
                    |s: &std::collections::BTreeSet<usize>| s.iter().map(|&i| lts.name(i).to_string()).collect();
                side.kind = Some("streett".into());
                side.pairs = Some(pairs.iter().map(|(l, u)| (names(l), names(u))).collect());
            }
            write(&dir.join(format!("{stem}.{part}.json")), &side.to_json())?;
        }
    }
    for r in &c.relations {
        write(&dir.join(format!("{}.{}.rel", r.system, r.name)), r.text)?;
    }
    Ok(())
}

fn run_corpus(cli: &Cli) -> Res<bool> {
    let Command::Corpus { extract: dir } = &cli.command else { unreachable!() };
    if let Some(dir) = dir {
        extract(dir)?;
        println!("extracted the corpus to {}", dir.display());
        return Ok(true);
    }
    let b = cli.bounds.bounds();
    let c = corpus::load_corpus()?;
    let outcomes: Vec<Outcome> = corpus::expectations().par_iter().map(|e| e.run(&c, &b)).collect();
    for o in &outcomes {
        match cli.format {
            Format::Text => println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail),
            Format::Machine => println!("{}", serde_json::to_string(o).expect("outcome serializes")),
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if cli.format == Format::Text {
        println!("{} passed, {failed} failed", outcomes.len() - failed);
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { .. } => run_check(&cli),
        Command::Quotient { .. } => run_quotient(&cli),
        Command::Dump { .. } => run_dump(&cli),
        Command::Corpus { .. } => run_corpus(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Io(m) => (2, m),
                Failure::Lib(e @ Error::Parse { .. }) => (2, e.to_string()),
                Failure::Lib(e @ (Error::Precondition(_) | Error::Unsupported(_))) => (3, e.to_string()),
                Failure::Lib(e @ Error::Internal(_)) => (4, e.to_string()),
            };
            eprintln!("psbisim: {msg}");
            ExitCode::from(code)
        }
    }
}
