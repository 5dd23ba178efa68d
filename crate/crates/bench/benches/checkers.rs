use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use presheaf_bisim::corpus::{load_corpus, run_corpus};
use presheaf_bisim::equiv::{self, Bounds, FairMode, MapMode};
use presheaf_bisim::lts::{Label, Lts, StateMap};

/// `n` states in a ring on `a`, with a silent shortcut from every even state.
fn ring(n: usize) -> Lts {
    let mut ts: Vec<(usize, Label, usize)> = (0..n).map(|s| (s, Label::act("a"), (s + 1) % n)).collect();
    ts.extend((0..n).step_by(2).map(|s| (s, Label::Tau, (s + 1) % n)));
    Lts::anonymous(n, ts).unwrap()
}

fn branching(c: &mut Criterion) {
    let mut g = c.benchmark_group("branching");
    for n in [8, 32, 128] {
        let x = ring(n);
        g.bench_with_input(BenchmarkId::new("quotient", n), &x, |b, x| b.iter(|| equiv::branching_quotient(x)));
    }
    g.finish();
}

fn presheaf_maps(c: &mut Criterion) {
    let x = Lts::from_named(&["p", "q", "r"], &[("p", "a", "q"), ("q", "b", "r"), ("r", "a", "p"), ("p", "b", "p")])
        .unwrap();
    let f = StateMap::identity(3);
    let mut g = c.benchmark_group("presheaf");
    for depth in [2, 3, 4] {
        let b = Bounds { depth, ..Bounds::default() };
        g.bench_with_input(BenchmarkId::new("strong-identity", depth), &b, |bench, b| {
            bench.iter(|| equiv::check_bisim_map(&f, &x, &x, MapMode::Strong, b).unwrap())
        });
    }
    g.finish();
}

fn fair(c: &mut Criterion) {
    let corpus = load_corpus().unwrap();
    let m = corpus.morphism("SYS_FAIR_REM", "f");
    let (x, y) = m.fair.as_ref().unwrap();
    let b = Bounds::default();
    let mut g = c.benchmark_group("fair");
    for (name, mode) in [("exact", FairMode::Exact), ("bounded", FairMode::Bounded)] {
        g.bench_function(name, |bench| bench.iter(|| equiv::check_fair_bisim_fn(&m.map, x, y, mode, &b).unwrap()));
    }
    g.finish();
}

fn corpus(c: &mut Criterion) {
    let mut g = c.benchmark_group("corpus");
    g.sample_size(10);
    g.bench_function("all", |bench| bench.iter(|| run_corpus(&Bounds::default()).unwrap()));
    g.finish();
}

criterion_group!(benches, branching, presheaf_maps, fair, corpus);
criterion_main!(benches);
