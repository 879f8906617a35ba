//! One pass over the default benchmark: every quantity the acceptance
//! criteria look at, per seed.

use rayon::prelude::*;
use sight::adapter::Ablations;
use sight::baselines::MethodSpec;
use sight::metrics::{evaluate, AlignmentReport, AlignmentTracker, EvalReport};
use sight::simulator::{
    directional_ranking, generate_stream, permute_stream, validate_transition_geometry, DirectionalRanking,
    GeometryReport, Order, SimConfig, BENCHMARK_LENGTH, BENCHMARK_SEEDS,
};
use sight::{PrototypeBank, Sight, SightConfig, EPSILON};

pub const ABLATIONS: [&str; 4] = ["no_surprise", "no_geometric_routing", "no_habit_prior", "no_prototype_update"];

pub struct SeedRun {
    pub seed: u64,
    pub source: EvalReport,
    pub sight: EvalReport,
    pub persistence: EvalReport,
    pub markov: EvalReport,
    /// In [`ABLATIONS`] order.
    pub ablations: Vec<EvalReport>,
    /// Sight and source-only macro-F1 under block32 and shuffle.
    pub sight_block32: f64,
    pub sight_shuffle: f64,
    pub source_block32: f64,
    pub source_shuffle: f64,
    /// Largest per-step gap between the all-nulled adapter and source-only.
    pub nulled_max_gap: f64,
    pub min_lambda: f64,
    pub max_lambda: f64,
    pub geometry: GeometryReport,
    pub directional: DirectionalRanking,
    pub alignment: AlignmentReport,
}

fn f1(r: &EvalReport) -> f64 {
    r.macro_f1.expect("benchmark streams are labeled")
}

fn run_seed(sim: &SimConfig, weights: &[Vec<f64>], seed: u64) -> SeedRun {
    let cfg = SightConfig::default();
    let stream = generate_stream(sim, BENCHMARK_LENGTH, seed).unwrap();
    let eval = |spec: MethodSpec, s: &[sight::StreamRecord]| evaluate(spec.build(weights).unwrap().as_mut(), s).unwrap();

    let ablations = ABLATIONS
        .iter()
        .map(|a| eval(MethodSpec::Sight(cfg.with_ablations(Ablations::none().with(a).unwrap())), &stream))
        .collect();
    let block = permute_stream(&stream, Order::Block32, seed);
    let shuffled = permute_stream(&stream, Order::Shuffle, seed);

    let mut nulled = Sight::from_weights(weights, cfg.with_ablations(Ablations::nulling())).unwrap();
    let mut gap = 0.0f64;
    for r in &stream {
        let q = nulled.advance(&r.feature, &r.scores).unwrap();
        let p = r.scores.raw_distribution().unwrap();
        for (a, b) in q.iter().zip(p.as_slice()) {
            gap = gap.max((a - b).abs());
        }
    }

    let mut adapter = Sight::from_weights(weights, cfg).unwrap();
    let mut tracker = AlignmentTracker::new(&sim.class_means, EPSILON);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &stream {
        adapter.advance(&r.feature, &r.scores).unwrap();
        let l = adapter.last_surprise();
        lo = lo.min(l);
        hi = hi.max(l);
        tracker.push(r.label, adapter.state().bank.prototypes());
    }

    let bank = PrototypeBank::from_weights(weights, EPSILON).unwrap();
    SeedRun {
        seed,
        source: eval(MethodSpec::SourceOnly, &stream),
        sight: eval(MethodSpec::Sight(cfg), &stream),
        persistence: eval(MethodSpec::by_name("persistence").unwrap(), &stream),
        markov: eval(MethodSpec::by_name("markov").unwrap(), &stream),
        ablations,
        sight_block32: f1(&eval(MethodSpec::Sight(cfg), &block)),
        sight_shuffle: f1(&eval(MethodSpec::Sight(cfg), &shuffled)),
        source_block32: f1(&eval(MethodSpec::SourceOnly, &block)),
        source_shuffle: f1(&eval(MethodSpec::SourceOnly, &shuffled)),
        nulled_max_gap: gap,
        min_lambda: lo,
        max_lambda: hi,
        geometry: validate_transition_geometry(&stream, &bank, EPSILON).unwrap(),
        directional: directional_ranking(&stream, &bank, EPSILON).unwrap(),
        alignment: tracker.finish(),
    }
}

pub fn run_all() -> Vec<SeedRun> {
    let sim = SimConfig::benchmark();
    let weights = sim.planted_head().weights;
    BENCHMARK_SEEDS
        .par_iter()
        .map(|&s| run_seed(&sim, &weights, s))
        .collect()
}

pub fn mean(runs: &[SeedRun], f: impl Fn(&SeedRun) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

pub fn macro_f1(r: &EvalReport) -> f64 {
    f1(r)
}
