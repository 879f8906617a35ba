//! Sweeps benchmark knobs and prints the quantities the benchmark is
//! expected to show, per seed and averaged.
//!
//! cargo run --release -p sight --example calibrate -- noise_sigma=0.15 length=4000

use rayon::prelude::*;
use sight::adapter::Ablations;
use sight::baselines::MethodSpec;
use sight::metrics::{evaluate, AlignmentTracker};
use sight::simulator::{
    directional_ranking, generate_stream, permute_stream, validate_transition_geometry, BenchmarkParams, Order,
    SegmentLengths,
};
use sight::{PrototypeBank, Sight, SightConfig, EPSILON};

fn main() {
    let mut p = BenchmarkParams::default();
    let mut length = 4000usize;
    let mut seeds: Vec<u64> = (1..=5).collect();
    let mut fixed = false;
    let mut compact = false;
    let mut cfg = SightConfig::default();
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("key=value");
        let f = || v.parse::<f64>().unwrap();
        match k {
            "noise_sigma" => p.noise_sigma = f(),
            "offset_norm" => p.offset_norm = f(),
            "perturbation_norm" => p.perturbation_norm = f(),
            "logit_gain" => p.logit_gain = f(),
            "mean_segment_length" => p.mean_segment_length = f(),
            "partner" => p.partner_transition = f(),
            "orth" => p.orthogonal_means = v == "1",
            "rot" => p.rotation_angle = f(),
            "pairs" => p.confusable_pairs = v.parse().unwrap(),
            "pair_cos" => p.pair_cosine = f(),
            "layout_seed" => p.layout_seed = v.parse().unwrap(),
            "skew" => p.class_prior_skew = v.split(',').map(|x| x.parse().unwrap()).collect(),
            "length" => length = v.parse().unwrap(),
            "seeds" => seeds = (1..=v.parse().unwrap()).collect(),
            "fixed" => fixed = v == "1",
            "compact" => compact = v == "1",
            "beta" => cfg.beta = f(),
            "tau" => cfg.tau = f(),
            "eta_mu" => cfg.eta_mu = f(),
            "eta_h" => cfg.eta_h = f(),
            "omega_mu" => cfg.omega_mu = f(),
            _ => panic!("unknown key {k}"),
        }
    }
    let mut sim = p.build();
    if fixed {
        sim.segment_lengths = SegmentLengths::Fixed;
    }
    let head = sim.planted_head();
    let w = head.weights.clone();

    let mut methods: Vec<(String, MethodSpec)> = vec![
        ("source".into(), MethodSpec::SourceOnly),
        ("sight".into(), MethodSpec::Sight(cfg)),
        ("persist".into(), MethodSpec::by_name("persistence").unwrap()),
        ("markov".into(), MethodSpec::by_name("markov").unwrap()),
    ];
    for a in ["no_surprise", "no_geometric_routing", "no_habit_prior", "no_prototype_update"] {
        let c = cfg.with_ablations(Ablations::none().with(a).unwrap());
        methods.push((a.into(), MethodSpec::Sight(c)));
    }

    let rows: Vec<Vec<(String, f64)>> = seeds
        .par_iter()
        .map(|&seed| {
            let s = generate_stream(&sim, length, seed).unwrap();
            let mut out = Vec::new();
            for (name, m) in &methods {
                let r = evaluate(m.build(&w).unwrap().as_mut(), &s).unwrap();
                out.push((name.clone(), r.macro_f1.unwrap()));
                if name == "sight" {
                    out.push(("lam_b".into(), r.lambda_at_boundaries.unwrap()));
                    out.push(("lam_w".into(), r.lambda_within_segments.unwrap()));
                }
            }
            for order in [Order::Block32, Order::Shuffle] {
                let ps = permute_stream(&s, order, seed);
                let r = evaluate(MethodSpec::Sight(cfg).build(&w).unwrap().as_mut(), &ps).unwrap();
                out.push((order.name().into(), r.macro_f1.unwrap()));
            }
            let bank = PrototypeBank::from_weights(&w, EPSILON).unwrap();
            let g = validate_transition_geometry(&s, &bank, EPSILON).unwrap();
            out.push(("sep".into(), g.separability.unwrap()));
            let d = directional_ranking(&s, &bank, EPSILON).unwrap();
            out.push(("top1".into(), d.top1_accuracy));
            let mut a = Sight::from_weights(&w, cfg).unwrap();
            let mut tr = AlignmentTracker::new(&sim.class_means, EPSILON);
            for r in &s {
                a.step(r).unwrap();
                tr.push(r.label, a.state().bank.prototypes());
            }
            let rep = tr.finish();
            let worst = rep
                .classes
                .iter()
                .map(|c| c.last_segment_mean_cos - c.first_segment_mean_cos)
                .fold(f64::INFINITY, f64::min);
            out.push(("align_min".into(), worst));
            out
        })
        .collect();

    let names: Vec<&String> = rows[0].iter().map(|(n, _)| n).collect();
    if compact {
        let col = |n: &str| -> Vec<f64> {
            let i = names.iter().position(|x| *x == n).unwrap();
            rows.iter().map(|r| r[i].1).collect()
        };
        let mean = |n: &str| col(n).iter().sum::<f64>() / rows.len() as f64;
        let min = |n: &str| col(n).iter().cloned().fold(f64::INFINITY, f64::min);
        let abl = ["no_surprise", "no_geometric_routing", "no_habit_prior", "no_prototype_update"]
            .iter()
            .map(|a| mean("sight") - mean(a))
            .fold(f64::INFINITY, f64::min);
        let lam_ok = col("lam_b").iter().zip(col("lam_w")).all(|(b, w)| *b > w);
        println!(
            "src {:.3} sight {:.3} pers {:.3} mark {:.3} ablgap {:+.4} c-b {:+.4} b-s {:+.4} sep {:.2} top1 {:.2} align_min {:+.4} lam {}",
            mean("source"), mean("sight"), mean("persist"), mean("markov"), abl,
            mean("sight") - mean("block32"), mean("block32") - mean("shuffle"),
            min("sep"), min("top1"), min("align_min"), lam_ok
        );
        return;
    }
    for (i, n) in names.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|r| r[i].1).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let per: Vec<String> = vals.iter().map(|v| format!("{v:.4}")).collect();
        println!("{n:>22} mean {mean:.4}  [{}]", per.join(" "));
    }
}
