//! Invariants as plain functions of a case budget, so the same checks run
//! as ordinary tests and, scaled up, inside the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use sight::adapter::ops::alignment_scores_into;
use sight::adapter::{geometric_routing, refine, surprise, update_prototypes};
use sight::baselines::MethodSpec;
use sight::geometry::{argmax, cosine_distance, dot, l2_norm, normalize, simplex_project, softmax_temp};
use sight::io::{
    read_classifier_weights, read_stream, read_trace, write_classifier_weights, write_stream, write_stream_csv,
    write_trace, ClassifierWeights, RunManifest,
};
use sight::metrics::macro_f1;
use sight::simulator::{permute_stream, Order};
use sight::{Ablations, ProbVector, PrototypeBank, ScoreKind, Scores, Sight, SightConfig, StreamRecord, UnitVector};

pub struct Prop {
    pub name: &'static str,
    /// Share of the acceptance budget; heavier properties get fewer cases.
    pub weight: u32,
    pub run: fn(u32) -> Result<(), String>,
}

pub const ALL: &[Prop] = &[
    Prop { name: "normalize_idempotent", weight: 10, run: normalize_idempotent },
    Prop { name: "normalize_scale_invariant", weight: 10, run: normalize_scale_invariant },
    Prop { name: "simplex_project_closure", weight: 10, run: simplex_project_closure },
    Prop { name: "softmax_shift_invariant", weight: 10, run: softmax_shift_invariant },
    Prop { name: "softmax_argmax_preserved", weight: 10, run: softmax_argmax_preserved },
    Prop { name: "cosine_symmetric_bounded", weight: 10, run: cosine_symmetric_bounded },
    Prop { name: "lambda_monotone", weight: 10, run: lambda_monotone },
    Prop { name: "persistence_limit", weight: 10, run: persistence_limit },
    Prop { name: "consensus_identity", weight: 10, run: consensus_identity },
    Prop { name: "routing_follows_alignment", weight: 5, run: routing_follows_alignment },
    Prop { name: "anchoring_contracts", weight: 5, run: anchoring_contracts },
    Prop { name: "macro_f1_relabel_invariant", weight: 5, run: macro_f1_relabel_invariant },
    Prop { name: "permutation_keeps_records", weight: 2, run: permutation_keeps_records },
    Prop { name: "adapter_closure", weight: 3, run: adapter_closure },
    Prop { name: "nulled_is_source_only", weight: 2, run: nulled_is_source_only },
    Prop { name: "baselines_closure", weight: 2, run: baselines_closure },
    Prop { name: "io_round_trip", weight: 1, run: io_round_trip },
];

pub fn total_weight() -> u32 {
    ALL.iter().map(|p| p.weight).sum()
}

fn check<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

const EPS: f64 = sight::EPSILON;

fn vec_f64(range: std::ops::Range<f64>, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(range, len)
}

/// Vectors with norm of at least `min`.
fn nonzero(len: std::ops::Range<usize>, min: f64) -> impl Strategy<Value = Vec<f64>> {
    vec_f64(-100.0..100.0, len).prop_filter("norm too small", move |v| l2_norm(v) >= min)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn on_simplex(p: &[f64], tol: f64) -> bool {
    p.iter().all(|x| *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}

fn prob(len: usize) -> impl Strategy<Value = ProbVector> {
    vec_f64(0.0..1.0, len..len + 1).prop_map(|v| simplex_project(&v, EPS).unwrap())
}

fn normalize_idempotent(cases: u32) -> Result<(), String> {
    check(cases, nonzero(1..32, 1e-3), |v| {
        let n = l2_norm(&v);
        let u = normalize(&v, EPS).unwrap();
        let uu = normalize(u.as_slice(), EPS).unwrap();
        prop_assert!((u.norm() - 1.0).abs() <= 2.0 * EPS / n);
        prop_assert!(max_gap(u.as_slice(), uu.as_slice()) <= 2.0 * EPS * (1.0 + 1.0 / n));
        Ok(())
    })
}

fn normalize_scale_invariant(cases: u32) -> Result<(), String> {
    check(cases, (nonzero(1..32, 1e-3), 1e-2..1e3f64), |(v, c)| {
        let n = l2_norm(&v);
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let a = normalize(&v, EPS).unwrap();
        let b = normalize(&scaled, EPS).unwrap();
        prop_assert!(max_gap(a.as_slice(), b.as_slice()) <= 2.0 * EPS * (1.0 / n + 1.0 / (c * n)) + 1e-15);
        Ok(())
    })
}

fn simplex_project_closure(cases: u32) -> Result<(), String> {
    check(cases, vec_f64(0.0..1e6, 1..32), |v| {
        let p = simplex_project(&v, EPS).unwrap();
        prop_assert!(on_simplex(p.as_slice(), 1e-12));
        if v.iter().sum::<f64>() <= EPS {
            prop_assert!(p.as_slice().iter().all(|x| *x == 1.0 / v.len() as f64));
        }
        Ok(())
    })
}

fn softmax_shift_invariant(cases: u32) -> Result<(), String> {
    check(cases, (vec_f64(-50.0..50.0, 1..32), -100.0..100.0f64, 0.02..5.0f64), |(s, c, tau)| {
        let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
        let a = softmax_temp(&s, tau).unwrap();
        let b = softmax_temp(&shifted, tau).unwrap();
        prop_assert!(on_simplex(a.as_slice(), 1e-12));
        prop_assert!(max_gap(a.as_slice(), b.as_slice()) <= 1e-9);
        Ok(())
    })
}

fn softmax_argmax_preserved(cases: u32) -> Result<(), String> {
    check(cases, (vec_f64(-50.0..50.0, 1..32), 0.02..5.0f64), |(s, tau)| {
        let p = softmax_temp(&s, tau).unwrap();
        let top = p.as_slice().iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(p.as_slice()[argmax(&s)], top);
        // order is kept pairwise, not just at the top
        for i in 0..s.len() {
            for j in 0..s.len() {
                if s[i] < s[j] {
                    prop_assert!(p.as_slice()[i] <= p.as_slice()[j]);
                }
            }
        }
        Ok(())
    })
}

fn cosine_symmetric_bounded(cases: u32) -> Result<(), String> {
    let pair = (1usize..16).prop_flat_map(|d| (nonzero(d..d + 1, 1e-3), nonzero(d..d + 1, 1e-3)));
    check(cases, pair, |(a, b)| {
        let n = l2_norm(&a);
        let (a, b) = (normalize(&a, EPS).unwrap(), normalize(&b, EPS).unwrap());
        let ab = cosine_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, cosine_distance(&b, &a).unwrap());
        prop_assert!((0.0..=2.0).contains(&ab));
        // ‖u‖ = n/(n+ε), so u·u falls short of 1 by about 2ε/n
        prop_assert!(cosine_distance(&a, &a).unwrap() <= 2.0 * EPS / n + 1e-15);
        Ok(())
    })
}

fn unit_at(angle: f64) -> UnitVector {
    normalize(&[angle.cos(), angle.sin()], EPS).unwrap()
}

fn lambda_monotone(cases: u32) -> Result<(), String> {
    let s = (0.0..std::f64::consts::PI, 0.0..std::f64::consts::PI, 0.01..10.0f64, 0.01..10.0f64);
    check(cases, s, |(t1, t2, b1, b2)| {
        let (t_lo, t_hi) = (t1.min(t2), t1.max(t2));
        let (b_lo, b_hi) = (b1.min(b2), b1.max(b2));
        let e = unit_at(0.0);
        let cfg = |beta| SightConfig { beta, ..SightConfig::default() };
        let lam = |t, beta| surprise(&unit_at(t), &e, &cfg(beta)).unwrap();
        let (near, far) = (lam(t_lo, b_lo), lam(t_hi, b_lo));
        prop_assert!(near.discrepancy <= far.discrepancy + 1e-15);
        prop_assert!(near.lambda <= far.lambda + 1e-15);
        prop_assert!(lam(t_lo, b_lo).lambda <= lam(t_lo, b_hi).lambda + 1e-15);
        for l in [near.lambda, far.lambda] {
            prop_assert!((0.0..=1.0).contains(&l));
        }
        Ok(())
    })
}

fn persistence_limit(cases: u32) -> Result<(), String> {
    let s = (2usize..12).prop_flat_map(|k| (prob(k), prob(k), prob(k)));
    check(cases, s, |(p, prev, rho)| {
        let r = refine(&p, &prev, 0.0, &rho, EPS).unwrap();
        prop_assert!(max_gap(r.prior.as_slice(), prev.as_slice()) <= 1e-12);
        let want: Vec<f64> = p.as_slice().iter().zip(prev.as_slice()).map(|(a, b)| a * b).collect();
        let want = simplex_project(&want, EPS).unwrap();
        prop_assert!(max_gap(r.refined.as_slice(), want.as_slice()) <= 1e-12);
        Ok(())
    })
}

fn consensus_identity(cases: u32) -> Result<(), String> {
    let s = (2usize..12).prop_flat_map(|k| (prob(k), 0.0..=1.0f64));
    check(cases, s, |(p, lambda)| {
        let u = ProbVector::uniform(p.len());
        let r = refine(&p, &u, lambda, &u, EPS).unwrap();
        prop_assert!(!r.annihilated);
        prop_assert!(max_gap(r.refined.as_slice(), p.as_slice()) <= 1e-12);
        Ok(())
    })
}

fn bank(weights: &[Vec<f64>]) -> PrototypeBank {
    PrototypeBank::from_weights(weights, EPS).unwrap()
}

fn weights(k: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(nonzero(d..d + 1, 1e-2), k..k + 1)
}

fn routing_follows_alignment(cases: u32) -> Result<(), String> {
    let s = (2usize..8, 2usize..10)
        .prop_flat_map(|(k, d)| (weights(k, d), nonzero(d..d + 1, 1e-2), nonzero(d..d + 1, 1e-2), 0.02..1.0f64));
    check(cases, s, |(w, z, e, tau)| {
        let b = bank(&w);
        let (z, e) = (normalize(&z, EPS).unwrap(), normalize(&e, EPS).unwrap());
        let cfg = SightConfig { tau, ..SightConfig::default() };
        let r = geometric_routing(&z, &e, &b, &cfg).unwrap();
        let d = b.dim();
        let (mut disp, mut dir, mut a) = (vec![0.0; d], vec![0.0; d], vec![0.0; b.num_classes()]);
        alignment_scores_into(z.as_slice(), e.as_slice(), &b, EPS, &mut disp, &mut dir, &mut a);
        prop_assert!(on_simplex(r.as_slice(), 1e-12));
        prop_assert!(a.iter().all(|x| (-1.0 - 1e-9..=1.0 + 1e-9).contains(x)));
        let top = r.as_slice().iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(r.as_slice()[argmax(&a)], top);
        Ok(())
    })
}

fn anchoring_contracts(cases: u32) -> Result<(), String> {
    let s = (2usize..6, 2usize..10).prop_flat_map(|(k, d)| {
        (weights(k, d), prop::collection::vec(nonzero(d..d + 1, 1e-2), 1..20), 0.001..0.5f64)
    });
    check(cases, s, |(w, zs, omega)| {
        let mut b = bank(&w);
        let pull = SightConfig { eta_mu: 0.5, omega_mu: 0.0, ..SightConfig::default() };
        let k = b.num_classes();
        for z in &zs {
            let z = normalize(z, EPS).unwrap();
            b = update_prototypes(&b, &z, &ProbVector::uniform(k), &pull).unwrap();
        }
        let anchor = SightConfig { eta_mu: 0.0, omega_mu: omega, ..SightConfig::default() };
        let z = normalize(&zs[0], EPS).unwrap();
        let next = update_prototypes(&b, &z, &ProbVector::uniform(k), &anchor).unwrap();
        for c in 0..k {
            let before = dot(b.prototype(c), b.anchor(c));
            let after = dot(next.prototype(c), next.anchor(c));
            prop_assert!(after >= before - 1e-12, "class {c}: {before} -> {after}");
            prop_assert!((l2_norm(next.prototype(c)) - 1.0).abs() <= 1e-6);
        }
        Ok(())
    })
}

fn macro_f1_relabel_invariant(cases: u32) -> Result<(), String> {
    let s = (2usize..8).prop_flat_map(|k| {
        let pairs = prop::collection::vec((0..k, 0..k), 1..200);
        (Just(k), pairs, Just((0..k).collect::<Vec<_>>()).prop_shuffle())
    });
    check(cases, s, |(k, pairs, perm)| {
        let (pred, lab): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
        let f = macro_f1(&pred, &lab, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        let rp: Vec<usize> = pred.iter().map(|&x| perm[x]).collect();
        let rl: Vec<usize> = lab.iter().map(|&x| perm[x]).collect();
        prop_assert!((macro_f1(&rp, &rl, k).unwrap() - f).abs() <= 1e-12);
        // and under reordering of the pairs
        let (rev_p, rev_l): (Vec<usize>, Vec<usize>) = pairs.iter().rev().cloned().unzip();
        prop_assert!((macro_f1(&rev_p, &rev_l, k).unwrap() - f).abs() <= 1e-12);
        Ok(())
    })
}

/// Random stream with consistent K and d.
fn stream(probs: bool) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<StreamRecord>)> {
    (2usize..6, 1usize..9, 1usize..60).prop_flat_map(move |(k, d, n)| {
        let rec = (nonzero(d..d + 1, 1e-3), vec_f64(-8.0..8.0, k..k + 1), prop::option::of(0..k));
        (weights(k, d), prop::collection::vec(rec, n..n + 1)).prop_map(move |(w, recs)| {
            let records = recs
                .into_iter()
                .enumerate()
                .map(|(t, (z, l, label))| {
                    let scores = if probs {
                        Scores::Probs(softmax_temp(&l, 1.0).unwrap().into_vec())
                    } else {
                        Scores::Logits(l)
                    };
                    let r = StreamRecord::new(t as u64, z, scores);
                    match label {
                        Some(y) => r.with_label(y),
                        None => r,
                    }
                })
                .collect();
            (w, records)
        })
    })
}

fn config() -> impl Strategy<Value = SightConfig> {
    (0.1..5.0f64, 0.02..1.0f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..0.5f64, any::<u8>(), 0.0..=1.0f64).prop_map(
        |(beta, tau, eta_mu, eta_h, omega_mu, bits, nsl)| {
            let names = Ablations::NAMES;
            let mut a = Ablations::none();
            for (i, n) in names.iter().enumerate() {
                if bits & (1 << i) != 0 {
                    a = a.with(n).unwrap();
                }
            }
            SightConfig {
                beta,
                tau,
                eta_mu,
                eta_h,
                omega_mu,
                no_surprise_lambda: nsl,
                ..SightConfig::default()
            }
            .with_ablations(a)
        },
    )
}

fn adapter_closure(cases: u32) -> Result<(), String> {
    check(cases, (stream(false), config()), |((w, records), cfg)| {
        let mut s = Sight::from_weights(&w, cfg).unwrap();
        for r in &records {
            let t = s.step(r).unwrap();
            for p in [&t.raw, &t.routing, &t.calibrated_prior, &t.temporal_prior, &t.refined] {
                prop_assert!(on_simplex(p.as_slice(), 1e-9), "step {}: {:?}", r.t, p);
            }
            prop_assert!((0.0..=1.0).contains(&t.surprise));
            prop_assert!(on_simplex(s.state().habit.as_slice(), 1e-9));
            for m in s.state().bank.prototypes() {
                prop_assert!((l2_norm(m) - 1.0).abs() <= 1e-6);
            }
        }
        Ok(())
    })
}

fn nulled_is_source_only(cases: u32) -> Result<(), String> {
    check(cases, (stream(false), config()), |((w, records), cfg)| {
        // nulling means the surprise gate is pinned open, not half open
        let cfg = SightConfig { no_surprise_lambda: 1.0, ..cfg };
        let mut s = Sight::from_weights(&w, cfg.with_ablations(Ablations::nulling())).unwrap();
        for r in &records {
            let q = s.advance(&r.feature, &r.scores).unwrap().to_vec();
            let p = r.scores.raw_distribution().unwrap();
            prop_assert!(max_gap(&q, p.as_slice()) <= 1e-9);
        }
        Ok(())
    })
}

fn baselines_closure(cases: u32) -> Result<(), String> {
    check(cases, (stream(false), 0.0..=1.0f64), |((w, records), alpha)| {
        let mut pers = MethodSpec::Persistence { alpha }.build(&w).unwrap();
        let mut flat = MethodSpec::Persistence { alpha: 0.0 }.build(&w).unwrap();
        let mut markov = MethodSpec::by_name("markov").unwrap().build(&w).unwrap();
        for r in &records {
            let p = r.scores.raw_distribution().unwrap();
            prop_assert!(on_simplex(pers.step(r).unwrap().refined.as_slice(), 1e-9));
            prop_assert!(on_simplex(markov.step(r).unwrap().refined.as_slice(), 1e-9));
            prop_assert!(max_gap(flat.step(r).unwrap().refined.as_slice(), p.as_slice()) <= 1e-12);
        }
        Ok(())
    })
}

fn permutation_keeps_records(cases: u32) -> Result<(), String> {
    check(cases, (stream(false), any::<u64>()), |((_, records), seed)| {
        let key = |r: &StreamRecord| r.feature.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let mut want: Vec<_> = records.iter().map(key).collect();
        want.sort();
        for order in Order::ALL {
            let p = permute_stream(&records, order, seed);
            let mut got: Vec<_> = p.iter().map(key).collect();
            got.sort();
            prop_assert_eq!(&got, &want);
            if order == Order::Block32 {
                // blocks stay whole and in order inside
                let orig: Vec<u64> = p.iter().map(|r| r.meta["orig_t"].as_u64().unwrap()).collect();
                let mut jumps = 0;
                for w in orig.windows(2) {
                    if w[0] / 32 == w[1] / 32 {
                        prop_assert_eq!(w[0] + 1, w[1]);
                    } else {
                        jumps += 1;
                    }
                }
                prop_assert_eq!(jumps, records.len().div_ceil(32).saturating_sub(1));
            }
        }
        Ok(())
    })
}

fn io_round_trip(cases: u32) -> Result<(), String> {
    let s = (stream(false), stream(true), config(), any::<u64>());
    check(cases, s, |((w, logits), (_, probs), cfg, seed)| {
        let dir = tempfile::tempdir().unwrap();
        let path = |n: &str| dir.path().join(n);
        let strip = |v: &[StreamRecord]| {
            v.iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.meta = Default::default();
                    r
                })
                .collect::<Vec<_>>()
        };

        for (records, kind) in [(&logits, ScoreKind::Logits), (&probs, ScoreKind::Probs)] {
            write_stream(path("s.jsonl"), records.iter()).unwrap();
            let back: Vec<StreamRecord> = read_stream(path("s.jsonl"), kind).unwrap().map(Result::unwrap).collect();
            prop_assert_eq!(&back, records);
            write_stream_csv(path("s.csv"), records).unwrap();
            let back: Vec<StreamRecord> = read_stream(path("s.csv"), kind).unwrap().map(Result::unwrap).collect();
            prop_assert_eq!(strip(&back), strip(records));
        }

        let cw = ClassifierWeights { weights: w.clone(), bias: None };
        write_classifier_weights(path("w.json"), &cw).unwrap();
        prop_assert_eq!(read_classifier_weights(path("w.json")).unwrap(), cw.clone());
        write_classifier_weights(path("w.csv"), &cw).unwrap();
        prop_assert_eq!(read_classifier_weights(path("w.csv")).unwrap(), cw);

        let mut s = Sight::from_weights(&w, cfg).unwrap().with_prototype_snapshots(seed % 2 == 0);
        let traces: Vec<_> = logits.iter().map(|r| s.step(r).unwrap()).collect();
        write_trace(path("t.jsonl"), &traces).unwrap();
        prop_assert_eq!(read_trace(path("t.jsonl")).unwrap(), traces);

        let mut m = RunManifest::start("sight", Some(seed), serde_json::to_value(cfg).unwrap());
        m.add_input("stream", path("s.jsonl")).unwrap();
        m.add_output("trace", path("t.jsonl")).unwrap();
        m.finish();
        m.write(path("m.json")).unwrap();
        let back = RunManifest::read(path("m.json")).unwrap();
        prop_assert!(back.verify(dir.path()).is_ok());
        prop_assert_eq!(back, m);
        let cfg_back: SightConfig = serde_json::from_value(serde_json::to_value(cfg).unwrap()).unwrap();
        prop_assert_eq!(cfg_back, cfg);
        Ok(())
    })
}
