//! The individual stages of one adapter step.
//!
//! Each stage has a slice kernel (`*_into` / `*_in_place`) that writes into
//! caller-owned buffers, used by [`Sight`](super::Sight) on its scratch
//! space, and a typed wrapper that validates shapes and allocates.

use crate::error::{Error, Result};
use crate::geometry::{
    argmax, cosine_distance_slices, dot, normalize_in_place, project_in_place, softmax_in_place,
    ProbVector, UnitVector,
};

use super::bank::PrototypeBank;
use super::config::SightConfig;

fn same_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Belief-weighted prototype combination, normalized. Returns the norm of
/// the combination before normalization; near zero means the prototypes
/// cancelled and `out` is (near) the zero vector.
pub(crate) fn expected_state_into(
    bank: &PrototypeBank,
    belief: &[f64],
    eps: f64,
    out: &mut [f64],
) -> f64 {
    out.fill(0.0);
    for (weight, proto) in belief.iter().zip(bank.prototypes()) {
        for (o, m) in out.iter_mut().zip(proto) {
            *o += weight * m;
        }
    }
    normalize_in_place(out, eps)
}

pub(crate) fn surprise_slices(observed: &[f64], expected: &[f64], cfg: &SightConfig) -> (f64, f64) {
    let discrepancy = if cfg.ablations.surprise_feature_distance {
        observed
            .iter()
            .zip(expected)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    } else {
        cosine_distance_slices(observed, expected)
    };
    let lambda = if cfg.ablations.no_surprise {
        cfg.no_surprise_lambda
    } else {
        1.0 - (-cfg.beta * discrepancy * discrepancy).exp()
    };
    (discrepancy, lambda)
}

/// Alignment `v·u_k` between the observed displacement and the direction
/// from the expected state to each prototype.
///
/// A zero displacement, or a prototype coinciding with the expected state,
/// normalizes to the zero vector and therefore scores 0.
pub fn alignment_scores_into(
    observed: &[f64],
    expected: &[f64],
    bank: &PrototypeBank,
    eps: f64,
    displacement: &mut [f64],
    direction: &mut [f64],
    out: &mut [f64],
) {
    for ((d, o), e) in displacement.iter_mut().zip(observed).zip(expected) {
        *d = o - e;
    }
    normalize_in_place(displacement, eps);
    for (score, proto) in out.iter_mut().zip(bank.prototypes()) {
        for ((u, m), e) in direction.iter_mut().zip(proto).zip(expected) {
            *u = m - e;
        }
        normalize_in_place(direction, eps);
        *score = dot(displacement, direction);
    }
}

pub(crate) fn routing_into(
    observed: &[f64],
    expected: &[f64],
    bank: &PrototypeBank,
    cfg: &SightConfig,
    displacement: &mut [f64],
    direction: &mut [f64],
    out: &mut [f64],
) {
    if cfg.ablations.no_geometric_routing {
        out.fill(1.0 / out.len() as f64);
        return;
    }
    alignment_scores_into(
        observed,
        expected,
        bank,
        cfg.epsilon,
        displacement,
        direction,
        out,
    );
    softmax_in_place(out, cfg.tau);
}

pub(crate) fn calibrate_into(
    routing: &[f64],
    habit: &[f64],
    cfg: &SightConfig,
    flattened: &mut [f64],
    out: &mut [f64],
) {
    if cfg.ablations.no_habit_prior {
        out.copy_from_slice(routing);
        return;
    }
    if cfg.ablations.habit_raw {
        flattened.copy_from_slice(habit);
    } else {
        for (f, h) in flattened.iter_mut().zip(habit) {
            *f = (h + cfg.epsilon).sqrt();
        }
        project_in_place(flattened, cfg.epsilon);
    }
    for ((o, r), f) in out.iter_mut().zip(routing).zip(flattened.iter()) {
        *o = r * f;
    }
    project_in_place(out, cfg.epsilon);
}

/// Fuses persistence and routing into the temporal prior, then takes the
/// consensus with the raw distribution. Returns `true` when the consensus
/// product had no mass and fell back to uniform.
pub(crate) fn refine_into(
    raw: &[f64],
    prev_belief: &[f64],
    lambda: f64,
    rho: &[f64],
    eps: f64,
    prior: &mut [f64],
    refined: &mut [f64],
) -> bool {
    for ((pi, q), r) in prior.iter_mut().zip(prev_belief).zip(rho) {
        *pi = (1.0 - lambda) * q + lambda * r;
    }
    for ((q, p), pi) in refined.iter_mut().zip(raw).zip(prior.iter()) {
        *q = p * pi;
    }
    project_in_place(refined, eps)
}

pub(crate) fn update_habit_in_place(habit: &mut [f64], refined: &[f64], eta_h: f64) {
    for (h, q) in habit.iter_mut().zip(refined) {
        *h = (1.0 - eta_h) * *h + eta_h * q;
    }
}

pub(crate) fn update_prototypes_in_place(
    bank: &mut PrototypeBank,
    observed: &[f64],
    refined: &[f64],
    cfg: &SightConfig,
    assignment: &mut [f64],
) {
    let ab = cfg.ablations;
    if ab.no_prototype_update {
        return;
    }
    let weights: &[f64] = if ab.assignment_hard {
        assignment.fill(0.0);
        assignment[argmax(refined)] = 1.0;
        assignment
    } else {
        refined
    };
    let omega = if ab.no_source_anchor { 0.0 } else { cfg.omega_mu };
    for (k, &w) in weights.iter().enumerate() {
        let step = cfg.eta_mu * w;
        let (proto, anchor) = bank.prototype_mut(k);
        for (m, z) in proto.iter_mut().zip(observed) {
            *m = (1.0 - step) * *m + step * z;
        }
        normalize_in_place(proto, cfg.epsilon);
        for (m, a) in proto.iter_mut().zip(anchor) {
            *m = (1.0 - omega) * *m + omega * a;
        }
        normalize_in_place(proto, cfg.epsilon);
    }
}

/// Feature state expected if the previous belief persists.
pub fn expected_state(
    bank: &PrototypeBank,
    prev_belief: &ProbVector,
    eps: f64,
) -> Result<UnitVector> {
    same_len(bank.num_classes(), prev_belief.len())?;
    let mut out = vec![0.0; bank.dim()];
    expected_state_into(bank, prev_belief.as_slice(), eps, &mut out);
    Ok(UnitVector::from_normalized(out))
}

/// Discrepancy between observation and expectation, and the gate value
/// derived from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Surprise {
    pub discrepancy: f64,
    pub lambda: f64,
}

pub fn surprise(observed: &UnitVector, expected: &UnitVector, cfg: &SightConfig) -> Result<Surprise> {
    same_len(observed.dim(), expected.dim())?;
    let (discrepancy, lambda) = surprise_slices(observed.as_slice(), expected.as_slice(), cfg);
    Ok(Surprise {
        discrepancy,
        lambda,
    })
}

/// Attention over classes from how well each prototype direction lines up
/// with the observed displacement.
pub fn geometric_routing(
    observed: &UnitVector,
    expected: &UnitVector,
    bank: &PrototypeBank,
    cfg: &SightConfig,
) -> Result<ProbVector> {
    same_len(bank.dim(), observed.dim())?;
    same_len(bank.dim(), expected.dim())?;
    let d = bank.dim();
    let (mut disp, mut dir) = (vec![0.0; d], vec![0.0; d]);
    let mut out = vec![0.0; bank.num_classes()];
    routing_into(
        observed.as_slice(),
        expected.as_slice(),
        bank,
        cfg,
        &mut disp,
        &mut dir,
        &mut out,
    );
    Ok(ProbVector::from_simplex(out))
}

/// Combines the routing distribution with the flattened habit prior.
pub fn calibrate_prior(
    routing: &ProbVector,
    habit: &ProbVector,
    cfg: &SightConfig,
) -> Result<ProbVector> {
    same_len(routing.len(), habit.len())?;
    let mut flat = vec![0.0; habit.len()];
    let mut out = vec![0.0; habit.len()];
    calibrate_into(
        routing.as_slice(),
        habit.as_slice(),
        cfg,
        &mut flat,
        &mut out,
    );
    Ok(ProbVector::from_simplex(out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    /// Temporal prior π_t.
    pub prior: ProbVector,
    /// Refined belief q_t.
    pub refined: ProbVector,
    /// The consensus product had no mass; `refined` is uniform.
    pub annihilated: bool,
}

pub fn refine(
    raw: &ProbVector,
    prev_belief: &ProbVector,
    lambda: f64,
    rho: &ProbVector,
    eps: f64,
) -> Result<Refinement> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(
            "lambda",
            format!("must lie in [0, 1], got {lambda}"),
        ));
    }
    same_len(raw.len(), prev_belief.len())?;
    same_len(raw.len(), rho.len())?;
    let mut prior = vec![0.0; raw.len()];
    let mut refined = vec![0.0; raw.len()];
    let annihilated = refine_into(
        raw.as_slice(),
        prev_belief.as_slice(),
        lambda,
        rho.as_slice(),
        eps,
        &mut prior,
        &mut refined,
    );
    Ok(Refinement {
        prior: ProbVector::from_simplex(prior),
        refined: ProbVector::from_simplex(refined),
        annihilated,
    })
}

pub fn update_habit(habit: &ProbVector, refined: &ProbVector, cfg: &SightConfig) -> Result<ProbVector> {
    same_len(habit.len(), refined.len())?;
    let mut h = habit.as_slice().to_vec();
    update_habit_in_place(&mut h, refined.as_slice(), cfg.eta_h);
    Ok(ProbVector::from_simplex(h))
}

pub fn update_prototypes(
    bank: &PrototypeBank,
    observed: &UnitVector,
    refined: &ProbVector,
    cfg: &SightConfig,
) -> Result<PrototypeBank> {
    same_len(bank.dim(), observed.dim())?;
    same_len(bank.num_classes(), refined.len())?;
    let mut next = bank.clone();
    let mut assignment = vec![0.0; bank.num_classes()];
    update_prototypes_in_place(
        &mut next,
        observed.as_slice(),
        refined.as_slice(),
        cfg,
        &mut assignment,
    );
    Ok(next)
}
