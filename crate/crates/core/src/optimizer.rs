//! Gate-error objectives over pulse areas and structural angles, feasible
//! random starts, and deterministic multi-start Nelder–Mead campaigns.
//!
//! Each pulse contributes two parameters, its signed area `A_k` and the polar
//! angle `φ_k` of its structural vector, so normalization holds exactly and the
//! geometrical-factor constraints become arcs of allowed angles. Those arcs are
//! enforced by a quadratic penalty during the search, by sampling starts inside
//! them, and by projecting the final vertex back onto them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintMode, ConstraintSpec, PulseSequence, StructuralVector, Subsystem, MAX_PULSES};
use crate::pathways::{bucket_amplitudes, LoopClass};
use crate::propagator::{fidelity, gate_diagonal, GateDiagonal, PhaseBranch};
use crate::simplex::{self, SimplexOptions};

/// Initial simplex step along an area coordinate (radians).
pub const AREA_STEP: f64 = 0.25;
/// Initial simplex step along a structural-angle coordinate (radians).
pub const ANGLE_STEP: f64 = 0.1;

/// Which diagonal patterns count as a perfect gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseTarget {
    /// Only `(uV, uA, uB) = (−1, −1, −1)`: every return amplitude equal to −1.
    AllNegative,
    /// Any of the four local-phase equivalents of CZ.
    AnyLocalPhase,
}

impl PhaseTarget {
    pub fn gate_error(self, g: &GateDiagonal) -> f64 {
        match self {
            PhaseTarget::AllNegative => (1.0 - PhaseBranch::MinusMinusMinus.fidelity(g)).max(0.0),
            PhaseTarget::AnyLocalPhase => fidelity(g).error,
        }
    }
}

/// Areas followed by structural angles, one of each per pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub areas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl ParameterVector {
    pub fn new(areas: Vec<f64>, phis: Vec<f64>) -> Self {
        assert_eq!(areas.len(), phis.len());
        Self { areas, phis }
    }

    pub fn from_sequence(seq: &PulseSequence) -> Self {
        Self::new(seq.areas(), seq.angles())
    }

    pub fn n_pulses(&self) -> usize {
        self.areas.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.areas.iter().chain(&self.phis).copied().collect()
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn to_sequence(&self) -> Result<PulseSequence> {
        PulseSequence::from_areas_and_angles(&self.areas, &self.phis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub n_pulses: usize,
    pub constraints: ConstraintSpec,
    pub n_starts: usize,
    pub seed: u64,
    /// Sampling range of the initial areas.
    pub area_range: (f64, f64),
    /// Allow negative areas in the search (bounded by `−area_max`).
    pub signed_areas: bool,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub penalty_weight: f64,
    pub target_mechanism: Option<LoopClass>,
    /// Weight of `Σ |non-target V buckets|` added to the mechanism-guided error.
    pub mech_penalty: f64,
    pub phase_target: PhaseTarget,
}

impl OptimizerConfig {
    pub fn new(n_pulses: usize, constraints: ConstraintSpec) -> Self {
        Self {
            n_pulses,
            constraints,
            n_starts: 1000,
            seed: 0,
            area_range: (0.1 * PI, constraints.area_max),
            signed_areas: false,
            max_iterations: 400 * 2 * n_pulses,
            convergence_tol: 1e-12,
            penalty_weight: 10.0,
            target_mechanism: None,
            mech_penalty: 0.0,
            phase_target: PhaseTarget::AnyLocalPhase,
        }
    }

    /// Switches to signed areas sampled over `[−area_max, area_max]`.
    pub fn with_signed_areas(mut self) -> Self {
        self.signed_areas = true;
        self.area_range = (-self.constraints.area_max, self.constraints.area_max);
        self
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_pulses
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_pulses == 0 || self.n_pulses > MAX_PULSES {
            return Err(Error::PulseCount {
                got: self.n_pulses,
                max: MAX_PULSES,
            });
        }
        if self.n_starts == 0 {
            return bad("at least one start is required".into());
        }
        if !(self.convergence_tol > 0.0) {
            return bad(format!("convergence tolerance must be positive, got {}", self.convergence_tol));
        }
        let (lo, hi) = self.area_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("invalid area range [{lo}, {hi}]"));
        }
        if self.constraints.feasible_arcs().is_empty() {
            return bad(format!(
                "no structural vector satisfies {} with sigma = {}",
                self.constraints.mode, self.constraints.sigma
            ));
        }
        Ok(())
    }

    fn area_bounds(&self) -> (f64, f64) {
        let max = self.constraints.area_max;
        (if self.signed_areas { -max } else { 0.0 }, max)
    }
}

/// Quadratic constraint penalty (before weighting); zero on the feasible set.
pub fn constraint_violation(p: &ParameterVector, cfg: &OptimizerConfig) -> f64 {
    let (lo, hi) = cfg.area_bounds();
    p.areas
        .iter()
        .zip(&p.phis)
        .map(|(&area, &phi)| {
            let e = StructuralVector::from_angle(phi).map(|e| cfg.constraints.factor_violation(&e));
            let outside = (lo - area).max(0.0) + (area - hi).max(0.0);
            e.unwrap_or(f64::NAN) + outside * outside
        })
        .sum()
}

fn decode(p: &ParameterVector) -> Option<PulseSequence> {
    p.to_sequence().ok()
}

/// `1 − F` of the gate plus the weighted constraint penalty. Non-finite when the
/// parameters cannot be decoded.
pub fn objective_error(p: &ParameterVector, cfg: &OptimizerConfig) -> f64 {
    let Some(seq) = decode(p) else {
        return f64::NAN;
    };
    match gate_diagonal(&seq) {
        Ok(g) => cfg.phase_target.gate_error(&g) + cfg.penalty_weight * constraint_violation(p, cfg),
        Err(_) => f64::NAN,
    }
}

/// Gate error with `uV` replaced by the target pathway bucket of V. Pathway
/// amplitudes of a working gate add up to −1, so this error is always measured
/// against the all-negative pattern regardless of `phase_target`.
pub fn mechanism_guided_error(p: &ParameterVector, cfg: &OptimizerConfig) -> Result<f64> {
    let target = cfg.target_mechanism.ok_or(Error::MissingTarget)?;
    let seq = p.to_sequence()?;
    let g = gate_diagonal(&seq)?;
    let buckets = bucket_amplitudes(&seq, Subsystem::V)?;
    let chosen = GateDiagonal::new(buckets.get(target), g.u_a, g.u_b);
    let others: f64 = LoopClass::ALL
        .iter()
        .filter(|&&c| c != target)
        .map(|&c| buckets.get(c).abs())
        .sum();
    Ok(PhaseTarget::AllNegative.gate_error(&chosen)
        + cfg.penalty_weight * constraint_violation(p, cfg)
        + cfg.mech_penalty * others)
}

/// The objective a campaign minimizes: mechanism-guided when a target is set.
pub fn campaign_objective(p: &ParameterVector, cfg: &OptimizerConfig) -> f64 {
    if cfg.target_mechanism.is_some() {
        mechanism_guided_error(p, cfg).unwrap_or(f64::NAN)
    } else {
        objective_error(p, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub params: ParameterVector,
    /// Objective at `params`.
    pub error: f64,
    /// Penalty (unweighted) of the best vertex before projection.
    pub raw_penalty: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start_index: usize,
}

/// Runs the simplex search on `f` from `x0` with the configured steps and limits.
pub fn nelder_mead<F>(f: F, x0: &ParameterVector, cfg: &OptimizerConfig) -> OptimizationOutcome
where
    F: Fn(&ParameterVector) -> f64,
{
    let n = x0.n_pulses();
    let steps = std::iter::repeat_n(AREA_STEP, n)
        .chain(std::iter::repeat_n(ANGLE_STEP, n))
        .collect();
    let opts = SimplexOptions {
        max_iterations: cfg.max_iterations,
        tolerance: cfg.convergence_tol,
        x_tolerance: cfg.convergence_tol.sqrt(),
        steps,
    };
    let out = simplex::minimize(|x| f(&ParameterVector::from_flat(x)), &x0.to_flat(), &opts);
    OptimizationOutcome {
        params: ParameterVector::from_flat(&out.x),
        error: out.value,
        raw_penalty: 0.0,
        iterations: out.iterations,
        converged: out.converged,
        start_index: 0,
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Nearest feasible point: infeasible angles snap to the closest arc endpoint
/// and areas are clamped into bounds. With unsigned areas and a sign-symmetric
/// constraint, a negative area is first traded for a flipped structural vector,
/// which leaves every amplitude unchanged.
pub fn project_feasible(p: &ParameterVector, cfg: &OptimizerConfig) -> ParameterVector {
    let (lo, hi) = cfg.area_bounds();
    let c = &cfg.constraints;
    let arcs = c.feasible_arcs();
    let mut out = p.clone();
    for (area, phi) in out.areas.iter_mut().zip(out.phis.iter_mut()) {
        if *area < lo && c.mode != ConstraintMode::Positive {
            *area = -*area;
            *phi += PI;
        }
        *area = area.clamp(lo, hi);
        *phi = wrap_angle(*phi);
        let ok = StructuralVector::from_angle(*phi)
            .map(|e| c.vector_ok(&e))
            .unwrap_or(false);
        if !ok {
            let target = *phi;
            *phi = arcs
                .iter()
                .flat_map(|&(s, t)| [s, t])
                .min_by(|&x, &y| circular_distance(x, target).total_cmp(&circular_distance(y, target)))
                .unwrap_or(target);
        }
    }
    out
}

/// Independent stream for start `index` of a campaign seeded with `seed`.
pub fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform random start: areas over `area_range`, angles over the feasible arcs.
pub fn sample_start<R: Rng + ?Sized>(cfg: &OptimizerConfig, rng: &mut R) -> Result<ParameterVector> {
    if !(0.0..1.0).contains(&cfg.constraints.sigma) {
        return Err(Error::InvalidConfig(format!(
            "sigma must lie in [0, 1), got {}",
            cfg.constraints.sigma
        )));
    }
    let arcs = cfg.constraints.feasible_arcs();
    let total: f64 = arcs.iter().map(|(s, t)| t - s).sum();
    if arcs.is_empty() || total <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "empty feasible arc for {} with sigma = {}",
            cfg.constraints.mode, cfg.constraints.sigma
        )));
    }
    let (lo, hi) = cfg.area_range;
    let mut areas = Vec::with_capacity(cfg.n_pulses);
    let mut phis = Vec::with_capacity(cfg.n_pulses);
    for _ in 0..cfg.n_pulses {
        areas.push(if hi > lo { rng.gen_range(lo..hi) } else { lo });
        let mut u = rng.gen_range(0.0..total);
        let mut phi = arcs[arcs.len() - 1].1;
        for &(s, t) in &arcs {
            if u <= t - s {
                phi = s + u;
                break;
            }
            u -= t - s;
        }
        phis.push(phi);
    }
    Ok(ParameterVector::new(areas, phis))
}

/// One full optimization from the start drawn for `index`.
pub fn optimize_start(cfg: &OptimizerConfig, index: usize) -> Result<OptimizationOutcome> {
    let mut rng = start_rng(cfg.seed, index);
    let x0 = sample_start(cfg, &mut rng)?;
    let objective = |p: &ParameterVector| campaign_objective(p, cfg);
    let raw = nelder_mead(objective, &x0, cfg);
    let params = project_feasible(&raw.params, cfg);
    Ok(OptimizationOutcome {
        error: campaign_objective(&params, cfg),
        raw_penalty: constraint_violation(&raw.params, cfg),
        params,
        iterations: raw.iterations,
        converged: raw.converged,
        start_index: index,
    })
}

/// `n_starts` independent runs in start order. Runs execute on the current
/// rayon pool; the result does not depend on scheduling.
pub fn run_multistart(cfg: &OptimizerConfig) -> Result<Vec<OptimizationOutcome>> {
    cfg.validate()?;
    (0..cfg.n_starts)
        .into_par_iter()
        .map(|i| optimize_start(cfg, i))
        .collect()
}
