//! Direct time integration of the blockaded two-atom Schrödinger equation,
//! used to cross-check the closed-form block unitaries.
//!
//! The state space is `(|00>, |01>, |10>, |11>, |r0>, |0r>, |r1>, |1r>)`; the
//! doubly excited state is removed outright. During pulse `k` the Hamiltonian
//! is `H(t) = −½ Ω_k(t) M_k` with the real symmetric coupling pattern
//!
//! ```text
//! |00> ↔ |r0> : a_k    |00> ↔ |0r> : b_k
//! |01> ↔ |r1> : a_k    |10> ↔ |1r> : b_k
//! ```
//!
//! and `|11>` uncoupled. Between pulses nothing evolves (resonant frame), so
//! gaps only fix the timeline.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Pulse, PulseSequence, Subsystem};
use crate::propagator::sequence_unitary;

pub const DIM: usize = 8;
/// Columns may drift at most this much in norm before a run is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Coarsest allowed step as a fraction of the pulse duration.
pub const MIN_STEPS_PER_PULSE: f64 = 200.0;
pub const DEFAULT_STEPS_PER_PULSE: f64 = 1000.0;

pub type Matrix8 = [[C64; DIM]; DIM];

/// Positions of the block states inside the 8-state basis.
const V_BLOCK: [usize; 3] = [0, 4, 5];
const A_BLOCK: [usize; 2] = [1, 6];
const B_BLOCK: [usize; 2] = [2, 7];
const IDLE: usize = 3;

pub const BASIS_LABELS: [&str; DIM] = ["00", "01", "10", "11", "r0", "0r", "r1", "1r"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Envelope {
    /// `Ω(t) = Ω₀ sin²(πt/τ)`.
    SinSquared,
    /// Plateau with raised-cosine ramps, each lasting `ramp_fraction · τ`.
    FlatTop { ramp_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub shape: Envelope,
    /// Duration `τ` of every pulse.
    pub duration: f64,
    /// Idle time between consecutive pulses.
    pub gap: f64,
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        Self {
            shape: Envelope::SinSquared,
            duration: 1.0,
            gap: 0.1,
        }
    }
}

impl EnvelopeSpec {
    pub fn flat_top(ramp_fraction: f64) -> Self {
        Self {
            shape: Envelope::FlatTop { ramp_fraction },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gap < 0.0 {
            return Err(Error::OverlappingPulses(self.gap));
        }
        if !(self.duration > 0.0 && self.duration.is_finite() && self.gap.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pulse duration must be positive and finite, got {}",
                self.duration
            )));
        }
        if let Envelope::FlatTop { ramp_fraction } = self.shape {
            if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
                return Err(Error::InvalidConfig(format!(
                    "ramp fraction must lie in (0, 0.5], got {ramp_fraction}"
                )));
            }
        }
        Ok(())
    }

    pub fn default_dt(&self) -> f64 {
        self.duration / DEFAULT_STEPS_PER_PULSE
    }

    /// Start time of pulse `k` (0-based); pulse `k` occupies `[t_k, t_k + τ]`.
    pub fn start_time(&self, k: usize) -> f64 {
        k as f64 * (self.duration + self.gap)
    }

    /// Peak Rabi frequency giving pulse area `area`.
    pub fn peak(&self, area: f64) -> f64 {
        match self.shape {
            Envelope::SinSquared => 2.0 * area / self.duration,
            Envelope::FlatTop { ramp_fraction } => area / (self.duration * (1.0 - ramp_fraction)),
        }
    }

    /// `Ω(t)` at local time `t ∈ [0, τ]` for a pulse of area `area`.
    pub fn rabi(&self, area: f64, t: f64) -> f64 {
        let tau = self.duration;
        if !(0.0..=tau).contains(&t) {
            return 0.0;
        }
        let shape = match self.shape {
            Envelope::SinSquared => (PI * t / tau).sin().powi(2),
            Envelope::FlatTop { ramp_fraction } => {
                let ramp = ramp_fraction * tau;
                let edge = t.min(tau - t);
                if edge >= ramp {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * edge / ramp).cos())
                }
            }
        };
        self.peak(area) * shape
    }

    /// Step count for one pulse so that the step does not exceed `dt`.
    fn steps(&self, dt: f64) -> Result<usize> {
        let limit = self.duration / MIN_STEPS_PER_PULSE;
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge {
                dt,
                limit,
                duration: self.duration,
            });
        }
        Ok((self.duration / dt - 1e-9).ceil() as usize)
    }

    /// `∫Ω dt` over one pulse, sampled exactly where the integrator samples it
    /// (Simpson's rule on the step grid).
    pub fn integrated_area(&self, area: f64, dt: f64) -> Result<f64> {
        let n = self.steps(dt)?;
        let h = self.duration / n as f64;
        Ok((0..n)
            .map(|i| {
                let t = i as f64 * h;
                h / 6.0 * (self.rabi(area, t) + 4.0 * self.rabi(area, t + 0.5 * h) + self.rabi(area, t + h))
            })
            .sum())
    }
}

fn zero() -> Matrix8 {
    [[C64::new(0.0, 0.0); DIM]; DIM]
}

pub fn identity8() -> Matrix8 {
    let mut m = zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

/// Coupling pattern `M_k` as a list of `(i, j, weight)` with `i < j`.
fn couplings(p: &Pulse) -> [(usize, usize, f64); 4] {
    let (a, b) = (p.e.a(), p.e.b());
    [(0, 4, a), (0, 5, b), (1, 6, a), (2, 7, b)]
}

/// `dψ/dt = i (Ω/2) M ψ`.
fn derivative(links: &[(usize, usize, f64); 4], omega: f64, psi: &[C64; DIM]) -> [C64; DIM] {
    let mut d = [C64::new(0.0, 0.0); DIM];
    let f = C64::new(0.0, 0.5 * omega);
    for &(i, j, w) in links {
        d[i] += f * w * psi[j];
        d[j] += f * w * psi[i];
    }
    d
}

fn axpy(x: &[C64; DIM], k: &[C64; DIM], h: f64) -> [C64; DIM] {
    std::array::from_fn(|i| x[i] + k[i] * h)
}

fn rk4_pulse(psi: &mut [C64; DIM], p: &Pulse, env: &EnvelopeSpec, n: usize) {
    let links = couplings(p);
    let h = env.duration / n as f64;
    for i in 0..n {
        let t = i as f64 * h;
        let (w0, wm, w1) = (
            env.rabi(p.area, t),
            env.rabi(p.area, t + 0.5 * h),
            env.rabi(p.area, t + h),
        );
        let k1 = derivative(&links, w0, psi);
        let k2 = derivative(&links, wm, &axpy(psi, &k1, 0.5 * h));
        let k3 = derivative(&links, wm, &axpy(psi, &k2, 0.5 * h));
        let k4 = derivative(&links, w1, &axpy(psi, &k3, h));
        for j in 0..DIM {
            psi[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
}

/// Integrates every basis state through the pulse train. Column `j` of the
/// result is the final state that started in basis state `j`.
pub fn integrate_sequence(seq: &PulseSequence, env: &EnvelopeSpec, dt: f64) -> Result<Matrix8> {
    env.validate()?;
    let n = env.steps(dt)?;
    let mut out = zero();
    for col in 0..DIM {
        let mut psi = [C64::new(0.0, 0.0); DIM];
        psi[col] = C64::new(1.0, 0.0);
        for p in seq.pulses() {
            rk4_pulse(&mut psi, p, env, n);
        }
        let drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift {
                column: col,
                drift,
                dt,
            });
        }
        for (row, z) in psi.iter().enumerate() {
            out[row][col] = *z;
        }
    }
    Ok(out)
}

/// The closed-form block products placed into the 8-state basis.
pub fn analytic_matrix(seq: &PulseSequence) -> Matrix8 {
    let mut m = zero();
    m[IDLE][IDLE] = C64::new(1.0, 0.0);
    let blocks: [(Subsystem, &[usize]); 3] = [
        (Subsystem::V, &V_BLOCK),
        (Subsystem::A, &A_BLOCK),
        (Subsystem::B, &B_BLOCK),
    ];
    for (s, idx) in blocks {
        let u = sequence_unitary(seq, s);
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                m[r][c] = u.get(i, j);
            }
        }
    }
    m
}

pub fn max_deviation(x: &Matrix8, y: &Matrix8) -> f64 {
    x.iter()
        .flatten()
        .zip(y.iter().flatten())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise difference between the integrated and analytic 8×8
/// propagators. Entries outside the coupled blocks are included, so any leak
/// between blocks shows up here as well.
pub fn compare_with_analytic(seq: &PulseSequence, env: &EnvelopeSpec, dt: f64) -> Result<f64> {
    let numeric = integrate_sequence(seq, env, dt)?;
    Ok(max_deviation(&numeric, &analytic_matrix(seq)))
}

/// [`compare_with_analytic`] over many sequences in parallel, in input order.
pub fn compare_batch(seqs: &[PulseSequence], env: &EnvelopeSpec, dt: f64) -> Vec<Result<f64>> {
    seqs.par_iter().map(|s| compare_with_analytic(s, env, dt)).collect()
}
