//! Quantum-pathway decomposition of the return amplitudes.
//!
//! In the basis `{|0̃>, |1̃_k>, |d_k>}` each pulse acts as
//! `c_k(|0̃><0̃| + |1̃_k><1̃_k|) + i s_k(|0̃><1̃_k| + h.c.) + |d_k><d_k|`, so
//! `<0̃|U_N⋯U_1|0̃>` expands into a sum over event strings that start and end in
//! the ground state. Inside V the excited population is a real 2-vector in the
//! plane of the structural vectors; inside A and B there is a single excited
//! state, every overlap is one and there is no dark sector.
//!
//! Paths are grouped by their loop count (excitation/return pairs) and by
//! whether a loop lingers in the excited manifold across a pulse that acts on
//! the subsystem. A pulse whose block unitary is the identity (zero generalized
//! area modulo 4π) is not a delay: it is indistinguishable from the idle gap
//! between pulses.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PulseSequence, Subsystem, MAX_PULSES};
use crate::propagator::mixing_angle;

/// Number of divisions of each m-square side.
pub const MSQUARE_DIVISIONS: usize = 3;

/// A block is treated as the identity when `|sin θ|` and `1 − cos θ` are below this.
pub const INERT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    StayGround,
    Up,
    Down,
    StayCoupled,
    StayDark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathwayEvent {
    pub kind: EventKind,
    /// Zero-based pulse index.
    pub pulse_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathway {
    pub events: Vec<PathwayEvent>,
    pub amplitude: f64,
    /// Number of `Up` events.
    pub loops: usize,
    /// Stay events in the excited manifold at pulses that act on the subsystem.
    pub delays: usize,
}

impl Pathway {
    pub fn class(&self) -> LoopClass {
        LoopClass::of(self.loops, self.delays)
    }
}

/// The four pathway families used to summarize a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopClass {
    ZeroLoop,
    OneLoop,
    DLoop,
    TwoLoop,
}

impl LoopClass {
    pub const ALL: [LoopClass; 4] = [
        LoopClass::ZeroLoop,
        LoopClass::OneLoop,
        LoopClass::DLoop,
        LoopClass::TwoLoop,
    ];

    pub fn of(loops: usize, delays: usize) -> Self {
        match (loops, delays) {
            (0, _) => LoopClass::ZeroLoop,
            (1, 0) => LoopClass::OneLoop,
            (1, _) => LoopClass::DLoop,
            _ => LoopClass::TwoLoop,
        }
    }

    /// Box rank of the m-square corner reached by a pure mechanism of this class.
    pub fn corner_omega(self) -> u8 {
        match self {
            LoopClass::ZeroLoop => 1,
            LoopClass::OneLoop => 3,
            LoopClass::DLoop => 7,
            LoopClass::TwoLoop => 9,
        }
    }
}

impl fmt::Display for LoopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LoopClass::ZeroLoop => "0loop",
            LoopClass::OneLoop => "1loop",
            LoopClass::DLoop => "dloop",
            LoopClass::TwoLoop => "2loop",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LoopClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0loop" => Ok(LoopClass::ZeroLoop),
            "1loop" => Ok(LoopClass::OneLoop),
            "dloop" => Ok(LoopClass::DLoop),
            "2loop" => Ok(LoopClass::TwoLoop),
            other => Err(Error::InvalidConfig(format!(
                "unknown mechanism `{other}` (expected 0loop, 1loop, dloop or 2loop)"
            ))),
        }
    }
}

/// Aggregated pathway amplitudes of one subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MechanismBuckets {
    pub u0: f64,
    pub u1: f64,
    pub ud: f64,
    pub u2: f64,
}

impl MechanismBuckets {
    pub fn get(&self, class: LoopClass) -> f64 {
        match class {
            LoopClass::ZeroLoop => self.u0,
            LoopClass::OneLoop => self.u1,
            LoopClass::DLoop => self.ud,
            LoopClass::TwoLoop => self.u2,
        }
    }

    fn slot(&mut self, class: LoopClass) -> &mut f64 {
        match class {
            LoopClass::ZeroLoop => &mut self.u0,
            LoopClass::OneLoop => &mut self.u1,
            LoopClass::DLoop => &mut self.ud,
            LoopClass::TwoLoop => &mut self.u2,
        }
    }

    pub fn total(&self) -> f64 {
        self.u0 + self.u1 + self.ud + self.u2
    }
}

/// Per-pulse quantities of one subsystem.
#[derive(Debug, Clone, Copy)]
struct Step {
    s: f64,
    c: f64,
    e: [f64; 2],
    active: bool,
}

fn steps(seq: &PulseSequence, sub: Subsystem) -> Vec<Step> {
    seq.pulses()
        .iter()
        .map(|p| {
            let (s, c) = mixing_angle(p, sub).sin_cos();
            let e = match sub {
                Subsystem::V => [p.e.a(), p.e.b()],
                Subsystem::A | Subsystem::B => [1.0, 0.0],
            };
            let active = !(s.abs() <= INERT_TOL && 1.0 - c <= INERT_TOL);
            Step { s, c, e, active }
        })
        .collect()
}

fn overlap(e: &[f64; 2], v: &[f64; 2]) -> f64 {
    e[0] * v[0] + e[1] * v[1]
}

/// Amplitude carried along a partial path. Factors of `i` are folded into the
/// sign at each `Down` event, so everything stays real.
#[derive(Debug, Clone, Copy)]
enum Carried {
    Ground(f64),
    Excited([f64; 2]),
}

struct Walker<'a> {
    steps: &'a [Step],
    dark: bool,
}

impl Walker<'_> {
    /// Calls `visit` for every complete ground-to-ground path.
    fn walk<F>(&self, k: usize, state: Carried, loops: usize, delays: usize, trail: &mut Vec<PathwayEvent>, visit: &mut F)
    where
        F: FnMut(f64, usize, usize, &[PathwayEvent]),
    {
        if k == self.steps.len() {
            if let Carried::Ground(amp) = state {
                visit(amp, loops, delays, trail);
            }
            return;
        }
        let st = &self.steps[k];
        let push = |kind, next, loops, delays, trail: &mut Vec<PathwayEvent>, visit: &mut F| {
            trail.push(PathwayEvent { kind, pulse_index: k });
            self.walk(k + 1, next, loops, delays, trail, visit);
            trail.pop();
        };
        match state {
            Carried::Ground(amp) => {
                push(EventKind::StayGround, Carried::Ground(amp * st.c), loops, delays, trail, visit);
                // An excitation on the last pulse cannot return.
                if k + 1 < self.steps.len() {
                    let v = [amp * st.s * st.e[0], amp * st.s * st.e[1]];
                    push(EventKind::Up, Carried::Excited(v), loops + 1, delays, trail, visit);
                }
            }
            Carried::Excited(v) => {
                let proj = overlap(&st.e, &v);
                push(EventKind::Down, Carried::Ground(-st.s * proj), loops, delays, trail, visit);
                if k + 1 < self.steps.len() {
                    let d = delays + usize::from(st.active);
                    let coupled = [st.c * proj * st.e[0], st.c * proj * st.e[1]];
                    push(EventKind::StayCoupled, Carried::Excited(coupled), loops, d, trail, visit);
                    if self.dark {
                        let dark = [v[0] - proj * st.e[0], v[1] - proj * st.e[1]];
                        push(EventKind::StayDark, Carried::Excited(dark), loops, d, trail, visit);
                    }
                }
            }
        }
    }
}

fn guard(seq: &PulseSequence) -> Result<()> {
    if seq.len() > MAX_PULSES {
        return Err(Error::PulseCount {
            got: seq.len(),
            max: MAX_PULSES,
        });
    }
    Ok(())
}

/// Every ground-to-ground pathway of `sub`, including those with zero amplitude.
pub fn enumerate_pathways(seq: &PulseSequence, sub: Subsystem) -> Result<Vec<Pathway>> {
    guard(seq)?;
    let steps = steps(seq, sub);
    let walker = Walker {
        steps: &steps,
        dark: sub == Subsystem::V,
    };
    let mut out = Vec::new();
    let mut trail = Vec::with_capacity(steps.len());
    walker.walk(0, Carried::Ground(1.0), 0, 0, &mut trail, &mut |amplitude, loops, delays, events| {
        out.push(Pathway {
            events: events.to_vec(),
            amplitude,
            loops,
            delays,
        });
    });
    Ok(out)
}

/// Sums pathway amplitudes by loop class without materializing the paths.
pub fn bucket_amplitudes(seq: &PulseSequence, sub: Subsystem) -> Result<MechanismBuckets> {
    guard(seq)?;
    let steps = steps(seq, sub);
    let walker = Walker {
        steps: &steps,
        dark: sub == Subsystem::V,
    };
    let mut buckets = MechanismBuckets::default();
    let mut trail = Vec::with_capacity(steps.len());
    walker.walk(0, Carried::Ground(1.0), 0, 0, &mut trail, &mut |amp, loops, delays, _| {
        *buckets.slot(LoopClass::of(loops, delays)) += amp;
    });
    Ok(buckets)
}

/// Closed-form bucket expressions for exactly four pulses. For A and B the dark
/// projector `1 − |e_k><e_k|` is dropped and all overlaps are one.
pub fn closed_form_buckets_4(seq: &PulseSequence, sub: Subsystem) -> Result<MechanismBuckets> {
    if seq.len() != 4 {
        return Err(Error::WrongPulseCount {
            expected: 4,
            got: seq.len(),
        });
    }
    let st = steps(seq, sub);
    let (s, c) = (|k: usize| st[k - 1].s, |k: usize| st[k - 1].c);
    let e = |k: usize| st[k - 1].e;
    let dark = sub == Subsystem::V;
    let ov = |i: usize, j: usize| overlap(&e(i), &e(j));
    // (1 + (c_k − 1)|e_k><e_k|) v, or just c_k <e_k|v> e_k without the dark sector.
    let delay = |k: usize, v: [f64; 2]| -> [f64; 2] {
        let ek = e(k);
        let p = overlap(&ek, &v);
        if dark {
            [v[0] + (c(k) - 1.0) * p * ek[0], v[1] + (c(k) - 1.0) * p * ek[1]]
        } else {
            [c(k) * p * ek[0], c(k) * p * ek[1]]
        }
    };

    let u0 = c(4) * c(3) * c(2) * c(1);
    let u1 = -s(4) * ov(4, 3) * s(3) * c(2) * c(1)
        - c(4) * s(3) * ov(3, 2) * s(2) * c(1)
        - c(4) * c(3) * s(2) * ov(2, 1) * s(1);
    let ud = -s(4) * overlap(&e(4), &delay(3, e(2))) * s(2) * c(1)
        - c(4) * s(3) * overlap(&e(3), &delay(2, e(1))) * s(1)
        - s(4) * overlap(&e(4), &delay(3, delay(2, e(1)))) * s(1);
    let u2 = s(4) * ov(4, 3) * s(3) * s(2) * ov(2, 1) * s(1);
    Ok(MechanismBuckets { u0, u1, ud, u2 })
}

/// m-square coordinates, each clamped to `[−1, 1]`.
pub fn mechanism_xy(b: &MechanismBuckets) -> (f64, f64) {
    let x = b.u0 + b.u1 - b.ud - b.u2;
    let y = b.u0 + b.ud - b.u1 - b.u2;
    (x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0))
}

/// 3×3 box rank in `[1, 9]`; the upper edges fall into the last row/column.
pub fn omega_rank(x: f64, y: f64) -> u8 {
    let l = MSQUARE_DIVISIONS as f64;
    let cell = |v: f64| -> usize {
        let v = v.clamp(-1.0, 1.0);
        ((l * (v + 1.0) / 2.0).floor() as usize + 1).min(MSQUARE_DIVISIONS)
    };
    (cell(y) + MSQUARE_DIVISIONS * (cell(x) - 1)) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsystemMechanism {
    #[serde(flatten)]
    pub buckets: MechanismBuckets,
    pub x: f64,
    pub y: f64,
    pub omega: u8,
}

impl SubsystemMechanism {
    pub fn from_buckets(buckets: MechanismBuckets) -> Self {
        let (x, y) = mechanism_xy(&buckets);
        Self {
            buckets,
            x,
            y,
            omega: omega_rank(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismPoint {
    pub v: SubsystemMechanism,
    pub a: SubsystemMechanism,
    pub b: SubsystemMechanism,
    /// `(ω^A, ω^B, ω^V)`.
    pub cube: [u8; 3],
    pub omega_t: u8,
}

impl MechanismPoint {
    pub fn get(&self, s: Subsystem) -> &SubsystemMechanism {
        match s {
            Subsystem::V => &self.v,
            Subsystem::A => &self.a,
            Subsystem::B => &self.b,
        }
    }
}

pub fn mcube_point(seq: &PulseSequence) -> Result<MechanismPoint> {
    let v = SubsystemMechanism::from_buckets(bucket_amplitudes(seq, Subsystem::V)?);
    let a = SubsystemMechanism::from_buckets(bucket_amplitudes(seq, Subsystem::A)?);
    let b = SubsystemMechanism::from_buckets(bucket_amplitudes(seq, Subsystem::B)?);
    Ok(MechanismPoint {
        v,
        a,
        b,
        cube: [a.omega, b.omega, v.omega],
        omega_t: a.omega + b.omega + v.omega,
    })
}
