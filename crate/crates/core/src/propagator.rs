//! Closed-form per-pulse unitaries of the three driven blocks, their
//! time-ordered products and the CZ fidelity of the resulting gate diagonal.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Pulse, PulseSequence, Subsystem};

/// Largest imaginary part tolerated on a return amplitude.
pub const IMAG_TOL: f64 = 1e-10;

/// Unitary of one block. Row/column order is `(|00>, |r0>, |0r>)` for V,
/// `(|01>, |r1>)` for A and `(|10>, |1r>)` for B. Entries beyond `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemUnitary {
    dim: usize,
    m: [[C64; 3]; 3],
}

impl SubsystemUnitary {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = C64::new(1.0, 0.0);
        }
        Self { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        self.m[i][j]
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate().take(n) {
            for (j, x) in row.iter_mut().enumerate().take(n) {
                *x = (0..n).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Self { dim: n, m: out }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i][j] = self.m[j][i].conj();
            }
        }
        Self { dim: self.dim, m: out }
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Self::identity(self.dim);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((p.m[i][j] - id.m[i][j]).norm());
            }
        }
        worst
    }

    /// Applies the matrix to a state vector of length `dim`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self.m[i][k] * v[k]).sum())
            .collect()
    }
}

/// `θ^S_k`: half the pulse area scaled by the subsystem's coupling factor.
pub fn mixing_angle(p: &Pulse, s: Subsystem) -> f64 {
    0.5 * p.factor(s) * p.area
}

pub fn pulse_unitary(p: &Pulse, s: Subsystem) -> SubsystemUnitary {
    let (sn, cs) = mixing_angle(p, s).sin_cos();
    let z = C64::new(0.0, 0.0);
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    match s {
        Subsystem::V => {
            let (a, b) = (p.e.a(), p.e.b());
            SubsystemUnitary {
                dim: 3,
                m: [
                    [re(cs), im(a * sn), im(b * sn)],
                    [im(a * sn), re(a * a * cs + b * b), re(a * b * (cs - 1.0))],
                    [im(b * sn), re(a * b * (cs - 1.0)), re(b * b * cs + a * a)],
                ],
            }
        }
        Subsystem::A | Subsystem::B => SubsystemUnitary {
            dim: 2,
            m: [[re(cs), im(sn), z], [im(sn), re(cs), z], [z, z, z]],
        },
    }
}

/// Time-ordered product `U_N ⋯ U_2 U_1`.
pub fn sequence_unitary(seq: &PulseSequence, s: Subsystem) -> SubsystemUnitary {
    seq.pulses()
        .iter()
        .fold(SubsystemUnitary::identity(s.dim()), |acc, p| {
            pulse_unitary(p, s).mul(&acc)
        })
}

/// `<0̃|U_T|0̃>`, checked to be real.
pub fn return_amplitude(seq: &PulseSequence, s: Subsystem) -> Result<f64> {
    let u = sequence_unitary(seq, s).get(0, 0);
    if u.im.abs() > IMAG_TOL {
        return Err(Error::ImaginaryAmplitude {
            subsystem: s,
            imag: u.im,
        });
    }
    Ok(u.re)
}

/// Diagonal of the gate on the computational basis, `diag(uV, uA, uB, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDiagonal {
    pub u_v: f64,
    pub u_a: f64,
    pub u_b: f64,
}

impl GateDiagonal {
    pub fn new(u_v: f64, u_a: f64, u_b: f64) -> Self {
        Self { u_v, u_a, u_b }
    }

    pub fn get(&self, s: Subsystem) -> f64 {
        match s {
            Subsystem::V => self.u_v,
            Subsystem::A => self.u_a,
            Subsystem::B => self.u_b,
        }
    }

    /// The `|11>` amplitude, always one.
    pub fn u_11(&self) -> f64 {
        1.0
    }
}

pub fn gate_diagonal(seq: &PulseSequence) -> Result<GateDiagonal> {
    Ok(GateDiagonal {
        u_v: return_amplitude(seq, Subsystem::V)?,
        u_a: return_amplitude(seq, Subsystem::A)?,
        u_b: return_amplitude(seq, Subsystem::B)?,
    })
}

/// The four sign patterns `(uV, uA, uB)` equivalent to CZ up to single-qubit
/// Z phases and a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseBranch {
    /// `(−1, −1, −1)`, the pattern of the `π–2π–π` protocol.
    #[serde(rename = "---")]
    MinusMinusMinus,
    #[serde(rename = "-++")]
    MinusPlusPlus,
    #[serde(rename = "+-+")]
    PlusMinusPlus,
    #[serde(rename = "++-")]
    PlusPlusMinus,
}

impl PhaseBranch {
    pub const ALL: [PhaseBranch; 4] = [
        PhaseBranch::MinusMinusMinus,
        PhaseBranch::MinusPlusPlus,
        PhaseBranch::PlusMinusPlus,
        PhaseBranch::PlusPlusMinus,
    ];

    pub fn signs(self) -> (f64, f64, f64) {
        match self {
            PhaseBranch::MinusMinusMinus => (-1.0, -1.0, -1.0),
            PhaseBranch::MinusPlusPlus => (-1.0, 1.0, 1.0),
            PhaseBranch::PlusMinusPlus => (1.0, -1.0, 1.0),
            PhaseBranch::PlusPlusMinus => (1.0, 1.0, -1.0),
        }
    }

    /// `|Tr(T† U)|² / 16` for the target of this branch.
    pub fn fidelity(self, g: &GateDiagonal) -> f64 {
        let (sv, sa, sb) = self.signs();
        // Target diag(sv, sa, sb, −sv·sa·sb); the |11> amplitude of U is 1.
        let tr = sv * g.u_v + sa * g.u_a + sb * g.u_b - sv * sa * sb;
        tr * tr / 16.0
    }
}

impl fmt::Display for PhaseBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PhaseBranch::MinusMinusMinus => "(-,-,-)",
            PhaseBranch::MinusPlusPlus => "(-,+,+)",
            PhaseBranch::PlusMinusPlus => "(+,-,+)",
            PhaseBranch::PlusPlusMinus => "(+,+,-)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub fidelity: f64,
    pub error: f64,
    pub branch: PhaseBranch,
}

/// Trace fidelity maximized over the local-phase class of CZ.
pub fn fidelity(g: &GateDiagonal) -> FidelityResult {
    let (branch, fidelity) = PhaseBranch::ALL
        .iter()
        .map(|&b| (b, b.fidelity(g)))
        .fold((PhaseBranch::MinusMinusMinus, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    FidelityResult {
        fidelity,
        error: (1.0 - fidelity).max(0.0),
        branch,
    }
}
