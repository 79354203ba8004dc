//! Analytic propagators, quantum-pathway mechanism analysis and constrained
//! multi-start optimization of pulse sequences implementing a CZ gate on two
//! Rydberg-blockaded qubits.
//!
//! The model is the resonant, infinite-blockade one: every pulse `k` carries a
//! signed area `A_k` and a unit structural vector `e_k = (a_k, b_k)` holding the
//! local coupling factors at qubits A and B. The Hamiltonian splits into three
//! driven blocks (`V`, `A`, `B`) plus the uncoupled `|11>` state, so the gate is
//! fully described by the three return amplitudes computed in [`propagator`].
//!
//! Module map:
//!
//! * [`model`]: pulses, structural vectors, subsystems, constraints, protocol files.
//! * [`propagator`]: per-pulse unitaries, sequence products, CZ fidelity.
//! * [`pathways`]: pathway enumeration, loop buckets, m-square and m-cube ranks.
//! * [`simplex`]: a plain Nelder–Mead minimizer.
//! * [`optimizer`]: penalized gate-error objectives, feasible sampling, multi-start runs.
//! * [`oracle`]: RK4 integration of the full 8-state Schrödinger equation.
//! * [`campaign`]: solution records, histograms and persistence.
//! * [`validation`]: property suites shared by the CLI and the acceptance tests.

pub mod campaign;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod pathways;
pub mod propagator;
pub mod simplex;
pub mod validation;

pub use error::{Error, Result};
pub use model::{
    dot, make_structural_vector, ConstraintMode, ConstraintSpec, Pulse, PulseSequence,
    StructuralVector, Subsystem, DEFAULT_AREA_MAX, MAX_PULSES,
};
pub use pathways::{MechanismBuckets, MechanismPoint, SubsystemMechanism};
pub use propagator::{fidelity, gate_diagonal, FidelityResult, GateDiagonal, PhaseBranch};
pub use campaign::{HistogramSpec, RunMeta, SolutionRecord};
pub use optimizer::{OptimizationOutcome, OptimizerConfig, ParameterVector, PhaseTarget};
pub use oracle::{Envelope, EnvelopeSpec};
pub use pathways::LoopClass;
pub use validation::{Suite, SuiteReport};
