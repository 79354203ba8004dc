//! Self-check suites over random protocols: known golden values, internal
//! consistency of the pathway decomposition, and agreement with direct
//! integration.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::model::{PulseSequence, Subsystem, DEFAULT_AREA_MAX, MAX_PULSES};
use crate::oracle::{compare_batch, EnvelopeSpec};
use crate::pathways::{bucket_amplitudes, closed_form_buckets_4, mcube_point, LoopClass};
use crate::propagator::{fidelity, gate_diagonal};

pub const EXACT_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-6;
/// Ramp fraction of the flat-top envelope used for the shape cross-check.
pub const FLAT_TOP_RAMP: f64 = 0.25;
/// Largest pulse count drawn for the integration suite.
pub const ORACLE_MAX_PULSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Jaksch,
    PathSum,
    ClosedForm,
    Oracle,
    Symmetries,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Jaksch,
        Suite::PathSum,
        Suite::ClosedForm,
        Suite::Oracle,
        Suite::Symmetries,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Jaksch => "jaksch",
            Suite::PathSum => "pathsum",
            Suite::ClosedForm => "eq7",
            Suite::Oracle => "oracle",
            Suite::Symmetries => "symmetries",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite '{s}' (expected jaksch, pathsum, eq7, oracle or symmetries)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub trials: usize,
}

impl Check {
    fn new(name: impl Into<String>, max_deviation: f64, tolerance: f64, trials: usize) -> Self {
        Self {
            name: name.into(),
            max_deviation,
            tolerance,
            trials,
        }
    }

    /// A yes/no condition reported as deviation 0 or 1.
    fn exact(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, 0.0, 1)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Random protocol with `n` pulses, signed areas uniform in `±area_max` and
/// angles uniform on the circle.
pub fn random_sequence<R: Rng + ?Sized>(rng: &mut R, n: usize, area_max: f64) -> PulseSequence {
    let areas: Vec<f64> = (0..n).map(|_| rng.gen_range(-area_max..area_max)).collect();
    let phis: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    PulseSequence::from_areas_and_angles(&areas, &phis).expect("finite angles and 1..=6 pulses")
}

fn max_over<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

pub fn jaksch_suite() -> Result<SuiteReport> {
    let seq = PulseSequence::jaksch();
    let g = gate_diagonal(&seq)?;
    let f = fidelity(&g);
    let m = mcube_point(&seq)?;
    let mut ab = [m.a.omega, m.b.omega];
    ab.sort_unstable();
    Ok(SuiteReport {
        suite: Suite::Jaksch,
        checks: vec![
            Check::new(
                "diagonal = (-1,-1,-1)",
                max_over(Subsystem::ALL.map(|s| (g.get(s) + 1.0).abs())),
                EXACT_TOL,
                1,
            ),
            Check::new("fidelity = 1", (1.0 - f.fidelity).abs(), EXACT_TOL, 1),
            Check::new("V d-loop amplitude = -1", (m.v.buckets.ud + 1.0).abs(), EXACT_TOL, 1),
            Check::exact("omega_V = 7", m.v.omega == LoopClass::DLoop.corner_omega()),
            Check::exact("{omega_A, omega_B} = {1, 3}", ab == [1, 3]),
        ],
    })
}

pub fn pathsum_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=MAX_PULSES);
        let seq = random_sequence(&mut rng, n, DEFAULT_AREA_MAX);
        let g = gate_diagonal(&seq)?;
        for s in Subsystem::ALL {
            dev = dev.max((bucket_amplitudes(&seq, s)?.total() - g.get(s)).abs());
        }
    }
    Ok(SuiteReport {
        suite: Suite::PathSum,
        checks: vec![Check::new("|sum of buckets - u^S|", dev, EXACT_TOL, trials)],
    })
}

pub fn closed_form_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = [0.0f64; 4];
    for _ in 0..trials {
        let seq = random_sequence(&mut rng, 4, DEFAULT_AREA_MAX);
        for s in Subsystem::ALL {
            let (e, c) = (bucket_amplitudes(&seq, s)?, closed_form_buckets_4(&seq, s)?);
            for (k, class) in LoopClass::ALL.into_iter().enumerate() {
                dev[k] = dev[k].max((e.get(class) - c.get(class)).abs());
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::ClosedForm,
        checks: LoopClass::ALL
            .into_iter()
            .zip(dev)
            .map(|(class, d)| Check::new(format!("{class} closed form vs enumeration"), d, EXACT_TOL, trials))
            .collect(),
    })
}

pub fn oracle_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs: Vec<PulseSequence> = (0..trials)
        .map(|_| {
            let n = rng.gen_range(1..=ORACLE_MAX_PULSES);
            random_sequence(&mut rng, n, DEFAULT_AREA_MAX)
        })
        .collect();
    let mut checks = Vec::new();
    for (name, env) in [
        ("sin^2 envelope vs analytic", EnvelopeSpec::default()),
        ("flat-top envelope vs analytic", EnvelopeSpec::flat_top(FLAT_TOP_RAMP)),
    ] {
        let devs = compare_batch(&seqs, &env, env.default_dt())
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::new(name, max_over(devs), ORACLE_TOL, trials));
    }
    Ok(SuiteReport {
        suite: Suite::Oracle,
        checks,
    })
}

pub fn symmetry_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sign, mut swap) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let n = rng.gen_range(1..=MAX_PULSES);
        let seq = random_sequence(&mut rng, n, DEFAULT_AREA_MAX);
        let g = gate_diagonal(&seq)?;
        let f = fidelity(&g).fidelity;

        let gn = gate_diagonal(&seq.negated())?;
        sign = sign.max(max_over(Subsystem::ALL.map(|s| (g.get(s) - gn.get(s)).abs())));
        sign = sign.max((f - fidelity(&gn).fidelity).abs());

        let gs = gate_diagonal(&seq.swapped())?;
        swap = swap.max(max_over([
            (g.u_v - gs.u_v).abs(),
            (g.u_a - gs.u_b).abs(),
            (g.u_b - gs.u_a).abs(),
            (f - fidelity(&gs).fidelity).abs(),
        ]));
    }
    Ok(SuiteReport {
        suite: Suite::Symmetries,
        checks: vec![
            Check::new("sign flip (-A, -e)", sign, EXACT_TOL, trials),
            Check::new("A <-> B swap", swap, EXACT_TOL, trials),
        ],
    })
}

pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Jaksch => jaksch_suite(),
        Suite::PathSum => pathsum_suite(trials, seed),
        Suite::ClosedForm => closed_form_suite(trials, seed),
        Suite::Oracle => oracle_suite(trials, seed),
        Suite::Symmetries => symmetry_suite(trials, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        assert!(jaksch_suite().unwrap().passed());
        for suite in [Suite::PathSum, Suite::ClosedForm, Suite::Symmetries] {
            let r = run_suite(suite, 200, 3).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn oracle_suite_small() {
        let r = oracle_suite(6, 1).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn failing_check_is_reported() {
        let c = Check::new("x", 2e-12, EXACT_TOL, 1);
        assert!(!c.passed());
        assert!(!Check::exact("y", false).passed());
    }
}
