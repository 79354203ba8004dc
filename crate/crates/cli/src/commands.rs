use std::f64::consts::PI;

use anyhow::Context;
use qgate_core::campaign::{self, REPORT_THRESHOLDS};
use qgate_core::model::ProtocolFile;
use qgate_core::optimizer::run_multistart;
use qgate_core::pathways::mcube_point;
use qgate_core::propagator::mixing_angle;
use qgate_core::validation::run_suite;
use qgate_core::{
    fidelity, gate_diagonal, ConstraintSpec, Error, HistogramSpec, OptimizerConfig, Subsystem,
};

use crate::parse::Report;
use crate::{AnalyzeArgs, OptimizeArgs, ShowArgs, ValidateArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Thresholds of the success-rate table: one per decade from 1 down to 1e-10.
const RATE_DECADES: i32 = 10;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

/// Exit code for a library error. Input-file problems count as I/O failures.
fn code_of(e: &Error) -> u8 {
    match e {
        Error::EmptySelection(_) => EXIT_VALIDATION,
        Error::Io { .. } | Error::Parse { .. } | Error::Integrity { .. } | Error::Json(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(code_of(&e), e)
    }
}

type CmdResult = Result<u8, Failure>;

pub fn config_from_args(a: &OptimizeArgs) -> Result<OptimizerConfig, Error> {
    let spec = ConstraintSpec::new(a.sigma, a.mode)?.with_area_max(a.area_max);
    if !(a.area_max > 0.0) {
        return Err(Error::InvalidConfig(format!("area max must be positive, got {}", a.area_max)));
    }
    if a.pulses == 0 || a.pulses > qgate_core::MAX_PULSES {
        return Err(Error::PulseCount {
            got: a.pulses,
            max: qgate_core::MAX_PULSES,
        });
    }
    let mut cfg = OptimizerConfig::new(a.pulses, spec);
    if a.signed_areas {
        cfg = cfg.with_signed_areas();
    }
    cfg.n_starts = a.starts;
    cfg.seed = a.seed;
    cfg.target_mechanism = a.target_mechanism;
    cfg.mech_penalty = a.mech_penalty;
    cfg.phase_target = a.phase_target;
    cfg.penalty_weight = a.penalty_weight;
    cfg.convergence_tol = a.tolerance;
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn optimize(a: &OptimizeArgs) -> CmdResult {
    let cfg = config_from_args(a)?;
    let outcomes = run_multistart(&cfg)?;
    let records = campaign::records_from_outcomes(&outcomes, &cfg)?;
    campaign::persist(&records, &a.out)?;

    let best = records
        .iter()
        .min_by(|x, y| x.error.total_cmp(&y.error))
        .expect("at least one start");
    out!("records: {}", records.len());
    out!("best_error: {:e}", best.error);
    out!("best_start: {}", best.meta.start_index);
    out!("best_omega: {:?}", best.mechanism.cube);
    for r in campaign::success_rate_curve(&records, &REPORT_THRESHOLDS)? {
        let count = (r.rate * records.len() as f64).round() as usize;
        out!("success[{:e}]: {count} ({:.4})", r.epsilon, r.rate);
    }
    out!("out: {}", a.out.display());
    Ok(EXIT_OK)
}

pub fn analyze(a: &AnalyzeArgs) -> CmdResult {
    let records = campaign::load(&a.input)?;
    let spec = HistogramSpec {
        eps_cut: a.eps,
        bin_width: a.bin,
    };
    // Tables are rendered in memory so that a failed report leaves no file behind.
    let mut csv = Vec::new();
    let w = &mut csv;
    let written = match a.report {
        Report::SuccessRate => {
            let eps: Vec<f64> = (0..=RATE_DECADES).map(|k| 10f64.powi(-k)).collect();
            campaign::write_success_csv(&campaign::success_rate_curve(&records, &eps)?, w)
        }
        Report::AreaTotal => {
            let t = campaign::area_total_histogram(&records, &spec)?;
            let peaks: Vec<String> = t
                .local_maxima()
                .iter()
                .map(|&i| format!("{:.2}pi", t.bins[i].center() / PI))
                .collect();
            out!("local_maxima: {}", peaks.join(" "));
            t.write_csv(w)
        }
        Report::AreaCumulative => {
            campaign::cumulative_area(&campaign::area_total_histogram(&records, &spec)?).write_csv(w)
        }
        Report::AreaJoint(i, j) => campaign::joint_area_histogram(&records, i, j, &spec)?.write_csv(w),
        Report::CosBeta(i, j) => campaign::cos_beta_histogram(&records, (i, j), &spec)?.write_csv(w),
        Report::MSquare(s) => campaign::msquare_density(&records, s, a.grid, a.eps)?.write_csv(w),
        Report::MCube => {
            let m = campaign::mcube_frequencies(&records, a.eps)?;
            out!("modal_omega: {:?}", m.modal);
            out!("modal_omega_t: {}", m.modal_omega_t);
            m.write_csv(w)
        }
    };
    written
        .and_then(|_| std::fs::write(&a.out, &csv))
        .with_context(|| format!("cannot write {}", a.out.display()))
        .map_err(|e| Failure::new(EXIT_IO, e))?;
    out!("records: {}", records.len());
    out!("selected: {}", campaign::select(&records, a.eps).len());
    out!("out: {}", a.out.display());
    Ok(EXIT_OK)
}

pub fn validate(a: &ValidateArgs) -> CmdResult {
    let report = run_suite(a.suite, a.trials, a.seed)?;
    out!("suite: {}", report.suite);
    for c in &report.checks {
        out!(
            "{}: max_deviation={:e} tolerance={:e} trials={} {}",
            c.name,
            c.max_deviation,
            c.tolerance,
            c.trials,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let passed = report.passed();
    out!("result: {}", if passed { "PASS" } else { "FAIL" });
    Ok(if passed { EXIT_OK } else { EXIT_VALIDATION })
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
}

pub fn show(a: &ShowArgs) -> CmdResult {
    // Anything wrong with the protocol file itself is an input failure.
    let seq = ProtocolFile::read(&a.protocol).map_err(|e| Failure::new(EXIT_IO, e))?;
    let g = gate_diagonal(&seq)?;
    let f = fidelity(&g);
    let m = mcube_point(&seq)?;
    out!("pulses: {}", seq.len());
    out!("areas_over_pi: {}", join(seq.areas().iter().map(|x| x / PI)));
    out!("a: {}", join(seq.pulses().iter().map(|p| p.e.a())));
    out!("b: {}", join(seq.pulses().iter().map(|p| p.e.b())));
    out!("area_total_over_pi: {:.12}", seq.total_area() / PI);
    for s in Subsystem::ALL {
        let gpa = seq.pulses().iter().map(|p| 2.0 * mixing_angle(p, s) / PI);
        out!("gpa_over_pi_{s}: {}", join(gpa));
    }
    out!("diagonal: {:.12} {:.12} {:.12}", g.u_v, g.u_a, g.u_b);
    out!("fidelity: {:.15}", f.fidelity);
    out!("error: {:e}", f.error);
    out!("branch: {}", f.branch);
    for s in Subsystem::ALL {
        let sm = m.get(s);
        let b = &sm.buckets;
        out!(
            "buckets_{s}: u0={:.12} u1={:.12} ud={:.12} u2={:.12}",
            b.u0, b.u1, b.ud, b.u2
        );
        out!("xy_{s}: {:.12} {:.12}", sm.x, sm.y);
        out!("omega_{s}: {}", sm.omega);
    }
    out!("omega_cube: {} {} {}", m.cube[0], m.cube[1], m.cube[2]);
    out!("omega_t: {}", m.omega_t);
    let cb = seq.cos_beta();
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            out!("cos_beta_{}{}: {:.12}", i + 1, j + 1, cb[i][j]);
        }
    }
    Ok(EXIT_OK)
}
