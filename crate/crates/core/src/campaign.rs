//! Statistics over sets of optimized protocols and their JSONL persistence.
//!
//! One-dimensional distributions are probability-normalized (masses sum to 1).
//! Two-dimensional tables are scaled so that the largest cell is 1, which is
//! what a color map wants.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintMode, PulseSequence, Subsystem};
use crate::optimizer::{OptimizationOutcome, OptimizerConfig, ParameterVector, PhaseTarget};
use crate::pathways::{mcube_point, LoopClass, MechanismPoint};
use crate::propagator::{fidelity, gate_diagonal, GateDiagonal, PhaseBranch};

/// Stored derived quantities must be reproducible to this accuracy.
pub const RECOMPUTE_TOL: f64 = 1e-10;
pub const DEFAULT_EPS_CUT: f64 = 1e-3;
pub const DEFAULT_AREA_BIN: f64 = 0.05 * std::f64::consts::PI;
pub const COS_BETA_BIN: f64 = 0.05;
/// Thresholds reported after a campaign.
pub const REPORT_THRESHOLDS: [f64; 4] = [1e-2, 1e-3, 1e-5, 1e-7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub start_index: usize,
    pub iterations: usize,
    pub converged: bool,
    pub sigma: f64,
    pub mode: ConstraintMode,
    pub target: Option<LoopClass>,
    pub phase_target: PhaseTarget,
}

/// One optimized protocol together with everything the analyses need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub areas: Vec<f64>,
    pub phis: Vec<f64>,
    pub error: f64,
    /// Unweighted constraint penalty of the raw optimizer vertex.
    pub raw_penalty: f64,
    pub diagonal: GateDiagonal,
    pub branch: PhaseBranch,
    pub mechanism: MechanismPoint,
    pub area_total: f64,
    pub cos_beta: Vec<Vec<f64>>,
    pub meta: RunMeta,
}

struct Derived {
    diagonal: GateDiagonal,
    branch: PhaseBranch,
    mechanism: MechanismPoint,
    area_total: f64,
    cos_beta: Vec<Vec<f64>>,
}

fn derive(areas: &[f64], phis: &[f64]) -> Result<Derived> {
    let seq = PulseSequence::from_areas_and_angles(areas, phis)?;
    let diagonal = gate_diagonal(&seq)?;
    Ok(Derived {
        diagonal,
        branch: fidelity(&diagonal).branch,
        mechanism: mcube_point(&seq)?,
        area_total: seq.total_area(),
        cos_beta: seq.cos_beta(),
    })
}

impl SolutionRecord {
    pub fn new(params: &ParameterVector, error: f64, raw_penalty: f64, meta: RunMeta) -> Result<Self> {
        let d = derive(&params.areas, &params.phis)?;
        Ok(Self {
            areas: params.areas.clone(),
            phis: params.phis.clone(),
            error,
            raw_penalty,
            diagonal: d.diagonal,
            branch: d.branch,
            mechanism: d.mechanism,
            area_total: d.area_total,
            cos_beta: d.cos_beta,
            meta,
        })
    }

    pub fn from_outcome(o: &OptimizationOutcome, cfg: &OptimizerConfig) -> Result<Self> {
        let meta = RunMeta {
            seed: cfg.seed,
            start_index: o.start_index,
            iterations: o.iterations,
            converged: o.converged,
            sigma: cfg.constraints.sigma,
            mode: cfg.constraints.mode,
            target: cfg.target_mechanism,
            phase_target: cfg.phase_target,
        };
        Self::new(&o.params, o.error, o.raw_penalty, meta)
    }

    pub fn n_pulses(&self) -> usize {
        self.areas.len()
    }

    pub fn sequence(&self) -> Result<PulseSequence> {
        PulseSequence::from_areas_and_angles(&self.areas, &self.phis)
    }

    /// Name of the first stored field that disagrees with a recomputation.
    fn mismatch(&self) -> Result<Option<String>> {
        let d = derive(&self.areas, &self.phis)?;
        let close = |x: f64, y: f64| (x - y).abs() <= RECOMPUTE_TOL;
        for s in Subsystem::ALL {
            let (got, want) = (self.mechanism.get(s), d.mechanism.get(s));
            let b = (&got.buckets, &want.buckets);
            let checks = [
                ("u0", close(b.0.u0, b.1.u0)),
                ("u1", close(b.0.u1, b.1.u1)),
                ("ud", close(b.0.ud, b.1.ud)),
                ("u2", close(b.0.u2, b.1.u2)),
                ("x", close(got.x, want.x)),
                ("y", close(got.y, want.y)),
                ("omega", got.omega == want.omega),
            ];
            if let Some((name, _)) = checks.iter().find(|c| !c.1) {
                return Ok(Some(format!("mechanism.{}.{name}", s.to_string().to_lowercase())));
            }
        }
        let diag_ok = Subsystem::ALL
            .iter()
            .all(|&s| close(self.diagonal.get(s), d.diagonal.get(s)));
        let cos_ok = self.cos_beta.len() == d.cos_beta.len()
            && self
                .cos_beta
                .iter()
                .flatten()
                .zip(d.cos_beta.iter().flatten())
                .all(|(x, y)| close(*x, *y));
        Ok(if self.mechanism.cube != d.mechanism.cube {
            Some("mechanism.cube".into())
        } else if self.mechanism.omega_t != d.mechanism.omega_t {
            Some("mechanism.omega_t".into())
        } else if !diag_ok {
            Some("diagonal".into())
        } else if self.branch != d.branch {
            Some("branch".into())
        } else if !close(self.area_total, d.area_total) {
            Some("area_total".into())
        } else if !cos_ok {
            Some("cos_beta".into())
        } else {
            None
        })
    }
}

/// Annotates every outcome of a campaign, in start order.
pub fn records_from_outcomes(outcomes: &[OptimizationOutcome], cfg: &OptimizerConfig) -> Result<Vec<SolutionRecord>> {
    outcomes.iter().map(|o| SolutionRecord::from_outcome(o, cfg)).collect()
}

/// Records whose error does not exceed `eps`.
pub fn select(records: &[SolutionRecord], eps: f64) -> Vec<&SolutionRecord> {
    records.iter().filter(|r| r.error <= eps).collect()
}

fn select_nonempty(records: &[SolutionRecord], eps: f64) -> Result<Vec<&SolutionRecord>> {
    let s = select(records, eps);
    if s.is_empty() {
        Err(Error::EmptySelection(eps))
    } else {
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub eps_cut: f64,
    /// Bin width for pulse areas.
    pub bin_width: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            eps_cut: DEFAULT_EPS_CUT,
            bin_width: DEFAULT_AREA_BIN,
        }
    }
}

impl HistogramSpec {
    fn check(&self) -> Result<()> {
        if self.bin_width > 0.0 && self.bin_width.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bin width must be positive, got {}", self.bin_width)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

impl Bin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// A one-dimensional table in ascending bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1D {
    pub quantity: String,
    pub value_name: String,
    pub bins: Vec<Bin>,
    /// Number of records that entered the table.
    pub count: usize,
}

impl Table1D {
    pub fn total(&self) -> f64 {
        self.bins.iter().map(|b| b.value).sum()
    }

    /// Bin containing `x`, if any.
    pub fn bin_at(&self, x: f64) -> Option<&Bin> {
        self.bins.iter().find(|b| b.lower <= x && x < b.upper)
    }

    /// Indices of bins at least as large as both neighbors and strictly
    /// positive. Missing neighbors at the ends count as zero.
    pub fn local_maxima(&self) -> Vec<usize> {
        let v: Vec<f64> = self.bins.iter().map(|b| b.value).collect();
        (0..v.len())
            .filter(|&i| {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = v.get(i + 1).copied().unwrap_or(0.0);
                v[i] > 0.0 && v[i] >= left && v[i] >= right
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let q = &self.quantity;
        writeln!(w, "{q}_lower,{q}_center,{q}_upper,{}", self.value_name)?;
        for b in &self.bins {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", b.lower, b.center(), b.upper, b.value)?;
        }
        Ok(())
    }
}

/// A two-dimensional table; `values[i][j]` belongs to `x_bins[i]`, `y_bins[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2D {
    pub x_name: String,
    pub y_name: String,
    pub x_bins: Vec<(f64, f64)>,
    pub y_bins: Vec<(f64, f64)>,
    pub values: Vec<Vec<f64>>,
    pub count: usize,
}

impl Table2D {
    pub fn peak(&self) -> f64 {
        self.values.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Cell `(i, j)` containing the point, if any.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let find = |bins: &[(f64, f64)], v: f64| bins.iter().position(|&(lo, hi)| lo <= v && v < hi);
        Some((find(&self.x_bins, x)?, find(&self.y_bins, y)?))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{x}_lower,{x}_upper,{y}_lower,{y}_upper,value", x = self.x_name, y = self.y_name)?;
        for (i, &(xl, xu)) in self.x_bins.iter().enumerate() {
            for (j, &(yl, yu)) in self.y_bins.iter().enumerate() {
                writeln!(w, "{xl:.16e},{xu:.16e},{yl:.16e},{yu:.16e},{:.16e}", self.values[i][j])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRate {
    pub epsilon: f64,
    pub rate: f64,
}

/// Fraction of all records with error at most `ε`, for each threshold.
pub fn success_rate_curve(records: &[SolutionRecord], thresholds: &[f64]) -> Result<Vec<SuccessRate>> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("success rate needs at least one record".into()));
    }
    let n = records.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&epsilon| SuccessRate {
            epsilon,
            rate: select(records, epsilon).len() as f64 / n,
        })
        .collect())
}

pub fn write_success_csv<W: Write>(rates: &[SuccessRate], mut w: W) -> io::Result<()> {
    writeln!(w, "epsilon,rate")?;
    for r in rates {
        writeln!(w, "{:.16e},{:.16e}", r.epsilon, r.rate)?;
    }
    Ok(())
}

/// Bin index of `x` for bins centered on multiples of `width`.
fn centered_index(x: f64, width: f64) -> i64 {
    (x / width + 0.5).floor() as i64
}

fn centered_bins(lo: i64, hi: i64, width: f64) -> Vec<(f64, f64)> {
    (lo..=hi)
        .map(|k| ((k as f64 - 0.5) * width, (k as f64 + 0.5) * width))
        .collect()
}

fn probability_table(quantity: &str, bins: Vec<(f64, f64)>, counts: Vec<usize>) -> Table1D {
    let n: usize = counts.iter().sum();
    Table1D {
        quantity: quantity.into(),
        value_name: "probability".into(),
        bins: bins
            .into_iter()
            .zip(counts)
            .map(|((lower, upper), c)| Bin {
                lower,
                upper,
                value: c as f64 / n as f64,
            })
            .collect(),
        count: n,
    }
}

/// Distribution of `A_T = Σ|A_k|` over records passing the error cut. Bins are
/// centered on multiples of the bin width and run contiguously from zero.
pub fn area_total_histogram(records: &[SolutionRecord], spec: &HistogramSpec) -> Result<Table1D> {
    spec.check()?;
    let chosen = select_nonempty(records, spec.eps_cut)?;
    let idx: Vec<i64> = chosen
        .iter()
        .map(|r| centered_index(r.area_total, spec.bin_width))
        .collect();
    let hi = idx.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; hi as usize + 1];
    for k in idx {
        counts[k as usize] += 1;
    }
    Ok(probability_table("area_total", centered_bins(0, hi, spec.bin_width), counts))
}

/// Running sum of an area distribution; the last entry is 1.
pub fn cumulative_area(rho: &Table1D) -> Table1D {
    let mut acc = 0.0;
    Table1D {
        quantity: rho.quantity.clone(),
        value_name: "cumulative".into(),
        bins: rho
            .bins
            .iter()
            .map(|b| {
                acc += b.value;
                Bin { value: acc, ..*b }
            })
            .collect(),
        count: rho.count,
    }
}

/// Cumulative mass of all bins centered at or below `x`.
pub fn cumulative_at(cumulative: &Table1D, x: f64) -> f64 {
    cumulative
        .bins
        .iter()
        .take_while(|b| b.center() <= x)
        .last()
        .map_or(0.0, |b| b.value)
}

fn check_pair(records: &[&SolutionRecord], i: usize, j: usize) -> Result<()> {
    let n = records.iter().map(|r| r.n_pulses()).min().unwrap_or(0);
    if i == 0 || i >= j || j > n {
        return Err(Error::InvalidPair { i, j, n });
    }
    Ok(())
}

/// Distribution of `cos β_ij = ⟨e_i|e_j⟩` (pulse indices 1-based, `i < j`)
/// over 40 edge-aligned bins covering `[−1, 1]`.
pub fn cos_beta_histogram(records: &[SolutionRecord], pair: (usize, usize), spec: &HistogramSpec) -> Result<Table1D> {
    let chosen = select_nonempty(records, spec.eps_cut)?;
    let (i, j) = pair;
    check_pair(&chosen, i, j)?;
    let n_bins = (2.0 / COS_BETA_BIN).round() as usize;
    let mut counts = vec![0usize; n_bins];
    for r in &chosen {
        let c = r.cos_beta[i - 1][j - 1];
        let k = (((c + 1.0) / COS_BETA_BIN).floor().max(0.0) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let bins = (0..n_bins)
        .map(|k| (-1.0 + k as f64 * COS_BETA_BIN, -1.0 + (k + 1) as f64 * COS_BETA_BIN))
        .collect();
    Ok(probability_table(&format!("cos_beta_{i}{j}"), bins, counts))
}

fn peak_normalized(mut values: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let peak = values.iter().flatten().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().flatten().for_each(|v| *v /= peak);
    }
    values
}

/// Joint distribution of `(A_i, A_j)` (1-based), peak-normalized.
pub fn joint_area_histogram(records: &[SolutionRecord], i: usize, j: usize, spec: &HistogramSpec) -> Result<Table2D> {
    spec.check()?;
    let chosen = select_nonempty(records, spec.eps_cut)?;
    check_pair(&chosen, i, j)?;
    let points: Vec<(i64, i64)> = chosen
        .iter()
        .map(|r| {
            (
                centered_index(r.areas[i - 1], spec.bin_width),
                centered_index(r.areas[j - 1], spec.bin_width),
            )
        })
        .collect();
    let range = |f: fn(&(i64, i64)) -> i64| {
        let lo = points.iter().map(f).min().unwrap_or(0).min(0);
        let hi = points.iter().map(f).max().unwrap_or(0);
        (lo, hi)
    };
    let (xl, xh) = range(|p| p.0);
    let (yl, yh) = range(|p| p.1);
    let mut values = vec![vec![0.0; (yh - yl + 1) as usize]; (xh - xl + 1) as usize];
    for (x, y) in &points {
        values[(x - xl) as usize][(y - yl) as usize] += 1.0;
    }
    Ok(Table2D {
        x_name: format!("area_{i}"),
        y_name: format!("area_{j}"),
        x_bins: centered_bins(xl, xh, spec.bin_width),
        y_bins: centered_bins(yl, yh, spec.bin_width),
        values: peak_normalized(values),
        count: chosen.len(),
    })
}

/// Density of `(x^S, y^S)` on a `grid_n × grid_n` grid over `[−1, 1]²`,
/// peak-normalized.
pub fn msquare_density(records: &[SolutionRecord], s: Subsystem, grid_n: usize, eps_cut: f64) -> Result<Table2D> {
    if grid_n < 3 {
        return Err(Error::InvalidConfig(format!("m-square grid needs at least 3 cells, got {grid_n}")));
    }
    let chosen = select_nonempty(records, eps_cut)?;
    let width = 2.0 / grid_n as f64;
    let cell = |v: f64| (((v + 1.0) / width).floor().max(0.0) as usize).min(grid_n - 1);
    let mut values = vec![vec![0.0; grid_n]; grid_n];
    for r in &chosen {
        let m = r.mechanism.get(s);
        values[cell(m.x)][cell(m.y)] += 1.0;
    }
    let bins: Vec<(f64, f64)> = (0..grid_n)
        .map(|k| (-1.0 + k as f64 * width, -1.0 + (k + 1) as f64 * width))
        .collect();
    let name = s.to_string().to_lowercase();
    Ok(Table2D {
        x_name: format!("x_{name}"),
        y_name: format!("y_{name}"),
        x_bins: bins.clone(),
        y_bins: bins,
        values: peak_normalized(values),
        count: chosen.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McubeTable {
    /// `(ω^A, ω^B, ω^V)` with its relative frequency, sorted by triple.
    pub entries: Vec<([u8; 3], f64)>,
    /// Most frequent triple; ties go to the smallest triple.
    pub modal: [u8; 3],
    pub modal_omega_t: u32,
    pub count: usize,
}

impl McubeTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "omega_a,omega_b,omega_v,omega_t,frequency")?;
        for (t, f) in &self.entries {
            let sum: u32 = t.iter().map(|&v| v as u32).sum();
            writeln!(w, "{},{},{},{sum},{f:.16e}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub fn mcube_frequencies(records: &[SolutionRecord], eps_cut: f64) -> Result<McubeTable> {
    let chosen = select_nonempty(records, eps_cut)?;
    let mut counts: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for r in &chosen {
        *counts.entry(r.mechanism.cube).or_default() += 1;
    }
    let n = chosen.len() as f64;
    // BTreeMap iterates in ascending order, so keeping the first maximum
    // breaks ties toward the smallest triple.
    let (&modal, _) = counts
        .iter()
        .fold(None, |best: Option<(&[u8; 3], usize)>, (k, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .expect("selection is nonempty");
    Ok(McubeTable {
        entries: counts.iter().map(|(k, &c)| (*k, c as f64 / n)).collect(),
        modal,
        modal_omega_t: modal.iter().map(|&v| v as u32).sum(),
        count: chosen.len(),
    })
}

/// Writes floats with 17 significant digits so every value round-trips exactly.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// One record as a single JSON line (without the newline).
pub fn to_json_line(record: &SolutionRecord) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    record.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_jsonl<W: Write>(records: &[SolutionRecord], mut w: W) -> Result<()> {
    for r in records {
        writeln!(w, "{}", to_json_line(r)?).map_err(|e| Error::Io {
            path: "<stream>".into(),
            source: e,
        })?;
    }
    Ok(())
}

pub fn persist(records: &[SolutionRecord], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        writeln!(w, "{}", to_json_line(r)?).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Parses JSONL and checks every record's derived fields against a fresh
/// recomputation. Blank lines are skipped; line numbers are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<SolutionRecord>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Io {
            path: format!("<line {line_no}>").into(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SolutionRecord =
            serde_json::from_str(&line).map_err(|source| Error::Parse { line: line_no, source })?;
        let field = match record.mismatch() {
            Ok(m) => m,
            Err(_) => Some("protocol".into()),
        };
        if let Some(field) = field {
            return Err(Error::Integrity { line: line_no, field });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<SolutionRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_jsonl(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::run_multistart;
    use crate::model::ConstraintSpec;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn meta() -> RunMeta {
        RunMeta {
            seed: 1,
            start_index: 0,
            iterations: 10,
            converged: true,
            sigma: 0.1,
            mode: ConstraintMode::AbsB,
            target: None,
            phase_target: PhaseTarget::AnyLocalPhase,
        }
    }

    fn record(areas: &[f64], phis: &[f64], error: f64) -> SolutionRecord {
        let p = ParameterVector::new(areas.to_vec(), phis.to_vec());
        SolutionRecord::new(&p, error, 0.0, meta()).unwrap()
    }

    fn jaksch() -> SolutionRecord {
        record(&[PI, 2.0 * PI, PI], &[0.0, PI / 2.0, 0.0], 0.0)
    }

    #[test]
    fn success_rate_examples() {
        let rs: Vec<_> = [1e-2, 1e-4, 1e-8].iter().map(|&e| record(&[1.0], &[0.3], e)).collect();
        let c = success_rate_curve(&rs, &[1e-9, 1e-3, 1.0]).unwrap();
        assert_eq!(c[0].rate, 0.0);
        assert!((c[1].rate - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[2].rate, 1.0);
        assert!(success_rate_curve(&[], &[1e-3]).is_err());
    }

    #[test]
    fn area_total_same_bin() {
        let rs = vec![
            record(&[3.0 * PI, 3.0 * PI], &[0.3, 0.3], 0.0),
            record(&[3.0 * PI, 3.01 * PI], &[0.3, 0.3], 0.0),
        ];
        let h = area_total_histogram(&rs, &HistogramSpec::default()).unwrap();
        let nonzero: Vec<_> = h.bins.iter().filter(|b| b.value > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].value, 1.0);
        assert!((nonzero[0].center() - 6.0 * PI).abs() < 1e-12);
        assert!(h.bins[0].lower < 0.0 && h.bins[0].upper > 0.0);
    }

    #[test]
    fn area_total_respects_cut() {
        let rs = vec![record(&[PI], &[0.3], 0.5)];
        assert!(matches!(
            area_total_histogram(&rs, &HistogramSpec::default()),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn cumulative_example() {
        let w = PI;
        let rs: Vec<_> = std::iter::repeat_n(record(&[4.0 * PI], &[0.3], 0.0), 3)
            .chain(std::iter::repeat_n(record(&[8.0 * PI], &[0.3], 0.0), 7))
            .collect();
        let rho = area_total_histogram(&rs, &HistogramSpec { eps_cut: 1e-3, bin_width: w }).unwrap();
        let r = cumulative_area(&rho);
        assert!((cumulative_at(&r, 6.0 * PI) - 0.3).abs() < 1e-12);
        assert!((cumulative_at(&r, 9.0 * PI) - 1.0).abs() < 1e-12);
        assert_eq!(cumulative_at(&r, -1.0), 0.0);
        assert!((r.bins.last().unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cos_beta_identical_vectors() {
        let rs = vec![record(&[1.0, 2.0, 3.0], &[0.7, 0.7, 0.7], 0.0); 5];
        let h = cos_beta_histogram(&rs, (1, 3), &HistogramSpec::default()).unwrap();
        assert_eq!(h.bins.len(), 40);
        assert_eq!(h.bins.last().unwrap().value, 1.0);
        assert!((h.bins[0].lower + 1.0).abs() < 1e-15 && (h.bins[39].upper - 1.0).abs() < 1e-12);
        for bad in [(0, 1), (2, 2), (3, 1), (1, 4)] {
            assert!(matches!(
                cos_beta_histogram(&rs, bad, &HistogramSpec::default()),
                Err(Error::InvalidPair { .. })
            ));
        }
    }

    #[test]
    fn joint_single_record() {
        let rs = vec![record(&[2.0 * PI, 4.0 * PI], &[0.3, 0.3], 0.0)];
        let t = joint_area_histogram(&rs, 1, 2, &HistogramSpec::default()).unwrap();
        let nonzero: Vec<f64> = t.values.iter().flatten().copied().filter(|&v| v > 0.0).collect();
        assert_eq!(nonzero, vec![1.0]);
        let (i, j) = t.cell_of(2.0 * PI, 4.0 * PI).unwrap();
        assert_eq!(t.values[i][j], 1.0);
    }

    #[test]
    fn joint_uniform_is_flat() {
        let w = PI;
        let mut rs = Vec::new();
        for a in 1..=4 {
            for b in 1..=4 {
                rs.push(record(&[a as f64 * w, b as f64 * w], &[0.3, 0.3], 0.0));
            }
        }
        let t = joint_area_histogram(&rs, 1, 2, &HistogramSpec { eps_cut: 1e-3, bin_width: w }).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                assert_eq!(t.values[i][j], 1.0);
            }
        }
    }

    #[test]
    fn msquare_pure_zero_loop_corner() {
        // A 2π pulse on the aligned axis keeps V in the 0-loop corner.
        let rs = vec![record(&[2.0 * PI, 4.0 * PI], &[0.3, 0.3], 0.0); 3];
        let t = msquare_density(&rs, Subsystem::V, 3, 1e-3).unwrap();
        assert_eq!(t.values[0][0], 1.0);
        assert_eq!(t.values.iter().flatten().filter(|&&v| v > 0.0).count(), 1);
        assert!(msquare_density(&rs, Subsystem::V, 2, 1e-3).is_err());
    }

    #[test]
    fn mcube_of_jaksch() {
        let rs = vec![jaksch(); 4];
        let m = mcube_frequencies(&rs, 1e-3).unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].1, 1.0);
        let mut ab = [m.modal[0], m.modal[1]];
        ab.sort();
        assert_eq!((ab, m.modal[2]), ([1, 3], 7));
        assert_eq!(m.modal_omega_t, 11);
    }

    #[test]
    fn mcube_ties_go_to_smallest_triple() {
        let rs = vec![jaksch(), record(&[2.0 * PI, 4.0 * PI], &[0.3, 0.3], 0.0)];
        let m = mcube_frequencies(&rs, 1e-3).unwrap();
        assert_eq!(m.modal, m.entries[0].0);
    }

    #[test]
    fn local_maxima_detection() {
        let t = Table1D {
            quantity: "q".into(),
            value_name: "p".into(),
            bins: [0.0, 0.2, 0.1, 0.1, 0.0, 0.6]
                .iter()
                .enumerate()
                .map(|(k, &value)| Bin {
                    lower: k as f64,
                    upper: k as f64 + 1.0,
                    value,
                })
                .collect(),
            count: 10,
        };
        assert_eq!(t.local_maxima(), vec![1, 3, 5]);
    }

    fn small_campaign() -> Vec<SolutionRecord> {
        let mut cfg = OptimizerConfig::new(3, ConstraintSpec::new(0.1, ConstraintMode::AbsB).unwrap());
        cfg.n_starts = 30;
        cfg.seed = 4;
        records_from_outcomes(&run_multistart(&cfg).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn jsonl_round_trip_is_bit_identical() {
        let rs = small_campaign();
        let mut first = Vec::new();
        write_jsonl(&rs, &mut first).unwrap();
        let back = read_jsonl(first.as_slice()).unwrap();
        assert_eq!(back, rs);
        let mut second = Vec::new();
        write_jsonl(&back, &mut second).unwrap();
        assert_eq!(first, second);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        persist(&rs, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        assert_eq!(load(&path).unwrap(), rs);
    }

    #[test]
    fn truncated_line_is_reported() {
        let rs = vec![jaksch(); 3];
        let mut buf = Vec::new();
        write_jsonl(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let cut = &lines[1][..lines[1].len() / 2];
        lines[1] = cut;
        let broken = lines.join("\n");
        match read_jsonl(broken.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn tampered_omega_is_rejected() {
        let mut r = jaksch();
        r.mechanism.v.omega = 5;
        let mut buf = Vec::new();
        write_jsonl(&[jaksch(), r], &mut buf).unwrap();
        match read_jsonl(buf.as_slice()) {
            Err(Error::Integrity { line, field }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "mechanism.v.omega");
            }
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn tampered_area_total_is_rejected() {
        let mut r = jaksch();
        r.area_total += 1e-6;
        let mut buf = Vec::new();
        write_jsonl(&[r], &mut buf).unwrap();
        assert!(matches!(read_jsonl(buf.as_slice()), Err(Error::Integrity { .. })));
    }

    proptest! {
        #[test]
        fn success_rate_is_empirical_cdf(
            errors in prop::collection::vec(0.0..1.0f64, 1..40),
            mut eps in prop::collection::vec(0.0..1.2f64, 1..10),
        ) {
            let rs: Vec<_> = errors.iter().map(|&e| record(&[1.0], &[0.4], e)).collect();
            eps.sort_by(f64::total_cmp);
            let c = success_rate_curve(&rs, &eps).unwrap();
            for w in c.windows(2) {
                prop_assert!(w[0].rate <= w[1].rate);
            }
            for s in &c {
                let want = errors.iter().filter(|&&e| e <= s.epsilon).count() as f64 / errors.len() as f64;
                prop_assert_eq!(s.rate, want);
            }
        }

        #[test]
        fn distributions_are_normalized(
            areas in prop::collection::vec(prop::collection::vec(0.0..12.0 * PI, 3), 1..30),
            phis in prop::collection::vec(-PI..PI, 3),
        ) {
            let rs: Vec<_> = areas.iter().map(|a| record(a, &phis, 0.0)).collect();
            let spec = HistogramSpec::default();
            let rho = area_total_histogram(&rs, &spec).unwrap();
            prop_assert!((rho.total() - 1.0).abs() < 1e-12);
            let cum = cumulative_area(&rho);
            for w in cum.bins.windows(2) {
                prop_assert!(w[0].value <= w[1].value);
            }
            prop_assert!((cum.bins.last().unwrap().value - 1.0).abs() < 1e-12);
            let cb = cos_beta_histogram(&rs, (1, 2), &spec).unwrap();
            prop_assert!((cb.total() - 1.0).abs() < 1e-12);
            let m = mcube_frequencies(&rs, 1e-3).unwrap();
            prop_assert!((m.entries.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-12);
            let joint = joint_area_histogram(&rs, 1, 3, &spec).unwrap();
            prop_assert_eq!(joint.peak(), 1.0);
        }
    }
}
