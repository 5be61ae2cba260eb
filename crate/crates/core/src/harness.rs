//! Experiment specifications, seeded Monte-Carlo sweeps over the scheme
//! registry, and CSV/JSON result files.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! schemes = ["wmmse_ra", "wmmse_fixed"]
//! trials = 20
//!
//! [sweep]
//! variable = "p_max_dbm"
//! values = [-10, -5, 0, 5, 10]
//!
//! [scene]
//! directivity = 4
//! seed = 0
//! ```
//!
//! Trial `t` uses the topology seed `scene.seed + t`. Every other section
//! (`ao`, `fw`, `wmmse`, `cem`, `codebook`) is optional.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::channel::{ChannelModel, OrientationSet};
use crate::discrete::{cem_solve, fibonacci_codebook, nearest_projection, uniform_grid_codebook, CemParams, Codebook};
use crate::linear_bf::{mrt, zf};
use crate::metrics::{rates, BeamformerSet};
use crate::orient_fw::{ao_solve, optimize_orientations_linear, AoParams, FwParams, LinearScheme};
use crate::scene::{generate_topology, SceneConfig};
use crate::wmmse::{self, WmmseParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    WmmseRa,
    MrtRa,
    ZfRa,
    WmmseFixed,
    MrtFixed,
    ZfFixed,
    IsotropicFixed,
    DiscCem,
    DiscProj,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::WmmseRa,
        Scheme::MrtRa,
        Scheme::ZfRa,
        Scheme::WmmseFixed,
        Scheme::MrtFixed,
        Scheme::ZfFixed,
        Scheme::IsotropicFixed,
        Scheme::DiscCem,
        Scheme::DiscProj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::WmmseRa => "wmmse_ra",
            Scheme::MrtRa => "mrt_ra",
            Scheme::ZfRa => "zf_ra",
            Scheme::WmmseFixed => "wmmse_fixed",
            Scheme::MrtFixed => "mrt_fixed",
            Scheme::ZfFixed => "zf_fixed",
            Scheme::IsotropicFixed => "isotropic_fixed",
            Scheme::DiscCem => "disc_cem",
            Scheme::DiscProj => "disc_proj",
        }
    }

    pub fn needs_zf(self) -> bool {
        matches!(self, Scheme::ZfRa | Scheme::ZfFixed)
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Scheme::DiscCem | Scheme::DiscProj)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown scheme `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "p_max_dbm")]
    PMaxDbm,
    #[serde(rename = "My")]
    My,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "theta_max")]
    ThetaMax,
    #[serde(rename = "N_dir")]
    NDir,
}

impl SweepVar {
    pub const ALL: [SweepVar; 5] = [SweepVar::PMaxDbm, SweepVar::My, SweepVar::P, SweepVar::ThetaMax, SweepVar::NDir];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PMaxDbm => "p_max_dbm",
            SweepVar::My => "My",
            SweepVar::P => "p",
            SweepVar::ThetaMax => "theta_max",
            SweepVar::NDir => "N_dir",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepVar::My | SweepVar::P | SweepVar::NDir)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown sweep variable `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum CodebookSpec {
    Fibonacci { n_dir: usize },
    UniformGrid { n_theta: usize, n_phi: usize },
}

impl Default for CodebookSpec {
    fn default() -> Self {
        CodebookSpec::Fibonacci { n_dir: 25 }
    }
}

impl CodebookSpec {
    pub fn build(&self, theta_max: f64) -> Result<Codebook> {
        match *self {
            CodebookSpec::Fibonacci { n_dir } => fibonacci_codebook(n_dir, theta_max),
            CodebookSpec::UniformGrid { n_theta, n_phi } => uniform_grid_codebook(n_theta, n_phi, theta_max),
        }
    }
}

fn one_or_many_schemes<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<Scheme>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Scheme),
        Many(Vec<Scheme>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(alias = "scheme", deserialize_with = "one_or_many_schemes")]
    pub schemes: Vec<Scheme>,
    pub sweep: Option<Sweep>,
    pub trials: usize,
    /// Fill the `seconds` column with wall-clock times. Off by default so
    /// that reruns are byte-identical.
    pub record_timing: bool,
    pub scene: SceneConfig,
    pub wmmse: WmmseParams,
    /// Alternating optimization (`wmmse_ra`, `disc_proj`).
    pub ao: AoParams,
    /// Orientation search under MRT/ZF (`mrt_ra`, `zf_ra`).
    pub fw: FwParams,
    pub cem: CemParams,
    pub codebook: CodebookSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::WmmseRa, Scheme::WmmseFixed],
            sweep: None,
            trials: 20,
            record_timing: false,
            scene: SceneConfig::default(),
            wmmse: WmmseParams::default(),
            ao: AoParams::default(),
            fw: FwParams::default(),
            cem: CemParams::default(),
            codebook: CodebookSpec::default(),
        }
    }
}

/// One scene/codebook combination of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub scene: SceneConfig,
    pub codebook: CodebookSpec,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn sweep_name(&self) -> &'static str {
        self.sweep.as_ref().map_or("none", |s| s.variable.name())
    }

    /// Scene and codebook at every sweep value (a single point without a
    /// sweep), validated.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        let base = self.scene.clone().resolved().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let Some(sweep) = &self.sweep else {
            return Ok(vec![SweepPoint { value: 0.0, scene: base, codebook: self.codebook }]);
        };
        if sweep.values.is_empty() {
            return invalid(format!("sweep over {} has no values", sweep.variable));
        }
        let mut out = Vec::with_capacity(sweep.values.len());
        for &v in &sweep.values {
            if !v.is_finite() {
                return invalid(format!("sweep value {v} is not finite"));
            }
            if sweep.variable.is_integer() && (v < 0.0 || v.fract() != 0.0) {
                return invalid(format!("{} must be a nonnegative integer, got {v}", sweep.variable));
            }
            let mut scene = base.clone();
            let mut codebook = self.codebook;
            match sweep.variable {
                SweepVar::PMaxDbm => scene.set_p_max_dbm(v),
                SweepVar::My => scene.my = v as usize,
                SweepVar::P => scene.directivity = v as u32,
                SweepVar::ThetaMax => scene.theta_max = v,
                SweepVar::NDir => match &mut codebook {
                    CodebookSpec::Fibonacci { n_dir } => *n_dir = v as usize,
                    CodebookSpec::UniformGrid { .. } => {
                        return invalid("an N_dir sweep needs a Fibonacci codebook".into());
                    }
                },
            }
            scene.validate().map_err(|e| Error::InvalidSpec(format!("{} = {v}: {e}", sweep.variable)))?;
            out.push(SweepPoint { value: v, scene, codebook });
        }
        Ok(out)
    }

    /// Rejects infeasible scheme/config combinations with a message naming
    /// the violated requirement.
    pub fn validate(&self) -> Result<Vec<SweepPoint>> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if self.schemes.is_empty() {
            return invalid("no schemes selected".into());
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        let points = self.points()?;
        for s in &self.schemes {
            for p in &points {
                if s.needs_zf() && p.scene.elements() < p.scene.pairs {
                    return invalid(format!(
                        "{s} needs at least as many elements as pairs, got M = {} < K = {}",
                        p.scene.elements(),
                        p.scene.pairs
                    ));
                }
                if s.is_discrete() {
                    p.codebook
                        .build(p.scene.theta_max)
                        .map_err(|e| Error::InvalidSpec(format!("{s}: {e}")))?;
                }
            }
        }
        if self.schemes.contains(&Scheme::DiscCem) {
            self.cem.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        }
        Ok(points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub seed: u64,
    /// bps/Hz
    pub wsr: f64,
    pub rates: Vec<f64>,
    pub iterations: usize,
    pub seconds: f64,
}

/// Outcome of one scheme on one scene.
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub orientations: OrientationSet,
    pub beamformers: BeamformerSet,
    pub wsr: f64,
    pub rates: Vec<f64>,
    /// Outer iterations (AO), Frank-Wolfe steps (MRT/ZF + RA), WMMSE sweeps
    /// (fixed WMMSE baselines), CEM rounds; 0 for closed forms.
    pub iterations: usize,
}

/// Runs `scheme` on the topology drawn from `scene` (with `scene.seed`).
/// CEM draws its samples from a stream keyed by the same seed.
pub fn run_scheme(scheme: Scheme, scene: &SceneConfig, codebook: &CodebookSpec, spec: &ExperimentSpec) -> Result<SchemeRun> {
    let scene = if scheme == Scheme::IsotropicFixed {
        SceneConfig { directivity: 0, ..scene.clone() }
    } else {
        scene.clone()
    };
    let topology = generate_topology(&scene);
    let model = ChannelModel::new(&scene, &topology)?;
    let noise = scene.noise_mw();
    let budgets = scene.budgets_mw();
    let upright = OrientationSet::upright(scene.pairs, scene.elements());
    let wmmse_at = |f: &OrientationSet| {
        let ch = model.channels(f);
        wmmse::solve(&ch, &noise, &scene.weights, &budgets, &spec.wmmse, None)
    };

    let (orientations, beamformers, iterations) = match scheme {
        Scheme::WmmseFixed | Scheme::IsotropicFixed => {
            let st = wmmse_at(&upright);
            (upright, st.w, st.sweeps)
        }
        Scheme::MrtFixed => {
            let bf = mrt(&model.channels(&upright), &budgets).beamformers;
            (upright, bf, 0)
        }
        Scheme::ZfFixed => {
            let bf = zf(&model.channels(&upright), &budgets)?.beamformers;
            (upright, bf, 0)
        }
        Scheme::WmmseRa => {
            let out = ao_solve(&model, &scene, &spec.ao);
            let n = out.trace.len();
            (out.orientations, out.beamformers, n)
        }
        Scheme::MrtRa | Scheme::ZfRa => {
            let kind = if scheme == Scheme::MrtRa { LinearScheme::Mrt } else { LinearScheme::Zf };
            let out = optimize_orientations_linear(&model, &scene, kind, &spec.fw)?;
            let n = out.fw.trace.len();
            (out.orientations, out.beamformers, n)
        }
        Scheme::DiscCem => {
            let cb = codebook.build(scene.theta_max)?;
            let out = cem_solve(&model, &scene, &cb, &spec.cem, scene.seed)?;
            let n = out.trace.len();
            (out.orientations, out.beamformers, n)
        }
        Scheme::DiscProj => {
            let cb = codebook.build(scene.theta_max)?;
            let ao = ao_solve(&model, &scene, &spec.ao);
            let projected = nearest_projection(&ao.orientations, &cb);
            let st = wmmse_at(&projected);
            (projected, st.w, ao.trace.len())
        }
    };
    let report = rates(&model.channels(&orientations), &beamformers, &noise, &scene.weights)?;
    Ok(SchemeRun { orientations, beamformers, wsr: report.wsr, rates: report.rate, iterations })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub trials: usize,
    pub mean_wsr: f64,
    /// Sample standard deviation (0 for a single trial).
    pub std_wsr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    /// Mean wsr of `scheme` at `sweep_value`.
    pub fn mean(&self, scheme: Scheme, sweep_value: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.scheme == scheme && r.sweep_value == sweep_value)
            .map(|r| r.mean_wsr)
    }

    /// wsr of `scheme` at `sweep_value`, one entry per trial in seed order.
    pub fn trial_wsr(&self, scheme: Scheme, sweep_value: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.sweep_value == sweep_value)
            .map(|r| r.wsr)
            .collect()
    }
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    // cells keyed by first-seen position of the scheme and the sweep value
    let mut schemes: Vec<Scheme> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let s = position_or_push(&mut schemes, r.scheme);
        let v = position_or_push(&mut values, r.sweep_value);
        cells.entry((s, v)).or_default().push(r.wsr);
    }
    cells
        .into_iter()
        .map(|((s, v), w)| {
            let n = w.len() as f64;
            let mean = w.iter().sum::<f64>() / n;
            let std = if w.len() > 1 {
                (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow { scheme: schemes[s], sweep_value: values[v], trials: w.len(), mean_wsr: mean, std_wsr: std }
        })
        .collect()
}

fn position_or_push<T: PartialEq + Copy>(seen: &mut Vec<T>, x: T) -> usize {
    seen.iter().position(|&y| y == x).unwrap_or_else(|| {
        seen.push(x);
        seen.len() - 1
    })
}

struct Task {
    /// position in `spec.schemes`
    order: usize,
    scheme: Scheme,
    point: usize,
    trial: usize,
}

fn run_task(spec: &ExperimentSpec, points: &[SweepPoint], task: &Task) -> Result<ResultRow> {
    let p = &points[task.point];
    let seed = p.scene.seed + task.trial as u64;
    let scene = SceneConfig { seed, ..p.scene.clone() };
    let start = Instant::now();
    let run = run_scheme(task.scheme, &scene, &p.codebook, spec)?;
    let seconds = if spec.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(ResultRow {
        scheme: task.scheme,
        sweep_var: spec.sweep_name().to_string(),
        sweep_value: p.value,
        seed,
        wsr: run.wsr,
        rates: run.rates,
        iterations: run.iterations,
        seconds,
    })
}

/// Runs every (scheme, sweep value, trial) cell. Rows come back sorted by
/// the scheme's position in the spec, then sweep position, then seed,
/// regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let points = spec.validate()?;
    let mut tasks = Vec::new();
    for (order, &scheme) in spec.schemes.iter().enumerate() {
        for point in 0..points.len() {
            for trial in 0..spec.trials {
                tasks.push(Task { order, scheme, point, trial });
            }
        }
    }
    #[cfg(feature = "parallel")]
    let results: Vec<Result<ResultRow>> = {
        use rayon::prelude::*;
        tasks.par_iter().map(|t| run_task(spec, &points, t)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ResultRow>> = tasks.iter().map(|t| run_task(spec, &points, t)).collect();

    let mut keyed = Vec::with_capacity(results.len());
    for (task, row) in tasks.iter().zip(results) {
        keyed.push(((task.order, task.point, task.trial), row?));
    }
    keyed.sort_by_key(|(k, _)| *k);
    let rows: Vec<ResultRow> = keyed.into_iter().map(|(_, r)| r).collect();
    let summary = summarize(&rows);
    Ok(ExperimentResult { rows, summary })
}

/// Fixed nine-decimal formatting; negative zero prints as zero.
pub fn fixed(x: f64) -> String {
    format!("{:.9}", x + 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidSpec(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

/// Columns: `scheme, sweep_var, sweep_value, seed, wsr, rate_1..rate_K,
/// iters, seconds`, with K taken from the first row.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.rates.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["scheme", "sweep_var", "sweep_value", "seed", "wsr"].map(String::from).to_vec();
    header.extend((1..=k).map(|i| format!("rate_{i}")));
    header.extend(["iters".to_string(), "seconds".to_string()]);
    w.write_record(&header)?;
    for r in rows {
        if r.rates.len() != k {
            return Err(Error::DimensionMismatch(format!("row with {} rates in a {k}-pair table", r.rates.len())));
        }
        let mut rec = vec![
            r.scheme.name().to_string(),
            r.sweep_var.clone(),
            fixed(r.sweep_value),
            r.seed.to_string(),
            fixed(r.wsr),
        ];
        rec.extend(r.rates.iter().map(|&x| fixed(x)));
        rec.push(r.iterations.to_string());
        rec.push(fixed(r.seconds));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn emit<W: Write>(rows: &[ResultRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
}

pub fn read_json(text: &str) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_str(text)?)
}

/// `scheme, sweep_value, trials, mean_wsr, std_wsr`.
pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "sweep_value", "trials", "mean_wsr", "std_wsr"])?;
    for s in summary {
        w.write_record([
            s.scheme.name().to_string(),
            fixed(s.sweep_value),
            s.trials.to_string(),
            fixed(s.mean_wsr),
            fixed(s.std_wsr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a convergence trace. `gap` and `step` are absent for CEM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub wsr: f64,
    pub gap: Option<f64>,
    pub step: Option<f64>,
}

/// Per-iteration trace of a single `wmmse_ra` or `disc_cem` run on the
/// first sweep point with the base seed: AO outer iterations or CEM
/// best-so-far values. The starting value is not included.
pub fn convergence_trace(spec: &ExperimentSpec, scheme: Scheme) -> Result<Vec<TraceRecord>> {
    if !matches!(scheme, Scheme::WmmseRa | Scheme::DiscCem) {
        return Err(Error::InvalidSpec(format!("no convergence trace for {scheme}; use wmmse_ra or disc_cem")));
    }
    let single = ExperimentSpec { schemes: vec![scheme], trials: 1, ..spec.clone() };
    let points = single.validate()?;
    let p = &points[0];
    let model = ChannelModel::new(&p.scene, &generate_topology(&p.scene))?;
    Ok(match scheme {
        Scheme::WmmseRa => ao_solve(&model, &p.scene, &spec.ao)
            .trace
            .into_iter()
            .map(|r| TraceRecord { iteration: r.iteration, wsr: r.wsr, gap: Some(r.gap), step: Some(r.step) })
            .collect(),
        _ => {
            let cb = p.codebook.build(p.scene.theta_max)?;
            cem_solve(&model, &p.scene, &cb, &spec.cem, p.scene.seed)?
                .trace
                .into_iter()
                .map(|r| TraceRecord { iteration: r.iteration, wsr: r.wsr, gap: None, step: None })
                .collect()
        }
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "wsr", "gap", "step"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            fixed(r.wsr),
            r.gap.map(fixed).unwrap_or_default(),
            r.step.map(fixed).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Named default experiment grids.
pub const PRESETS: [&str; 5] = ["power", "array", "directivity", "zenith", "codebook"];

/// The default grids:
/// - `power`: budget sweep -10..10 dBm at p = 4, all continuous schemes;
/// - `array`: My in 2..6 with Mx = 2 at 0 dBm;
/// - `directivity`: p in 0..6 at 5 dBm with a 25-direction codebook;
/// - `zenith`: theta_max from 0 to pi/2 at p = 6, 5 dBm;
/// - `codebook`: N_dir sweep at p = 4, 5 dBm.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let continuous = vec![
        Scheme::WmmseRa,
        Scheme::MrtRa,
        Scheme::ZfRa,
        Scheme::WmmseFixed,
        Scheme::MrtFixed,
        Scheme::ZfFixed,
    ];
    let configs = vec![
        Scheme::WmmseRa,
        Scheme::DiscCem,
        Scheme::DiscProj,
        Scheme::WmmseFixed,
        Scheme::IsotropicFixed,
    ];
    let base = ExperimentSpec::default();
    let spec = match name {
        "power" => ExperimentSpec {
            schemes: continuous,
            sweep: Some(Sweep { variable: SweepVar::PMaxDbm, values: vec![-10.0, -5.0, 0.0, 5.0, 10.0] }),
            ..base
        },
        "array" => ExperimentSpec {
            schemes: continuous,
            sweep: Some(Sweep { variable: SweepVar::My, values: vec![2.0, 3.0, 4.0, 5.0, 6.0] }),
            ..base
        },
        "directivity" => {
            let mut s = ExperimentSpec {
                schemes: configs,
                sweep: Some(Sweep { variable: SweepVar::P, values: (0..=6).map(f64::from).collect() }),
                ..base
            };
            s.scene.set_p_max_dbm(5.0);
            s
        }
        "zenith" => {
            let mut s = ExperimentSpec {
                schemes: configs,
                sweep: Some(Sweep {
                    variable: SweepVar::ThetaMax,
                    values: vec![0.0, PI / 20.0, PI / 10.0, PI / 5.0, PI / 4.0, PI / 3.0, 5.0 * PI / 12.0, PI / 2.0],
                }),
                ..base
            };
            s.scene.directivity = 6;
            s.scene.set_p_max_dbm(5.0);
            s
        }
        "codebook" => {
            let mut s = ExperimentSpec {
                schemes: configs,
                sweep: Some(Sweep { variable: SweepVar::NDir, values: vec![4.0, 8.0, 16.0, 25.0, 36.0, 64.0] }),
                ..base
            };
            s.scene.set_p_max_dbm(5.0);
            s
        }
        _ => return Err(Error::InvalidSpec(format!("unknown preset `{name}` (expected one of {})", PRESETS.join(", ")))),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(schemes: Vec<Scheme>) -> ExperimentSpec {
        ExperimentSpec {
            schemes,
            trials: 2,
            cem: CemParams { sample_size: 16, max_iter: 4, ..CemParams::default() },
            codebook: CodebookSpec::Fibonacci { n_dir: 9 },
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        for v in SweepVar::ALL {
            assert_eq!(v.name().parse::<SweepVar>().unwrap(), v);
        }
        assert!("wmmse".parse::<Scheme>().is_err());
    }

    #[test]
    fn parses_toml_spec() {
        let text = r#"
scheme = "wmmse_fixed"
trials = 3

[sweep]
variable = "My"
values = [2, 3]

[scene]
directivity = 2
p_max_dbm = 5

[codebook]
kind = "uniform_grid"
n_theta = 3
n_phi = 4
"#;
        let spec = ExperimentSpec::from_toml(text).unwrap();
        assert_eq!(spec.schemes, vec![Scheme::WmmseFixed]);
        let points = spec.validate().unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[1].scene.elements(), 6);
        assert_eq!(points[0].scene.p_max_dbm, vec![5.0; 4]);
        assert_eq!(spec.codebook, CodebookSpec::UniformGrid { n_theta: 3, n_phi: 4 });
        let again = ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_toml("trials = 2\nbogus = 1").is_err());
        let zf_small = ExperimentSpec {
            schemes: vec![Scheme::ZfFixed],
            scene: SceneConfig { mx: 1, my: 2, ..SceneConfig::default() },
            ..ExperimentSpec::default()
        };
        let err = zf_small.validate().unwrap_err().to_string();
        assert!(err.contains("zf_fixed") && err.contains("M = 2"), "{err}");
        let frac = ExperimentSpec {
            sweep: Some(Sweep { variable: SweepVar::My, values: vec![2.5] }),
            ..ExperimentSpec::default()
        };
        assert!(frac.validate().is_err());
        let grid_ndir = ExperimentSpec {
            schemes: vec![Scheme::DiscCem],
            sweep: Some(Sweep { variable: SweepVar::NDir, values: vec![4.0] }),
            codebook: CodebookSpec::UniformGrid { n_theta: 2, n_phi: 2 },
            ..ExperimentSpec::default()
        };
        assert!(grid_ndir.validate().is_err());
        assert!(ExperimentSpec { trials: 0, ..ExperimentSpec::default() }.validate().is_err());
    }

    #[test]
    fn single_trial_matches_library() {
        let spec = ExperimentSpec { schemes: vec![Scheme::WmmseFixed], trials: 1, ..ExperimentSpec::default() };
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.rows.len(), 1);
        let scene = SceneConfig::default();
        let model = ChannelModel::new(&scene, &generate_topology(&scene)).unwrap();
        let ch = model.channels(&OrientationSet::upright(4, 4));
        let st = wmmse::solve(&ch, &scene.noise_mw(), &scene.weights, &scene.budgets_mw(), &WmmseParams::default(), None);
        assert_eq!(res.rows[0].wsr, st.wsr);
        assert_eq!(res.summary[0].mean_wsr, st.wsr);
        assert_eq!(res.summary[0].std_wsr, 0.0);
    }

    #[test]
    fn rows_sorted_and_counted() {
        let spec = ExperimentSpec {
            sweep: Some(Sweep { variable: SweepVar::PMaxDbm, values: vec![5.0, -5.0] }),
            ..quick(vec![Scheme::MrtFixed, Scheme::ZfFixed, Scheme::IsotropicFixed])
        };
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.rows.len(), 3 * 2 * 2);
        assert_eq!(res.summary.len(), 6);
        let keys: Vec<(Scheme, f64, u64)> = res.rows.iter().map(|r| (r.scheme, r.sweep_value, r.seed)).collect();
        assert_eq!(keys[0], (Scheme::MrtFixed, 5.0, 0));
        assert_eq!(keys[1], (Scheme::MrtFixed, 5.0, 1));
        assert_eq!(keys[2], (Scheme::MrtFixed, -5.0, 0));
        assert!(res.rows.iter().all(|r| r.wsr >= 0.0 && r.rates.len() == 4 && r.seconds == 0.0));
        assert_eq!(res.summary[0].scheme, Scheme::MrtFixed);
        assert_eq!(res.summary[1].sweep_value, -5.0);
    }

    #[test]
    fn csv_layout_and_json_round_trip() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scheme,sweep_var,sweep_value,seed,wsr,iters,seconds\n");
        let res = run_experiment(&quick(vec![Scheme::MrtFixed])).unwrap();
        let mut buf = Vec::new();
        write_csv(&res.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,sweep_var,sweep_value,seed,wsr,rate_1,rate_2,rate_3,rate_4,iters,seconds"
        );
        assert!(lines.next().unwrap().starts_with("mrt_fixed,none,0.000000000,0,"));
        let mut json = Vec::new();
        write_json(&res.rows, &mut json).unwrap();
        assert_eq!(read_json(std::str::from_utf8(&json).unwrap()).unwrap(), res.rows);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let spec = quick(vec![Scheme::DiscCem, Scheme::MrtFixed]);
        let csv = |s: &ExperimentSpec| {
            let mut b = Vec::new();
            write_csv(&run_experiment(s).unwrap().rows, &mut b).unwrap();
            b
        };
        assert_eq!(csv(&spec), csv(&spec));
    }

    #[test]
    fn isotropic_ignores_directivity() {
        let a = quick(vec![Scheme::IsotropicFixed]);
        let b = ExperimentSpec { scene: SceneConfig { directivity: 6, ..SceneConfig::default() }, ..a.clone() };
        assert_eq!(run_experiment(&a).unwrap().rows, run_experiment(&b).unwrap().rows);
    }

    #[test]
    fn traces_only_for_iterative_schemes() {
        let spec = quick(vec![Scheme::DiscCem]);
        let t = convergence_trace(&spec, Scheme::DiscCem).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|r| r.gap.is_none()));
        assert!(convergence_trace(&spec, Scheme::MrtFixed).is_err());
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("1,") && text.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_err());
    }
}
