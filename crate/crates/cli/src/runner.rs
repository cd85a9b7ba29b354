//! Executes a scenario and writes its CSV artifacts.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kerr_echo::analysis::{
    angular_contrast, angular_contrast_particles, detect_echoes, husimi_q, DetectorConfig, EchoReport, Observable,
};
use kerr_echo::analytic::{q_kicked, Order, PerturbationContext};
use kerr_echo::classical::{evolve_ensemble, phase_space_histogram, sample_initial_ensemble, PhaseGrid, DEFAULT_DT};
use kerr_echo::dynamics::{run_kicked_scenario, Evolution, Excitation, ScenarioOptions, TimeSeries};
use kerr_echo::fock::{coherent_state, StateVector, Truncation};
use kerr_echo::open_system::{
    propagate_lindblad, thermal_state, BathParams, DensityMatrix, LindbladEvolution, LindbladOptions, DEFAULT_DT_FREE,
    DEFAULT_DT_PULSE,
};
use kerr_echo::scaling::{lambda_scaling, LambdaScaling, ScalingSetup};
use kerr_echo::{C64, VERSION};

use crate::config::{AnalyticOrder, ConfigError, Initial, Mode, ObservableName, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Sim {
        context: &'static str,
        source: kerr_echo::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// 2 for configuration problems, 3 for numerical tolerance failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Sim { source, .. } if source.is_numerical() => 3,
            RunError::Sim { .. } => 2,
            RunError::Io { .. } => 1,
        }
    }
}

fn sim(context: &'static str) -> impl FnOnce(kerr_echo::Error) -> RunError {
    move |source| RunError::Sim { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    /// Smallest eigenvalue seen at the checked samples.
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub series: TimeSeries,
    pub n_max: usize,
    pub lindblad: Option<LindbladDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct ClassicalSeries {
    pub series: TimeSeries,
    pub n: usize,
    pub seed: u64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct EchoRecord {
    /// `quantum` or `classical`.
    pub source: &'static str,
    pub report: EchoReport,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub husimi: Option<PhaseGrid>,
    pub histogram: Option<PhaseGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastRow {
    pub t: f64,
    pub source: &'static str,
    pub contrast: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyticOverlay {
    pub order: AnalyticOrder,
    pub values: Vec<f64>,
    pub linf: f64,
    pub max_abs: f64,
}

/// Everything a scenario computes, before any file is written.
#[derive(Debug, Clone, Default)]
pub struct ScenarioResult {
    pub quantum: Option<QuantumRun>,
    pub classical: Option<ClassicalSeries>,
    pub echoes: Vec<EchoRecord>,
    pub snapshots: Vec<Snapshot>,
    pub contrast: Vec<ContrastRow>,
    pub analytic: Option<AnalyticOverlay>,
    pub scaling: Option<LambdaScaling>,
    /// `key: value` lines recorded in every file header.
    pub meta: Vec<(String, String)>,
}

impl ScenarioResult {
    pub fn echoes(&self, source: &str, observable: Observable) -> Option<&EchoReport> {
        self.echoes
            .iter()
            .find(|e| e.source == source && e.report.observable == observable)
            .map(|e| &e.report)
    }
}

fn truncation(cfg: &ScenarioConfig, excitations: &[Excitation]) -> Result<Truncation, RunError> {
    if let Some(n) = cfg.numerics.n_max {
        return Truncation::new(n).map_err(sim("truncation"));
    }
    let kicks = || excitations.iter().map(Excitation::kick_strength);
    let mut t = match cfg.initial {
        Initial::Coherent { alpha0 } => Truncation::recommended(alpha0, kicks()),
        Initial::Thermal { .. } => Truncation::recommended_thermal(cfg.initial_nbar().expect("thermal"), kicks()),
    };
    if let Some(b) = cfg.bath_params() {
        if b.nbar > 0.0 {
            let alpha = cfg.alpha0().unwrap_or(0.0).abs();
            let bath = Truncation::recommended_thermal(b.nbar, kicks().chain([alpha]));
            t.n_max = t.n_max.max(bath.n_max);
        }
    }
    Ok(t)
}

fn initial_pure(cfg: &ScenarioConfig, trunc: &Truncation) -> Result<StateVector, RunError> {
    let alpha0 = cfg.alpha0().expect("validated: pure runs need a coherent state");
    coherent_state(C64::new(alpha0, 0.0), trunc).map_err(sim("initial state"))
}

fn initial_mixed(cfg: &ScenarioConfig, trunc: &Truncation, bath: &BathParams) -> Result<DensityMatrix, RunError> {
    match cfg.initial {
        Initial::Coherent { .. } => Ok(DensityMatrix::from_pure(&initial_pure(cfg, trunc)?)),
        Initial::Thermal { .. } => {
            let b = BathParams::from_nbar(bath.gamma, cfg.initial_nbar().expect("thermal"))
                .map_err(sim("initial state"))?;
            thermal_state(&b, trunc).map_err(sim("initial state"))
        }
    }
}

fn lindblad_options(cfg: &ScenarioConfig) -> LindbladOptions {
    LindbladOptions {
        dt_pulse: cfg.numerics.dt_pulse.unwrap_or(DEFAULT_DT_PULSE),
        dt_free: cfg.numerics.dt_free.unwrap_or(DEFAULT_DT_FREE),
        start_time: cfg.t_initial(),
        positivity_stride: cfg.numerics.positivity_stride.unwrap_or(0),
    }
}

fn scenario_options(cfg: &ScenarioConfig) -> ScenarioOptions {
    ScenarioOptions {
        dt: cfg.numerics.dt,
        start_time: cfg.t_initial(),
    }
}

fn push_meta(meta: &mut Vec<(String, String)>, key: &str, value: impl ToString) {
    meta.push((key.to_string(), value.to_string()));
}

fn step_meta(cfg: &ScenarioConfig, mixed: bool, meta: &mut Vec<(String, String)>) {
    if mixed {
        let o = lindblad_options(cfg);
        push_meta(meta, "dt_pulse", o.dt_pulse);
        push_meta(meta, "dt_free", o.dt_free);
    } else {
        match cfg.numerics.dt {
            Some(dt) => push_meta(meta, "dt_pulse", dt),
            None => push_meta(meta, "dt_pulse", "min(sigma/50, window/200)"),
        }
        push_meta(meta, "dt_free", "exact");
    }
}

fn quantum_series(cfg: &ScenarioConfig, meta: &mut Vec<(String, String)>) -> Result<QuantumRun, RunError> {
    let excitations = cfg.excitations();
    let params = cfg.system_params();
    let trunc = truncation(cfg, &excitations)?;
    let times = cfg.sample_times();
    push_meta(meta, "n_max", trunc.n_max);
    match cfg.bath_params() {
        None => {
            step_meta(cfg, false, meta);
            let initial = initial_pure(cfg, &trunc)?;
            let series = run_kicked_scenario(&initial, &excitations, &params, &times, scenario_options(cfg))
                .map_err(sim("quantum evolution"))?;
            Ok(QuantumRun {
                series,
                n_max: trunc.n_max,
                lindblad: None,
            })
        }
        Some(bath) => {
            step_meta(cfg, true, meta);
            let s0 = initial_mixed(cfg, &trunc, &bath)?;
            let run = propagate_lindblad(&s0, &excitations, &params, &bath, &times, &lindblad_options(cfg))
                .map_err(sim("density-matrix evolution"))?;
            let max_trace_drift = run
                .series
                .norm_or_trace
                .iter()
                .map(|t| (t - 1.0).abs())
                .fold(0.0, f64::max);
            let min_eigenvalue = run.positivity.iter().map(|p| p.1).reduce(f64::min);
            Ok(QuantumRun {
                series: run.series,
                n_max: trunc.n_max,
                lindblad: Some(LindbladDiagnostics {
                    max_trace_drift,
                    max_hermiticity_drift: run.max_hermiticity_drift,
                    min_eigenvalue,
                }),
            })
        }
    }
}

fn classical_run(
    cfg: &ScenarioConfig,
    times: &[f64],
    snapshots: &[f64],
    meta: &mut Vec<(String, String)>,
) -> Result<(ClassicalSeries, Vec<kerr_echo::classical::Ensemble>), RunError> {
    let e = cfg.ensemble.as_ref().expect("validated");
    let dt = cfg.numerics.classical_dt.unwrap_or(DEFAULT_DT);
    push_meta(meta, "ensemble_n", e.n);
    push_meta(meta, "seed", e.seed);
    push_meta(meta, "classical_dt", dt);
    let alpha0 = cfg.alpha0().expect("validated");
    let ens = sample_initial_ensemble(alpha0, e.n, e.seed).map_err(sim("classical sampling"))?;
    let run = evolve_ensemble(&ens, &cfg.excitations(), &cfg.system_params(), times, snapshots, dt)
        .map_err(sim("classical evolution"))?;
    Ok((
        ClassicalSeries {
            series: run.series,
            n: e.n,
            seed: e.seed,
            dt,
        },
        run.snapshots,
    ))
}

/// Amplitude that sets the collapse time seen by the echo detector: the
/// initial coherent amplitude, or for a thermal start the strength of the
/// first (preparing) pulse.
fn detection_amplitude(cfg: &ScenarioConfig) -> f64 {
    cfg.alpha0().unwrap_or_else(|| {
        let mut ex = cfg.excitations();
        ex.sort_by(|a, b| a.center().total_cmp(&b.center()));
        ex.first().map_or(1.0, |e| e.kick_strength().abs())
    })
}

/// Echo-inducing kick: the last excitation.
fn detection_tau(cfg: &ScenarioConfig) -> Option<f64> {
    cfg.excitations().iter().map(Excitation::center).reduce(f64::max)
}

fn detect(
    cfg: &ScenarioConfig,
    source: &'static str,
    series: &TimeSeries,
    out: &mut Vec<EchoRecord>,
) -> Result<(), RunError> {
    let mut det = DetectorConfig::default();
    if let Some(f) = cfg.analysis.prominence_fraction {
        det.prominence_fraction = f;
    }
    for name in &cfg.analysis.detect {
        let obs = match name {
            ObservableName::Q1 => Observable::Q1,
            ObservableName::Q2 => Observable::Q2,
        };
        let report = detect_echoes(series, detection_tau(cfg), detection_amplitude(cfg), obs, &det)
            .map_err(sim("echo detection"))?;
        out.push(EchoRecord { source, report });
    }
    Ok(())
}

fn analytic_overlay(cfg: &ScenarioConfig, numeric: &TimeSeries) -> Result<AnalyticOverlay, RunError> {
    let order = cfg.analysis.analytic_order.expect("validated");
    let ex = cfg.excitations()[0];
    let ctx = PerturbationContext::new(
        cfg.alpha0().expect("validated"),
        cfg.system.delta,
        ex.center(),
        ex.kick_strength(),
    )
    .map_err(sim("analytic curve"))?;
    let ord = match order {
        AnalyticOrder::First => Order::First,
        AnalyticOrder::Second => Order::Second,
    };
    let values: Vec<f64> = numeric.times.iter().map(|&t| q_kicked(t, &ctx, ord)).collect();
    let linf = values
        .iter()
        .zip(&numeric.q1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let max_abs = numeric.q1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(AnalyticOverlay {
        order,
        values,
        linf,
        max_abs,
    })
}

fn husimi_snapshots(cfg: &ScenarioConfig, result: &mut ScenarioResult) -> Result<(), RunError> {
    let grid_cfg = cfg.grid.as_ref().expect("validated");
    let excitations = cfg.excitations();
    let params = cfg.system_params();
    let trunc = truncation(cfg, &excitations)?;
    let kick_sum: f64 = excitations.iter().map(|e| e.kick_strength().abs()).sum();
    let alpha = cfg.alpha0().unwrap_or(0.0).abs();
    let nbar = cfg
        .initial_nbar()
        .into_iter()
        .chain(cfg.bath_params().map(|b| b.nbar))
        .fold(0.0, f64::max);
    let spec = cfg.grid_spec(alpha + kick_sum, nbar);
    let meta = &mut result.meta;
    push_meta(meta, "n_max", trunc.n_max);
    push_meta(meta, "grid_q_range", format!("{:?}", spec.q_range));
    push_meta(meta, "grid_p_range", format!("{:?}", spec.p_range));
    push_meta(meta, "grid_resolution", spec.resolution);

    let mut grids = Vec::with_capacity(grid_cfg.snapshots.len());
    match cfg.bath_params() {
        None => {
            step_meta(cfg, false, meta);
            let mut evo = Evolution::new(initial_pure(cfg, &trunc)?, &excitations, &params, scenario_options(cfg))
                .map_err(sim("quantum evolution"))?;
            for &t in &grid_cfg.snapshots {
                let s = evo.state_at(t).map_err(sim("quantum evolution"))?;
                grids.push(husimi_q(&s, spec.q_range, spec.p_range, spec.resolution).map_err(sim("Husimi Q"))?);
            }
        }
        Some(bath) => {
            step_meta(cfg, true, meta);
            let s0 = initial_mixed(cfg, &trunc, &bath)?;
            let mut evo = LindbladEvolution::new(&s0, &excitations, &params, &bath, &lindblad_options(cfg))
                .map_err(sim("density-matrix evolution"))?;
            for &t in &grid_cfg.snapshots {
                let s = evo.state_at(t).map_err(sim("density-matrix evolution"))?;
                grids.push(husimi_q(&s, spec.q_range, spec.p_range, spec.resolution).map_err(sim("Husimi Q"))?);
            }
        }
    }
    let mut histograms = vec![None; grids.len()];
    if cfg.ensemble.is_some() {
        let bins = grid_cfg.histogram_bins.unwrap_or(spec.resolution);
        push_meta(&mut result.meta, "histogram_bins", bins);
        let (_, ensembles) = classical_run(cfg, &[], &grid_cfg.snapshots, &mut result.meta)?;
        if let Some(c) = &grid_cfg.contrast {
            let r0 = SQRT_2 * alpha;
            for (e, &t) in ensembles.iter().zip(&grid_cfg.snapshots) {
                result.contrast.push(ContrastRow {
                    t,
                    source: "classical",
                    contrast: angular_contrast_particles(e, r0, c.half_width, c.sectors),
                });
            }
        }
        for (slot, e) in histograms.iter_mut().zip(&ensembles) {
            *slot = Some(phase_space_histogram(e, spec.q_range, spec.p_range, bins).map_err(sim("histogram"))?);
        }
    }
    if let Some(c) = &grid_cfg.contrast {
        let r0 = SQRT_2 * alpha;
        push_meta(&mut result.meta, "contrast_radius", r0);
        push_meta(&mut result.meta, "contrast_half_width", c.half_width);
        push_meta(&mut result.meta, "contrast_sectors", c.sectors);
        for (g, &t) in grids.iter().zip(&grid_cfg.snapshots) {
            result.contrast.push(ContrastRow {
                t,
                source: "husimi",
                contrast: angular_contrast(g, r0, c.half_width, c.sectors),
            });
        }
    }
    for ((mut g, h), &t) in grids.into_iter().zip(histograms).zip(&grid_cfg.snapshots) {
        g.t = t;
        result.snapshots.push(Snapshot {
            t,
            husimi: Some(g),
            histogram: h.map(|mut h| {
                h.t = t;
                h
            }),
        });
    }
    Ok(())
}

/// Runs the scenario without touching the filesystem.
pub fn simulate(cfg: &ScenarioConfig) -> Result<ScenarioResult, RunError> {
    let mut r = ScenarioResult::default();
    match cfg.mode {
        Mode::Free | Mode::Kicked | Mode::Lindblad | Mode::EchoScan | Mode::Analytic => {
            let q = quantum_series(cfg, &mut r.meta)?;
            detect(cfg, "quantum", &q.series, &mut r.echoes)?;
            if cfg.analysis.analytic_order.is_some() {
                r.analytic = Some(analytic_overlay(cfg, &q.series)?);
            }
            r.quantum = Some(q);
            if cfg.mode == Mode::EchoScan && cfg.ensemble.is_some() {
                let (c, _) = classical_run(cfg, &cfg.sample_times(), &[], &mut r.meta)?;
                detect(cfg, "classical", &c.series, &mut r.echoes)?;
                r.classical = Some(c);
            }
        }
        Mode::Classical => {
            let (c, _) = classical_run(cfg, &cfg.sample_times(), &[], &mut r.meta)?;
            detect(cfg, "classical", &c.series, &mut r.echoes)?;
            r.classical = Some(c);
        }
        Mode::Husimi => husimi_snapshots(cfg, &mut r)?,
        Mode::LambdaScaling => {
            let s = cfg.scaling.as_ref().expect("validated");
            let setup = ScalingSetup {
                alpha0: cfg.alpha0().expect("validated"),
                params: cfg.system_params(),
                tau: s.tau,
                samples: s.samples_per_window,
            };
            let [wq, wc] = setup.windows();
            push_meta(&mut r.meta, "quantum_window", format!("{wq:?}"));
            push_meta(&mut r.meta, "classical_window", format!("{wc:?}"));
            push_meta(&mut r.meta, "dt_free", "exact");
            let res = lambda_scaling(&setup, &s.lambdas).map_err(sim("lambda scaling"))?;
            push_meta(&mut r.meta, "quantum_slope", fmt(res.quantum_slope));
            push_meta(&mut r.meta, "classical_slope", fmt(res.classical_slope));
            r.scaling = Some(res);
        }
    }
    Ok(r)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(cfg: &ScenarioConfig, result: &ScenarioResult, artifact: &str, extra: &[(String, String)]) -> String {
    let mut h = String::new();
    writeln!(h, "# kerr-echo {VERSION}").unwrap();
    writeln!(h, "# artifact: {artifact}").unwrap();
    for (k, v) in result.meta.iter().chain(extra) {
        writeln!(h, "# {k}: {v}").unwrap();
    }
    writeln!(h, "# scenario:").unwrap();
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            writeln!(h, "#").unwrap();
        } else {
            writeln!(h, "#   {line}").unwrap();
        }
    }
    h
}

fn series_rows(s: &TimeSeries, body: &mut String) {
    writeln!(body, "t,q1,q2,norm_or_trace").unwrap();
    for i in 0..s.len() {
        writeln!(
            body,
            "{},{},{},{}",
            fmt(s.times[i]),
            fmt(s.q1[i]),
            fmt(s.q2[i]),
            fmt(s.norm_or_trace[i])
        )
        .unwrap();
    }
}

fn grid_rows(g: &PhaseGrid, body: &mut String) {
    writeln!(body, "q,p,value").unwrap();
    for (q, p, v) in g.cells() {
        writeln!(body, "{},{},{}", fmt(q), fmt(p), fmt(v)).unwrap();
    }
}

fn echo_rows(r: &EchoReport, body: &mut String) {
    writeln!(body, "time,predicted_time,amplitude,kind").unwrap();
    for e in &r.events {
        let pred = e.predicted_time.map_or_else(|| "nan".to_string(), fmt);
        writeln!(body, "{},{},{},{}", fmt(e.time), pred, fmt(e.amplitude), e.kind).unwrap();
    }
}

fn obs_name(o: Observable) -> &'static str {
    match o {
        Observable::Q1 => "q1",
        Observable::Q2 => "q2",
    }
}

/// Serialises a result into `(file name suffix, contents)` pairs.
pub fn render(cfg: &ScenarioConfig, result: &ScenarioResult) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut emit = |suffix: String, artifact: &str, extra: Vec<(String, String)>, body: String| {
        files.push((suffix, header(cfg, result, artifact, &extra) + &body));
    };
    if let Some(q) = &result.quantum {
        let mut extra = Vec::new();
        if let Some(d) = &q.lindblad {
            extra.push(("max_trace_drift".into(), fmt(d.max_trace_drift)));
            extra.push(("max_hermiticity_drift".into(), fmt(d.max_hermiticity_drift)));
            if let Some(ev) = d.min_eigenvalue {
                extra.push(("min_eigenvalue".into(), fmt(ev)));
            }
        }
        let mut body = String::new();
        series_rows(&q.series, &mut body);
        emit("series.csv".into(), "quantum time series", extra, body);
    }
    if let Some(c) = &result.classical {
        let mut body = String::new();
        writeln!(body, "t,q1,q2,norm_or_trace,q1_stderr,q2_stderr").unwrap();
        let s = &c.series;
        let (e1, e2) = (s.q1_stderr.as_ref().unwrap(), s.q2_stderr.as_ref().unwrap());
        for i in 0..s.len() {
            writeln!(
                body,
                "{},{},{},{},{},{}",
                fmt(s.times[i]),
                fmt(s.q1[i]),
                fmt(s.q2[i]),
                fmt(s.norm_or_trace[i]),
                fmt(e1[i]),
                fmt(e2[i])
            )
            .unwrap();
        }
        emit(
            "classical.csv".into(),
            "classical ensemble time series",
            Vec::new(),
            body,
        );
    }
    for e in &result.echoes {
        let mut body = String::new();
        echo_rows(&e.report, &mut body);
        let extra = vec![
            ("kick_time".into(), e.report.tau.map_or_else(|| "none".into(), fmt)),
            ("collapse_time".into(), fmt(e.report.collapse_time)),
        ];
        let obs = obs_name(e.report.observable);
        let suffix = match e.source {
            "quantum" => format!("echoes_{obs}.csv"),
            other => format!("{other}_echoes_{obs}.csv"),
        };
        emit(suffix, &format!("{} echo report ({obs})", e.source), extra, body);
    }
    for (k, s) in result.snapshots.iter().enumerate() {
        let extra = vec![("snapshot_time".to_string(), fmt(s.t))];
        if let Some(g) = &s.husimi {
            let mut body = String::new();
            grid_rows(g, &mut body);
            emit(format!("husimi_{k:02}.csv"), "Husimi Q grid", extra.clone(), body);
        }
        if let Some(g) = &s.histogram {
            let mut body = String::new();
            grid_rows(g, &mut body);
            emit(
                format!("histogram_{k:02}.csv"),
                "classical phase-space density",
                extra,
                body,
            );
        }
    }
    if !result.contrast.is_empty() {
        let mut body = String::from("t,source,contrast\n");
        for c in &result.contrast {
            writeln!(body, "{},{},{}", fmt(c.t), c.source, fmt(c.contrast)).unwrap();
        }
        emit("contrast.csv".into(), "angular contrast", Vec::new(), body);
    }
    if let (Some(a), Some(q)) = (&result.analytic, &result.quantum) {
        let mut body = String::from("t,analytic,numeric,difference\n");
        for (i, &t) in q.series.times.iter().enumerate() {
            let (x, y) = (a.values[i], q.series.q1[i]);
            writeln!(body, "{},{},{},{}", fmt(t), fmt(x), fmt(y), fmt(x - y)).unwrap();
        }
        let extra = vec![
            ("order".into(), format!("{:?}", a.order).to_lowercase()),
            ("linf".into(), fmt(a.linf)),
            ("max_abs_numeric".into(), fmt(a.max_abs)),
        ];
        emit("analytic.csv".into(), "analytic vs numerical <q>", extra, body);
    }
    if let Some(s) = &result.scaling {
        let mut body = String::from("lambda,quantum_amplitude,classical_amplitude\n");
        for p in &s.points {
            writeln!(body, "{},{},{}", fmt(p.lambda), fmt(p.quantum), fmt(p.classical)).unwrap();
        }
        emit(
            "scaling.csv".into(),
            "echo amplitude vs kick strength",
            Vec::new(),
            body,
        );
    }
    files
}

/// Path of an output file: `<prefix>_<suffix>`.
pub fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let name = prefix
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    prefix.with_file_name(format!("{name}_{suffix}"))
}

/// Runs the scenario and writes every artifact under `prefix`.
pub fn run_scenario(cfg: &ScenarioConfig, prefix: &Path) -> Result<Vec<PathBuf>, RunError> {
    let result = simulate(cfg)?;
    write_outputs(cfg, &result, prefix)
}

pub fn write_outputs(cfg: &ScenarioConfig, result: &ScenarioResult, prefix: &Path) -> Result<Vec<PathBuf>, RunError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut written = Vec::new();
    for (suffix, contents) in render(cfg, result) {
        let path = output_path(prefix, &suffix);
        std::fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
