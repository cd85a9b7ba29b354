//! Post-processing of simulated states and time series.

use std::collections::VecDeque;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::classical::{edges, Ensemble, PhaseGrid};
use crate::dynamics::TimeSeries;
use crate::fock::StateVector;
use crate::open_system::DensityMatrix;
use crate::{Error, Result, T_REV};

// ---------------------------------------------------------------------------
// Husimi Q-distribution

/// Minimum captured probability for a Husimi grid.
pub const HUSIMI_COVERAGE: f64 = 0.999;

pub enum QuantumState<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a StateVector> for QuantumState<'a> {
    fn from(s: &'a StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for QuantumState<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        QuantumState::Mixed(s)
    }
}

/// Square grid centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
    pub resolution: usize,
}

/// Grid wide enough for a state of amplitude up to `alpha_eff` with thermal
/// occupation `nbar`, fine enough that the cell sum of a unit-width Gaussian
/// is exact to well below the coverage tolerance.
pub fn recommended_grid(alpha_eff: f64, nbar: f64) -> GridSpec {
    let half = SQRT_2 * alpha_eff.abs() + 4.5 * (1.0 + nbar).sqrt();
    let resolution = ((2.0 * half / 0.15).ceil() as usize).max(201);
    GridSpec {
        q_range: (-half, half),
        p_range: (-half, half),
        resolution,
    }
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!` for `n = 0..dim`, by upward recurrence.
fn coherent_vector(alpha: C64, dim: usize, sqrt_n: &[f64], out: &mut [C64]) {
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        out[n] = c;
        c = c * alpha / sqrt_n[n + 1];
    }
}

fn is_diagonal(s: &DensityMatrix) -> bool {
    let d = s.dim();
    (0..d).all(|m| (0..d).all(|n| m == n || s.get(m, n) == C64::default()))
}

/// `Q(q, p) = ⟨α|ρ|α⟩/π` at cell centres, `α = (q + ip)/√2`.
///
/// Returns [`Error::CoverageDeficit`] if `Σ Q Δq Δp / 2 < 0.999`.
pub fn husimi_q<'a>(
    state: impl Into<QuantumState<'a>>,
    q_range: (f64, f64),
    p_range: (f64, f64),
    resolution: usize,
) -> Result<PhaseGrid> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 grid points, got {resolution}"
        )));
    }
    let state = state.into();
    let dim = match &state {
        QuantumState::Pure(s) => s.dim(),
        QuantumState::Mixed(s) => s.dim(),
    };
    let diag = match &state {
        QuantumState::Mixed(s) if is_diagonal(s) => Some(s.populations()),
        _ => None,
    };
    let q_edges = edges(q_range, resolution);
    let p_edges = edges(p_range, resolution);
    let qc: Vec<f64> = q_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let pc: Vec<f64> = p_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let sqrt_n: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();

    let mut values = vec![0.0; resolution * resolution];
    values.par_chunks_mut(resolution).enumerate().for_each(|(iq, row)| {
        let mut c = vec![C64::default(); dim];
        let mut tmp = vec![C64::default(); dim];
        for (ip, v) in row.iter_mut().enumerate() {
            let alpha = C64::new(qc[iq], pc[ip]) / SQRT_2;
            coherent_vector(alpha, dim, &sqrt_n, &mut c);
            let overlap_sq = match (&state, &diag) {
                (QuantumState::Pure(s), _) => {
                    let amp: C64 = c.iter().zip(s.amps()).map(|(a, b)| a.conj() * b).sum();
                    amp.norm_sqr()
                }
                (QuantumState::Mixed(_), Some(p)) => c.iter().zip(p).map(|(a, pn)| a.norm_sqr() * pn).sum(),
                (QuantumState::Mixed(s), None) => {
                    let el = s.elements();
                    for m in 0..dim {
                        let row = &el[m * dim..(m + 1) * dim];
                        tmp[m] = row.iter().zip(&c).map(|(r, cn)| r * cn).sum();
                    }
                    c.iter().zip(&tmp).map(|(a, b)| a.conj() * b).sum::<C64>().re
                }
            };
            *v = overlap_sq / PI;
        }
    });
    let grid = PhaseGrid {
        q_edges,
        p_edges,
        values,
        measure: 0.5,
        t: f64::NAN,
    };
    let integral = grid.integral();
    if integral < HUSIMI_COVERAGE {
        return Err(Error::CoverageDeficit { integral });
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Angular bunching metric

/// Contrast `(max − min)/(max + min)` of the angular density inside the
/// annulus `|r − r0| ≤ half_width`, using `bins` equal angular sectors.
/// Each sector's mass is divided by its annulus area so that the grid
/// geometry does not bias the result.
pub fn angular_contrast(grid: &PhaseGrid, r0: f64, half_width: f64, bins: usize) -> f64 {
    let mut mass = vec![0.0; bins];
    let mut area = vec![0.0; bins];
    let cell = grid.dq() * grid.dp();
    for (q, p, v) in grid.cells() {
        let r = q.hypot(p);
        if (r - r0).abs() > half_width {
            continue;
        }
        let b = sector(q, p, bins);
        mass[b] += v * cell;
        area[b] += cell;
    }
    contrast(&mass, &area)
}

/// Same metric evaluated directly on particle coordinates.
pub fn angular_contrast_particles(ens: &Ensemble, r0: f64, half_width: f64, bins: usize) -> f64 {
    let mut mass = vec![0.0; bins];
    for (&q, &p) in ens.q.iter().zip(&ens.p) {
        if (q.hypot(p) - r0).abs() <= half_width {
            mass[sector(q, p, bins)] += 1.0;
        }
    }
    contrast(&mass, &vec![1.0; bins])
}

fn sector(q: f64, p: f64, bins: usize) -> usize {
    let phi = p.atan2(q).rem_euclid(2.0 * PI);
    ((phi / (2.0 * PI) * bins as f64) as usize).min(bins - 1)
}

fn contrast(mass: &[f64], area: &[f64]) -> f64 {
    let dens: Vec<f64> = mass
        .iter()
        .zip(area)
        .filter(|(_, &a)| a > 0.0)
        .map(|(m, a)| m / a)
        .collect();
    let max = dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = dens.iter().copied().fold(f64::INFINITY, f64::min);
    if dens.is_empty() || max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

// ---------------------------------------------------------------------------
// Echo detection

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `⟨q̂⟩`
    Q1,
    /// `⟨q̂²⟩`
    Q2,
}

impl Observable {
    pub fn values<'a>(&self, series: &'a TimeSeries) -> &'a [f64] {
        match self {
            Observable::Q1 => &series.q1,
            Observable::Q2 => &series.q2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoKind {
    KickResponse,
    Classical {
        order: u32,
    },
    Quantum {
        order: u32,
    },
    Revival,
    /// Echo at a half-integer multiple of the kick delay; `num` is negative
    /// for the quantum (before-revival) family.
    Fractional {
        num: i32,
        den: u32,
    },
    Unclassified,
}

impl fmt::Display for EchoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EchoKind::KickResponse => write!(f, "kick_response"),
            EchoKind::Classical { order } => write!(f, "classical_echo({order})"),
            EchoKind::Quantum { order } => write!(f, "quantum_echo({order})"),
            EchoKind::Revival => write!(f, "revival"),
            EchoKind::Fractional { num, den } => write!(f, "fractional({num}/{den})"),
            EchoKind::Unclassified => write!(f, "unclassified"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoEvent {
    pub time: f64,
    pub amplitude: f64,
    pub kind: EchoKind,
    pub predicted_time: Option<f64>,
    /// Topographic prominence of the envelope peak.
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoReport {
    pub events: Vec<EchoEvent>,
    pub tau: Option<f64>,
    pub t_rev: f64,
    pub collapse_time: f64,
    pub observable: Observable,
}

impl EchoReport {
    pub fn of_kind(&self, kind: EchoKind) -> impl Iterator<Item = &EchoEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Event nearest to `t` within `tol`.
    pub fn near(&self, t: f64, tol: f64) -> Option<&EchoEvent> {
        self.events
            .iter()
            .filter(|e| (e.time - t).abs() <= tol)
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Minimum envelope prominence as a fraction of the envelope maximum.
    pub prominence_fraction: f64,
    /// Envelope window in collapse times.
    pub envelope_window: f64,
    /// Running-median baseline window in time units.
    pub baseline_window: f64,
    /// Lower bound of the matching window; the effective window is
    /// `max(match_window, t_c)`.
    pub match_window: f64,
    /// Highest echo order considered when building candidate times.
    pub max_order: u32,
    pub min_points_per_tc: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            prominence_fraction: 0.02,
            envelope_window: 2.0,
            baseline_window: T_REV / 4.0,
            match_window: 0.03,
            max_order: 3,
            min_points_per_tc: 20.0,
        }
    }
}

fn odd_window(span: f64, dt: f64) -> usize {
    let n = (span / dt).round() as usize;
    (if n % 2 == 1 { n } else { n + 1 }).max(3)
}

/// Running median over `2h+1` samples; the window is clipped at the ends.
pub fn running_median(x: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    let n = x.len();
    let mut sorted: Vec<f64> = Vec::with_capacity(window + 1);
    let insert = |s: &mut Vec<f64>, v: f64| {
        let i = s.partition_point(|&y| y < v);
        s.insert(i, v);
    };
    let remove = |s: &mut Vec<f64>, v: f64| {
        let i = s.partition_point(|&y| y < v);
        s.remove(i);
    };
    for &v in x.iter().take(h.min(n)) {
        insert(&mut sorted, v);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i + h < n {
            insert(&mut sorted, x[i + h]);
        }
        if i > h {
            remove(&mut sorted, x[i - h - 1]);
        }
        let k = sorted.len();
        out.push(if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        });
    }
    out
}

/// Running maximum over `2h+1` samples, clipped at the ends.
pub fn running_max(x: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    let n = x.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    for i in 0..n {
        let hi = (i + h).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&j| x[j] <= x[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&j| j + h < i) {
            dq.pop_front();
        }
        out.push(x[*dq.front().expect("window is never empty")]);
    }
    out
}

/// Local maxima of `e` (plateaus count once, at their middle) with their
/// topographic prominence.
fn prominent_peaks(e: &[f64]) -> Vec<(usize, f64, f64)> {
    let n = e.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && e[j + 1] == e[i] {
            j += 1;
        }
        let left = if i > 0 { e[i - 1] } else { f64::NEG_INFINITY };
        let right = if j + 1 < n { e[j + 1] } else { f64::NEG_INFINITY };
        if e[i] > left && e[i] > right {
            peaks.push(((i + j) / 2, e[i]));
        }
        i = j + 1;
    }
    peaks
        .into_iter()
        .map(|(k, h)| {
            let (mut ii, mut lmin) = (k, h);
            while ii > 0 && e[ii - 1] <= h {
                ii -= 1;
                lmin = lmin.min(e[ii]);
            }
            let (mut jj, mut rmin) = (k, h);
            while jj + 1 < n && e[jj + 1] <= h {
                jj += 1;
                rmin = rmin.min(e[jj]);
            }
            let prom = match (ii == 0, jj == n - 1) {
                (true, true) => h,
                (true, false) => h - rmin,
                (false, true) => h - lmin,
                (false, false) => h - lmin.max(rmin),
            };
            (k, h, prom)
        })
        .collect()
}

/// Least-squares quadratic `c0 + c1 x + c2 x²`.
fn fit_quadratic(x: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let mut s = [0.0; 5];
    let mut r = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                r[k] += p * yi;
            }
            p *= xi;
        }
    }
    let m = nalgebra::Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    let sol = m.lu().solve(&nalgebra::Vector3::new(r[0], r[1], r[2]))?;
    Some([sol[0], sol[1], sol[2]])
}

/// Peak time refined from the crests of `|r|` around sample `k`.
fn refine_peak(t: &[f64], a: &[f64], k: usize, half: f64) -> (f64, f64) {
    let n = t.len();
    let lo = t.partition_point(|&x| x < t[k] - half);
    let hi = t.partition_point(|&x| x <= t[k] + half);
    let idx = lo..hi;
    let (arg, amp) = idx
        .clone()
        .map(|i| (i, a[i]))
        .fold((k, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    let crest_time = t[arg];
    if lo == 0 || hi == n {
        return (crest_time, amp);
    }
    let crests: Vec<usize> = (lo + 1..hi - 1)
        .filter(|&i| a[i] >= a[i - 1] && a[i] > a[i + 1])
        .collect();
    let top = crests.iter().map(|&i| a[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = crests
        .into_iter()
        .filter(|&i| a[i] >= 0.2 * top && a[i] > 0.0)
        .collect();
    if keep.len() >= 3 {
        let x: Vec<f64> = keep.iter().map(|&i| t[i] - t[k]).collect();
        let y: Vec<f64> = keep.iter().map(|&i| a[i].ln()).collect();
        if let Some([_, c1, c2]) = fit_quadratic(&x, &y) {
            if c2 < 0.0 {
                let cand = t[k] - c1 / (2.0 * c2);
                if (cand - t[k]).abs() <= half {
                    return (cand, amp);
                }
            }
        }
    }
    (crest_time, amp)
}

/// Candidate echo times inside `[t_lo, t_hi]`.
///
/// The kick response grows linearly from the kick and dephases like a
/// Gaussian of width `tc`, so its envelope peaks at `τ + tc` (and at the
/// same offset after each recurrence).
pub fn candidate_times(
    tau: Option<f64>,
    observable: Observable,
    tc: f64,
    t_lo: f64,
    t_hi: f64,
    max_order: u32,
) -> Vec<(f64, EchoKind)> {
    let (period, unit_div) = match observable {
        Observable::Q1 => (T_REV, 1.0),
        Observable::Q2 => (T_REV / 2.0, 2.0),
    };
    let k_max = (t_hi / period).floor().max(0.0) as i64 + 1;
    let mut out = Vec::new();
    for k in 0..=k_max {
        let anchor = k as f64 * period;
        out.push((anchor, EchoKind::Revival));
        let Some(tau) = tau else { continue };
        // offsets m·u = r·τ, with r stepping by 1/unit_div
        let u = tau / unit_div;
        let steps = unit_div as u32;
        for m in 1..=(max_order + 1) * steps {
            let r = m as f64 / unit_div;
            let t = anchor + m as f64 * u;
            if t < tau - 1e-12 {
                continue;
            }
            let (kind, shift) = if m == steps {
                (EchoKind::KickResponse, tc)
            } else if m % steps == 0 {
                (EchoKind::Classical { order: m / steps - 1 }, 0.0)
            } else {
                (
                    EchoKind::Fractional {
                        num: (2.0 * r) as i32,
                        den: 2,
                    },
                    0.0,
                )
            };
            out.push((t + shift, kind));
        }
        if k >= 1 {
            for m in 1..=max_order * steps {
                let t = anchor - m as f64 * u;
                if t <= tau + 1e-12 {
                    continue;
                }
                let kind = if m % steps == 0 {
                    EchoKind::Quantum { order: m / steps }
                } else {
                    EchoKind::Fractional {
                        num: -(2.0 * m as f64 / unit_div) as i32,
                        den: 2,
                    }
                };
                out.push((t, kind));
            }
        }
    }
    let margin = 0.1;
    out.retain(|(t, _)| *t >= t_lo - margin && *t <= t_hi + margin);
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Finds echo envelopes in a sampled observable and classifies them against
/// the revival/echo time lattice. `tau = None` describes an unkicked series.
pub fn detect_echoes(
    series: &TimeSeries,
    tau: Option<f64>,
    alpha0: f64,
    observable: Observable,
    cfg: &DetectorConfig,
) -> Result<EchoReport> {
    series.validate()?;
    if let Some(tau) = tau {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("kick time must be ≥ 0, got {tau}")));
        }
    }
    if !(alpha0.is_finite() && alpha0 != 0.0) {
        return Err(Error::InvalidParameter(
            "echo detection needs a nonzero amplitude".into(),
        ));
    }
    let t = &series.times;
    let x = observable.values(series);
    let n = t.len();
    let collapse_time = 1.0 / (2.0 * alpha0.abs());
    // ⟨q̂²⟩ oscillates at twice the carrier and dephases twice as fast
    let tc = match observable {
        Observable::Q1 => collapse_time,
        Observable::Q2 => collapse_time / 2.0,
    };
    if n < 3 {
        return Err(Error::Undersampled {
            points_per_tc: 0.0,
            required: cfg.min_points_per_tc,
        });
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let per_tc = tc / dt;
    if per_tc < cfg.min_points_per_tc {
        return Err(Error::Undersampled {
            points_per_tc: per_tc,
            required: cfg.min_points_per_tc,
        });
    }

    let base = running_median(x, odd_window(cfg.baseline_window, dt));
    let resid: Vec<f64> = x.iter().zip(&base).map(|(v, b)| (v - b).abs()).collect();
    let env = running_max(&resid, odd_window(cfg.envelope_window * tc, dt));
    let env_max = env.iter().copied().fold(0.0, f64::max);
    let threshold = cfg.prominence_fraction * env_max;
    let window = cfg.match_window.max(tc);
    let candidates = candidate_times(tau, observable, tc, t[0], t[n - 1], cfg.max_order);

    let mut events = Vec::new();
    for (k, _, prom) in prominent_peaks(&env) {
        if prom < threshold || prom <= 0.0 {
            continue;
        }
        let (time, amplitude) = refine_peak(t, &resid, k, 1.5 * tc);
        let best = candidates
            .iter()
            .filter(|(c, _)| (c - time).abs() <= window)
            .min_by(|a, b| (a.0 - time).abs().total_cmp(&(b.0 - time).abs()));
        let (kind, predicted_time) = match best {
            Some(&(c, kind)) => (kind, Some(c)),
            None => (EchoKind::Unclassified, None),
        };
        events.push(EchoEvent {
            time,
            amplitude,
            kind,
            predicted_time,
            prominence: prom,
        });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(EchoReport {
        events,
        tau,
        t_rev: T_REV,
        collapse_time,
        observable,
    })
}

// ---------------------------------------------------------------------------
// Series comparison

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRatio {
    pub window: (f64, f64),
    /// `max|a| / max|b|` inside the window.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub linf: f64,
    pub rms: f64,
    /// Largest `|a − b|` in units of the pooled standard error, when either
    /// series carries standard errors.
    pub max_z: Option<f64>,
    pub windows: Vec<WindowRatio>,
    pub n_points: usize,
}

/// Linear interpolation of `(xs, ys)` at `x` (clamped to the ends).
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

/// Compares `⟨q̂⟩` of two series on the sample times of `a` that lie inside
/// the time range of `b` (values of `b` are linearly interpolated).
pub fn compare_series(a: &TimeSeries, b: &TimeSeries, windows: &[(f64, f64)]) -> Result<Comparison> {
    compare_observable(a, b, Observable::Q1, windows)
}

pub fn compare_observable(
    a: &TimeSeries,
    b: &TimeSeries,
    observable: Observable,
    windows: &[(f64, f64)],
) -> Result<Comparison> {
    a.validate()?;
    b.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::DisjointSeries);
    }
    let (lo, hi) = (b.times[0], b.times[b.len() - 1]);
    let eps = 1e-12 * (1.0 + hi.abs());
    let (av, bv) = (observable.values(a), observable.values(b));
    let (ase, bse) = match observable {
        Observable::Q1 => (a.q1_stderr.as_deref(), b.q1_stderr.as_deref()),
        Observable::Q2 => (a.q2_stderr.as_deref(), b.q2_stderr.as_deref()),
    };
    let mut linf = 0.0f64;
    let mut sq = 0.0;
    let mut max_z: Option<f64> = None;
    let mut count = 0;
    let mut bi = Vec::new();
    for (i, &t) in a.times.iter().enumerate() {
        if t < lo - eps || t > hi + eps {
            continue;
        }
        let y = interpolate(&b.times, bv, t);
        bi.push((t, av[i], y));
        let d = (av[i] - y).abs();
        linf = linf.max(d);
        sq += d * d;
        count += 1;
        if ase.is_some() || bse.is_some() {
            let sa = ase.map_or(0.0, |s| s[i]);
            let sb = bse.map_or(0.0, |s| interpolate(&b.times, s, t));
            let pooled = (sa * sa + sb * sb).sqrt();
            let z = if pooled > 0.0 {
                d / pooled
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_z = Some(max_z.map_or(z, |m| m.max(z)));
        }
    }
    if count == 0 {
        return Err(Error::DisjointSeries);
    }
    let windows = windows
        .iter()
        .map(|&(w0, w1)| {
            let (ma, mb) = bi
                .iter()
                .filter(|(t, _, _)| *t >= w0 && *t <= w1)
                .fold((0.0f64, 0.0f64), |(ma, mb), (_, x, y)| {
                    (ma.max(x.abs()), mb.max(y.abs()))
                });
            let ratio = if ma == mb { 1.0 } else { ma / mb };
            WindowRatio {
                window: (w0, w1),
                ratio,
            }
        })
        .collect();
    Ok(Comparison {
        linf,
        rms: (sq / count as f64).sqrt(),
        max_z,
        windows,
        n_points: count,
    })
}

// ---------------------------------------------------------------------------
// Collapse time

/// Gaussian time constant of the `|⟨q̂⟩|` envelope: the local maxima of `|q1|`
/// in `[t0, t1]` (parabolically refined) are fitted to
/// `ln|q| = c − t²/(2 t_c²)`.
pub fn fit_collapse_time(series: &TimeSeries, t0: f64, t1: f64) -> Result<f64> {
    series.validate()?;
    let t = &series.times;
    let a: Vec<f64> = series.q1.iter().map(|v| v.abs()).collect();
    let n = t.len();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        if t[i] < t0 || t[i] > t1 {
            continue;
        }
        let left = if i > 0 { a[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { a[i + 1] } else { f64::NEG_INFINITY };
        if a[i] >= left && a[i] > right && a[i] > 0.0 {
            if i > 0 && i + 1 < n {
                // vertex of the parabola through the three samples
                let (ym, y0, yp) = (a[i - 1], a[i], a[i + 1]);
                let h = t[i + 1] - t[i];
                let den = ym - 2.0 * y0 + yp;
                let off = if den < 0.0 { 0.5 * (ym - yp) / den } else { 0.0 };
                let peak = y0 - 0.25 * (ym - yp) * off;
                pts.push((t[i] + off * h, peak));
            } else {
                pts.push((t[i], a[i]));
            }
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two envelope maxima in [{t0}, {t1}], found {}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0 * p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    if slope >= 0.0 {
        return Err(Error::InvalidParameter("envelope does not decay".into()));
    }
    Ok((-1.0 / (2.0 * slope)).sqrt())
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
