//! Classical Kerr oscillators sampled from the coherent-state distribution.
//!
//! Each particle follows
//!
//! ```text
//! q̇ =  (Δ + q² + p²) p
//! ṗ = −(Δ + q² + p²) q − √2 E₀ f(t)
//! ```
//!
//! and an instantaneous kick of strength `λ` shifts every momentum by `√2 λ`.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{check_sample_times, Excitation, PulseSpec, SystemParams, TimeSeries};
use crate::{Error, Result};

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-4;

/// Particles per work unit; small enough to stay in L1 while stepping.
const CHUNK: usize = 1024;

/// Phase-space coordinates of `N` independent particles at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub seed: u64,
    pub t: f64,
}

impl Ensemble {
    pub fn from_points(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::InvalidParameter(
                "ensemble needs equal, nonzero numbers of q and p values".into(),
            ));
        }
        Ok(Self { q, p, seed: 0, t })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Per-particle drive-free energy `Δr²/2 + r⁴/4`, `r² = q² + p²`.
    pub fn energies(&self, params: &SystemParams) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.p)
            .map(|(q, p)| energy(*q, *p, params.delta))
            .collect()
    }

    /// Mean and standard error of `q` and `q²`.
    pub fn moments(&self) -> Moments {
        let q2: Vec<f64> = self.q.iter().map(|q| q * q).collect();
        let (m1, s1) = mean_and_stderr(&self.q);
        let (m2, s2) = mean_and_stderr(&q2);
        Moments {
            q1: m1,
            q1_stderr: s1,
            q2: m2,
            q2_stderr: s2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub q1: f64,
    pub q1_stderr: f64,
    pub q2: f64,
    pub q2_stderr: f64,
}

fn energy(q: f64, p: f64, delta: f64) -> f64 {
    let r2 = q * q + p * p;
    0.5 * delta * r2 + 0.25 * r2 * r2
}

/// Sum with a fixed pairwise reduction tree, independent of thread count.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if x.len() <= BLOCK {
        x.iter().sum()
    } else {
        let mid = x.len() / 2;
        pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
    }
}

/// Sample mean and its standard error (zero for a single sample).
pub fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Draws `N` particles from a Gaussian centred at `(√2 α₀, 0)` with standard
/// deviation `1/√2` in both coordinates. The generator is ChaCha8 seeded with
/// `seed`; particle `i` consumes normals `2i` (q) and `2i + 1` (p).
pub fn sample_initial_ensemble(alpha0: f64, n_particles: usize, seed: u64) -> Result<Ensemble> {
    if n_particles == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one particle".into()));
    }
    if !alpha0.is_finite() {
        return Err(Error::InvalidParameter("alpha0 must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    let q0 = SQRT_2 * alpha0;
    let mut q = Vec::with_capacity(n_particles);
    let mut p = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        q.push(q0 + sd * a);
        p.push(sd * b);
    }
    Ok(Ensemble { q, p, seed, t: 0.0 })
}

#[inline(always)]
fn rk4_step(q: f64, p: f64, h: f64, delta: f64, f0: f64, fm: f64, f1: f64) -> (f64, f64) {
    #[inline(always)]
    fn rhs(q: f64, p: f64, delta: f64, force: f64) -> (f64, f64) {
        let w = delta + q * q + p * p;
        (w * p, -w * q - force)
    }
    let (k1q, k1p) = rhs(q, p, delta, f0);
    let (k2q, k2p) = rhs(q + 0.5 * h * k1q, p + 0.5 * h * k1p, delta, fm);
    let (k3q, k3p) = rhs(q + 0.5 * h * k2q, p + 0.5 * h * k2p, delta, fm);
    let (k4q, k4p) = rhs(q + h * k3q, p + h * k3p, delta, f1);
    let w = h / 6.0;
    (
        q + w * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        p + w * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// `√2 E₀ f(t)` summed over all pulses.
fn force(pulses: &[PulseSpec], t: f64) -> f64 {
    SQRT_2 * pulses.iter().map(|p| p.amplitude(t)).sum::<f64>()
}

/// Integrates every particle from `t0` to `t1` in equal steps no larger than `dt`.
fn integrate_segment(ens: &mut Ensemble, pulses: &[PulseSpec], delta: f64, t0: f64, t1: f64, dt: f64) {
    if t1 <= t0 {
        return;
    }
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    // drive values shared by all particles: (start, midpoint, end) per step
    let drive: Vec<[f64; 3]> = (0..steps)
        .map(|k| {
            let t = t0 + k as f64 * h;
            [force(pulses, t), force(pulses, t + 0.5 * h), force(pulses, t + h)]
        })
        .collect();
    let undriven = drive.iter().all(|d| d.iter().all(|&f| f == 0.0));

    ens.q
        .par_chunks_mut(CHUNK)
        .zip(ens.p.par_chunks_mut(CHUNK))
        .for_each(|(qs, ps)| {
            if undriven {
                for _ in 0..steps {
                    for (q, p) in qs.iter_mut().zip(ps.iter_mut()) {
                        (*q, *p) = rk4_step(*q, *p, h, delta, 0.0, 0.0, 0.0);
                    }
                }
            } else {
                for &[f0, fm, f1] in &drive {
                    for (q, p) in qs.iter_mut().zip(ps.iter_mut()) {
                        (*q, *p) = rk4_step(*q, *p, h, delta, f0, fm, f1);
                    }
                }
            }
        });
    ens.t = t1;
}

/// Output of [`evolve_ensemble`].
#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub series: TimeSeries,
    pub snapshots: Vec<Ensemble>,
    pub final_state: Ensemble,
}

/// Integrates the ensemble through the protocol with a fourth-order
/// Runge–Kutta step, recording `⟨q⟩` and `⟨q²⟩` (with standard errors) at the
/// sample times and full copies of the ensemble at the snapshot times.
pub fn evolve_ensemble(
    ens: &Ensemble,
    excitations: &[Excitation],
    params: &SystemParams,
    sample_times: &[f64],
    snapshot_times: &[f64],
    dt: f64,
) -> Result<ClassicalRun> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    check_sample_times(sample_times, ens.t)?;
    check_sample_times(snapshot_times, ens.t)?;
    crate::dynamics::schedule(excitations)?;

    let pulses: Vec<PulseSpec> = excitations
        .iter()
        .filter_map(|e| match e {
            Excitation::Pulse(p) => Some(*p),
            Excitation::Kick(_) => None,
        })
        .collect();
    let mut kicks: Vec<(f64, f64)> = excitations
        .iter()
        .filter_map(|e| match e {
            Excitation::Kick(k) if k.center >= ens.t => Some((k.center, k.lambda)),
            _ => None,
        })
        .collect();
    kicks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut stops: Vec<f64> = sample_times
        .iter()
        .chain(snapshot_times)
        .copied()
        .chain(kicks.iter().map(|k| k.0))
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut cur = ens.clone();
    let mut series = TimeSeries::with_capacity(sample_times.len());
    let mut se1 = Vec::with_capacity(sample_times.len());
    let mut se2 = Vec::with_capacity(sample_times.len());
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let (mut next_kick, mut next_sample, mut next_snap) = (0, 0, 0);

    for &stop in &stops {
        let from = cur.t;
        integrate_segment(&mut cur, &pulses, params.delta, from, stop, dt);
        cur.t = stop;
        if cur.q.iter().chain(&cur.p).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t: stop });
        }
        while next_kick < kicks.len() && kicks[next_kick].0 == stop {
            let dp = SQRT_2 * kicks[next_kick].1;
            cur.p.iter_mut().for_each(|p| *p += dp);
            next_kick += 1;
        }
        if next_sample < sample_times.len() && sample_times[next_sample] == stop {
            let m = cur.moments();
            series.push(stop, m.q1, m.q2, 1.0);
            se1.push(m.q1_stderr);
            se2.push(m.q2_stderr);
            next_sample += 1;
        }
        if next_snap < snapshot_times.len() && snapshot_times[next_snap] == stop {
            snapshots.push(cur.clone());
            next_snap += 1;
        }
    }
    series.q1_stderr = Some(se1);
    series.q2_stderr = Some(se2);
    Ok(ClassicalRun {
        series,
        snapshots,
        final_state: cur,
    })
}

/// Values on a regular phase-space grid. `values` is row-major with the `q`
/// index outer. `measure` converts `Σ values·Δq·Δp` into total probability:
/// 1 for a density in `dq dp`, 1/2 for a Q-function in `d²α = dq dp/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub q_edges: Vec<f64>,
    pub p_edges: Vec<f64>,
    pub values: Vec<f64>,
    pub measure: f64,
    pub t: f64,
}

impl PhaseGrid {
    pub fn nq(&self) -> usize {
        self.q_edges.len() - 1
    }

    pub fn np(&self) -> usize {
        self.p_edges.len() - 1
    }

    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.np() + ip]
    }

    pub fn dq(&self) -> f64 {
        self.q_edges[1] - self.q_edges[0]
    }

    pub fn dp(&self) -> f64 {
        self.p_edges[1] - self.p_edges[0]
    }

    pub fn q_centers(&self) -> Vec<f64> {
        self.q_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn p_centers(&self) -> Vec<f64> {
        self.p_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Total probability captured by the grid.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.dq() * self.dp() * self.measure
    }

    /// Iterator over `(q, p, value)` at cell centres.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let qc = self.q_centers();
        let pc = self.p_centers();
        let np = self.np();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (qc[k / np], pc[k % np], v))
    }
}

pub(crate) fn edges(range: (f64, f64), bins: usize) -> Vec<f64> {
    let (lo, hi) = range;
    let w = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|k| if k == bins { hi } else { lo + w * k as f64 })
        .collect()
}

/// Normalised two-dimensional histogram of the particles inside the ranges.
pub fn phase_space_histogram(
    ens: &Ensemble,
    q_range: (f64, f64),
    p_range: (f64, f64),
    bins: usize,
) -> Result<PhaseGrid> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins, got {bins}")));
    }
    if !(q_range.1 > q_range.0 && p_range.1 > p_range.0) {
        return Err(Error::InvalidParameter("empty histogram range".into()));
    }
    let q_edges = edges(q_range, bins);
    let p_edges = edges(p_range, bins);
    let dq = (q_range.1 - q_range.0) / bins as f64;
    let dp = (p_range.1 - p_range.0) / bins as f64;
    let mut counts = vec![0u64; bins * bins];
    let mut inside = 0u64;
    for (&q, &p) in ens.q.iter().zip(&ens.p) {
        if q < q_range.0 || q >= q_range.1 || p < p_range.0 || p >= p_range.1 {
            continue;
        }
        let iq = (((q - q_range.0) / dq) as usize).min(bins - 1);
        let ip = (((p - p_range.0) / dp) as usize).min(bins - 1);
        counts[iq * bins + ip] += 1;
        inside += 1;
    }
    if inside == 0 {
        return Err(Error::InvalidParameter(
            "no particles inside the histogram range".into(),
        ));
    }
    if (inside as usize) < ens.len() {
        log::debug!(
            "histogram at t = {}: {} of {} particles outside range",
            ens.t,
            ens.len() - inside as usize,
            ens.len()
        );
    }
    let norm = 1.0 / (inside as f64 * dq * dp);
    Ok(PhaseGrid {
        q_edges,
        p_edges,
        values: counts.iter().map(|&c| c as f64 * norm).collect(),
        measure: 1.0,
        t: ens.t,
    })
}
