//! Damped, thermally coupled Kerr oscillator.
//!
//! The reduced density matrix obeys
//!
//! ```text
//! dS/dt = −i[H, S] + γ(n̄+1) D[a] S + γ n̄ D[a†] S,   D[L]S = L S L† − ½{L†L, S}
//! ```
//!
//! with truncated ladder matrices. Integration uses the interaction picture
//! of the diagonal Kerr part, so only the drive and the dissipator are
//! stepped numerically.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{check_sample_times, energy_levels, Excitation, PulseSpec, SystemParams, TimeSeries};
use crate::fock::{StateVector, Truncation};
use crate::{Error, Result};

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const HERMITICITY_DRIFT_LIMIT: f64 = 1e-8;
pub const THERMAL_TAIL_LIMIT: f64 = 1e-10;
pub const DEFAULT_DT_PULSE: f64 = 1e-4;
pub const DEFAULT_DT_FREE: f64 = 5e-4;

/// Density matrix in the truncated Fock basis, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    elements: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_elements(dim: usize, elements: Vec<C64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidTruncation("n_max must be at least 1".into()));
        }
        if elements.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: elements.len(),
            });
        }
        Ok(Self { dim, elements })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &StateVector) -> Self {
        let a = state.amps();
        let dim = a.len();
        let mut elements = Vec::with_capacity(dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                elements.push(a[m] * a[n].conj());
            }
        }
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> usize {
        self.dim - 1
    }

    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.elements[m * self.dim + n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    /// `max |S − S†|`.
    pub fn hermiticity_drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.dim {
            for n in m..self.dim {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    pub fn mean_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// `Tr(a S) = Σ √(n+1) S_{n+1,n}`.
    pub fn expect_a(&self) -> C64 {
        (0..self.dim - 1)
            .map(|n| self.get(n + 1, n) * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// `⟨q̂⟩ = √2 Re Tr(a S)`.
    pub fn expect_q(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.expect_a().re
    }

    /// `⟨q̂²⟩` with truncated ladder matrices, matching the pure-state moment.
    pub fn expect_q2(&self) -> f64 {
        let n_max = self.n_max();
        let a2: C64 = (0..self.dim.saturating_sub(2))
            .map(|n| self.get(n + 2, n) * (((n + 1) * (n + 2)) as f64).sqrt())
            .sum();
        let diag: f64 = (0..self.dim)
            .map(|n| {
                let up = if n < n_max { (n + 1) as f64 } else { 0.0 };
                0.5 * (n as f64 + up) * self.get(n, n).re
            })
            .sum();
        a2.re + diag
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.n_max(),
                right: other.n_max(),
            });
        }
        Ok(self
            .elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Smallest eigenvalue (dense Hermitian eigen-solve, `O(n_max³)`).
    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_fn(self.dim, self.dim, |r, c| {
            // symmetrise so the solver sees an exactly Hermitian matrix
            0.5 * (self.get(r, c) + self.get(c, r).conj())
        });
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Bath coupling: damping `γ` and mean thermal occupation `n̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub gamma: f64,
    pub nbar: f64,
    /// `ħω/k_BT` when the temperature was given that way.
    pub epsilon: Option<f64>,
}

impl BathParams {
    pub fn from_nbar(gamma: f64, nbar: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be ≥ 0, got {gamma}")));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("nbar must be ≥ 0, got {nbar}")));
        }
        Ok(Self {
            gamma,
            nbar,
            epsilon: None,
        })
    }

    /// `n̄ = 1/(e^ε − 1)`.
    pub fn from_epsilon(gamma: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        let mut b = Self::from_nbar(gamma, 1.0 / epsilon.exp_m1())?;
        b.epsilon = Some(epsilon);
        Ok(b)
    }
}

/// Bose–Einstein mass above level `n_max`: `(n̄/(1+n̄))^{n_max+1}`.
pub fn thermal_tail(nbar: f64, n_max: usize) -> f64 {
    if nbar == 0.0 {
        0.0
    } else {
        (nbar / (1.0 + nbar)).powf((n_max + 1) as f64)
    }
}

/// Diagonal state `P_n = n̄ⁿ/(1+n̄)^{n+1}`, renormalised after truncation.
pub fn thermal_state(bath: &BathParams, trunc: &Truncation) -> Result<DensityMatrix> {
    let tail = thermal_tail(bath.nbar, trunc.n_max);
    if tail > THERMAL_TAIL_LIMIT {
        return Err(Error::TruncationTail {
            tail,
            tolerance: THERMAL_TAIL_LIMIT,
            n_max: trunc.n_max,
        });
    }
    let dim = trunc.dim();
    let ratio = bath.nbar / (1.0 + bath.nbar);
    let mut p = Vec::with_capacity(dim);
    let mut cur = 1.0 / (1.0 + bath.nbar);
    for _ in 0..dim {
        p.push(cur);
        cur *= ratio;
    }
    let total: f64 = p.iter().sum();
    log::debug!("thermal state n̄ = {}: discarded tail mass {tail:.3e}", bath.nbar);
    let mut elements = vec![C64::default(); dim * dim];
    for (n, pn) in p.iter().enumerate() {
        elements[n * dim + n] = C64::new(pn / total, 0.0);
    }
    Ok(DensityMatrix { dim, elements })
}

/// Coefficients of the dissipator that depend only on the level indices.
struct Dissipator {
    /// `γ(n̄+1)`: gain of `a S a†`.
    down: f64,
    /// `γ n̄`: gain of `a† S a`.
    up: f64,
    /// Loss rate of `S_mn` is `loss[m] + loss[n]`.
    loss: Vec<f64>,
}

impl Dissipator {
    fn new(bath: &BathParams, dim: usize) -> Self {
        let n_max = dim - 1;
        let (g, nb) = (bath.gamma, bath.nbar);
        let loss = (0..dim)
            .map(|k| {
                let kf = k as f64;
                let aad = if k < n_max { kf + 1.0 } else { 0.0 };
                0.5 * g * nb * (aad + kf) + 0.5 * g * kf
            })
            .collect();
        Self {
            down: g * (nb + 1.0),
            up: g * nb,
            loss,
        }
    }

    fn is_zero(&self) -> bool {
        self.down == 0.0 && self.up == 0.0
    }
}

/// Zero-padded square buffer so neighbour reads never branch.
struct Padded {
    stride: usize,
    data: Vec<C64>,
}

impl Padded {
    fn new(dim: usize) -> Self {
        let stride = dim + 2;
        Self {
            stride,
            data: vec![C64::default(); stride * stride],
        }
    }

    #[inline(always)]
    fn idx(&self, m: usize, n: usize) -> usize {
        (m + 1) * self.stride + n + 1
    }
}

/// Right-hand side of the master equation in the Schrödinger picture at drive
/// amplitude `drive` (Hamiltonian diagonal included).
pub fn lindblad_rhs(s: &DensityMatrix, drive: f64, params: &SystemParams, bath: &BathParams) -> DensityMatrix {
    let dim = s.dim;
    let energies = energy_levels(dim - 1, params);
    let sq: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();
    let diss = Dissipator::new(bath, dim);
    let mut x = Padded::new(dim);
    for m in 0..dim {
        for n in 0..dim {
            let i = x.idx(m, n);
            x.data[i] = s.get(m, n);
        }
    }
    let mut out = vec![C64::default(); dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            let v = rest_element(&x, m, n, drive, &sq, &diss) - C64::new(0.0, energies[m] - energies[n]) * s.get(m, n);
            out[m * dim + n] = v;
        }
    }
    DensityMatrix { dim, elements: out }
}

/// Drive commutator plus dissipator at element `(m, n)`.
#[inline(always)]
fn rest_element(x: &Padded, m: usize, n: usize, drive: f64, sq: &[f64], diss: &Dissipator) -> C64 {
    let st = x.stride;
    let c = x.idx(m, n);
    let d = &x.data;
    let mut v = C64::default();
    if drive != 0.0 {
        // paired so that on the diagonal each bracket is z − z* exactly
        let comm = (d[c + st] * sq[m + 1] - d[c + 1] * sq[n + 1]) + (d[c - st] * sq[m] - d[c - 1] * sq[n]);
        v += C64::new(comm.im * drive, -comm.re * drive);
    }
    if !diss.is_zero() {
        v += d[c + st + 1] * (diss.down * sq[m + 1] * sq[n + 1]) + d[c - st - 1] * (diss.up * sq[m] * sq[n])
            - d[c] * (diss.loss[m] + diss.loss[n]);
    }
    v
}

/// Interaction-picture RK4 for the upper triangle of the density matrix.
struct LindbladStepper {
    dim: usize,
    energies: Vec<f64>,
    sq: Vec<f64>,
    diss: Dissipator,
    x: Padded,
    k: [Vec<C64>; 4],
    tables: Option<(f64, Vec<C64>, Vec<C64>)>,
}

/// Upper-triangle phases `exp(−i(E_m − E_n)s)` flattened row-major over `n ≥ m`.
fn phase_table(energies: &[f64], s: f64) -> Vec<C64> {
    let u: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, -e * s)).collect();
    let dim = u.len();
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for m in 0..dim {
        for n in m..dim {
            out.push(u[m] * u[n].conj());
        }
    }
    out
}

/// Offsets of each row in the packed upper triangle.
fn row_offsets(dim: usize) -> Vec<usize> {
    let mut off = Vec::with_capacity(dim + 1);
    let mut acc = 0;
    for m in 0..dim {
        off.push(acc);
        acc += dim - m;
    }
    off.push(acc);
    off
}

impl LindbladStepper {
    fn new(dim: usize, params: &SystemParams, bath: &BathParams) -> Self {
        let packed = dim * (dim + 1) / 2;
        let zeros = || vec![C64::default(); packed];
        Self {
            dim,
            energies: energy_levels(dim - 1, params),
            sq: (0..=dim).map(|n| (n as f64).sqrt()).collect(),
            diss: Dissipator::new(bath, dim),
            x: Padded::new(dim),
            k: [zeros(), zeros(), zeros(), zeros()],
            tables: None,
        }
    }

    /// Writes `P ∘ (y + c·k)` into the upper triangle of the padded buffer.
    /// Upper-triangle elements only read upper-triangle neighbours, except on
    /// the diagonal, so the only lower entries needed are the sub-diagonal.
    fn load(&mut self, y: &[C64], kprev: Option<(usize, f64)>, phase: Option<&[C64]>) {
        let dim = self.dim;
        let mut i = 0;
        for m in 0..dim {
            let start = self.x.idx(m, m);
            let row = &mut self.x.data[start..start + dim - m];
            for o in row.iter_mut() {
                let mut v = y[i];
                if let Some((j, c)) = kprev {
                    v += self.k[j][i] * c;
                }
                if let Some(p) = phase {
                    v *= p[i];
                }
                *o = v;
                i += 1;
            }
        }
        for m in 0..dim - 1 {
            let v = self.x.data[self.x.idx(m, m + 1)];
            let b = self.x.idx(m + 1, m);
            self.x.data[b] = v.conj();
        }
    }

    /// `k[slot] = P* ∘ L(x)` on the upper triangle.
    fn eval(&mut self, slot: usize, drive: f64, phase: Option<&[C64]>, offsets: &[usize]) {
        let dim = self.dim;
        let x = &self.x;
        let sq = &self.sq;
        let diss = &self.diss;
        let out = &mut self.k[slot];
        let rows: Vec<&mut [C64]> = {
            let mut rest: &mut [C64] = out;
            let mut v = Vec::with_capacity(dim);
            for m in 0..dim {
                let (row, tail) = rest.split_at_mut(dim - m);
                v.push(row);
                rest = tail;
            }
            v
        };
        let st = x.stride;
        let work = |(m, row): (usize, &mut [C64])| {
            let len = row.len();
            let c0 = x.idx(m, m);
            // neighbour rows, each aligned so that index j refers to column m + j
            let up = &x.data[c0 + st..c0 + st + len];
            let down = &x.data[c0 - st..c0 - st + len];
            let left = &x.data[c0 - 1..c0 - 1 + len];
            let right = &x.data[c0 + 1..c0 + 1 + len];
            let diag_up = &x.data[c0 + st + 1..c0 + st + 1 + len];
            let diag_down = &x.data[c0 - st - 1..c0 - st - 1 + len];
            let centre = &x.data[c0..c0 + len];
            let sq_n = &sq[m..m + len + 1];
            let loss_n = &diss.loss[m..m + len];
            let (sm, sm1, lm) = (sq[m], sq[m + 1], diss.loss[m]);
            let phase_row = phase.map(|p| &p[offsets[m]..offsets[m] + len]);
            for j in 0..len {
                let mut v = C64::default();
                if drive != 0.0 {
                    let comm = (up[j] * sm1 - right[j] * sq_n[j + 1]) + (down[j] * sm - left[j] * sq_n[j]);
                    v = C64::new(comm.im * drive, -comm.re * drive);
                }
                if !diss.is_zero() {
                    v += diag_up[j] * (diss.down * sm1 * sq_n[j + 1]) + diag_down[j] * (diss.up * sm * sq_n[j])
                        - centre[j] * (lm + loss_n[j]);
                }
                row[j] = match phase_row {
                    Some(p) => v * p[j].conj(),
                    None => v,
                };
            }
        };
        if dim >= 96 {
            rows.into_par_iter().enumerate().for_each(work);
        } else {
            rows.into_iter().enumerate().for_each(work);
        }
    }

    fn step(&mut self, y: &mut [C64], t: f64, h: f64, pulses: &[PulseSpec], offsets: &[usize]) {
        let (half, full) = match self.tables.take() {
            Some((th, a, b)) if th == h => (a, b),
            _ => (phase_table(&self.energies, 0.5 * h), phase_table(&self.energies, h)),
        };
        let drive = |s: f64| pulses.iter().map(|p| p.amplitude(t + s)).sum::<f64>();
        let (f0, fm, f1) = (drive(0.0), drive(0.5 * h), drive(h));

        self.load(y, None, None);
        self.eval(0, f0, None, offsets);
        self.load(y, Some((0, 0.5 * h)), Some(&half));
        self.eval(1, fm, Some(&half), offsets);
        self.load(y, Some((1, 0.5 * h)), Some(&half));
        self.eval(2, fm, Some(&half), offsets);
        self.load(y, Some((2, h)), Some(&full));
        self.eval(3, f1, Some(&full), offsets);

        let w = h / 6.0;
        let [k1, k2, k3, k4] = &self.k;
        for i in 0..y.len() {
            y[i] = (y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w) * full[i];
        }
        self.tables = Some((h, half, full));
    }
}

fn pack_upper(s: &DensityMatrix) -> Vec<C64> {
    let dim = s.dim;
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for m in 0..dim {
        for n in m..dim {
            out.push(s.get(m, n));
        }
    }
    out
}

fn unpack_upper(y: &[C64], dim: usize) -> DensityMatrix {
    let mut elements = vec![C64::default(); dim * dim];
    let mut i = 0;
    for m in 0..dim {
        for n in m..dim {
            elements[m * dim + n] = y[i];
            elements[n * dim + m] = y[i].conj();
            i += 1;
        }
    }
    // keep any imaginary residue on the diagonal visible as a Hermiticity defect
    DensityMatrix { dim, elements }
}

fn packed_trace(y: &[C64], offsets: &[usize]) -> C64 {
    offsets[..offsets.len() - 1].iter().map(|&o| y[o]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOptions {
    pub dt_pulse: f64,
    pub dt_free: f64,
    pub start_time: f64,
    /// Check positivity at every `k`-th sample (and always at the last one);
    /// `0` disables the check.
    pub positivity_stride: usize,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            dt_pulse: DEFAULT_DT_PULSE,
            dt_free: DEFAULT_DT_FREE,
            start_time: 0.0,
            positivity_stride: 0,
        }
    }
}

struct Segment {
    t0: f64,
    /// `None` for the open-ended final segment.
    t1: Option<f64>,
    h: f64,
}

/// Evolves a density matrix through a pulse schedule and yields states at
/// increasing times. The step grid depends only on the schedule; requests
/// between grid points are served by a partial step on a copy.
pub struct LindbladEvolution {
    y: Vec<C64>,
    dim: usize,
    offsets: Vec<usize>,
    stepper: LindbladStepper,
    pulses: Vec<PulseSpec>,
    segments: Vec<Segment>,
    seg: usize,
    done: usize,
    t: f64,
    trace0: f64,
    params: SystemParams,
    bath: BathParams,
}

impl LindbladEvolution {
    pub fn new(
        initial: &DensityMatrix,
        excitations: &[Excitation],
        params: &SystemParams,
        bath: &BathParams,
        opts: &LindbladOptions,
    ) -> Result<Self> {
        if !(opts.dt_pulse > 0.0 && opts.dt_free > 0.0) {
            return Err(Error::InvalidParameter("Lindblad steps must be > 0".into()));
        }
        let sched = crate::dynamics::schedule(excitations)?;
        let mut pulses = Vec::new();
        for e in &sched {
            match e {
                Excitation::Pulse(p) => pulses.push(*p),
                Excitation::Kick(_) => {
                    return Err(Error::InvalidParameter(
                        "density-matrix runs take finite-width pulses only".into(),
                    ))
                }
            }
        }
        let start = opts.start_time;
        let mut segments = Vec::new();
        let mut t = start;
        let add = |t0: f64, t1: f64, dt: f64, segments: &mut Vec<Segment>| {
            if t1 > t0 {
                let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0);
                segments.push(Segment {
                    t0,
                    t1: Some(t1),
                    h: (t1 - t0) / n,
                });
            }
        };
        for p in &pulses {
            let (w0, w1) = p.window();
            if w1 <= t {
                continue;
            }
            add(t, w0.max(t), opts.dt_free, &mut segments);
            add(w0.max(t), w1, opts.dt_pulse, &mut segments);
            t = w1;
        }
        segments.push(Segment {
            t0: t,
            t1: None,
            h: opts.dt_free,
        });

        let dim = initial.dim;
        let y = pack_upper(initial);
        let offsets = row_offsets(dim);
        let trace0 = packed_trace(&y, &offsets).re;
        Ok(Self {
            y,
            dim,
            offsets,
            stepper: LindbladStepper::new(dim, params, bath),
            pulses,
            segments,
            seg: 0,
            done: 0,
            t: start,
            trace0,
            params: *params,
            bath: *bath,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    fn check(&self, y: &[C64], t: f64) -> Result<()> {
        let tr = packed_trace(y, &self.offsets);
        if !tr.re.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let drift = (tr.re - self.trace0).abs();
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift {
                drift,
                limit: TRACE_DRIFT_LIMIT,
                t,
            });
        }
        let herm = self.offsets[..self.dim]
            .iter()
            .map(|&o| 2.0 * y[o].im.abs())
            .fold(0.0, f64::max);
        if herm > HERMITICITY_DRIFT_LIMIT {
            return Err(Error::HermiticityDrift {
                drift: herm,
                limit: HERMITICITY_DRIFT_LIMIT,
                t,
            });
        }
        Ok(())
    }

    pub fn state_at(&mut self, ts: f64) -> Result<DensityMatrix> {
        if !ts.is_finite() || ts < self.t {
            return Err(Error::InvalidSampleTimes);
        }
        let eps = 1e-12 * (1.0 + ts.abs());
        loop {
            let seg = &self.segments[self.seg];
            let (t0, h) = (seg.t0, seg.h);
            let steps = seg.t1.map(|t1| (((t1 - t0) / h).round()) as usize);
            while steps.is_none_or(|n| self.done < n) && t0 + (self.done + 1) as f64 * h <= ts + eps {
                let t = t0 + self.done as f64 * h;
                self.stepper.step(&mut self.y, t, h, &self.pulses, &self.offsets);
                self.done += 1;
            }
            self.t = t0 + self.done as f64 * h;
            if let Some(n) = steps {
                if self.done == n {
                    self.t = self.segments[self.seg].t1.unwrap_or(self.t);
                    self.check(&self.y.clone(), self.t)?;
                    self.seg += 1;
                    self.done = 0;
                    continue;
                }
            }
            self.check(&self.y.clone(), self.t)?;
            let rest = ts - self.t;
            if rest <= 0.0 {
                return Ok(unpack_upper(&self.y, self.dim));
            }
            let mut copy = self.y.clone();
            let mut partial = LindbladStepper::new(self.dim, &self.params, &self.bath);
            partial.step(&mut copy, self.t, rest, &self.pulses, &self.offsets);
            self.check(&copy, ts)?;
            return Ok(unpack_upper(&copy, self.dim));
        }
    }
}

/// Output of [`propagate_lindblad`].
#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub series: TimeSeries,
    pub final_state: DensityMatrix,
    /// `(t, smallest eigenvalue)` at the checked sample times.
    pub positivity: Vec<(f64, f64)>,
    pub max_hermiticity_drift: f64,
}

/// Integrates the master equation and samples `⟨q̂⟩`, `⟨q̂²⟩` and the trace.
pub fn propagate_lindblad(
    s0: &DensityMatrix,
    excitations: &[Excitation],
    params: &SystemParams,
    bath: &BathParams,
    sample_times: &[f64],
    opts: &LindbladOptions,
) -> Result<LindbladRun> {
    check_sample_times(sample_times, opts.start_time)?;
    if sample_times.is_empty() {
        return Err(Error::InvalidSampleTimes);
    }
    let mut evo = LindbladEvolution::new(s0, excitations, params, bath, opts)?;
    let mut series = TimeSeries::with_capacity(sample_times.len());
    let mut positivity = Vec::new();
    let mut herm = 0.0f64;
    let mut last = None;
    for (i, &t) in sample_times.iter().enumerate() {
        let s = evo.state_at(t)?;
        herm = herm.max(s.hermiticity_drift());
        series.push(t, s.expect_q(), s.expect_q2(), s.trace());
        let is_last = i + 1 == sample_times.len();
        if opts.positivity_stride > 0 && (i % opts.positivity_stride == 0 || is_last) {
            let ev = s.min_eigenvalue();
            if ev < -1e-8 {
                log::warn!("density matrix eigenvalue {ev:.3e} at t = {t}");
            }
            positivity.push((t, ev));
        }
        if is_last {
            last = Some(s);
        }
    }
    Ok(LindbladRun {
        series,
        final_state: last.expect("at least one sample"),
        positivity,
        max_hermiticity_drift: herm,
    })
}
