//! Unitary evolution under the rotated-frame Kerr Hamiltonian.
//!
//! Free segments are exact: each amplitude picks up `exp(−i E_n t)`. Inside a
//! Gaussian pulse window the drive `E₀ f(t) (a + a†)` is integrated with a
//! fourth-order Runge–Kutta scheme in the interaction picture of the diagonal
//! part, so the step size only has to resolve the pulse envelope.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::fock::{self, StateVector, Truncation};
use crate::{Error, Result};

/// Half-width of a pulse window in units of the Gaussian width.
pub const WINDOW_SIGMAS: f64 = 5.0;

/// Largest tolerated change of the norm across one driven window.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Detuning of the oscillator from the drive carrier, in Kerr units.
    pub delta: f64,
}

impl SystemParams {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        Ok(Self { delta })
    }
}

/// Gaussian drive `E₀ exp(−(t − center)²/σ²)`, switched off outside `center ± 5σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub e0: f64,
    pub sigma: f64,
    pub center: f64,
}

impl PulseSpec {
    pub fn new(e0: f64, sigma: f64, center: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse sigma must be > 0, got {sigma}")));
        }
        if !e0.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParameter(
                "pulse amplitude and center must be finite".into(),
            ));
        }
        Ok(Self { e0, sigma, center })
    }

    pub fn window(&self) -> (f64, f64) {
        let half = WINDOW_SIGMAS * self.sigma;
        (self.center - half, self.center + half)
    }

    /// Instantaneous drive amplitude `E₀ f(t)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        let x = t - self.center;
        if x.abs() > WINDOW_SIGMAS * self.sigma {
            0.0
        } else {
            self.e0 * (-(x * x) / (self.sigma * self.sigma)).exp()
        }
    }

    /// Impulsive-limit strength `λ = −E₀ ∫f dt = −E₀ σ √π`.
    pub fn kick_strength(&self) -> f64 {
        -self.e0 * self.sigma * PI.sqrt()
    }

    pub fn to_kick(&self) -> KickSpec {
        KickSpec {
            lambda: self.kick_strength(),
            center: self.center,
        }
    }
}

/// Instantaneous kick: the displacement `D(iλ)` applied at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickSpec {
    pub lambda: f64,
    pub center: f64,
}

impl KickSpec {
    pub fn new(lambda: f64, center: f64) -> Result<Self> {
        if !lambda.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParameter("kick strength and time must be finite".into()));
        }
        Ok(Self { lambda, center })
    }

    /// Displacement parameter `β = iλ`.
    pub fn beta(&self) -> C64 {
        C64::new(0.0, self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation {
    Pulse(PulseSpec),
    Kick(KickSpec),
}

impl Excitation {
    pub fn window(&self) -> (f64, f64) {
        match self {
            Excitation::Pulse(p) => p.window(),
            Excitation::Kick(k) => (k.center, k.center),
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            Excitation::Pulse(p) => p.center,
            Excitation::Kick(k) => k.center,
        }
    }

    pub fn kick_strength(&self) -> f64 {
        match self {
            Excitation::Pulse(p) => p.kick_strength(),
            Excitation::Kick(k) => k.lambda,
        }
    }
}

impl From<PulseSpec> for Excitation {
    fn from(p: PulseSpec) -> Self {
        Excitation::Pulse(p)
    }
}

impl From<KickSpec> for Excitation {
    fn from(k: KickSpec) -> Self {
        Excitation::Kick(k)
    }
}

/// Sorts excitations by window start and rejects overlapping windows.
/// Windows that merely touch are accepted.
pub fn schedule(excitations: &[Excitation]) -> Result<Vec<Excitation>> {
    let mut sorted = excitations.to_vec();
    sorted.sort_by(|a, b| a.window().0.total_cmp(&b.window().0));
    for pair in sorted.windows(2) {
        let (a0, a1) = pair[0].window();
        let (b0, b1) = pair[1].window();
        if b0 < a1 || (a0 == b0 && a1 == b1) {
            return Err(Error::OverlappingPulses { a0, a1, b0, b1 });
        }
    }
    Ok(sorted)
}

/// Sampled observables. `q1 = ⟨q̂⟩`, `q2 = ⟨q̂²⟩`. Monte Carlo series also
/// carry standard errors of the means.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub norm_or_trace: Vec<f64>,
    pub q1_stderr: Option<Vec<f64>>,
    pub q2_stderr: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            q1: Vec::with_capacity(n),
            q2: Vec::with_capacity(n),
            norm_or_trace: Vec::with_capacity(n),
            q1_stderr: None,
            q2_stderr: None,
        }
    }

    pub fn push(&mut self, t: f64, q1: f64, q2: f64, norm: f64) {
        self.times.push(t);
        self.q1.push(q1);
        self.q2.push(q2);
        self.norm_or_trace.push(norm);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks equal column lengths and strictly increasing times.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let lens_ok = self.q1.len() == n
            && self.q2.len() == n
            && self.norm_or_trace.len() == n
            && self.q1_stderr.as_ref().is_none_or(|v| v.len() == n)
            && self.q2_stderr.as_ref().is_none_or(|v| v.len() == n);
        if !lens_ok {
            return Err(Error::InvalidParameter("time series columns differ in length".into()));
        }
        check_sample_times(&self.times, f64::NEG_INFINITY)
    }
}

/// Requires strictly increasing, finite sample times not earlier than `start`.
pub fn check_sample_times(times: &[f64], start: f64) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) || times.first().is_some_and(|&t| t < start) {
        return Err(Error::InvalidSampleTimes);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSampleTimes);
    }
    Ok(())
}

/// `n_samples` equally spaced points on `[t0, t1]`, endpoints included.
pub fn linspace(t0: f64, t1: f64, n_samples: usize) -> Vec<f64> {
    match n_samples {
        0 => Vec::new(),
        1 => vec![t0],
        n => {
            let step = (t1 - t0) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { t1 } else { t0 + step * k as f64 })
                .collect()
        }
    }
}

/// `E_n = (Δ − 1) n + n²`.
pub fn energy_level(n: usize, params: &SystemParams) -> f64 {
    let n = n as f64;
    (params.delta - 1.0) * n + n * n
}

pub(crate) fn energy_levels(n_max: usize, params: &SystemParams) -> Vec<f64> {
    (0..=n_max).map(|n| energy_level(n, params)).collect()
}

fn apply_free_phases(amps: &mut [C64], energies: &[f64], duration: f64) {
    if duration == 0.0 {
        return;
    }
    for (a, &e) in amps.iter_mut().zip(energies) {
        *a *= C64::from_polar(1.0, -e * duration);
    }
}

/// Exact free evolution `amps_n → amps_n exp(−i E_n duration)`.
pub fn free_propagate(state: &StateVector, duration: f64, params: &SystemParams) -> StateVector {
    let mut out = state.clone();
    let energies = energy_levels(state.n_max(), params);
    apply_free_phases(out.amps_mut(), &energies, duration);
    out
}

/// Default step for a driven window: `min(σ/50, window/200)`.
pub fn default_pulse_dt(pulse: &PulseSpec, t0: f64, t1: f64) -> f64 {
    (pulse.sigma / 50.0).min((t1 - t0) / 200.0)
}

/// Phase tables for one interaction-picture step of size `h`.
struct StepTables {
    h: f64,
    /// `exp(−i(Δ + 2m) h/2)`: transition phase between levels m and m+1 at the midpoint.
    half: Vec<C64>,
    /// Same at the end of the step.
    full: Vec<C64>,
    /// `exp(−i E_n h)`.
    diag: Vec<C64>,
}

impl StepTables {
    fn new(h: f64, energies: &[f64], delta: f64) -> Self {
        let gap = |m: usize, s: f64| C64::from_polar(1.0, -(delta + 2.0 * m as f64) * s);
        let n = energies.len();
        Self {
            h,
            half: (0..n).map(|m| gap(m, 0.5 * h)).collect(),
            full: (0..n).map(|m| gap(m, h)).collect(),
            diag: energies.iter().map(|&e| C64::from_polar(1.0, -e * h)).collect(),
        }
    }
}

/// Working storage for the driven integrator on a fixed Hilbert space.
struct DriveStepper {
    delta: f64,
    energies: Vec<f64>,
    sqrt_n: Vec<f64>,
    tables: Option<StepTables>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl DriveStepper {
    fn new(n_max: usize, params: &SystemParams) -> Self {
        let dim = n_max + 1;
        let zeros = || vec![C64::new(0.0, 0.0); dim];
        Self {
            delta: params.delta,
            energies: energy_levels(n_max, params),
            sqrt_n: (0..=dim).map(|n| (n as f64).sqrt()).collect(),
            tables: None,
            k: [zeros(), zeros(), zeros(), zeros()],
            tmp: zeros(),
        }
    }

    fn tables_for(&mut self, h: f64) -> StepTables {
        match self.tables.take() {
            Some(t) if t.h == h => t,
            _ => StepTables::new(h, &self.energies, self.delta),
        }
    }

    /// Interaction-picture drive term `−i f · e^{iEs}(a + a†)e^{−iEs} y`.
    /// `phase[m]` is `exp(−i(Δ + 2m)s)`; `None` means `s = 0`.
    fn rhs(sqrt_n: &[f64], f: f64, phase: Option<&[C64]>, y: &[C64], out: &mut [C64]) {
        let n = y.len();
        let mi = C64::new(0.0, -f);
        if f == 0.0 {
            out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
            return;
        }
        for m in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            if m + 1 < n {
                let down = y[m + 1] * sqrt_n[m + 1];
                acc += match phase {
                    Some(ph) => down * ph[m],
                    None => down,
                };
            }
            if m > 0 {
                let up = y[m - 1] * sqrt_n[m];
                acc += match phase {
                    Some(ph) => up * ph[m - 1].conj(),
                    None => up,
                };
            }
            out[m] = mi * acc;
        }
    }

    /// Advances `psi` from `t` to `t + h` under the pulse drive.
    fn step(&mut self, psi: &mut [C64], t: f64, h: f64, pulse: &PulseSpec) {
        let tables = self.tables_for(h);
        let f0 = pulse.amplitude(t);
        let fm = pulse.amplitude(t + 0.5 * h);
        let f1 = pulse.amplitude(t + h);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let sq = &self.sqrt_n;

        Self::rhs(sq, f0, None, psi, k1);
        for ((t_, &p), &k) in tmp.iter_mut().zip(psi.iter()).zip(k1.iter()) {
            *t_ = p + k * (0.5 * h);
        }
        Self::rhs(sq, fm, Some(&tables.half), tmp, k2);
        for ((t_, &p), &k) in tmp.iter_mut().zip(psi.iter()).zip(k2.iter()) {
            *t_ = p + k * (0.5 * h);
        }
        Self::rhs(sq, fm, Some(&tables.half), tmp, k3);
        for ((t_, &p), &k) in tmp.iter_mut().zip(psi.iter()).zip(k3.iter()) {
            *t_ = p + k * h;
        }
        Self::rhs(sq, f1, Some(&tables.full), tmp, k4);
        let w = h / 6.0;
        for m in 0..psi.len() {
            let incr = (k1[m] + (k2[m] + k3[m]) * 2.0 + k4[m]) * w;
            psi[m] = (psi[m] + incr) * tables.diag[m];
        }
        self.tables = Some(tables);
    }
}

fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) - 1e-9).ceil().max(1.0) as usize
}

fn check_norm_drift(before: f64, after: f64, context: impl FnOnce() -> String) -> Result<()> {
    let drift = (after - before).abs();
    if !drift.is_finite() || drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift {
            drift,
            limit: NORM_DRIFT_LIMIT,
            context: context(),
        });
    }
    Ok(())
}

/// Integrates the driven Schrödinger equation from `t0` to `t1` with a fixed
/// step no larger than `dt` (default [`default_pulse_dt`]).
pub fn propagate_driven(
    state: &StateVector,
    pulse: &PulseSpec,
    t0: f64,
    t1: f64,
    params: &SystemParams,
    dt: Option<f64>,
) -> Result<StateVector> {
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let dt = dt.unwrap_or_else(|| default_pulse_dt(pulse, t0, t1));
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let n = step_count(t1 - t0, dt);
    let h = (t1 - t0) / n as f64;
    let mut stepper = DriveStepper::new(state.n_max(), params);
    let mut out = state.clone();
    for k in 0..n {
        stepper.step(out.amps_mut(), t0 + k as f64 * h, h, pulse);
    }
    check_norm_drift(state.norm(), out.norm(), || {
        format!("driven window [{t0}, {t1}] with dt = {h:.3e}")
    })?;
    out.check_tail("propagate_driven");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    /// Step inside pulse windows; `None` selects [`default_pulse_dt`] per window.
    pub dt: Option<f64>,
    /// Time at which the initial state is given.
    pub start_time: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            dt: None,
            start_time: 0.0,
        }
    }
}

struct WindowCursor {
    pulse: PulseSpec,
    t_begin: f64,
    h: f64,
    steps: usize,
    done: usize,
    norm_before: f64,
}

/// Evolves a pure state through a schedule of pulses and kicks, yielding the
/// state at arbitrary increasing times.
///
/// Inside a pulse window the state advances on a fixed step grid anchored at
/// the window start; a request that falls between grid points is served by a
/// partial step on a copy, so sampling never changes the trajectory.
pub struct Evolution {
    state: StateVector,
    t: f64,
    energies: Vec<f64>,
    events: Vec<Excitation>,
    next: usize,
    cursor: Option<WindowCursor>,
    dt: Option<f64>,
    stepper: DriveStepper,
}

impl Evolution {
    pub fn new(
        initial: StateVector,
        excitations: &[Excitation],
        params: &SystemParams,
        opts: ScenarioOptions,
    ) -> Result<Self> {
        if let Some(dt) = opts.dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
            }
        }
        let events = schedule(excitations)?;
        // Excitations that end before the start time are ignored.
        let next = events
            .iter()
            .take_while(|e| match e {
                Excitation::Kick(k) => k.center < opts.start_time,
                Excitation::Pulse(p) => p.window().1 <= opts.start_time,
            })
            .count();
        let n_max = initial.n_max();
        Ok(Self {
            energies: energy_levels(n_max, params),
            stepper: DriveStepper::new(n_max, params),
            state: initial,
            t: opts.start_time,
            events,
            next,
            cursor: None,
            dt: opts.dt,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// State at time `ts ≥` the last requested time.
    pub fn state_at(&mut self, ts: f64) -> Result<StateVector> {
        if !ts.is_finite() || ts < self.t {
            return Err(Error::InvalidSampleTimes);
        }
        loop {
            if let Some(cur) = self.cursor.as_mut() {
                let eps = 1e-12 * (1.0 + ts.abs());
                while cur.done < cur.steps && cur.t_begin + (cur.done + 1) as f64 * cur.h <= ts + eps {
                    let t = cur.t_begin + cur.done as f64 * cur.h;
                    self.stepper.step(self.state.amps_mut(), t, cur.h, &cur.pulse);
                    cur.done += 1;
                }
                self.t = cur.t_begin + cur.done as f64 * cur.h;
                if cur.done == cur.steps {
                    let (_, w1) = cur.pulse.window();
                    self.t = w1;
                    let before = cur.norm_before;
                    self.cursor = None;
                    self.next += 1;
                    check_norm_drift(before, self.state.norm(), || format!("pulse window ending at t = {w1}"))?;
                    self.state.check_tail("pulse window");
                    continue;
                }
                let rest = ts - self.t;
                let mut copy = self.state.clone();
                if rest > 0.0 {
                    let pulse = cur.pulse;
                    // a fresh stepper keeps the cached full-step tables intact
                    let mut partial = DriveStepper::new(
                        copy.n_max(),
                        &SystemParams {
                            delta: self.stepper.delta,
                        },
                    );
                    partial.step(copy.amps_mut(), self.t, rest, &pulse);
                }
                return Ok(copy);
            }

            match self.events.get(self.next).copied() {
                Some(ev) if ev.window().0.max(self.t) <= ts => {
                    let start = ev.window().0.max(self.t);
                    apply_free_phases(self.state.amps_mut(), &self.energies, start - self.t);
                    self.t = start;
                    match ev {
                        Excitation::Kick(k) => {
                            self.state = fock::apply_displacement(&self.state, k.beta())?;
                            self.next += 1;
                        }
                        Excitation::Pulse(p) => {
                            let (_, w1) = p.window();
                            let span = w1 - start;
                            let dt = self.dt.unwrap_or_else(|| default_pulse_dt(&p, p.window().0, w1));
                            let steps = step_count(span, dt);
                            self.cursor = Some(WindowCursor {
                                pulse: p,
                                t_begin: start,
                                h: span / steps as f64,
                                steps,
                                done: 0,
                                norm_before: self.state.norm(),
                            });
                        }
                    }
                }
                _ => {
                    apply_free_phases(self.state.amps_mut(), &self.energies, ts - self.t);
                    self.t = ts;
                    return Ok(self.state.clone());
                }
            }
        }
    }
}

/// Records `⟨q̂⟩`, `⟨q̂²⟩` and the norm of `state`.
pub fn observe(state: &StateVector) -> Result<(f64, f64, f64)> {
    Ok((
        fock::expect_q_moment(state, 1)?,
        fock::expect_q_moment(state, 2)?,
        state.norm(),
    ))
}

/// Runs a full pulse/kick protocol and samples the observables.
pub fn run_kicked_scenario(
    initial: &StateVector,
    excitations: &[Excitation],
    params: &SystemParams,
    sample_times: &[f64],
    opts: ScenarioOptions,
) -> Result<TimeSeries> {
    check_sample_times(sample_times, opts.start_time)?;
    let mut evo = Evolution::new(initial.clone(), excitations, params, opts)?;
    let mut series = TimeSeries::with_capacity(sample_times.len());
    for &t in sample_times {
        let state = evo.state_at(t)?;
        let (q1, q2, norm) = observe(&state)?;
        series.push(t, q1, q2, norm);
    }
    Ok(series)
}

/// Truncation recommended for a coherent initial amplitude under `excitations`.
pub fn recommended_truncation(alpha0_abs: f64, excitations: &[Excitation]) -> Truncation {
    Truncation::recommended(alpha0_abs, excitations.iter().map(Excitation::kick_strength))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_displacement, coherent_state, overlap};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Closed-form free ⟨q̂⟩ for a coherent state, written out independently.
    fn free_q_oracle(t: f64, a: f64, delta: f64) -> f64 {
        let z = C64::from_polar(a * a, -2.0 * t);
        let term = c(a) * (z - C64::new(0.0, delta * t)).exp();
        (-a * a).exp() / 2f64.sqrt() * 2.0 * term.re
    }

    fn l2(a: &StateVector, b: &StateVector) -> f64 {
        a.amps()
            .iter()
            .zip(b.amps())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn energy_levels() {
        let p0 = SystemParams::new(0.0).unwrap();
        assert_eq!(energy_level(0, &SystemParams::new(0.37).unwrap()), 0.0);
        assert_eq!(energy_level(1, &p0), 0.0);
        let p = SystemParams::new(0.01).unwrap();
        for n in 0..50 {
            assert_abs_diff_eq!(
                energy_level(n + 1, &p) - energy_level(n, &p),
                0.01 + 2.0 * n as f64,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn free_propagation_basics() {
        let p = SystemParams::new(0.0).unwrap();
        let trunc = Truncation::new(80).unwrap();
        let s = coherent_state(c(4.0), &trunc).unwrap();
        assert_eq!(free_propagate(&s, 0.0, &p), s);
        let revived = free_propagate(&s, PI, &p);
        assert_abs_diff_eq!(overlap(&s, &revived).unwrap().norm(), 1.0, epsilon = 1e-12);
        let later = free_propagate(&s, 0.3, &p);
        let q = fock::expect_q_moment(&later, 1).unwrap();
        assert_abs_diff_eq!(q, free_q_oracle(0.3, 4.0, 0.0), epsilon = 1e-10);
    }

    #[test]
    fn undriven_pulse_is_free_evolution() {
        let p = SystemParams::new(0.01).unwrap();
        let s = coherent_state(c(3.0), &Truncation::new(70).unwrap()).unwrap();
        let pulse = PulseSpec::new(0.0, 0.02, 0.5).unwrap();
        let driven = propagate_driven(&s, &pulse, 0.4, 0.6, &p, None).unwrap();
        let free = free_propagate(&s, 0.2, &p);
        assert!(l2(&driven, &free) < 1e-12);
    }

    fn pulse_vs_kick_distance(sigma: f64) -> f64 {
        let p = SystemParams::new(0.01).unwrap();
        let pulse = PulseSpec::new(0.03 / sigma, sigma, 0.5).unwrap();
        let trunc = recommended_truncation(6.0, &[pulse.into()]);
        let s = free_propagate(&coherent_state(c(6.0), &trunc).unwrap(), 0.45, &p);
        let (w0, w1) = pulse.window();
        let driven = free_propagate(
            &propagate_driven(&free_propagate(&s, w0 - 0.45, &p), &pulse, w0, w1, &p, None).unwrap(),
            0.55 - w1,
            &p,
        );
        let kicked = free_propagate(
            &apply_displacement(&free_propagate(&s, 0.05, &p), pulse.to_kick().beta()).unwrap(),
            0.05,
            &p,
        );
        l2(&driven, &kicked)
    }

    #[test]
    fn narrow_pulse_converges_to_kick() {
        // At σ = 0.01 the finite width still suppresses the effective kick on
        // the populated transitions by exp(−ω²σ²/4) ≈ 0.88, so the distance is
        // physical and shrinks as σ².
        let d = [0.01, 0.005, 0.0025].map(pulse_vs_kick_distance);
        assert_abs_diff_eq!(d[0], 0.0603, epsilon = 5e-4);
        assert!((d[0] / d[1] - 4.0).abs() < 0.4, "{d:?}");
        assert!((d[1] / d[2] - 4.0).abs() < 0.2, "{d:?}");
        assert!(d[2] < 1e-2);
    }

    #[test]
    fn split_window_composes() {
        let p = SystemParams::new(0.01).unwrap();
        let pulse = PulseSpec::new(3.0, 0.01, 0.5).unwrap();
        let s = coherent_state(c(4.0), &Truncation::recommended(4.0, [0.06])).unwrap();
        let whole = propagate_driven(&s, &pulse, 0.45, 0.55, &p, None).unwrap();
        let first = propagate_driven(&s, &pulse, 0.45, 0.5, &p, None).unwrap();
        let second = propagate_driven(&first, &pulse, 0.5, 0.55, &p, None).unwrap();
        assert!(l2(&whole, &second) < 1e-10);
    }

    #[test]
    fn norm_drift_is_reported() {
        let p = SystemParams::new(0.0).unwrap();
        let pulse = PulseSpec::new(200.0, 0.05, 0.5).unwrap();
        let s = coherent_state(c(1.0), &Truncation::new(20).unwrap()).unwrap();
        let err = propagate_driven(&s, &pulse, 0.25, 0.75, &p, Some(0.05)).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn unkicked_scenario_matches_closed_form() {
        let p = SystemParams::new(0.0).unwrap();
        let s = coherent_state(c(4.0), &Truncation::new(80).unwrap()).unwrap();
        let times = linspace(0.0, 2.0 * PI, 500);
        let ts = run_kicked_scenario(&s, &[], &p, &times, ScenarioOptions::default()).unwrap();
        for (t, q) in ts.times.iter().zip(&ts.q1) {
            assert_abs_diff_eq!(*q, free_q_oracle(*t, 4.0, 0.0), epsilon = 1e-8);
        }
        ts.validate().unwrap();
    }

    #[test]
    fn overlapping_windows_rejected() {
        let a = PulseSpec::new(1.0, 0.02, 0.5).unwrap();
        let b = PulseSpec::new(1.0, 0.02, 0.55).unwrap();
        assert!(matches!(
            schedule(&[a.into(), b.into()]),
            Err(Error::OverlappingPulses { .. })
        ));
        let k = KickSpec::new(0.1, 0.5).unwrap();
        assert!(schedule(&[a.into(), k.into()]).is_err());
        let far = PulseSpec::new(1.0, 0.02, 0.7).unwrap();
        assert_eq!(schedule(&[far.into(), a.into()]).unwrap()[0], a.into());
    }

    #[test]
    fn sampling_inside_window_does_not_perturb_trajectory() {
        let p = SystemParams::new(0.01).unwrap();
        let pulse = PulseSpec::new(3.0, 0.01, 0.5).unwrap();
        let s = coherent_state(c(4.0), &Truncation::recommended(4.0, [0.06])).unwrap();
        let opts = ScenarioOptions::default();
        let mut plain = Evolution::new(s.clone(), &[pulse.into()], &p, opts).unwrap();
        let mut probed = Evolution::new(s, &[pulse.into()], &p, opts).unwrap();
        for t in linspace(0.46, 0.54, 37) {
            probed.state_at(t).unwrap();
        }
        let a = plain.state_at(0.8).unwrap();
        let b = probed.state_at(0.8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn in_window_sample_is_consistent() {
        let p = SystemParams::new(0.01).unwrap();
        let pulse = PulseSpec::new(3.0, 0.01, 0.5).unwrap();
        let s = coherent_state(c(4.0), &Truncation::recommended(4.0, [0.06])).unwrap();
        let mut evo = Evolution::new(s.clone(), &[pulse.into()], &p, ScenarioOptions::default()).unwrap();
        let mid = evo.state_at(0.50013).unwrap();
        let direct = propagate_driven(&free_propagate(&s, 0.45, &p), &pulse, 0.45, 0.50013, &p, Some(2e-4)).unwrap();
        assert!(l2(&mid, &direct) < 1e-8);
    }

    #[test]
    fn kicks_apply_displacement() {
        let p = SystemParams::new(0.0).unwrap();
        let s = coherent_state(c(0.0), &Truncation::new(30).unwrap()).unwrap();
        let k = KickSpec::new(-0.5, 0.0).unwrap();
        let ts = run_kicked_scenario(&s, &[k.into()], &p, &[0.0], ScenarioOptions::default()).unwrap();
        // D(iλ)|0⟩ = |iλ⟩: ⟨q̂⟩ = 0, ⟨q̂²⟩ = 1/2
        assert_abs_diff_eq!(ts.q1[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ts.q2[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn sample_times_validated() {
        let p = SystemParams::new(0.0).unwrap();
        let s = coherent_state(c(1.0), &Truncation::new(20).unwrap()).unwrap();
        let r = run_kicked_scenario(&s, &[], &p, &[0.2, 0.1], ScenarioOptions::default());
        assert_eq!(r.unwrap_err(), Error::InvalidSampleTimes);
        let r = run_kicked_scenario(&s, &[], &p, &[-0.1], ScenarioOptions::default());
        assert_eq!(r.unwrap_err(), Error::InvalidSampleTimes);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, PI, 1000);
        assert_eq!(v.len(), 1000);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[999], PI);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn free_evolution_is_unitary_and_pi_periodic(a in 0.0f64..5.0, t in 0.0f64..7.0) {
                let p = SystemParams::new(0.0).unwrap();
                let s = coherent_state(c(a), &Truncation::recommended(a, [])).unwrap();
                let x = free_propagate(&s, t, &p);
                let y = free_propagate(&x, PI, &p);
                prop_assert!((x.norm() - s.norm()).abs() < 1e-12);
                prop_assert!((overlap(&x, &y).unwrap().norm() - 1.0).abs() < 1e-10);
            }
        }
    }
}
