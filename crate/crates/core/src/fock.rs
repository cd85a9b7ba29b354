//! Truncated Fock-space states of a single bosonic mode.
//!
//! States live in `span{|0⟩, …, |n_max⟩}`. Ladder operators are the truncated
//! matrices `a|n⟩ = √n |n−1⟩`, `a†|n⟩ = √(n+1) |n+1⟩` with `a†|n_max⟩ = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Number of top levels inspected for the truncation-tail invariant.
pub const TAIL_LEVELS: usize = 5;

/// Tail mass above which a state is considered poorly truncated.
pub const TAIL_WARNING: f64 = 1e-10;

/// Fock-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_max: usize,
    pub tail_tolerance: f64,
}

impl Truncation {
    pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation("n_max must be at least 1".into()));
        }
        Ok(Self {
            n_max,
            tail_tolerance: Self::DEFAULT_TAIL_TOLERANCE,
        })
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    /// Recommended truncation for a coherent amplitude `|α₀|` followed by kicks
    /// of strengths `λ_k`: `n_max = ⌈α² + 10α + 20⌉` with `α = |α₀| + Σ|λ_k|`.
    pub fn recommended(alpha0_abs: f64, kick_strengths: impl IntoIterator<Item = f64>) -> Self {
        let alpha_eff = alpha0_abs.abs() + kick_strengths.into_iter().map(f64::abs).sum::<f64>();
        let n_max = (alpha_eff * alpha_eff + 10.0 * alpha_eff + 20.0).ceil() as usize;
        Self {
            n_max: n_max.max(1),
            tail_tolerance: Self::DEFAULT_TAIL_TOLERANCE,
        }
    }

    /// Recommended truncation for a thermal state with mean occupation `nbar`,
    /// subsequently displaced by kicks of total strength `Σ|λ_k|`.
    pub fn recommended_thermal(nbar: f64, kick_strengths: impl IntoIterator<Item = f64>) -> Self {
        let alpha_eff: f64 = kick_strengths.into_iter().map(f64::abs).sum();
        let coherent = Self::recommended(0.0, [alpha_eff]).n_max;
        let thermal = thermal_levels_for_tail(nbar, 1e-10);
        let displaced = thermal + (alpha_eff * alpha_eff + 10.0 * alpha_eff).ceil() as usize;
        Self {
            n_max: coherent.max(displaced),
            tail_tolerance: Self::DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Smallest `N` such that the Bose–Einstein mass above level `N` is below `tol`.
pub fn thermal_levels_for_tail(nbar: f64, tol: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let ratio = nbar / (1.0 + nbar);
    // P(n > N) = ratio^(N+1)
    let n = (tol.ln() / ratio.ln()).ceil() - 1.0;
    (n.max(1.0)) as usize
}

/// `ln n!` for `n = 0..=n_max`.
pub(crate) fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Pure state as complex amplitudes in the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidTruncation("n_max must be at least 1".into()));
        }
        Ok(Self { amps })
    }

    /// Vacuum in a space truncated at `n_max`.
    pub fn vacuum(trunc: &Truncation) -> Self {
        Self::number(0, trunc).expect("level 0 always exists")
    }

    /// Number state `|n⟩`.
    pub fn number(n: usize, trunc: &Truncation) -> Result<Self> {
        if n > trunc.n_max {
            return Err(Error::InvalidParameter(format!(
                "number state {n} exceeds n_max = {}",
                trunc.n_max
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); trunc.dim()];
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Probability mass in the top [`TAIL_LEVELS`] levels.
    pub fn tail_mass(&self) -> f64 {
        let start = self.amps.len().saturating_sub(TAIL_LEVELS);
        self.amps[start..].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Logs a warning if the top levels carry non-negligible population.
    pub fn check_tail(&self, context: &str) -> f64 {
        let tail = self.tail_mass();
        if tail > TAIL_WARNING {
            log::warn!(
                "{context}: tail mass {tail:.3e} in top {TAIL_LEVELS} levels (n_max = {}); increase n_max",
                self.n_max()
            );
        }
        tail
    }

    /// `⟨a†a⟩`.
    pub fn mean_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
    }

    /// `⟨a⟩`.
    pub fn expect_a(&self) -> C64 {
        self.amps
            .windows(2)
            .enumerate()
            .map(|(n, w)| w[0].conj() * w[1] * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// `⟨p̂⟩` with `p̂ = (a − a†)/(i√2)`.
    pub fn expect_p(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.expect_a().im
    }

    pub fn scale(&mut self, factor: C64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }
}

/// `a ψ` into `out`.
#[cfg(test)]
fn apply_a(psi: &[C64], out: &mut [C64]) {
    let n = psi.len();
    for k in 0..n - 1 {
        out[k] = psi[k + 1] * ((k + 1) as f64).sqrt();
    }
    out[n - 1] = C64::new(0.0, 0.0);
}

/// `(a + a†) ψ` into `out`.
pub(crate) fn apply_x(psi: &[C64], out: &mut [C64]) {
    let n = psi.len();
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        if k + 1 < n {
            acc += psi[k + 1] * ((k + 1) as f64).sqrt();
        }
        if k > 0 {
            acc += psi[k - 1] * (k as f64).sqrt();
        }
        out[k] = acc;
    }
}

/// Coherent state `|α₀⟩ = e^{−|α₀|²/2} Σ α₀ⁿ/√n! |n⟩`, evaluated in log space.
///
/// Amplitudes are not renormalised; the mass beyond `n_max` must stay below
/// `trunc.tail_tolerance`.
pub fn coherent_state(alpha0: C64, trunc: &Truncation) -> Result<StateVector> {
    let dim = trunc.dim();
    if alpha0.norm() == 0.0 {
        return Ok(StateVector::vacuum(trunc));
    }
    let ln_alpha = alpha0.ln();
    let half_mean = 0.5 * alpha0.norm_sqr();
    let ln_fact = ln_factorials(trunc.n_max);
    let amps: Vec<C64> = (0..dim)
        .map(|n| (ln_alpha * n as f64 - half_mean - 0.5 * ln_fact[n]).exp())
        .collect();

    let tail = poisson_upper_tail(alpha0.norm_sqr(), trunc.n_max, ln_fact[trunc.n_max]);
    if tail > trunc.tail_tolerance {
        return Err(Error::TruncationTail {
            tail,
            tolerance: trunc.tail_tolerance,
            n_max: trunc.n_max,
        });
    }
    let state = StateVector { amps };
    state.check_tail("coherent_state");
    Ok(state)
}

/// `P(n > n_max)` for a Poisson distribution with mean `mean`, summed directly.
fn poisson_upper_tail(mean: f64, n_max: usize, ln_fact_nmax: f64) -> f64 {
    let ln_mean = mean.ln();
    let mut ln_fact = ln_fact_nmax;
    let mut tail = 0.0;
    let mut n = n_max;
    loop {
        n += 1;
        ln_fact += (n as f64).ln();
        let term = (n as f64 * ln_mean - mean - ln_fact).exp();
        tail += term;
        // terms decrease geometrically once n > mean
        if (n as f64) > mean && term < 1e-30 * tail.max(1e-300) {
            break;
        }
        if n > n_max + 100_000 {
            break;
        }
    }
    tail
}

/// `⟨q̂ᵖ⟩` for `p ∈ {1, 2}`, `q̂ = (a + a†)/√2`, from truncated ladder matrix elements.
pub fn expect_q_moment(state: &StateVector, power: u32) -> Result<f64> {
    if !(1..=2).contains(&power) {
        return Err(Error::UnsupportedPower(power));
    }
    let psi = state.amps();
    let mut cur = psi.to_vec();
    let mut next = vec![C64::new(0.0, 0.0); psi.len()];
    for _ in 0..power {
        apply_x(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    let scale = 0.5f64.powi(power as i32).sqrt();
    let value: C64 = psi.iter().zip(&cur).map(|(a, b)| a.conj() * b).sum::<C64>() * scale;
    if value.im.abs() > 1e-8 {
        return Err(Error::ImaginaryExpectation {
            residue: value.im.abs(),
        });
    }
    Ok(value.re)
}

/// Dense displacement operator `D(β) = exp(βa† − β*a)` on the truncated space.
pub fn displacement_matrix(n_max: usize, beta: C64) -> DMatrix<C64> {
    let dim = n_max + 1;
    let mut gen = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..n_max {
        let s = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] = beta * s;
        gen[(n, n + 1)] = -beta.conj() * s;
    }
    gen.exp()
}

/// Applies the displacement `D(β)` by exponentiating the truncated generator.
pub fn apply_displacement(state: &StateVector, beta: C64) -> Result<StateVector> {
    let d = displacement_matrix(state.n_max(), beta);
    let psi = nalgebra::DVector::from_column_slice(state.amps());
    let out = d * psi;
    let out = StateVector {
        amps: out.iter().copied().collect(),
    };

    let drift = (out.norm() - state.norm()).abs();
    let tail = out.tail_mass();
    let loss = drift.max(tail);
    if loss > 1e-6 {
        return Err(Error::NormDrift {
            drift: loss,
            limit: 1e-6,
            context: format!("displacement by β = {beta} leaks out of n_max = {}", state.n_max()),
        });
    }
    out.check_tail("apply_displacement");
    Ok(out)
}

/// `⟨a|b⟩ = Σ a_n* b_n`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.n_max(),
            right: b.n_max(),
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{Discrete, Poisson};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let s = coherent_state(c(0.0, 0.0), &Truncation::new(10).unwrap()).unwrap();
        assert_eq!(s.amps()[0], c(1.0, 0.0));
        assert!(s.amps()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_mean_occupation() {
        let s = coherent_state(c(4.0, 0.0), &Truncation::new(80).unwrap()).unwrap();
        assert_abs_diff_eq!(s.mean_number(), 16.0, epsilon = 1e-10);
    }

    #[test]
    fn coherent_matches_poisson_pmf() {
        let s = coherent_state(c(6.0, 0.0), &Truncation::new(120).unwrap()).unwrap();
        let pois = Poisson::new(36.0).unwrap();
        assert_abs_diff_eq!(s.amps()[36].norm_sqr(), pois.pmf(36), epsilon = 1e-14);
        for n in 0..=110 {
            assert_abs_diff_eq!(s.amps()[n].norm_sqr(), pois.pmf(n as u64), epsilon = 1e-12);
        }
    }

    #[test]
    fn large_amplitude_does_not_overflow() {
        let trunc = Truncation::recommended(14.0, []);
        assert!(trunc.n_max > 170);
        let s = coherent_state(c(14.0, 0.0), &trunc).unwrap();
        assert!(s.amps().iter().all(|a| a.is_finite()));
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn insufficient_truncation_is_rejected() {
        let err = coherent_state(c(6.0, 0.0), &Truncation::new(40).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TruncationTail { .. }));
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(Truncation::recommended(4.0, []).n_max, 76);
        assert_eq!(Truncation::recommended(6.0, [0.0532]).n_max, 118);
        assert!(Truncation::new(0).is_err());
    }

    #[test]
    fn q_moments() {
        let trunc = Truncation::new(80).unwrap();
        let s = coherent_state(c(4.0, 0.0), &trunc).unwrap();
        assert_abs_diff_eq!(expect_q_moment(&s, 1).unwrap(), 4.0 * 2f64.sqrt(), epsilon = 1e-10);
        let vac = StateVector::vacuum(&trunc);
        assert_abs_diff_eq!(expect_q_moment(&vac, 2).unwrap(), 0.5, epsilon = 1e-14);
        let s = coherent_state(c(2.0, 1.0), &trunc).unwrap();
        assert_abs_diff_eq!(expect_q_moment(&s, 1).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-10);
        // ⟨q̂²⟩ = 2(Re α)² + 1/2 for a coherent state
        assert_abs_diff_eq!(expect_q_moment(&s, 2).unwrap(), 8.5, epsilon = 1e-9);
        assert!(matches!(expect_q_moment(&s, 3), Err(Error::UnsupportedPower(3))));
    }

    #[test]
    fn ladder_algebra_is_integer_exact() {
        let trunc = Truncation::new(30).unwrap();
        for n in 0..30 {
            let s = StateVector::number(n, &trunc).unwrap();
            let mut a_psi = vec![c(0.0, 0.0); 31];
            apply_a(s.amps(), &mut a_psi);
            // a† a|n⟩ via a† = transpose: (a† v)_k = √k v_{k−1}
            let mut out = vec![c(0.0, 0.0); 31];
            for k in 1..31 {
                out[k] = a_psi[k - 1] * (k as f64).sqrt();
            }
            // a then a† returns n|n⟩; a† then a returns (n+1)|n⟩
            assert_abs_diff_eq!(out[n].re, n as f64, epsilon = 1e-12);
            let mut up = vec![c(0.0, 0.0); 31];
            for k in 1..31 {
                up[k] = s.amps()[k - 1] * (k as f64).sqrt();
            }
            let mut back = vec![c(0.0, 0.0); 31];
            apply_a(&up, &mut back);
            assert_abs_diff_eq!(back[n].re, (n + 1) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let lambda = -0.3;
        let trunc = Truncation::new(40).unwrap();
        let beta = c(0.0, lambda);
        let out = apply_displacement(&StateVector::vacuum(&trunc), beta).unwrap();
        let expected = coherent_state(beta, &trunc).unwrap();
        assert_abs_diff_eq!(overlap(&out, &expected).unwrap().norm(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn displacement_shifts_coherent_states_with_phase() {
        let trunc = Truncation::new(60).unwrap();
        let alpha = c(2.0, 0.5);
        let beta = c(0.3, -0.7);
        let out = apply_displacement(&coherent_state(alpha, &trunc).unwrap(), beta).unwrap();
        let target = coherent_state(alpha + beta, &trunc).unwrap();
        let ov = overlap(&target, &out).unwrap();
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-8);
        let phase = ((alpha.conj() * beta - alpha * beta.conj()) * 0.5).exp();
        assert_abs_diff_eq!((ov - phase).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn kick_shifts_momentum_only() {
        let lambda = -3.0 * 0.01 * std::f64::consts::PI.sqrt();
        let trunc = Truncation::new(120).unwrap();
        let s = coherent_state(c(6.0, 0.0), &trunc).unwrap();
        let out = apply_displacement(&s, c(0.0, lambda)).unwrap();
        let dq = expect_q_moment(&out, 1).unwrap() - expect_q_moment(&s, 1).unwrap();
        assert!(dq.abs() < 1e-4);
        assert_abs_diff_eq!(out.expect_p() - s.expect_p(), 2f64.sqrt() * lambda, epsilon = 1e-9);
    }

    #[test]
    fn overlaps() {
        let trunc = Truncation::new(60).unwrap();
        let a = coherent_state(c(2.0, 0.0), &trunc).unwrap();
        let b = coherent_state(c(3.0, 0.0), &trunc).unwrap();
        assert_abs_diff_eq!(overlap(&a, &a).unwrap().re, 1.0, epsilon = 1e-12);
        // |⟨α|β⟩| = exp(−|α−β|²/2)
        assert_abs_diff_eq!(overlap(&a, &b).unwrap().norm(), (-0.5f64).exp(), epsilon = 1e-12);
        let n0 = StateVector::number(0, &trunc).unwrap();
        let n1 = StateVector::number(1, &trunc).unwrap();
        assert_eq!(overlap(&n0, &n1).unwrap(), c(0.0, 0.0));
        let other = StateVector::vacuum(&Truncation::new(10).unwrap());
        assert!(matches!(overlap(&a, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn thermal_tail_levels() {
        // (n̄/(1+n̄))^(N+1) < 1e-10
        let n = thermal_levels_for_tail(9.508331944775794, 1e-10);
        let r: f64 = 9.508331944775794 / 10.508331944775794;
        assert!(r.powi(n as i32 + 1) <= 1e-10);
        assert!(r.powi(n as i32) > 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn displacement_is_unitary(re in -1.0f64..1.0, im in -1.0f64..1.0, a in 0.0f64..3.0) {
                let beta = c(re, im);
                prop_assume!(beta.norm() <= 1.0);
                let trunc = Truncation::recommended(a, [beta.norm()]);
                let s = coherent_state(c(a, 0.0), &trunc).unwrap();
                let out = apply_displacement(&s, beta).unwrap();
                prop_assert!((out.norm() - 1.0).abs() < 1e-9);
            }

            #[test]
            fn coherent_occupation_is_poissonian(a in 0.1f64..7.0) {
                let trunc = Truncation::recommended(a, []);
                let s = coherent_state(c(a, 0.0), &trunc).unwrap();
                let pois = Poisson::new(a * a).unwrap();
                for n in 0..=trunc.n_max - 10 {
                    prop_assert!((s.amps()[n].norm_sqr() - pois.pmf(n as u64)).abs() < 1e-12);
                }
            }
        }
    }
}
