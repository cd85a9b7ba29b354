//! Echo amplitudes as a function of kick strength.
//!
//! The quantum echo at `T_rev − τ` is first order in the kick strength λ and
//! the classical echo at `2τ` is second order, so on a log-log plot their
//! amplitudes have slopes 1 and 2.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::analysis::linear_fit;
use crate::dynamics::{
    linspace, recommended_truncation, run_kicked_scenario, Excitation, KickSpec, ScenarioOptions, SystemParams,
};
use crate::fock::coherent_state;
use crate::{Error, Result, T_REV};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSetup {
    pub alpha0: f64,
    pub params: SystemParams,
    pub tau: f64,
    /// Samples per echo window.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub lambda: f64,
    pub quantum: f64,
    pub classical: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScaling {
    pub points: Vec<ScalingPoint>,
    pub quantum_slope: f64,
    pub classical_slope: f64,
}

impl ScalingSetup {
    pub fn collapse_time(&self) -> f64 {
        0.5 / self.alpha0.abs()
    }

    /// `(quantum, classical)` echo windows, each `±t_c` around the echo time.
    pub fn windows(&self) -> [(f64, f64); 2] {
        let tc = self.collapse_time();
        let q = T_REV - self.tau;
        let c = 2.0 * self.tau;
        [(q - tc, q + tc), (c - tc, c + tc)]
    }
}

fn peak_abs(times: &[f64], values: &[f64], window: (f64, f64)) -> f64 {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Peak `|⟨q̂⟩|` in each echo window after an impulsive kick of strength λ.
pub fn echo_amplitudes(setup: &ScalingSetup, lambda: f64) -> Result<ScalingPoint> {
    let kick: Excitation = KickSpec::new(lambda, setup.tau)?.into();
    let excitations = [kick];
    let trunc = recommended_truncation(setup.alpha0, &excitations);
    let initial = coherent_state(C64::new(setup.alpha0, 0.0), &trunc)?;
    let [wq, wc] = setup.windows();
    let mut times = linspace(wc.0, wc.1, setup.samples);
    times.extend(linspace(wq.0, wq.1, setup.samples));
    let series = run_kicked_scenario(
        &initial,
        &excitations,
        &setup.params,
        &times,
        ScenarioOptions::default(),
    )?;
    Ok(ScalingPoint {
        lambda,
        quantum: peak_abs(&series.times, &series.q1, wq),
        classical: peak_abs(&series.times, &series.q1, wc),
    })
}

/// Runs one scenario per kick strength (concurrently) and fits log-log slopes.
pub fn lambda_scaling(setup: &ScalingSetup, lambdas: &[f64]) -> Result<LambdaScaling> {
    if lambdas.len() < 2 || lambdas.iter().any(|l| !(l.is_finite() && *l != 0.0)) {
        return Err(Error::InvalidParameter(
            "λ sweep needs at least two finite nonzero strengths".into(),
        ));
    }
    let [wq, wc] = setup.windows();
    if wc.1 >= wq.0 {
        return Err(Error::InvalidParameter(format!(
            "classical window {wc:?} overlaps quantum window {wq:?}"
        )));
    }
    let points = lambdas
        .par_iter()
        .map(|&l| echo_amplitudes(setup, l))
        .collect::<Result<Vec<_>>>()?;
    let ln_l: Vec<f64> = points.iter().map(|p| p.lambda.abs().ln()).collect();
    let ln_q: Vec<f64> = points.iter().map(|p| p.quantum.ln()).collect();
    let ln_c: Vec<f64> = points.iter().map(|p| p.classical.ln()).collect();
    Ok(LambdaScaling {
        quantum_slope: linear_fit(&ln_l, &ln_q).0,
        classical_slope: linear_fit(&ln_l, &ln_c).0,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_surround_echo_times() {
        let s = ScalingSetup {
            alpha0: 6.0,
            params: SystemParams::new(0.01).unwrap(),
            tau: 0.5,
            samples: 10,
        };
        let [q, c] = s.windows();
        assert!((0.5 * (q.0 + q.1) - (T_REV - 0.5)).abs() < 1e-15);
        assert!((0.5 * (c.0 + c.1) - 1.0).abs() < 1e-15);
        assert!((c.1 - c.0 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn slopes_at_small_alpha() {
        // α₀ = 3 keeps this fast; the classical echo is still well separated
        let s = ScalingSetup {
            alpha0: 3.0,
            params: SystemParams::new(0.0).unwrap(),
            tau: 0.6,
            samples: 200,
        };
        let r = lambda_scaling(&s, &[0.01, 0.02, 0.04]).unwrap();
        assert!((r.quantum_slope - 1.0).abs() < 0.1, "{r:?}");
        assert!((r.classical_slope - 2.0).abs() < 0.15, "{r:?}");
    }

    #[test]
    fn rejects_degenerate_sweeps() {
        let s = ScalingSetup {
            alpha0: 3.0,
            params: SystemParams::new(0.0).unwrap(),
            tau: 0.6,
            samples: 20,
        };
        assert!(lambda_scaling(&s, &[0.01]).is_err());
        assert!(lambda_scaling(&s, &[0.01, 0.0]).is_err());
    }
}
