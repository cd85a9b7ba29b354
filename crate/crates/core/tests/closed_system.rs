use kerr_echo::analysis::fit_collapse_time;
use kerr_echo::analytic::q_free;
use kerr_echo::dynamics::{
    free_propagate, linspace, recommended_truncation, run_kicked_scenario, Excitation, KickSpec, PulseSpec,
    ScenarioOptions, SystemParams,
};
use kerr_echo::fock::{coherent_state, overlap, Truncation};
use kerr_echo::{C64, T_REV};

fn coherent(alpha0: f64, n_max: usize) -> kerr_echo::fock::StateVector {
    coherent_state(C64::new(alpha0, 0.0), &Truncation::new(n_max).unwrap()).unwrap()
}

fn free_series(alpha0: f64, delta: f64, n_max: usize, times: &[f64]) -> kerr_echo::dynamics::TimeSeries {
    let params = SystemParams::new(delta).unwrap();
    run_kicked_scenario(
        &coherent(alpha0, n_max),
        &[],
        &params,
        times,
        ScenarioOptions::default(),
    )
    .unwrap()
}

#[test]
fn fock_propagation_matches_closed_form() {
    let times = linspace(0.0, T_REV, 1000);
    for (alpha0, delta) in [(1.0, 0.0), (2.0, 0.01), (4.0, 0.0), (6.0, 0.01)] {
        let n_max = recommended_truncation(alpha0, &[]).n_max;
        let s = free_series(alpha0, delta, n_max, &times);
        let worst = times
            .iter()
            .zip(&s.q1)
            .map(|(&t, q)| (q - q_free(t, C64::new(alpha0, 0.0), delta)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "α₀ = {alpha0}, Δ = {delta}: L∞ = {worst:e}");
    }
}

#[test]
fn state_returns_after_one_revival_period() {
    let params = SystemParams::new(0.0).unwrap();
    let psi0 = coherent(4.0, 80);
    for t in [0.0, 0.3, 1.1] {
        let a = free_propagate(&psi0, t, &params);
        let b = free_propagate(&psi0, t + T_REV, &params);
        let f = overlap(&a, &b).unwrap().norm();
        assert!(f > 1.0 - 1e-10, "t = {t}: fidelity {f}");
    }
}

#[test]
fn detuning_rotates_the_revived_state() {
    // n² − n is even, so after T_rev only the e^{−iΔnπ} factor survives
    let (alpha0, delta) = (3.0, 0.37);
    let params = SystemParams::new(delta).unwrap();
    let trunc = Truncation::new(60).unwrap();
    let psi0 = coherent_state(C64::new(alpha0, 0.0), &trunc).unwrap();
    let back = free_propagate(&psi0, T_REV, &params);
    let rotated = coherent_state(C64::from_polar(alpha0, -delta * T_REV), &trunc).unwrap();
    assert!(overlap(&rotated, &back).unwrap().norm() > 1.0 - 1e-10);
    assert!(overlap(&psi0, &back).unwrap().norm() < 0.9);
}

#[test]
fn collapse_constant_is_inverse_twice_amplitude() {
    for alpha0 in [4.0, 6.0] {
        let times = linspace(0.0, 0.3, 3001);
        let n_max = recommended_truncation(alpha0, &[]).n_max;
        let s = free_series(alpha0, 0.0, n_max, &times);
        let tc = fit_collapse_time(&s, 0.0, 0.3).unwrap();
        let want = 1.0 / (2.0 * alpha0);
        assert!(
            (tc / want - 1.0).abs() < 0.05,
            "α₀ = {alpha0}: fitted {tc}, want {want}"
        );
    }
}

#[test]
fn short_pulses_converge_to_the_impulsive_kick() {
    let alpha0 = 4.0;
    let params = SystemParams::new(0.01).unwrap();
    let lambda = -0.02;
    let kick: Excitation = KickSpec::new(lambda, 0.8).unwrap().into();
    let trunc = recommended_truncation(alpha0, &[kick]);
    let psi0 = coherent_state(C64::new(alpha0, 0.0), &trunc).unwrap();
    let times = linspace(1.0, 3.0, 801);
    let reference = run_kicked_scenario(&psi0, &[kick], &params, &times, ScenarioOptions::default()).unwrap();

    let mut errors = Vec::new();
    for sigma in [0.04, 0.02, 0.01] {
        // same integrated strength λ = −E₀σ√π
        let e0 = -lambda / (sigma * std::f64::consts::PI.sqrt());
        let pulse: Excitation = PulseSpec::new(e0, sigma, 0.8).unwrap().into();
        let s = run_kicked_scenario(&psi0, &[pulse], &params, &times, ScenarioOptions::default()).unwrap();
        let linf =
            s.q1.iter()
                .zip(&reference.q1)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        errors.push(linf);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn kicked_norm_is_preserved() {
    let pulse: Excitation = PulseSpec::new(3.0, 0.01, 0.5).unwrap().into();
    let trunc = recommended_truncation(6.0, &[pulse]);
    let psi0 = coherent_state(C64::new(6.0, 0.0), &trunc).unwrap();
    let params = SystemParams::new(0.01).unwrap();
    let s = run_kicked_scenario(
        &psi0,
        &[pulse],
        &params,
        &linspace(0.0, 3.4, 341),
        ScenarioOptions::default(),
    )
    .unwrap();
    for n in &s.norm_or_trace {
        assert!((n - 1.0).abs() < 1e-9, "norm {n}");
    }
}
