use kerr_echo::analysis::{detect_echoes, DetectorConfig, EchoKind, Observable};
use kerr_echo::classical::{evolve_ensemble, sample_initial_ensemble, DEFAULT_DT};
use kerr_echo::dynamics::{linspace, Excitation, KickSpec, PulseSpec, SystemParams};
use kerr_echo::T_REV;

#[test]
fn narrowing_pulses_approach_the_momentum_shift() {
    // at σ = 0.01 the gap is ≈0.11: particles turn by ωσ ≈ 0.7 rad during the
    // pulse, so the pulse is weaker than the ideal shift on the echo
    let params = SystemParams::new(0.01).unwrap();
    let lambda = -3.0 * 0.01 * std::f64::consts::PI.sqrt();
    let ens = sample_initial_ensemble(6.0, 4000, 7).unwrap();
    let times = linspace(0.0, 1.5, 301);
    let kick = KickSpec::new(lambda, 0.5).unwrap();
    let reference = evolve_ensemble(&ens, &[kick.into()], &params, &times, &[], DEFAULT_DT).unwrap();
    let gaps: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&sigma| {
            let e0 = -lambda / (sigma * std::f64::consts::PI.sqrt());
            let pulse = PulseSpec::new(e0, sigma, 0.5).unwrap();
            let dt = (sigma / 50.0).min(DEFAULT_DT);
            let run = evolve_ensemble(&ens, &[pulse.into()], &params, &times, &[], dt).unwrap();
            run.series
                .q1
                .iter()
                .zip(&reference.series.q1)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[0] / w[1] > 3.0), "{gaps:?}");
    assert!(gaps[2] < 1e-2, "{gaps:?}");
}

#[test]
fn free_particles_keep_their_energy() {
    let params = SystemParams::new(0.01).unwrap();
    let ens = sample_initial_ensemble(4.0, 200, 3).unwrap();
    let e0 = ens.energies(&params);
    let run = evolve_ensemble(&ens, &[], &params, &[1.0], &[], DEFAULT_DT).unwrap();
    for (a, b) in e0.iter().zip(run.final_state.energies(&params)) {
        assert!(((b - a) / a).abs() < 1e-8, "{a} -> {b}");
    }
}

#[test]
fn ensemble_shows_the_classical_echo_only() {
    let params = SystemParams::new(0.01).unwrap();
    let pulse: Excitation = PulseSpec::new(3.0, 0.01, 0.5).unwrap().into();
    let ens = sample_initial_ensemble(6.0, 20_000, 20210501).unwrap();
    let times = linspace(0.0, 2.8, 2801);
    let run = evolve_ensemble(&ens, &[pulse], &params, &times, &[], DEFAULT_DT).unwrap();
    let r = detect_echoes(&run.series, Some(0.5), 6.0, Observable::Q1, &DetectorConfig::default()).unwrap();
    let echo = r.near(1.0, 0.03).expect("classical echo at 2τ");
    assert_eq!(echo.kind, EchoKind::Classical { order: 1 });
    assert!(r.near(T_REV - 0.5, 0.1).is_none(), "{:?}", r.events);
}

#[test]
fn same_seed_same_trajectory() {
    let params = SystemParams::new(0.01).unwrap();
    let pulse: Excitation = PulseSpec::new(3.0, 0.01, 0.5).unwrap().into();
    let times = linspace(0.0, 0.7, 71);
    let run = || {
        let ens = sample_initial_ensemble(6.0, 1000, 11).unwrap();
        evolve_ensemble(&ens, &[pulse], &params, &times, &[], DEFAULT_DT)
            .unwrap()
            .series
    };
    let (a, b) = (run(), run());
    assert_eq!(a.q1, b.q1);
    assert_eq!(a.q2, b.q2);
}
