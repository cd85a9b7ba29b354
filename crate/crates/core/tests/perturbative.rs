use kerr_echo::analysis::{detect_echoes, DetectorConfig, EchoKind, Observable};
use kerr_echo::analytic::{q_kicked, Order, PerturbationContext};
use kerr_echo::dynamics::{
    linspace, recommended_truncation, run_kicked_scenario, Excitation, KickSpec, PulseSpec, ScenarioOptions,
    SystemParams, TimeSeries,
};
use kerr_echo::fock::coherent_state;
use kerr_echo::scaling::{lambda_scaling, ScalingSetup};
use kerr_echo::{C64, T_REV};

fn numeric(alpha0: f64, delta: f64, excitation: Excitation, times: &[f64]) -> TimeSeries {
    let params = SystemParams::new(delta).unwrap();
    let trunc = recommended_truncation(alpha0, &[excitation]);
    let psi0 = coherent_state(C64::new(alpha0, 0.0), &trunc).unwrap();
    run_kicked_scenario(&psi0, &[excitation], &params, times, ScenarioOptions::default()).unwrap()
}

fn worst_gap(series: &TimeSeries, ctx: &PerturbationContext, order: Order) -> f64 {
    series
        .times
        .iter()
        .zip(&series.q1)
        .map(|(&t, q)| (q - q_kicked(t, ctx, order)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn first_order_curve_follows_weak_pulse() {
    let pulse = PulseSpec::new(0.5, 0.02, 0.8).unwrap();
    let times = linspace(0.0, 3.3, 3301);
    let s = numeric(4.0, 0.01, pulse.into(), &times);
    let ctx = PerturbationContext::new(4.0, 0.01, 0.8, pulse.kick_strength()).unwrap();
    let peak = s.q1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let gap = worst_gap(&s, &ctx, Order::First);
    assert!(gap <= 0.05 * peak, "L∞ {gap} vs max {peak}");
}

#[test]
fn expansion_error_drops_with_the_next_power_of_lambda() {
    // impulsive kicks isolate the truncation error of the expansion
    let times = linspace(0.0, 3.4, 1701);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for lambda in [-0.0133, -0.0266, -0.0532] {
        let s = numeric(6.0, 0.01, KickSpec::new(lambda, 0.5).unwrap().into(), &times);
        let ctx = PerturbationContext::new(6.0, 0.01, 0.5, lambda).unwrap();
        first.push(worst_gap(&s, &ctx, Order::First));
        second.push(worst_gap(&s, &ctx, Order::Second));
    }
    for w in first.windows(2) {
        let ratio = w[1] / w[0];
        assert!((3.0..5.0).contains(&ratio), "first order: {first:?}");
    }
    for w in second.windows(2) {
        let ratio = w[1] / w[0];
        assert!((6.0..10.0).contains(&ratio), "second order: {second:?}");
    }
}

#[test]
fn echo_amplitudes_scale_with_their_order() {
    let setup = ScalingSetup {
        alpha0: 6.0,
        params: SystemParams::new(0.01).unwrap(),
        tau: 0.5,
        samples: 401,
    };
    let r = lambda_scaling(&setup, &[0.01, 0.02, 0.04]).unwrap();
    assert!((r.quantum_slope - 1.0).abs() <= 0.1, "{r:?}");
    assert!((r.classical_slope - 2.0).abs() <= 0.15, "{r:?}");
}

fn synthetic(ctx: &PerturbationContext, t_end: f64, n: usize) -> TimeSeries {
    let mut s = TimeSeries::with_capacity(n);
    for t in linspace(0.0, t_end, n) {
        s.push(t, q_kicked(t, ctx, Order::Second), 0.0, 1.0);
    }
    s
}

#[test]
fn detector_finds_every_echo_in_the_expansion() {
    let ctx = PerturbationContext::new(6.0, 0.01, 0.5, -0.0532).unwrap();
    let s = synthetic(&ctx, 3.4, 3401);
    let r = detect_echoes(&s, Some(0.5), 6.0, Observable::Q1, &DetectorConfig::default()).unwrap();
    let expect = [
        (1.0, EchoKind::Classical { order: 1 }, 0.03),
        (T_REV - 1.0, EchoKind::Quantum { order: 2 }, 0.02),
        (T_REV - 0.5, EchoKind::Quantum { order: 1 }, 0.02),
        (T_REV, EchoKind::Revival, 0.02),
    ];
    for (t, kind, tol) in expect {
        let e = r
            .near(t, tol)
            .unwrap_or_else(|| panic!("nothing near {t}: {:?}", r.events));
        assert_eq!(e.kind, kind);
    }
    assert!(r.of_kind(EchoKind::Unclassified).next().is_none(), "{:?}", r.events);
}

#[test]
fn detector_times_the_weak_pulse_echo() {
    let pulse = PulseSpec::new(0.5, 0.02, 0.8).unwrap();
    let s = numeric(4.0, 0.01, pulse.into(), &linspace(0.0, 3.3, 3301));
    let r = detect_echoes(&s, Some(0.8), 4.0, Observable::Q1, &DetectorConfig::default()).unwrap();
    let echo = r.of_kind(EchoKind::Quantum { order: 1 }).next().expect("quantum echo");
    assert!((echo.time - (T_REV - 0.8)).abs() < 0.03, "{echo:?}");
}
