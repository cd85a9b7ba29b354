//! Closed-form expressions for `⟨q̂⟩(t)` of an initially coherent state.
//!
//! After a kick of strength `λ` at time `τ` the mean coordinate is a sum of
//! terms `c_j(t) exp[z(t + jτ)] + c.c.` with `z(t) = α₀² e^{−2it}`. Each factor
//! `|exp[z(t + jτ)]|` peaks whenever `t + jτ` is a multiple of `π`, which is what
//! places every echo and revival in time. The coefficients are kept to second
//! order in `λ`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;

use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// `z(t) = α₀² e^{−2it}` for complex `α₀` (uses `|α₀|²`).
pub fn z_of(t: f64, alpha0_abs_sq: f64) -> C64 {
    C64::from_polar(alpha0_abs_sq, -2.0 * t)
}

/// Free evolution:
/// `(e^{−|α₀|²}/√2) [α₀ exp(|α₀|² e^{−2it} − iΔt) + c.c.]`.
pub fn q_free(t: f64, alpha0: C64, delta: f64) -> f64 {
    let n = alpha0.norm_sqr();
    // e^{−|α|²} folded into the exponent so large amplitudes do not underflow
    let exponent = z_of(t, n) - n - I * (delta * t);
    SQRT_2 * (alpha0 * exponent.exp()).re
}

/// Short-time expansion of [`q_free`] around a revival:
/// `√2 e^{−2|α₀|²t²} Re[α₀ e^{−i(2|α₀|²+Δ)t}]`.
pub fn q_near_revival(t_local: f64, alpha0: C64, delta: f64) -> f64 {
    let n = alpha0.norm_sqr();
    let omega = 2.0 * n + delta;
    let carrier = alpha0.re * (omega * t_local).cos() + alpha0.im * (omega * t_local).sin();
    SQRT_2 * (-2.0 * n * t_local * t_local).exp() * carrier
}

/// Parameters of the perturbative expansion. The amplitude is real and nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationContext {
    pub alpha0: f64,
    pub delta: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl PerturbationContext {
    pub fn new(alpha0: f64, delta: f64, tau: f64, lambda: f64) -> Result<Self> {
        if ![alpha0, delta, tau, lambda].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("perturbation parameters must be finite".into()));
        }
        if alpha0 == 0.0 {
            return Err(Error::InvalidParameter("expansion needs a nonzero amplitude".into()));
        }
        if tau < 0.0 {
            return Err(Error::InvalidParameter(format!("kick time must be ≥ 0, got {tau}")));
        }
        Ok(Self {
            alpha0,
            delta,
            tau,
            lambda,
        })
    }

    /// Accepts a complex amplitude only if it is real.
    pub fn from_complex(alpha0: C64, delta: f64, tau: f64, lambda: f64) -> Result<Self> {
        if alpha0.im != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "the expansion assumes a real amplitude, got {alpha0}"
            )));
        }
        Self::new(alpha0.re, delta, tau, lambda)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    fn z(&self, t: f64) -> C64 {
        z_of(t, self.alpha0 * self.alpha0)
    }
}

/// Prefactors `A_j`, `B_j` (`j = −2..=2`) and `C_{j1,j2}` (`j1, j2 = ±1`) at a
/// fixed time, together with the polynomial families `g_j`, `h_j`, `w_{j1,j2}`.
///
/// The stored prefactors omit the common factor `e^{−α₀²}`, which is applied
/// together with `e^{z}` to avoid underflow; [`CoefficientSet::a`] and
/// friends restore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub t: f64,
    pub ctx: PerturbationContext,
    a_red: [C64; 5],
    b_red: [C64; 5],
    c_red: [[C64; 2]; 2],
}

fn slot(j: i32) -> usize {
    assert!((-2..=2).contains(&j), "index {j} outside −2..=2");
    (j + 2) as usize
}

fn sign_slot(j: i32) -> usize {
    match j {
        -1 => 0,
        1 => 1,
        _ => panic!("index {j} must be ±1"),
    }
}

impl CoefficientSet {
    fn scale(&self) -> f64 {
        (-self.ctx.alpha0 * self.ctx.alpha0).exp()
    }

    pub fn a(&self, j: i32) -> C64 {
        self.a_red[slot(j)] * self.scale()
    }

    pub fn b(&self, j: i32) -> C64 {
        self.b_red[slot(j)] * self.scale()
    }

    pub fn c(&self, j1: i32, j2: i32) -> C64 {
        self.c_red[sign_slot(j1)][sign_slot(j2)] * self.scale()
    }

    pub fn g(&self, j: i32, z: C64) -> C64 {
        let l = self.ctx.lambda;
        match j {
            -2 => -(l * l) / 2.0 * (2.0 * z + z * z),
            -1 => I * l * (z + 1.0),
            0 => -(l * l) * (z + 2.0),
            1 => I * l,
            2 => C64::from(-(l * l) / 2.0),
            _ => panic!("g_{j} is not defined"),
        }
    }

    pub fn h(&self, j: i32, z: C64) -> C64 {
        let l = self.ctx.lambda;
        match j {
            -2 => -(l * l) / 2.0 * z * z,
            -1 => -I * l * z,
            0 => -(l * l) * (z + 1.0),
            1 => -I * l,
            2 => C64::from(-(l * l) / 2.0),
            _ => panic!("h_{j} is not defined"),
        }
    }

    pub fn w(&self, j1: i32, j2: i32, z: C64) -> C64 {
        let l2 = self.ctx.lambda * self.ctx.lambda;
        match (j1, j2) {
            (-1, -1) => l2 * (z * z + 2.0 * z),
            (-1, 1) => l2 * z,
            (1, -1) => l2 * (z + 1.0),
            (1, 1) => C64::from(l2),
            _ => panic!("w_({j1},{j2}) is not defined"),
        }
    }
}

/// Evaluates the prefactors at time `t`.
pub fn coefficient_set(t: f64, ctx: &PerturbationContext) -> CoefficientSet {
    let PerturbationContext {
        alpha0: a,
        delta: d,
        tau,
        ..
    } = *ctx;
    let drift = C64::from_polar(1.0, -d * t);
    let mut a_red = [C64::default(); 5];
    let mut b_red = [C64::default(); 5];
    for j in -2..=2 {
        let jf = j as f64;
        let pow = a.powi(j + 1);
        a_red[slot(j)] = drift * C64::from_polar(pow, -(jf * (1.0 + d) + jf * jf) * tau);
        b_red[slot(j)] = drift * C64::from_polar(pow, -(jf * (1.0 - d) - jf * jf) * tau);
    }
    let mut c_red = [[C64::default(); 2]; 2];
    for j1 in [-1, 1] {
        for j2 in [-1, 1] {
            let (f1, f2) = (j1 as f64, j2 as f64);
            let phase = -(f1 + f2 + f2 * f2 - f1 * f1 + d * (f2 - f1)) * tau;
            c_red[sign_slot(j1)][sign_slot(j2)] = drift * C64::from_polar(a.powi(j1 + j2 + 1), phase);
        }
    }
    CoefficientSet {
        t,
        ctx: *ctx,
        a_red,
        b_red,
        c_red,
    }
}

/// Complex terms of the expansion before adding the complex conjugate.
///
/// `first[0]`, `first[1]` carry `exp[z(t − τ)]` and `exp[z(t + τ)]`;
/// `second[0]`, `second[1]` carry `exp[z(t − 2τ)]` and `exp[z(t + 2τ)]`;
/// `correction` is the `λ²` change of the free term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermDecomposition {
    pub t: f64,
    pub free: C64,
    pub first: [C64; 2],
    pub correction: C64,
    pub second: [C64; 2],
}

impl TermDecomposition {
    /// Contribution `2 Re(term)` of a labelled term to `⟨q̂⟩`.
    pub fn real(term: C64) -> f64 {
        2.0 * term.re
    }

    /// Term with `exp[z(t + jτ)]`, `j ∈ −2..=2`; `j = 0` is the free term
    /// plus its `λ²` correction.
    pub fn term(&self, j: i32) -> C64 {
        match j {
            -2 => self.second[0],
            -1 => self.first[0],
            0 => self.free + self.correction,
            1 => self.first[1],
            2 => self.second[1],
            _ => panic!("term {j} outside −2..=2"),
        }
    }

    pub fn q_first(&self) -> f64 {
        Self::real(self.free + self.first[0] + self.first[1])
    }

    pub fn q_second(&self) -> f64 {
        // λ² terms are added to the first-order sum so that dropping them
        // reproduces `q_first` bit for bit.
        let first = self.free + self.first[0] + self.first[1];
        let second = self.correction + self.second[0] + self.second[1];
        Self::real(first) + Self::real(second)
    }
}

/// Evaluates all terms at total time `t`.
pub fn term_decomposition(t: f64, ctx: &PerturbationContext) -> TermDecomposition {
    let cs = coefficient_set(t, ctx);
    let tau = ctx.tau;
    let a2 = ctx.alpha0 * ctx.alpha0;
    let z = |j: i32| ctx.z(t + j as f64 * tau);
    let env = |zj: C64| (zj - a2).exp() / SQRT_2;
    let (ar, br, cr) = (&cs.a_red, &cs.b_red, &cs.c_red);
    let c = |j1: i32, j2: i32| cr[sign_slot(j1)][sign_slot(j2)];

    let z0 = z(0);
    let free = ar[slot(0)] * env(z0);

    let zm1 = z(-1);
    let zp1 = z(1);
    let first = [
        (ar[slot(-1)] * cs.g(-1, zm1) + br[slot(1)] * cs.h(1, zm1)) * env(zm1),
        (ar[slot(1)] * cs.g(1, zp1) + br[slot(-1)] * cs.h(-1, zp1)) * env(zp1),
    ];

    let correction = (ar[slot(0)] * cs.g(0, z0)
        + br[slot(0)] * cs.h(0, z0)
        + c(1, 1) * cs.w(1, 1, z0)
        + c(-1, -1) * cs.w(-1, -1, z0))
        * env(z0);

    let zm2 = z(-2);
    let zp2 = z(2);
    let second = [
        (ar[slot(-2)] * cs.g(-2, zm2) + br[slot(2)] * cs.h(2, zm2) + c(1, -1) * cs.w(1, -1, zm2)) * env(zm2),
        (ar[slot(2)] * cs.g(2, zp2) + br[slot(-2)] * cs.h(-2, zp2) + c(-1, 1) * cs.w(-1, 1, zp2)) * env(zp2),
    ];

    TermDecomposition {
        t,
        free,
        first,
        correction,
        second,
    }
}

/// `⟨q̂⟩` after the kick to first order in `λ` (valid for `t ≥ τ`).
pub fn q_first_order(t: f64, ctx: &PerturbationContext) -> f64 {
    term_decomposition(t, ctx).q_first()
}

/// `⟨q̂⟩` after the kick to second order in `λ` (valid for `t ≥ τ`).
pub fn q_second_order(t: f64, ctx: &PerturbationContext) -> f64 {
    term_decomposition(t, ctx).q_second()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Whole-protocol curve: free evolution before the kick, the expansion after.
pub fn q_kicked(t: f64, ctx: &PerturbationContext, order: Order) -> f64 {
    if t < ctx.tau {
        return q_free(t, C64::new(ctx.alpha0, 0.0), ctx.delta);
    }
    match order {
        Order::First => q_first_order(t, ctx),
        Order::Second => q_second_order(t, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn fig2() -> PerturbationContext {
        PerturbationContext::new(6.0, 0.01, 0.5, -3.0 * 0.01 * PI.sqrt()).unwrap()
    }

    fn fig3a() -> PerturbationContext {
        PerturbationContext::new(4.0, 0.01, 0.8, -0.5 * 0.02 * PI.sqrt()).unwrap()
    }

    #[test]
    fn free_curve_values() {
        let a = C64::new(4.0, 0.0);
        assert_abs_diff_eq!(q_free(0.0, a, 0.0), 4.0 * SQRT_2, epsilon = 1e-12);
        let v = q_free(PI / 2.0, a, 0.0);
        assert_abs_diff_eq!(v, SQRT_2 * 4.0 * (-32f64).exp(), epsilon = 1e-20);
        assert!((v - 7.2e-14).abs() < 1e-15);
        for t in [0.1, 0.77, 2.5] {
            assert_abs_diff_eq!(q_free(t + PI, a, 0.0), q_free(t, a, 0.0), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(q_free(0.0, C64::new(2.0, 1.0), 0.3), 2.0 * SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn near_revival_expansion() {
        let a = C64::new(4.0, 0.0);
        assert_abs_diff_eq!(q_near_revival(0.0, a, 0.0), 4.0 * SQRT_2, epsilon = 1e-12);
        // envelope e^{−2|α|²t²} reaches 1/e at t = 1/(√2|α|)
        let t_e = 1.0 / (SQRT_2 * 4.0);
        assert_abs_diff_eq!(t_e, 0.1768, epsilon = 1e-4);
        assert_abs_diff_eq!((-2.0 * 16.0 * t_e * t_e).exp(), (-1f64).exp(), epsilon = 1e-12);
        let max = 4.0 * SQRT_2;
        let worst = (0..=1000)
            .map(|k| -0.05 + 0.1 * k as f64 / 1000.0)
            .map(|t| (q_near_revival(t, a, 0.0) - q_free(t, a, 0.0)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.05 * max, "worst {worst}");
    }

    #[test]
    fn near_revival_follows_detuning_sign() {
        // Phase advances as (2|α|² + Δ) t, matching the exact curve.
        let a = C64::new(3.0, 0.0);
        let t = 0.01;
        let exact = q_free(t, a, 5.0);
        let plus = q_near_revival(t, a, 5.0);
        let minus = SQRT_2 * 3.0 * (-18.0 * t * t).exp() * ((18.0 - 5.0) * t).cos();
        assert!((exact - plus).abs() < (exact - minus).abs());
    }

    #[test]
    fn complex_amplitude_rejected() {
        assert!(PerturbationContext::from_complex(C64::new(4.0, 0.1), 0.0, 0.5, 0.1).is_err());
        assert!(PerturbationContext::from_complex(C64::new(4.0, 0.0), 0.0, 0.5, 0.1).is_ok());
        assert!(PerturbationContext::new(4.0, 0.0, -0.5, 0.1).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let ctx = PerturbationContext::new(2.0, 0.3, 0.7, 0.1).unwrap();
        let cs = coefficient_set(1.3, &ctx);
        let one = C64::new(1.0, 0.0);
        assert_abs_diff_eq!((cs.g(-1, one) - C64::new(0.0, 0.2)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((cs.h(-1, one) - C64::new(0.0, -0.1)).norm(), 0.0, epsilon = 1e-15);

        let a0 = 2.0 * (-4f64).exp() * C64::from_polar(1.0, -0.3 * 1.3);
        for tau in [0.0, 0.7, 2.9] {
            let cs = coefficient_set(1.3, &ctx.clone_with_tau(tau));
            assert_abs_diff_eq!((cs.a(0) - a0).norm(), 0.0, epsilon = 1e-15);
        }

        let zero = coefficient_set(0.9, &ctx.with_lambda(0.0));
        let z = C64::new(0.4, -1.1);
        for j in -2..=2 {
            assert_eq!(zero.g(j, z), C64::default());
            assert_eq!(zero.h(j, z), C64::default());
        }
        for (j1, j2) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
            assert_eq!(zero.w(j1, j2, z), C64::default());
        }
    }

    #[test]
    fn constant_polynomials() {
        let cs = coefficient_set(0.2, &fig2());
        let l = fig2().lambda;
        for z in [C64::new(0.0, 0.0), C64::new(3.0, -2.0), C64::new(-36.0, 1.0)] {
            assert_eq!(cs.g(1, z), C64::new(0.0, l));
            assert_eq!(cs.h(1, z), C64::new(0.0, -l));
            assert_eq!(cs.w(1, 1, z), C64::new(l * l, 0.0));
        }
    }

    #[test]
    fn prefactors_match_definitions() {
        let ctx = PerturbationContext::new(1.5, 0.2, 0.6, 0.05).unwrap();
        let t = 1.7;
        let cs = coefficient_set(t, &ctx);
        let (a, d, tau) = (1.5f64, 0.2, 0.6);
        let e = (-a * a).exp();
        for j in -2i32..=2 {
            let jf = j as f64;
            let want_a = a.powi(j + 1) * e * (-I * ((jf * (1.0 + d) + jf * jf) * tau) - I * d * t).exp();
            let want_b = a.powi(j + 1) * e * (-I * ((jf * (1.0 - d) - jf * jf) * tau) - I * d * t).exp();
            assert_abs_diff_eq!((cs.a(j) - want_a).norm(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!((cs.b(j) - want_b).norm(), 0.0, epsilon = 1e-14);
        }
        let want = a.powi(3) * e * (-I * d * t).exp() * (-I * ((1.0 + 1.0 + 1.0 - 1.0) * tau)).exp();
        assert_abs_diff_eq!((cs.c(1, 1) - want).norm(), 0.0, epsilon = 1e-14);
        let want = a.powi(-1) * e * (-I * d * t).exp() * (-I * ((-2.0) * tau)).exp();
        assert_abs_diff_eq!((cs.c(-1, -1) - want).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn unkicked_limit_is_free() {
        let ctx = fig3a().with_lambda(0.0);
        for t in [0.8, 1.3, 2.34, 3.0] {
            assert_abs_diff_eq!(
                q_first_order(t, &ctx),
                q_free(t, C64::new(4.0, 0.0), 0.01),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                q_second_order(t, &ctx),
                q_free(t, C64::new(4.0, 0.0), 0.01),
                epsilon = 1e-15
            );
        }
    }

    fn argmax_of(ctx: &PerturbationContext, t0: f64, t1: f64, pick: impl Fn(&TermDecomposition) -> C64) -> f64 {
        let mut best = (t0, 0.0);
        for k in 0..=20000 {
            let t = t0 + (t1 - t0) * k as f64 / 20000.0;
            let m = pick(&term_decomposition(t, ctx)).norm();
            if m > best.1 {
                best = (t, m);
            }
        }
        best.0
    }

    #[test]
    fn echo_packets_sit_at_predicted_times() {
        let ctx = fig3a();
        let t = argmax_of(&ctx, ctx.tau + 0.2, PI, |d| d.first[1]);
        assert_abs_diff_eq!(t, PI - 0.8, epsilon = 0.02);

        let ctx = fig2();
        let t = argmax_of(&ctx, 0.7, 1.4, |d| d.second[0]);
        assert_abs_diff_eq!(t, 1.0, epsilon = 0.03);
        let t = argmax_of(&ctx, 1.8, 2.4, |d| d.second[1]);
        assert_abs_diff_eq!(t, PI - 1.0, epsilon = 0.03);
        let t = argmax_of(&ctx, 2.4, 2.9, |d| d.first[1]);
        assert_abs_diff_eq!(t, PI - 0.5, epsilon = 0.03);
    }

    #[test]
    fn term_envelopes_are_pi_periodic() {
        let ctx = fig2();
        for t in [0.6, 1.1, 2.0] {
            let a = term_decomposition(t, &ctx);
            let b = term_decomposition(t + PI, &ctx);
            for j in -2..=2 {
                // polynomials and |e^{z}| repeat; only the slow e^{−iΔt} phase moves
                assert_abs_diff_eq!(
                    a.term(j).norm(),
                    b.term(j).norm(),
                    epsilon = 1e-12 * (1.0 + a.term(j).norm())
                );
            }
        }
    }

    #[test]
    fn second_order_difference_scales_quadratically() {
        let base = fig2();
        let diff = |l: f64| {
            let ctx = base.with_lambda(l);
            (0..=4000)
                .map(|k| base.tau + (PI - base.tau) * k as f64 / 4000.0)
                .map(|t| (q_second_order(t, &ctx) - q_first_order(t, &ctx)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = diff(base.lambda) / diff(base.lambda / 2.0);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn piecewise_curve_switches_at_kick() {
        let ctx = fig3a();
        assert_eq!(
            q_kicked(0.3, &ctx, Order::Second),
            q_free(0.3, C64::new(4.0, 0.0), 0.01)
        );
        assert_eq!(q_kicked(1.3, &ctx, Order::First), q_first_order(1.3, &ctx));
    }

    impl PerturbationContext {
        fn clone_with_tau(self, tau: f64) -> Self {
            Self { tau, ..self }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dropping_second_order_terms_gives_first_order(
                a in 0.5f64..7.0, d in -0.5f64..0.5, tau in 0.0f64..3.0,
                l in -0.2f64..0.2, dt in 0.0f64..6.0,
            ) {
                let ctx = PerturbationContext::new(a, d, tau, l).unwrap();
                let terms = term_decomposition(tau + dt, &ctx);
                let first_only = TermDecomposition { correction: C64::default(), second: [C64::default(); 2], ..terms };
                prop_assert_eq!(first_only.q_second(), q_first_order(tau + dt, &ctx));
            }
        }
    }
}
