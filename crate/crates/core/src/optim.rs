//! Per-weight optimizers: gradient descent, gradient descent with momentum,
//! and QuickProp.
//!
//! QuickProp models the loss along every weight as an independent parabola.
//! The curvature comes from a secant through the current and previous
//! gradient, `E'' ≈ (g_t − g_{t−1}) / Δw_{t−1}`, and the step jumps to the
//! parabola's stationary point, `Δw_t = g_t / (g_{t−1} − g_t) · Δw_{t−1}`.
//! Steps that would be too large, infinite, or point uphill are replaced by
//! `μ · Δw_{t−1}` where `μ` is the maximum growth factor. Plain gradient
//! descent seeds the state, and also handles vanishing gradients and weights
//! whose previous step was zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfigOf<T> {
    /// Step length γ of every gradient-descent step.
    pub learning_rate: T,
    /// Maximum growth factor μ.
    pub mu: T,
    pub momentum: T,
    /// Gradients smaller than this in magnitude take a plain descent step.
    pub gradient_threshold: T,
    /// Add `−γ·g` to the QuickProp step when the gradient kept its sign.
    pub same_sign_addition: bool,
}

impl<T: Scalar> Default for OptimConfigOf<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::of(0.01),
            mu: T::of(1.75),
            momentum: T::of(0.9),
            gradient_threshold: T::of(1e-15),
            same_sign_addition: true,
        }
    }
}

impl<T: Scalar> OptimConfigOf<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive(self.learning_rate, "learning_rate")?;
        positive(self.mu, "mu")?;
        positive(self.gradient_threshold, "gradient_threshold")?;
        if !(self.momentum >= T::zero() && self.momentum < T::one()) {
            return Err(Error::Parameter(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// `w − γ·g`.
#[inline]
pub fn gd_step<T: Scalar>(w: T, g: T, learning_rate: T) -> T {
    w - learning_rate * g
}

/// Returns `(w + step, step)` with `step = m·prev_step − γ·g`.
#[inline]
pub fn momentum_step<T: Scalar>(w: T, g: T, prev_step: T, learning_rate: T, momentum: T) -> (T, T) {
    let step = momentum * prev_step - learning_rate * g;
    (w + step, step)
}

/// Secant estimate of the second derivative, `(g_t − g_prev) / dw_prev`.
pub fn second_derivative_estimate<T: Scalar>(g_t: T, g_prev: T, dw_prev: T) -> Result<T> {
    if dw_prev == T::zero() {
        return Err(Error::DegenerateStep);
    }
    Ok((g_t - g_prev) / dw_prev)
}

/// Unclamped stationary point of the secant parabola,
/// `g_t / (g_prev − g_t) · dw_prev`. Infinite or NaN when `g_prev == g_t`.
#[inline]
pub fn secant_step<T: Scalar>(g_t: T, g_prev: T, dw_prev: T) -> T {
    g_t / (g_prev - g_t) * dw_prev
}

/// Which branch of the QuickProp case analysis produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepCase {
    /// Same sign, shrinking slope: the secant step is taken as is.
    Quadratic,
    /// Slope changed sign: the secant step moves back between the two points.
    Reversal,
    /// Step replaced by `μ · dw_prev`.
    Clamped,
}

#[inline]
fn opposite_signs<T: Scalar>(a: T, b: T) -> bool {
    (a > T::zero() && b < T::zero()) || (a < T::zero() && b > T::zero())
}

#[inline]
fn same_sign<T: Scalar>(a: T, b: T) -> bool {
    (a > T::zero() && b > T::zero()) || (a < T::zero() && b < T::zero())
}

/// One QuickProp step for a single weight, before the same-sign gradient
/// addition.
pub fn quickprop_raw_step<T: Scalar>(g_t: T, g_prev: T, dw_prev: T, mu: T) -> Result<(T, StepCase)> {
    if dw_prev == T::zero() {
        return Err(Error::DegenerateStep);
    }
    let clamped = (mu * dw_prev, StepCase::Clamped);
    let limit = mu * dw_prev.abs();
    let case = if opposite_signs(g_t, g_prev) {
        StepCase::Reversal
    } else if g_t.abs() < g_prev.abs() {
        StepCase::Quadratic
    } else {
        return Ok(clamped);
    };
    let dw = secant_step(g_t, g_prev, dw_prev);
    if !dw.is_finite() || dw.abs() > limit {
        return Ok(clamped);
    }
    Ok((dw, case))
}

/// Per-weight QuickProp memory.
#[derive(Clone, Debug, PartialEq)]
pub struct QuickPropStateOf<T> {
    pub prev_gradient: Vec<T>,
    pub prev_step: Vec<T>,
    pub ignited: bool,
}

impl<T: Scalar> QuickPropStateOf<T> {
    pub fn new(num_parameters: usize) -> Self {
        Self {
            prev_gradient: vec![T::zero(); num_parameters],
            prev_step: vec![T::zero(); num_parameters],
            ignited: false,
        }
    }

    pub fn len(&self) -> usize {
        self.prev_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prev_step.is_empty()
    }
}

/// How many weights went through each branch in one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub descent: usize,
    pub quadratic: usize,
    pub reversal: usize,
    pub clamped: usize,
}

impl StepStats {
    fn record(&mut self, case: StepCase) {
        match case {
            StepCase::Quadratic => self.quadratic += 1,
            StepCase::Reversal => self.reversal += 1,
            StepCase::Clamped => self.clamped += 1,
        }
    }
}

fn check_gradient<T: Scalar>(weights: &[T], gradient: &[T], state_len: usize) -> Result<()> {
    if weights.len() != gradient.len() || weights.len() != state_len {
        return Err(Error::dim(
            "optimizer",
            format!(
                "weights {}, gradient {}, state {}",
                weights.len(),
                gradient.len(),
                state_len
            ),
        ));
    }
    if let Some(index) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Applies one QuickProp update to every weight. The weights are left
/// untouched when an error is returned.
pub fn quickprop_update<T: Scalar>(
    weights: &mut [T],
    gradient: &[T],
    state: &mut QuickPropStateOf<T>,
    cfg: &OptimConfigOf<T>,
) -> Result<StepStats> {
    check_gradient(weights, gradient, state.len())?;
    let gamma = cfg.learning_rate;
    let mut stats = StepStats::default();
    for i in 0..weights.len() {
        let g = gradient[i];
        let g_prev = state.prev_gradient[i];
        let dw_prev = state.prev_step[i];
        let dw = if !state.ignited || g.abs() < cfg.gradient_threshold || dw_prev == T::zero() {
            stats.descent += 1;
            -gamma * g
        } else {
            let (mut dw, case) = quickprop_raw_step(g, g_prev, dw_prev, cfg.mu)?;
            stats.record(case);
            if cfg.same_sign_addition && same_sign(g, g_prev) {
                dw -= gamma * g;
            }
            dw
        };
        weights[i] += dw;
        state.prev_gradient[i] = g;
        state.prev_step[i] = dw;
    }
    state.ignited = true;
    Ok(stats)
}

/// Local parabola `p(z) = a·(z − w)² + b·(z − w) + c` around the current weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolaCoeffsOf<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> ParabolaCoeffsOf<T> {
    /// Value at offset `z − w`.
    pub fn eval(&self, offset: T) -> T {
        (self.a * offset + self.b) * offset + self.c
    }

    /// Offset of the stationary point, `−b / (2a)`; `None` when `a == 0`.
    pub fn vertex_offset(&self) -> Option<T> {
        (self.a != T::zero()).then(|| -self.b / (T::of(2.0) * self.a))
    }
}

pub fn parabola_coefficients<T: Scalar>(loss: T, g_t: T, g_prev: T, dw_prev: T) -> Result<ParabolaCoeffsOf<T>> {
    let curvature = second_derivative_estimate(g_t, g_prev, dw_prev)?;
    Ok(ParabolaCoeffsOf {
        a: T::of(0.5) * curvature,
        b: g_t,
        c: loss,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Momentum,
    #[serde(rename = "quickprop")]
    QuickProp,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::QuickProp => "quickprop",
        }
    }

    pub fn build<T: Scalar>(self, cfg: OptimConfigOf<T>, num_parameters: usize) -> Result<Box<dyn Optimizer<T>>> {
        cfg.validate()?;
        Ok(match self {
            OptimizerKind::Gd => Box::new(GradientDescent::new(cfg.learning_rate)),
            OptimizerKind::Momentum => Box::new(Momentum::new(cfg.learning_rate, cfg.momentum, num_parameters)),
            OptimizerKind::QuickProp => Box::new(QuickProp::new(cfg, num_parameters)),
        })
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "momentum" => Ok(OptimizerKind::Momentum),
            "quickprop" => Ok(OptimizerKind::QuickProp),
            other => Err(Error::Parameter(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// A stateful weight-update rule.
pub trait Optimizer<T: Scalar>: Send {
    fn kind(&self) -> OptimizerKind;

    fn step(&mut self, weights: &mut [T], gradient: &[T]) -> Result<()>;
}

#[derive(Clone, Debug)]
pub struct GradientDescent<T> {
    pub learning_rate: T,
}

impl<T: Scalar> GradientDescent<T> {
    pub fn new(learning_rate: T) -> Self {
        Self { learning_rate }
    }
}

impl<T: Scalar> Optimizer<T> for GradientDescent<T> {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Gd
    }

    fn step(&mut self, weights: &mut [T], gradient: &[T]) -> Result<()> {
        check_gradient(weights, gradient, weights.len())?;
        for (w, &g) in weights.iter_mut().zip(gradient) {
            *w = gd_step(*w, g, self.learning_rate);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Momentum<T> {
    pub learning_rate: T,
    pub momentum: T,
    prev_step: Vec<T>,
}

impl<T: Scalar> Momentum<T> {
    pub fn new(learning_rate: T, momentum: T, num_parameters: usize) -> Self {
        Self {
            learning_rate,
            momentum,
            prev_step: vec![T::zero(); num_parameters],
        }
    }
}

impl<T: Scalar> Optimizer<T> for Momentum<T> {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Momentum
    }

    fn step(&mut self, weights: &mut [T], gradient: &[T]) -> Result<()> {
        check_gradient(weights, gradient, self.prev_step.len())?;
        for ((w, &g), prev) in weights.iter_mut().zip(gradient).zip(&mut self.prev_step) {
            let (next, step) = momentum_step(*w, g, *prev, self.learning_rate, self.momentum);
            *w = next;
            *prev = step;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct QuickProp<T> {
    pub config: OptimConfigOf<T>,
    pub state: QuickPropStateOf<T>,
    pub last_stats: StepStats,
}

impl<T: Scalar> QuickProp<T> {
    pub fn new(config: OptimConfigOf<T>, num_parameters: usize) -> Self {
        Self {
            config,
            state: QuickPropStateOf::new(num_parameters),
            last_stats: StepStats::default(),
        }
    }
}

impl<T: Scalar> Optimizer<T> for QuickProp<T> {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::QuickProp
    }

    fn step(&mut self, weights: &mut [T], gradient: &[T]) -> Result<()> {
        self.last_stats = quickprop_update(weights, gradient, &mut self.state, &self.config)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gd_examples() {
        assert!(close(gd_step(1.0, 2.0, 0.1), 0.8, 1e-15));
        assert_eq!(gd_step(1.0, 0.0, 0.1), 1.0);
    }

    #[test]
    fn gd_decreases_w_squared() {
        // E = w², g = 2w, each step multiplies w by 1 − 2·0.1 = 0.8.
        let mut w: f64 = 1.0;
        let mut prev = w * w;
        for _ in 0..50 {
            let next = gd_step(w, 2.0 * w, 0.1);
            assert!(close(next, 0.8 * w, 1e-15));
            w = next;
            assert!(w * w < prev);
            prev = w * w;
        }
    }

    #[test]
    fn momentum_examples() {
        let (w, step) = momentum_step(1.0, 2.0, 0.5, 0.1, 0.0);
        assert_eq!(w, gd_step(1.0, 2.0, 0.1));
        assert!(close(step, -0.2, 1e-15));
        assert!(close(momentum_step(0.0, 0.0, 0.1, 0.01, 0.9).1, 0.09, 1e-15));
        assert!(close(momentum_step(0.0, 1.0, 0.1, 0.01, 0.9).1, 0.08, 1e-15));
    }

    #[test]
    fn second_derivative_examples() {
        assert!(close(second_derivative_estimate(1.0, 2.0, -0.1).unwrap(), 10.0, 1e-12));
        assert_eq!(second_derivative_estimate(0.3, 0.3, 0.2).unwrap(), 0.0);
        assert!(matches!(second_derivative_estimate(1.0, 2.0, 0.0), Err(Error::DegenerateStep)));
    }

    #[test]
    fn raw_step_cases() {
        let (dw, case) = quickprop_raw_step(1.0, 2.0, -0.1, 1.75).unwrap();
        assert_eq!(case, StepCase::Quadratic);
        assert!(close(dw, -0.1, 1e-15));

        let (dw, case) = quickprop_raw_step(-1.0, 2.0, -0.1, 1.75).unwrap();
        assert_eq!(case, StepCase::Reversal);
        assert!(close(dw, 0.1 / 3.0, 1e-15));

        let (dw, case) = quickprop_raw_step(3.0, 2.0, -0.1, 1.75).unwrap();
        assert_eq!(case, StepCase::Clamped);
        assert!(close(dw, -0.175, 1e-15));
    }

    #[test]
    fn raw_step_clamps_oversized_quadratic_steps() {
        // Factor 1.9 / 0.1 = 19 exceeds μ.
        let (dw, case) = quickprop_raw_step(1.9, 2.0, -0.1, 1.75).unwrap();
        assert_eq!(case, StepCase::Clamped);
        assert!(close(dw, -0.175, 1e-15));
        // Equal slopes would be an infinite step.
        let (dw, case) = quickprop_raw_step(2.0, 2.0, 0.1, 1.75).unwrap();
        assert_eq!(case, StepCase::Clamped);
        assert!(close(dw, 0.175, 1e-15));
        assert!(matches!(quickprop_raw_step(1.0, 2.0, 0.0, 1.75), Err(Error::DegenerateStep)));
    }

    #[test]
    fn first_update_is_gradient_descent() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf::new(3);
        let mut w = vec![1.0, -2.0, 0.5];
        let g = vec![0.3, -1.0, 2.0];
        let stats = quickprop_update(&mut w, &g, &mut state, &cfg).unwrap();
        assert_eq!(stats.descent, 3);
        for i in 0..3 {
            assert_eq!(state.prev_step[i], -0.01 * g[i]);
        }
        assert!(state.ignited);
        assert_eq!(state.prev_gradient, g);
    }

    #[test]
    fn quadratic_case_with_same_sign_addition() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf {
            prev_gradient: vec![2.0],
            prev_step: vec![-0.1],
            ignited: true,
        };
        let mut w = vec![0.0];
        let stats = quickprop_update(&mut w, &[1.0], &mut state, &cfg).unwrap();
        assert_eq!(stats.quadratic, 1);
        assert!(close(w[0], -0.11, 1e-15));
        assert!(close(state.prev_step[0], -0.11, 1e-15));
    }

    #[test]
    fn same_sign_addition_can_be_disabled() {
        let cfg = OptimConfigOf::<f64> {
            same_sign_addition: false,
            ..Default::default()
        };
        let mut state = QuickPropStateOf {
            prev_gradient: vec![2.0],
            prev_step: vec![-0.1],
            ignited: true,
        };
        let mut w = vec![0.0];
        quickprop_update(&mut w, &[1.0], &mut state, &cfg).unwrap();
        assert!(close(w[0], -0.1, 1e-15));
    }

    #[test]
    fn tiny_gradient_falls_back_to_descent() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf {
            prev_gradient: vec![2.0],
            prev_step: vec![-0.1],
            ignited: true,
        };
        let mut w = vec![0.0];
        let stats = quickprop_update(&mut w, &[1e-16], &mut state, &cfg).unwrap();
        assert_eq!(stats.descent, 1);
        assert_eq!(w[0], -0.01 * 1e-16);
    }

    #[test]
    fn zero_previous_step_falls_back_to_descent() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf {
            prev_gradient: vec![0.0],
            prev_step: vec![0.0],
            ignited: true,
        };
        let mut w = vec![1.0];
        quickprop_update(&mut w, &[0.5], &mut state, &cfg).unwrap();
        assert_eq!(w[0], 1.0 - 0.005);
    }

    #[test]
    fn non_finite_gradient_is_reported_without_mutation() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf::new(3);
        let mut w = vec![1.0, 2.0, 3.0];
        let err = quickprop_update(&mut w, &[0.0, f64::NAN, 1.0], &mut state, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        assert_eq!(w, vec![1.0, 2.0, 3.0]);
        assert!(!state.ignited);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cfg = OptimConfigOf::<f64>::default();
        let mut state = QuickPropStateOf::new(2);
        assert!(quickprop_update(&mut [0.0; 3], &[0.0; 3], &mut state, &cfg).is_err());
    }

    #[test]
    fn parabola_examples() {
        let p = parabola_coefficients(5.0, 1.0, 2.0, -0.1).unwrap();
        assert!(close(p.a, 5.0, 1e-12));
        assert_eq!((p.b, p.c), (1.0, 5.0));
        assert!(close(p.vertex_offset().unwrap(), -0.1, 1e-15));
        assert!(close(secant_step(1.0, 2.0, -0.1), -0.1, 1e-15));
        let flat = parabola_coefficients(1.0, 0.5, 0.5, 0.2).unwrap();
        assert_eq!(flat.a, 0.0);
        assert_eq!(flat.vertex_offset(), None);
        assert!(parabola_coefficients(1.0, 0.5, 0.4, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        OptimConfigOf::<f64>::default().validate().unwrap();
        for bad in [
            OptimConfigOf::<f64> { learning_rate: 0.0, ..Default::default() },
            OptimConfigOf::<f64> { mu: -1.0, ..Default::default() },
            OptimConfigOf::<f64> { momentum: 1.0, ..Default::default() },
            OptimConfigOf::<f64> { gradient_threshold: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn optimizer_kind_parses() {
        for kind in [OptimizerKind::Gd, OptimizerKind::Momentum, OptimizerKind::QuickProp] {
            assert_eq!(kind.name().parse::<OptimizerKind>().unwrap(), kind);
            let opt = kind.build(OptimConfigOf::<f64>::default(), 4).unwrap();
            assert_eq!(opt.kind(), kind);
        }
        assert!("adam".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn works_in_f32() {
        let cfg = OptimConfigOf::<f32>::default();
        let mut state = QuickPropStateOf::<f32> {
            prev_gradient: vec![2.0],
            prev_step: vec![-0.1],
            ignited: true,
        };
        let mut w = vec![0.0f32];
        quickprop_update(&mut w, &[1.0], &mut state, &cfg).unwrap();
        assert!((w[0] + 0.11).abs() < 1e-6);
    }

    fn nonzero() -> impl Strategy<Value = f64> {
        prop_oneof![-10.0..-1e-3, 1e-3..10.0f64]
    }

    proptest! {
        #[test]
        fn secant_is_exact_on_quadratics(alpha in 0.1..10.0f64, w1 in -5.0..5.0f64, dw in nonzero()) {
            // E = α w², g = 2α w.
            let w0 = w1 - dw;
            let est = second_derivative_estimate(2.0 * alpha * w1, 2.0 * alpha * w0, dw).unwrap();
            prop_assert!((est - 2.0 * alpha).abs() <= 1e-9 * alpha.max(1.0));
        }

        #[test]
        fn vertex_matches_secant_step(loss in -5.0..5.0f64, g_t in nonzero(), g_prev in nonzero(), dw in nonzero()) {
            let p = parabola_coefficients(loss, g_t, g_prev, dw).unwrap();
            prop_assume!(p.a > 0.0);
            let vertex = p.vertex_offset().unwrap();
            let step = secant_step(g_t, g_prev, dw);
            prop_assert!((vertex - step).abs() <= 1e-12 * vertex.abs().max(step.abs()));
        }

        #[test]
        fn step_is_bounded_by_growth_factor(
            g_t in nonzero(), g_prev in nonzero(), dw in nonzero(), mu in 0.5..3.0f64, gamma in 1e-4..0.5f64,
        ) {
            let cfg = OptimConfigOf { learning_rate: gamma, mu, ..Default::default() };
            let mut state = QuickPropStateOf { prev_gradient: vec![g_prev], prev_step: vec![dw], ignited: true };
            let mut w = vec![0.0];
            quickprop_update(&mut w, &[g_t], &mut state, &cfg).unwrap();
            let bound = mu * dw.abs() + gamma * g_t.abs();
            prop_assert!(w[0].abs() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn components_update_independently(
            rows in prop::collection::vec((nonzero(), nonzero(), nonzero(), -1.0..1.0f64), 1..12),
            ignited in any::<bool>(),
        ) {
            let cfg = OptimConfigOf::<f64>::default();
            let mut state = QuickPropStateOf {
                prev_gradient: rows.iter().map(|r| r.1).collect(),
                prev_step: rows.iter().map(|r| r.2).collect(),
                ignited,
            };
            let mut w: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let g: Vec<f64> = rows.iter().map(|r| r.0).collect();
            quickprop_update(&mut w, &g, &mut state, &cfg).unwrap();
            for (i, r) in rows.iter().enumerate() {
                let mut single = QuickPropStateOf { prev_gradient: vec![r.1], prev_step: vec![r.2], ignited };
                let mut wi = vec![r.3];
                quickprop_update(&mut wi, &[r.0], &mut single, &cfg).unwrap();
                prop_assert_eq!(wi[0].to_bits(), w[i].to_bits());
                prop_assert_eq!(single.prev_step[0].to_bits(), state.prev_step[i].to_bits());
            }
        }

        #[test]
        fn gd_decreases_positive_quadratics(alpha in 0.01..10.0f64, target in -5.0..5.0f64, w in -5.0..5.0f64, frac in 0.01..0.99f64) {
            prop_assume!((w - target).abs() > 1e-6);
            let gamma = frac / alpha; // 2αγ = 2·frac ∈ (0, 2)
            let e = |w: f64| alpha * (w - target).powi(2);
            let next = gd_step(w, 2.0 * alpha * (w - target), gamma);
            prop_assert!(e(next) < e(w));
        }
    }
}
