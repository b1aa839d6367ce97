//! Normalized gradient descent with optional projection onto a ball, its
//! iteration budget, and a plain projected gradient descent used as a reference.

use std::fmt;

use crate::error::{Error, Result};
use crate::loss::{check_radius, Alpha};
use crate::numerics::{project_ball_unchecked, Scalar, Vector};
use crate::risk::{fmt17, risk_and_grad, Dataset, MASK_SLACK};

/// Gradient norms below this stop the run: the normalized step is undefined.
pub const ZERO_GRAD_TOL: f64 = 1e-14;

/// Value and gradient oracle.
pub trait Objective<T: Scalar> {
    fn value_grad(&self, theta: &Vector<T>) -> Result<(T, Vector<T>)>;
}

impl<T: Scalar, F> Objective<T> for F
where
    F: Fn(&Vector<T>) -> Result<(T, Vector<T>)>,
{
    fn value_grad(&self, theta: &Vector<T>) -> Result<(T, Vector<T>)> {
        self(theta)
    }
}

/// Empirical α-risk as an [`Objective`].
#[derive(Clone, Copy, Debug)]
pub struct RiskObjective<'a, T> {
    pub alpha: Alpha<T>,
    pub data: &'a Dataset<T>,
}

impl<T: Scalar> Objective<T> for RiskObjective<'_, T> {
    fn value_grad(&self, theta: &Vector<T>) -> Result<(T, Vector<T>)> {
        risk_and_grad(self.alpha, theta, self.data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NgdConfig<T> {
    eta: T,
    iters: usize,
    radius: Option<T>,
    record_trace: bool,
}

impl<T: Scalar> NgdConfig<T> {
    pub fn new(eta: T, iters: usize, radius: Option<T>, record_trace: bool) -> Result<Self> {
        if !(eta > T::zero() && eta.is_finite()) {
            return Err(Error::usage(format!("learning rate must be positive and finite, got {eta}")));
        }
        if iters == 0 {
            return Err(Error::usage("iteration count must be at least 1"));
        }
        if let Some(r) = radius {
            check_radius(r)?;
        }
        Ok(NgdConfig {
            eta,
            iters,
            radius,
            record_trace,
        })
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn iters(&self) -> usize {
        self.iters
    }

    pub fn radius(&self) -> Option<T> {
        self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    /// The gradient at iterate `t` (1-based) had norm below [`ZERO_GRAD_TOL`].
    ZeroGradient { iteration: usize },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Completed => f.write_str("completed"),
            StopReason::ZeroGradient { iteration } => write!(f, "zero gradient at iterate {iteration}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub t: usize,
    pub theta: Vector<T>,
    pub value: T,
    pub grad_norm: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NgdResult<T> {
    /// First iterate attaining `best_value`.
    pub best_theta: Vector<T>,
    pub best_value: T,
    /// 1-based index of `best_theta`.
    pub best_index: usize,
    /// The iterate after the last update, never evaluated.
    pub final_theta: Vector<T>,
    /// Iterates evaluated.
    pub evaluated: usize,
    pub trace: Option<Vec<TraceRow<T>>>,
    pub stop_reason: StopReason,
}

/// Runs `θ_{t+1} = θ_t - η ∇f(θ_t)/‖∇f(θ_t)‖` for `t = 1..T`, projecting onto the
/// ball when a radius is set, and returns the best of `θ_1..θ_T`.
pub fn ngd_run<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    theta1: &Vector<T>,
    config: &NgdConfig<T>,
) -> Result<NgdResult<T>> {
    if let Some(r) = config.radius {
        let n = theta1.norm();
        if n > r + T::lit(MASK_SLACK) {
            return Err(Error::usage(format!("starting point has norm {n}, outside the ball of radius {r}")));
        }
    }
    let mut theta = theta1.clone();
    let mut best: Option<(Vector<T>, T, usize)> = None;
    let mut trace = config.record_trace.then(Vec::new);
    let mut stop_reason = StopReason::Completed;
    let mut evaluated = 0;
    for t in 1..=config.iters {
        let (value, grad) = objective.value_grad(&theta)?;
        let gnorm = grad.norm();
        if !value.is_finite() || !gnorm.is_finite() {
            return Err(Error::numeric(format!(
                "objective is not finite at iterate {t}, theta = {:?}: value {value}, gradient norm {gnorm}",
                theta.as_slice()
            )));
        }
        evaluated = t;
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((theta.clone(), value, t));
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(TraceRow {
                t,
                theta: theta.clone(),
                value,
                grad_norm: gnorm,
            });
        }
        if gnorm < T::lit(ZERO_GRAD_TOL) {
            stop_reason = StopReason::ZeroGradient { iteration: t };
            break;
        }
        let next = theta.sub(&grad.scaled(config.eta / gnorm));
        theta = match config.radius {
            Some(r) => project_ball_unchecked(&next, r),
            None => next,
        };
    }
    let (best_theta, best_value, best_index) = best.expect("at least one iterate is evaluated");
    Ok(NgdResult {
        best_theta,
        best_value,
        best_index,
        final_theta: theta,
        evaluated,
        trace,
        stop_reason,
    })
}

/// `⌈κ² dist² / ε²⌉`, at least 1.
pub fn iteration_budget<T: Scalar>(epsilon: T, kappa: T, dist: T) -> Result<usize> {
    for (name, v) in [("epsilon", epsilon), ("kappa", kappa)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(dist >= T::zero() && dist.is_finite()) {
        return Err(Error::domain(format!("distance must be finite and nonnegative, got {dist}")));
    }
    let ratio = kappa * dist / epsilon;
    let t = (ratio * ratio).ceil().as_f64();
    if t > usize::MAX as f64 {
        return Err(Error::usage(format!("iteration budget {t:e} is not representable")));
    }
    Ok((t as usize).max(1))
}

/// Fixed-step projected gradient descent. Returns the best visited point and its value.
pub fn projected_gd<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    theta1: &Vector<T>,
    step: T,
    iters: usize,
    radius: T,
) -> Result<(Vector<T>, T)> {
    check_radius(radius)?;
    let mut theta = project_ball_unchecked(theta1, radius);
    let mut best: Option<(Vector<T>, T)> = None;
    for t in 0..=iters {
        let (value, grad) = objective.value_grad(&theta)?;
        if !value.is_finite() {
            return Err(Error::numeric(format!("objective is not finite at step {t}: {value}")));
        }
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((theta.clone(), value));
        }
        if t == iters {
            break;
        }
        theta = project_ball_unchecked(&theta.sub(&grad.scaled(step)), radius);
    }
    Ok(best.expect("at least one evaluation"))
}

/// CSV with header `t,theta_1..theta_d,value,grad_norm`.
pub fn trace_csv<T: Scalar>(trace: &[TraceRow<T>]) -> String {
    let d = trace.first().map_or(0, |r| r.theta.dim());
    let mut s = String::from("t,");
    for i in 1..=d {
        s.push_str(&format!("theta_{i},"));
    }
    s.push_str("value,grad_norm\n");
    for row in trace {
        s.push_str(&row.t.to_string());
        for &v in row.theta.iter() {
            s.push(',');
            s.push_str(&fmt17(v));
        }
        s.push_str(&format!(",{},{}\n", fmt17(row.value), fmt17(row.grad_norm)));
    }
    s
}
