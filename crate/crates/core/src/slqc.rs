//! Strict local quasi-convexity: pointwise verdicts, sampled sweeps, the
//! strong-convexity modulus, the gradient-infimum estimate `I`, and the
//! evolution of `(ε, ε/κ)` as α moves away from α₀.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::{check_radius, lambda_strong, lipschitz_c, lipschitz_j, lipschitz_l, Alpha};
use crate::numerics::{min_eigen_sym, RngState, Scalar, SymMatrix, Vector};
use crate::risk::{empirical_risk, risk_and_grad, Dataset, MASK_SLACK};

/// Absolute slack on both SLQC inequalities.
pub const SLQC_TOL: f64 = 1e-9;

/// Points drawn per child stream in [`estimate_i`].
const I_CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct SlqcParams<T> {
    epsilon: T,
    kappa: T,
    theta0: Vector<T>,
}

impl<T: Scalar> SlqcParams<T> {
    /// `ε` may be `+∞`, which makes every point pass on the value gap.
    pub fn new(epsilon: T, kappa: T, theta0: Vector<T>) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(kappa > T::zero() && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        Ok(SlqcParams { epsilon, kappa, theta0 })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn theta0(&self) -> &Vector<T> {
        &self.theta0
    }

    /// `ρ = ε/κ`.
    pub fn rho(&self) -> T {
        self.epsilon / self.kappa
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlqcCondition {
    ValueGap,
    GradientCone,
    Neither,
}

impl fmt::Display for SlqcCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlqcCondition::ValueGap => "value_gap",
            SlqcCondition::GradientCone => "gradient_cone",
            SlqcCondition::Neither => "neither",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlqcDiagnostics<T> {
    /// `R̂(θ) - R̂(θ₀)`.
    pub value_gap: T,
    /// `⟨-∇R̂(θ), θ₀ - θ⟩`.
    pub inner: T,
    /// `ρ ‖∇R̂(θ)‖`.
    pub rho_grad_norm: T,
    /// `‖θ - θ₀‖`.
    pub distance: T,
    /// `‖θ - θ₀‖ ≤ ρ`: the cone condition cannot hold there for a nonzero gradient.
    pub interior: bool,
}

impl<T: Scalar> SlqcDiagnostics<T> {
    /// The closed-form minimum of the cone inequality, `inner - ρ‖g‖`.
    pub fn cone_margin(&self) -> T {
        self.inner - self.rho_grad_norm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlqcVerdict<T> {
    pub point: Vector<T>,
    pub satisfied_by: SlqcCondition,
    pub diagnostics: SlqcDiagnostics<T>,
}

/// `min_{θ' ∈ B(θ₀, ρ)} ⟨-g, θ' - θ⟩ = ⟨-g, θ₀ - θ⟩ - ρ‖g‖`.
pub fn ball_min_inner<T: Scalar>(g: &Vector<T>, theta: &Vector<T>, theta0: &Vector<T>, rho: T) -> T {
    -g.dot(&theta0.sub(theta)) - rho * g.norm()
}

fn check_in_ball<T: Scalar>(theta: &Vector<T>, r: T, what: &str) -> Result<()> {
    let n = theta.norm();
    if n > r + T::lit(MASK_SLACK) {
        return Err(Error::usage(format!("{what} has norm {n}, outside the ball of radius {r}")));
    }
    Ok(())
}

/// Verdicts for one `(α, ε, κ, θ₀)` with the reference risk computed once.
#[derive(Clone, Debug)]
pub struct SlqcChecker<'a, T> {
    alpha: Alpha<T>,
    params: SlqcParams<T>,
    data: &'a Dataset<T>,
    radius: T,
    risk0: T,
}

impl<'a, T: Scalar> SlqcChecker<'a, T> {
    pub fn new(alpha: Alpha<T>, params: SlqcParams<T>, data: &'a Dataset<T>, radius: T) -> Result<Self> {
        check_radius(radius)?;
        check_in_ball(&params.theta0, radius, "theta0")?;
        let risk0 = empirical_risk(alpha, &params.theta0, data)?;
        Ok(SlqcChecker {
            alpha,
            params,
            data,
            radius,
            risk0,
        })
    }

    pub fn params(&self) -> &SlqcParams<T> {
        &self.params
    }

    pub fn check(&self, theta: &Vector<T>) -> Result<SlqcVerdict<T>> {
        check_in_ball(theta, self.radius, "theta")?;
        let (risk, grad) = risk_and_grad(self.alpha, theta, self.data)?;
        let tol = T::lit(SLQC_TOL);
        let rho = self.params.rho();
        let theta0 = &self.params.theta0;
        let gnorm = grad.norm();
        let distance = theta.distance(theta0);
        let diagnostics = SlqcDiagnostics {
            value_gap: risk - self.risk0,
            inner: -grad.dot(&theta0.sub(theta)),
            rho_grad_norm: rho * gnorm,
            distance,
            interior: distance <= rho,
        };
        let satisfied_by = if diagnostics.value_gap <= self.params.epsilon + tol {
            SlqcCondition::ValueGap
        } else if !diagnostics.interior && gnorm > T::zero() && diagnostics.cone_margin() >= -tol {
            SlqcCondition::GradientCone
        } else {
            SlqcCondition::Neither
        };
        Ok(SlqcVerdict {
            point: theta.clone(),
            satisfied_by,
            diagnostics,
        })
    }

    /// Checks every point in parallel. Verdicts come back in input order.
    pub fn check_all(&self, thetas: &[Vector<T>]) -> Result<Vec<SlqcVerdict<T>>> {
        thetas.par_iter().map(|t| self.check(t)).collect()
    }
}

/// One-shot form of [`SlqcChecker::check`].
pub fn check_slqc_point<T: Scalar>(
    alpha: Alpha<T>,
    theta: &Vector<T>,
    params: &SlqcParams<T>,
    data: &Dataset<T>,
    radius: T,
) -> Result<SlqcVerdict<T>> {
    SlqcChecker::new(alpha, params.clone(), data, radius)?.check(theta)
}

/// Counts and worst cases over a set of verdicts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub value_gap: usize,
    pub gradient_cone: usize,
    pub neither: usize,
    /// Neither verdicts at points within `ρ` of `θ₀`.
    pub neither_interior: usize,
    pub max_value_gap: f64,
    /// Smallest `⟨-g, θ₀-θ⟩ - ρ‖g‖` among points that failed the value gap.
    pub min_cone_margin: Option<f64>,
}

impl SweepSummary {
    pub fn from_verdicts<T: Scalar>(verdicts: &[SlqcVerdict<T>]) -> Self {
        let count = |c| verdicts.iter().filter(|v| v.satisfied_by == c).count();
        let min_cone_margin = verdicts
            .iter()
            .filter(|v| v.satisfied_by != SlqcCondition::ValueGap)
            .map(|v| v.diagnostics.cone_margin().as_f64())
            .reduce(f64::min);
        SweepSummary {
            points: verdicts.len(),
            value_gap: count(SlqcCondition::ValueGap),
            gradient_cone: count(SlqcCondition::GradientCone),
            neither: count(SlqcCondition::Neither),
            neither_interior: verdicts
                .iter()
                .filter(|v| v.satisfied_by == SlqcCondition::Neither && v.diagnostics.interior)
                .count(),
            max_value_gap: verdicts
                .iter()
                .map(|v| v.diagnostics.value_gap.as_f64())
                .fold(f64::NEG_INFINITY, f64::max),
            min_cone_margin,
        }
    }
}

/// `n` points uniform in the ball of radius `r`, drawn sequentially from `rng`.
pub fn sample_ball<T: Scalar>(rng: &mut RngState, n: usize, dim: usize, r: T) -> Vec<Vector<T>> {
    (0..n).map(|_| rng.uniform_in_ball(dim, r)).collect()
}

/// `Λ(α, r) · λ_min(Σ̂)` for `α ≤ 1`, clamped at zero for singular `Σ̂`.
pub fn strong_convexity_modulus<T: Scalar>(alpha: Alpha<T>, r: T, sigma_hat: &SymMatrix<T>) -> Result<T> {
    let lam = lambda_strong(alpha, r)?;
    Ok(lam * min_eigen_sym(sigma_hat)?.max(T::zero()))
}

/// Result of [`estimate_i`]. `value` is `+∞` when no draw qualified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IEstimate<T> {
    pub value: T,
    pub qualifying: usize,
    pub budget: usize,
}

/// Upper estimate of `inf { ‖∇R̂_{α₀}(θ)‖ : θ ∈ B_d(r), R̂_{α₀}(θ) - R̂_{α₀}(θ₀) > ε₀ }`
/// from `budget` uniform draws. Chunk `k` of the budget uses `rng.child(k)`.
pub fn estimate_i<T: Scalar>(
    alpha0: Alpha<T>,
    epsilon0: T,
    r: T,
    theta0: &Vector<T>,
    data: &Dataset<T>,
    budget: usize,
    rng: &RngState,
) -> Result<IEstimate<T>> {
    if budget == 0 {
        return Err(Error::usage("sampling budget must be at least 1"));
    }
    if !(epsilon0 > T::zero() && epsilon0.is_finite()) {
        return Err(Error::domain(format!("epsilon0 must be positive and finite, got {epsilon0}")));
    }
    check_radius(r)?;
    check_in_ball(theta0, r, "theta0")?;
    let risk0 = empirical_risk(alpha0, theta0, data)?;
    let d = data.dim();
    let chunks = budget.div_ceil(I_CHUNK);
    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut child = rng.child(k as u64);
            let len = I_CHUNK.min(budget - k * I_CHUNK);
            let mut best = T::infinity();
            let mut hits = 0usize;
            for _ in 0..len {
                let theta = child.uniform_in_ball(d, r);
                let (risk, grad) = risk_and_grad(alpha0, &theta, data)?;
                if risk - risk0 > epsilon0 {
                    hits += 1;
                    best = best.min(grad.norm());
                }
            }
            Ok((best, hits))
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, qualifying) = per_chunk
        .into_iter()
        .fold((T::infinity(), 0), |(b, h), (cb, ch)| (b.min(cb), h + ch));
    Ok(IEstimate {
        value,
        qualifying,
        budget,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionOptions<T> {
    /// Multiplies `I` before use, in `(0, 1]`; below 1 it hedges the
    /// one-sided sampling estimate.
    pub safety_factor: T,
    /// Accept `I = +∞` (no qualifying draw) as an unbounded window.
    pub accept_unbounded: bool,
}

impl<T: Scalar> Default for EvolutionOptions<T> {
    fn default() -> Self {
        EvolutionOptions {
            safety_factor: T::one(),
            accept_unbounded: false,
        }
    }
}

/// `(ε, ε/κ)` at one α. Outside the window no claim is made and both are `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionRow<T> {
    pub alpha: Alpha<T>,
    pub epsilon: Option<T>,
    pub rho: Option<T>,
    pub in_window: bool,
}

/// Right end of the α-window, `α₀² I / (2 J_r (1 + r κ₀/ε₀))`, as an offset from α₀.
pub fn window_endpoint<T: Scalar>(alpha0: T, epsilon0: T, kappa0: T, r: T, i_value: T) -> T {
    let two = T::lit(2.0);
    alpha0 * alpha0 * i_value / (two * lipschitz_j(r) * (T::one() + r * kappa0 / epsilon0))
}

/// Evolves an `(ε₀, κ₀, θ₀)` certificate at α₀ ≥ 1 to each α ≥ α₀.
pub fn evolve_bounds<T: Scalar>(
    alpha0: Alpha<T>,
    epsilon0: T,
    kappa0: T,
    r: T,
    i_value: T,
    alphas: &[Alpha<T>],
    opts: EvolutionOptions<T>,
) -> Result<Vec<EvolutionRow<T>>> {
    let a0 = match alpha0 {
        Alpha::Finite(v) if v >= T::one() => v,
        _ => {
            return Err(Error::domain(format!("alpha0 must be finite and at least 1, got {alpha0}")))
        }
    };
    for (name, v) in [("epsilon0", epsilon0), ("kappa0", kappa0)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    check_radius(r)?;
    let s = opts.safety_factor;
    if !(s > T::zero() && s <= T::one()) {
        return Err(Error::domain(format!("safety factor must lie in (0, 1], got {s}")));
    }
    if !(i_value > T::zero()) {
        return Err(Error::domain(format!("gradient infimum I must be positive, got {i_value}")));
    }
    if i_value.is_infinite() && !opts.accept_unbounded {
        return Err(Error::domain(
            "gradient infimum I is the empty-set sentinel +inf; accept it explicitly to treat the window as unbounded",
        ));
    }
    let i_eff = i_value * s;
    let (l, j) = (lipschitz_l(r), lipschitz_j(r));
    let two = T::lit(2.0);
    let endpoint = window_endpoint(a0, epsilon0, kappa0, r, i_eff);
    let base_rho = epsilon0 / kappa0;
    let shrink = T::one() + two * r * kappa0 / epsilon0;
    alphas
        .iter()
        .map(|&alpha| {
            let a = match alpha {
                Alpha::Infinity => {
                    return Ok(EvolutionRow {
                        alpha,
                        epsilon: None,
                        rho: None,
                        in_window: false,
                    })
                }
                Alpha::Finite(a) => a,
            };
            if a < a0 {
                return Err(Error::domain(format!("alpha {a} lies below alpha0 {a0}")));
            }
            let delta = a - a0;
            if !(delta < endpoint) {
                return Ok(EvolutionRow {
                    alpha,
                    epsilon: None,
                    rho: None,
                    in_window: false,
                });
            }
            let epsilon = epsilon0 + two * l * delta;
            let rho = if i_eff.is_infinite() {
                base_rho
            } else {
                base_rho * (T::one() - shrink * j * delta / (a * a0 * i_eff - j * delta))
            };
            Ok(EvolutionRow {
                alpha,
                epsilon: Some(epsilon),
                rho: Some(rho),
                in_window: true,
            })
        })
        .collect()
}

/// [`evolve_bounds`] from the log-loss, `α₀ = 1` and `κ₀ = σ(r)`.
pub fn evolve_from_log_loss<T: Scalar>(
    epsilon0: T,
    r: T,
    i_value: T,
    alphas: &[Alpha<T>],
    opts: EvolutionOptions<T>,
) -> Result<Vec<EvolutionRow<T>>> {
    let kappa0 = lipschitz_c(Alpha::one(), r)?;
    evolve_bounds(Alpha::one(), epsilon0, kappa0, r, i_value, alphas, opts)
}

/// CSV with header `alpha,epsilon,rho,in_window`; rows outside the window leave
/// `epsilon` and `rho` empty.
pub fn evolution_csv<T: Scalar>(rows: &[EvolutionRow<T>]) -> String {
    let mut s = String::from("alpha,epsilon,rho,in_window\n");
    for row in rows {
        let opt = |v: Option<T>| v.map(crate::risk::fmt17).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{}\n",
            row.alpha,
            opt(row.epsilon),
            opt(row.rho),
            row.in_window
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{Label, Sample};
    use crate::numerics::sigmoid_unchecked;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_slice(x).unwrap()
    }

    fn a(x: f64) -> Alpha<f64> {
        Alpha::new(x).unwrap()
    }

    fn random_data(seed: u64, n: usize) -> Dataset<f64> {
        let mut rng = RngState::new(seed);
        let samples = (0..n)
            .map(|_| {
                let x = rng.uniform_in_ball::<f64>(2, 1.0);
                let y = if rng.uniform::<f64>() < 0.5 { Label::Neg } else { Label::Pos };
                Sample::new(x, y).unwrap()
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    /// Minimum of `⟨-g, θ' - θ⟩` over `n` equally spaced points on the circle `‖θ' - θ₀‖ = ρ`.
    fn sampled_min(g: &Vector<f64>, theta: &Vector<f64>, theta0: &Vector<f64>, rho: f64, n: usize, phase: f64) -> f64 {
        (0..n)
            .map(|k| {
                let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let p = v(&[theta0[0] + rho * t.cos(), theta0[1] + rho * t.sin()]);
                -g.dot(&p.sub(theta))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn ball_min_inner_examples() {
        let z = v(&[0.0, 0.0]);
        assert_eq!(ball_min_inner(&v(&[1.0, 0.0]), &v(&[1.0, 0.0]), &z, 0.5), 0.5);
        assert_eq!(ball_min_inner(&v(&[-1.0, 0.0]), &v(&[1.0, 0.0]), &z, 0.5), -1.5);
    }

    #[test]
    fn ball_min_inner_matches_boundary_sampling() {
        let mut rng = RngState::new(10);
        let n = 1000;
        for _ in 0..500 {
            let g = rng.uniform_in_ball::<f64>(2, 3.0);
            let theta = rng.uniform_in_ball::<f64>(2, 5.0);
            let theta0 = rng.uniform_in_ball::<f64>(2, 5.0);
            let rho = rng.uniform_range(0.01, 2.0);
            let closed = ball_min_inner(&g, &theta, &theta0, rho);
            let sampled = sampled_min(&g, &theta, &theta0, rho, n, rng.uniform::<f64>());
            // the sampled minimum can only overshoot, by at most the angular discretization
            let grid_gap = rho * g.norm() * (1.0 - (std::f64::consts::PI / n as f64).cos());
            assert!(sampled >= closed - 1e-9);
            assert!(sampled - closed <= grid_gap + 1e-9, "{sampled} vs {closed}");
        }
    }

    #[test]
    fn verdict_at_reference_point_is_value_gap() {
        let data = random_data(1, 100);
        let p = SlqcParams::new(0.1, 0.5, v(&[1.0, -1.0])).unwrap();
        let verdict = check_slqc_point(a(2.0), &v(&[1.0, -1.0]), &p, &data, 5.0).unwrap();
        assert_eq!(verdict.satisfied_by, SlqcCondition::ValueGap);
        assert_eq!(verdict.diagnostics.value_gap, 0.0);
    }

    #[test]
    fn infinite_epsilon_always_passes_on_value() {
        let data = random_data(2, 100);
        let p = SlqcParams::new(f64::INFINITY, 1.0, v(&[0.0, 0.0])).unwrap();
        let checker = SlqcChecker::new(a(10.0), p, &data, 5.0).unwrap();
        let pts = sample_ball(&mut RngState::new(3), 200, 2, 5.0);
        for verdict in checker.check_all(&pts).unwrap() {
            assert_eq!(verdict.satisfied_by, SlqcCondition::ValueGap);
        }
    }

    #[test]
    fn radius_violations_are_usage_errors() {
        let data = random_data(2, 10);
        let p = SlqcParams::new(0.1, 1.0, v(&[0.0, 0.0])).unwrap();
        let err = check_slqc_point(a(1.0), &v(&[6.0, 0.0]), &p, &data, 5.0).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let far = SlqcParams::new(0.1, 1.0, v(&[0.0, 9.0])).unwrap();
        assert!(matches!(SlqcChecker::new(a(1.0), far, &data, 5.0), Err(Error::Usage(_))));
        assert!(SlqcParams::new(0.0, 1.0, v(&[0.0])).is_err());
        assert!(SlqcParams::new(1.0, 0.0, v(&[0.0])).is_err());
    }

    #[test]
    fn interior_points_failing_value_gap_are_neither() {
        let data = random_data(4, 50);
        // ρ = 0.01/1e-3 = 10 covers the whole ball, so nothing can pass on the cone
        let p = SlqcParams::new(0.01, 1e-3, v(&[0.0, 0.0])).unwrap();
        let checker = SlqcChecker::new(a(1.0), p, &data, 5.0).unwrap();
        let verdicts = checker.check_all(&sample_ball(&mut RngState::new(5), 300, 2, 5.0)).unwrap();
        let summary = SweepSummary::from_verdicts(&verdicts);
        assert!(summary.neither > 0);
        assert_eq!(summary.neither, summary.neither_interior);
        assert_eq!(summary.gradient_cone, 0);
        assert_eq!(summary.points, summary.value_gap + summary.neither);
    }

    #[test]
    fn modulus_examples() {
        let id = SymMatrix::<f64>::identity(2);
        let m = strong_convexity_modulus(a(1.0), 5.0, &id).unwrap();
        assert!((m - 0.006_648_056_670_790_155).abs() < 1e-15);
        let singular = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(strong_convexity_modulus(a(1.0), 5.0, &singular).unwrap(), 0.0);
        let sigma = SymMatrix::from_rows(&[vec![0.38, 0.25], vec![0.25, 3.17]]).unwrap();
        let mut prev = 0.0;
        for al in [1.0, 0.8, 0.5, 0.3] {
            let m = strong_convexity_modulus(a(al), 5.0, &sigma).unwrap();
            assert!(m > prev);
            prev = m;
        }
        assert!(matches!(strong_convexity_modulus(a(2.0), 5.0, &id), Err(Error::Domain(_))));
    }

    #[test]
    fn i_estimate_sentinel_and_determinism() {
        let data = random_data(6, 80);
        let z = v(&[0.0, 0.0]);
        let rng = RngState::new(9);
        let none = estimate_i(a(1.0), 100.0, 5.0, &z, &data, 500, &rng).unwrap();
        assert_eq!(none.value, f64::INFINITY);
        assert_eq!(none.qualifying, 0);
        let e1 = estimate_i(a(1.0), 0.05, 5.0, &z, &data, 3000, &rng).unwrap();
        let e2 = estimate_i(a(1.0), 0.05, 5.0, &z, &data, 3000, &rng).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.value.is_finite() && e1.qualifying > 0);
    }

    #[test]
    fn i_estimate_matches_dense_grid_in_one_dimension() {
        let data = Dataset::new(vec![Sample::new(v(&[1.0]), Label::Pos).unwrap()]).unwrap();
        let theta0 = v(&[5.0]);
        let est = estimate_i(a(1.0), 1.0, 5.0, &theta0, &data, 100_000, &RngState::new(42)).unwrap();
        let risk0 = empirical_risk(a(1.0), &theta0, &data).unwrap();
        let mut grid_min = f64::INFINITY;
        for k in 0..100_000 {
            let t = -5.0 + 10.0 * k as f64 / 99_999.0;
            let risk = empirical_risk(a(1.0), &v(&[t]), &data).unwrap();
            if risk - risk0 > 1.0 {
                grid_min = grid_min.min(sigmoid_unchecked(-t));
            }
        }
        assert!(est.value >= grid_min - 1e-3);
        assert!((est.value - grid_min).abs() < 1e-3, "{} vs {grid_min}", est.value);
    }

    fn kappa5() -> f64 {
        sigmoid_unchecked(5.0)
    }

    #[test]
    fn evolution_identity_at_alpha0() {
        let rows = evolve_bounds(a(1.0), 0.4, kappa5(), 5.0, 0.1, &[a(1.0)], Default::default()).unwrap();
        assert!(rows[0].in_window);
        assert_eq!(rows[0].epsilon, Some(0.4));
        assert_eq!(rows[0].rho, Some(0.4 / kappa5()));
        let rows = evolve_bounds(a(3.0), 0.2, 0.7, 5.0, 0.5, &[a(3.0)], Default::default()).unwrap();
        assert_eq!((rows[0].epsilon, rows[0].rho), (Some(0.2), Some(0.2 / 0.7)));
    }

    #[test]
    fn evolution_window_and_epsilon() {
        let end = window_endpoint(1.0, 0.4, kappa5(), 5.0, 0.1);
        assert!((end - 6.590_221_271_098_518e-4).abs() < 1e-15, "{end}");
        let rows = evolve_bounds(
            a(1.0),
            0.4,
            kappa5(),
            5.0,
            0.1,
            &[a(1.0 + 1e-3), a(1.0 + 1e-4), Alpha::Infinity],
            Default::default(),
        )
        .unwrap();
        assert!(!rows[0].in_window && rows[0].epsilon.is_none());
        assert!(rows[1].in_window);
        assert!((rows[1].epsilon.unwrap() - 0.403_241_192_481_951_77).abs() < 1e-15);
        assert!(!rows[2].in_window);
    }

    #[test]
    fn evolution_errors() {
        let k = kappa5();
        let d = EvolutionOptions::default();
        assert!(matches!(evolve_bounds(a(1.0), 0.4, k, 5.0, 0.0, &[a(1.0)], d), Err(Error::Domain(_))));
        assert!(evolve_bounds(a(1.0), 0.4, k, 5.0, f64::NAN, &[a(1.0)], d).is_err());
        assert!(evolve_bounds(a(1.0), 0.4, k, 5.0, f64::INFINITY, &[a(1.0)], d).is_err());
        assert!(evolve_bounds(a(0.5), 0.4, k, 5.0, 0.1, &[a(1.0)], d).is_err());
        assert!(evolve_bounds(a(2.0), 0.4, k, 5.0, 0.1, &[a(1.5)], d).is_err());
        let open = EvolutionOptions {
            accept_unbounded: true,
            ..d
        };
        let rows = evolve_bounds(a(1.0), 0.4, k, 5.0, f64::INFINITY, &[a(50.0)], open).unwrap();
        assert!(rows[0].in_window);
        assert_eq!(rows[0].rho, Some(0.4 / k));
    }

    #[test]
    fn safety_factor_narrows_window() {
        let k = kappa5();
        let alphas = [a(1.0 + 5e-4)];
        let full = evolve_bounds(a(1.0), 0.4, k, 5.0, 0.1, &alphas, Default::default()).unwrap();
        let half = EvolutionOptions {
            safety_factor: 0.5,
            accept_unbounded: false,
        };
        let hedged = evolve_bounds(a(1.0), 0.4, k, 5.0, 0.1, &alphas, half).unwrap();
        assert!(full[0].in_window && !hedged[0].in_window);
    }

    #[test]
    fn log_loss_evolution_matches_direct_formulas() {
        let (eps0, r, i) = (0.4, 5.0, 0.1);
        let end = window_endpoint(1.0, eps0, kappa5(), r, i);
        let alphas: Vec<_> = (0..50).map(|k| a(1.0 + end * k as f64 / 50.0)).collect();
        let rows = evolve_from_log_loss(eps0, r, i, &alphas, Default::default()).unwrap();
        let direct = evolve_bounds(a(1.0), eps0, kappa5(), r, i, &alphas, Default::default()).unwrap();
        let (l, j, s) = (lipschitz_l(r), lipschitz_j(r), kappa5());
        let mut prev: Option<(f64, f64)> = None;
        for (row, d) in rows.iter().zip(&direct) {
            let al = row.alpha.value();
            let eps = eps0 + 2.0 * l * (al - 1.0);
            let rho = eps0 / s * (1.0 - (1.0 + 2.0 * r * s / eps0) * j * (al - 1.0) / (al * i - j * (al - 1.0)));
            let (e, p) = (row.epsilon.unwrap(), row.rho.unwrap());
            assert!((e - eps).abs() <= 1e-12 * eps && (p - rho).abs() <= 1e-12 * rho);
            assert!((e - d.epsilon.unwrap()).abs() <= 1e-12 && (p - d.rho.unwrap()).abs() <= 1e-12);
            assert!(p > 0.0);
            if let Some((pe, pp)) = prev {
                assert!(e > pe && p < pp);
            }
            prev = Some((e, p));
        }
        let near = evolve_from_log_loss(eps0, r, i, &[a(1.0 + end * (1.0 - 1e-9))], Default::default()).unwrap();
        assert!(near[0].in_window && near[0].rho.unwrap() > 0.0);
    }

    #[test]
    fn evolution_csv_format() {
        let rows = evolve_bounds(a(1.0), 0.4, kappa5(), 5.0, 0.1, &[a(1.0), a(2.0)], Default::default()).unwrap();
        let csv = evolution_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,epsilon,rho,in_window");
        assert!(lines[1].starts_with("1,4.0000000000000002e-1,"));
        assert!(lines[1].ends_with(",true"));
        assert_eq!(lines[2], "2,,,false");
    }
}
