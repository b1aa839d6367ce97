//! Pointwise α-loss in the logistic model.
//!
//! For a sample `(x, y)` with `y ∈ {-1, +1}` and margin `m = y⟨θ, x⟩`, the soft
//! classifier assigns probability `σ(m)` to the true label and the loss is
//!
//! ```text
//! l^α = α/(α-1) · (1 - σ(m)^{1-1/α})     α ∉ {1, ∞}
//! l^1 = -ln σ(m)                          (log-loss)
//! l^∞ = 1 - σ(m)                          (soft 0-1 loss)
//! ```
//!
//! Gradient and Hessian are rank-one: `∇l = F₁ x` and `∇²l = F₂ x xᵀ`, with the
//! scalar factors exposed as [`grad_factor`] and [`hess_factor`].
//!
//! All powers `σ(m)^c` are evaluated as `exp(c · ln σ(m))` with `ln σ` from
//! [`log_sigmoid_unchecked`], so large margins never underflow.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{log_sigmoid_unchecked, sigmoid_unchecked, Scalar, SymMatrix, Vector};

/// Below this `|1 - 1/α|` the loss is evaluated by its series about log-loss.
pub const LOG_LOSS_BRANCH_TOL: f64 = 1e-6;
/// Slack on the unit-ball constraint for feature vectors.
pub const FEATURE_NORM_SLACK: f64 = 1e-9;

/// Order parameter `α ∈ (0, ∞]`.
///
/// `∞` is its own variant so the soft 0-1 branches use an exact exponent of 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha<T> {
    Finite(T),
    Infinity,
}

impl<T: Scalar> Alpha<T> {
    /// Accepts any `v > 0`; `+∞` maps to [`Alpha::Infinity`].
    pub fn new(v: T) -> Result<Self> {
        if v.is_nan() || v <= T::zero() {
            return Err(Error::domain(format!("alpha must be positive, got {v}")));
        }
        if v.is_infinite() {
            return Ok(Alpha::Infinity);
        }
        Ok(Alpha::Finite(v))
    }

    pub fn infinity() -> Self {
        Alpha::Infinity
    }

    pub fn one() -> Self {
        Alpha::Finite(T::one())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Alpha::Infinity)
    }

    /// The value as a scalar, `+∞` for [`Alpha::Infinity`].
    pub fn value(&self) -> T {
        match *self {
            Alpha::Finite(v) => v,
            Alpha::Infinity => T::infinity(),
        }
    }

    /// `1/α`, exactly zero at infinity.
    pub fn reciprocal(&self) -> T {
        match *self {
            Alpha::Finite(v) => T::one() / v,
            Alpha::Infinity => T::zero(),
        }
    }

    /// The exponent `1 - 1/α` applied to the true-label probability.
    #[inline]
    pub fn exponent(&self) -> T {
        match *self {
            Alpha::Finite(v) => T::one() - T::one() / v,
            Alpha::Infinity => T::one(),
        }
    }

    /// True for `α ≤ 1`, the strongly convex regime.
    pub fn at_most_one(&self) -> bool {
        match *self {
            Alpha::Finite(v) => v <= T::one(),
            Alpha::Infinity => false,
        }
    }

    fn is_log_loss(&self) -> bool {
        !self.is_infinite() && self.exponent().abs() < T::lit(LOG_LOSS_BRANCH_TOL)
    }
}

impl<T: Scalar> fmt::Display for Alpha<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(v) => write!(f, "{v}"),
            Alpha::Infinity => f.write_str("inf"),
        }
    }
}

impl<T: Scalar> FromStr for Alpha<T> {
    type Err = Error;

    /// Decimals, or `inf` / `infinity` / `∞` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "∞" => return Ok(Alpha::Infinity),
            _ => {}
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::usage(format!("cannot parse alpha from {s:?}")))?;
        if v.is_infinite() {
            return Err(Error::usage(format!("write infinite alpha as `inf`, got {s:?}")));
        }
        Alpha::new(T::lit(v))
    }
}

/// Binary label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_int(y: i64) -> Result<Self> {
        match y {
            -1 => Ok(Label::Neg),
            1 => Ok(Label::Pos),
            _ => Err(Error::domain(format!("label must be -1 or 1, got {y}"))),
        }
    }

    pub fn as_int(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    #[inline]
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Label::Neg => -T::one(),
            Label::Pos => T::one(),
        }
    }
}

/// Labeled feature vector in the unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    x: Vector<T>,
    y: Label,
}

impl<T: Scalar> Sample<T> {
    pub fn new(x: Vector<T>, y: Label) -> Result<Self> {
        let n = x.norm();
        if n > T::one() + T::lit(FEATURE_NORM_SLACK) {
            return Err(Error::Validation(format!(
                "feature norm {n} exceeds the unit ball"
            )));
        }
        Ok(Sample { x, y })
    }

    pub fn x(&self) -> &Vector<T> {
        &self.x
    }

    pub fn y(&self) -> Label {
        self.y
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `y⟨θ, x⟩`.
    #[inline]
    pub fn margin(&self, theta: &Vector<T>) -> T {
        self.y.sign::<T>() * self.x.dot(theta)
    }
}

/// Parameter vector constrained to the hypothesis ball of radius `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPoint<T> {
    theta: Vector<T>,
    radius: T,
}

impl<T: Scalar> ModelPoint<T> {
    pub fn new(theta: Vector<T>, radius: T) -> Result<Self> {
        check_radius(radius)?;
        let n = theta.norm();
        if n > radius + T::lit(FEATURE_NORM_SLACK) {
            return Err(Error::usage(format!(
                "parameter norm {n} exceeds the hypothesis radius {radius}"
            )));
        }
        Ok(ModelPoint { theta, radius })
    }

    pub fn theta(&self) -> &Vector<T> {
        &self.theta
    }

    pub fn radius(&self) -> T {
        self.radius
    }
}

pub(crate) fn check_radius<T: Scalar>(r: T) -> Result<()> {
    if r.is_finite() && r > T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("radius must be positive and finite, got {r}")))
    }
}

/// Loss as a function of `ln p`, `p` the probability of the true label.
#[inline]
fn loss_from_log_p<T: Scalar>(alpha: Alpha<T>, log_p: T) -> T {
    let c = alpha.exponent();
    if alpha.is_log_loss() {
        // -expm1(cL)/c expanded to third order in cL; exactly -L at c = 0
        let u = c * log_p;
        let series = T::one()
            + u * (T::lit(0.5) + u * (T::one() / T::lit(6.0) + u / T::lit(24.0)));
        -log_p * series
    } else {
        -(c * log_p).exp_m1() / c
    }
}

/// `l^α(p)` for a true-label probability `p ∈ (0, 1]`.
pub fn alpha_loss<T: Scalar>(alpha: Alpha<T>, p: T) -> Result<T> {
    if !(p > T::zero() && p <= T::one()) {
        return Err(Error::domain(format!("probability must lie in (0, 1], got {p}")));
    }
    Ok(match alpha {
        Alpha::Infinity => T::one() - p,
        _ => loss_from_log_p(alpha, p.ln()),
    })
}

/// `l^α(σ(m))` as a function of the margin `m`.
#[inline]
pub fn loss_of_margin<T: Scalar>(alpha: Alpha<T>, m: T) -> T {
    match alpha {
        Alpha::Infinity => sigmoid_unchecked(-m),
        _ => loss_from_log_p(alpha, log_sigmoid_unchecked(m)),
    }
}

/// `σ(m)^{1-1/α} · σ(-m)`, the magnitude of the gradient factor.
#[inline]
pub(crate) fn grad_magnitude_of_margin<T: Scalar>(alpha: Alpha<T>, m: T) -> T {
    let tilt = match alpha {
        Alpha::Infinity => sigmoid_unchecked(m),
        _ => (alpha.exponent() * log_sigmoid_unchecked(m)).exp(),
    };
    tilt * sigmoid_unchecked(-m)
}

/// `(l^α(σ(m)), σ(m)^{1-1/α} σ(-m))` sharing one `exp(-|m|)`. Bit-identical to
/// [`loss_of_margin`] and [`grad_magnitude_of_margin`].
#[inline]
pub(crate) fn loss_and_grad_magnitude<T: Scalar>(alpha: Alpha<T>, m: T) -> (T, T) {
    let e = (-m.abs()).exp();
    let one = T::one();
    let nonneg = m >= T::zero();
    let (s_pos, s_neg) = if nonneg {
        (one / (one + e), e / (one + e))
    } else {
        (e / (one + e), one / (one + e))
    };
    match alpha {
        Alpha::Infinity => (s_neg, s_pos * s_neg),
        _ => {
            let l1pe = e.ln_1p();
            let log_p = if nonneg { -l1pe } else { m - l1pe };
            let c = alpha.exponent();
            let tilt = if c == T::zero() { one } else { (c * log_p).exp() };
            (loss_from_log_p(alpha, log_p), tilt * s_neg)
        }
    }
}

/// `F₂` as a function of the margin.
#[inline]
pub fn hess_factor_of_margin<T: Scalar>(alpha: Alpha<T>, m: T) -> T {
    let c = alpha.exponent();
    let g = sigmoid_unchecked(m);
    let g_neg = sigmoid_unchecked(-m);
    let tilt = match alpha {
        Alpha::Infinity => g,
        _ => (c * log_sigmoid_unchecked(m)).exp(),
    };
    // g' = g(1-g) = g·σ(-m), and g²(-yx) = σ(-m)²
    tilt * g_neg * (g - c * g_neg)
}

/// `l^α(y, g_θ(x))` for one sample.
pub fn loss_margin<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, s: &Sample<T>) -> T {
    loss_of_margin(alpha, s.margin(theta))
}

/// `F₁ = -y g_θ(yx)^{1-1/α} (1 - g_θ(yx))`.
pub fn grad_factor<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, s: &Sample<T>) -> T {
    -s.y.sign::<T>() * grad_magnitude_of_margin(alpha, s.margin(theta))
}

/// `∇_θ l^α = F₁ x`.
pub fn loss_grad<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, s: &Sample<T>) -> Vector<T> {
    s.x.scaled(grad_factor(alpha, theta, s))
}

/// `F₂ = g^{1-1/α}(yx) (g'(yx) - (1-1/α) g²(-yx))`.
pub fn hess_factor<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, s: &Sample<T>) -> T {
    hess_factor_of_margin(alpha, s.margin(theta))
}

/// `∇²_θ l^α = F₂ x xᵀ`.
pub fn loss_hess<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, s: &Sample<T>) -> SymMatrix<T> {
    let mut h = SymMatrix::zeros(s.dim());
    h.add_outer_scaled(hess_factor(alpha, theta, s), s.x.as_slice());
    h
}

fn require_at_most_one<T: Scalar>(alpha: Alpha<T>, what: &str) -> Result<()> {
    if alpha.at_most_one() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} is defined for alpha in (0, 1], got {alpha}")))
    }
}

/// `Λ(α, r) = σ^{1-1/α}(r) (σ'(r) - (1-1/α) σ²(-r))`, the lower bound on `F₂`
/// over margins in `[-r, r]` when `α ≤ 1`.
pub fn lambda_strong<T: Scalar>(alpha: Alpha<T>, r: T) -> Result<T> {
    require_at_most_one(alpha, "the strong-convexity factor")?;
    check_radius(r)?;
    let c = alpha.exponent();
    let s = sigmoid_unchecked(r);
    let s_neg = sigmoid_unchecked(-r);
    let derivative = s * (T::one() - s);
    Ok(s.powf(c) * (derivative - c * s_neg * s_neg))
}

/// `C_{r,α} = σ(r) (1 - σ(r))^{1-1/α}`, the Lipschitz constant of `R_α` on the
/// radius-`r` ball for `α ≤ 1`.
pub fn lipschitz_c<T: Scalar>(alpha: Alpha<T>, r: T) -> Result<T> {
    require_at_most_one(alpha, "C_{r,alpha}")?;
    check_radius(r)?;
    let c = alpha.exponent();
    Ok(sigmoid_unchecked(r) * (c * log_sigmoid_unchecked(-r)).exp())
}

/// `L_r = (r + ln 2)² / 2`: Lipschitz constant of `R_α` in `1/α` on `[1, ∞]`.
pub fn lipschitz_l<T: Scalar>(r: T) -> T {
    let a = r + T::lit(std::f64::consts::LN_2);
    a * a / T::lit(2.0)
}

/// `J_r = (r + ln 2) σ(r)`: Lipschitz constant of `∇R_α` in `1/α` on `[1, ∞]`.
pub fn lipschitz_j<T: Scalar>(r: T) -> T {
    (r + T::lit(std::f64::consts::LN_2)) * sigmoid_unchecked(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    const LN2: f64 = std::f64::consts::LN_2;

    fn a(v: f64) -> Alpha<f64> {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn fused_kernel_is_bit_identical() {
        let mut rng = RngState::new(19);
        let alphas = [a(0.3), a(1.0), a(1.0 + 1e-8), a(2.0), Alpha::Infinity];
        for k in 0..2000 {
            let m = if k < 5 { [0.0, -0.0, 1e-300, 40.0, -700.0][k] } else { rng.uniform_range(-60.0, 60.0) };
            for al in alphas {
                let (l, g) = loss_and_grad_magnitude(al, m);
                assert_eq!(l.to_bits(), loss_of_margin(al, m).to_bits(), "m={m} {al}");
                assert_eq!(g.to_bits(), grad_magnitude_of_margin(al, m).to_bits(), "m={m} {al}");
            }
        }
    }

    fn sample(x: &[f64], y: i64) -> Sample<f64> {
        Sample::new(Vector::from_slice(x).unwrap(), Label::from_int(y).unwrap()).unwrap()
    }

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_slice(x).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    #[test]
    fn alpha_construction() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(-1.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
        assert_eq!(Alpha::new(f64::INFINITY).unwrap(), Alpha::Infinity);
        assert_eq!("inf".parse::<Alpha<f64>>().unwrap(), Alpha::Infinity);
        assert_eq!("INF".parse::<Alpha<f64>>().unwrap(), Alpha::Infinity);
        assert_eq!("1.001".parse::<Alpha<f64>>().unwrap(), Alpha::Finite(1.001));
        assert!("0".parse::<Alpha<f64>>().is_err());
        assert!("abc".parse::<Alpha<f64>>().is_err());
        assert_eq!(Alpha::<f64>::Infinity.exponent(), 1.0);
        assert_eq!(Alpha::<f64>::Infinity.to_string(), "inf");
    }

    #[test]
    fn alpha_loss_examples() {
        assert!((alpha_loss(a(1.0), 0.5).unwrap() - LN2).abs() < 1e-15);
        assert_eq!(alpha_loss(Alpha::Infinity, 0.5).unwrap(), 0.5);
        assert!((alpha_loss(a(0.5), 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((alpha_loss(a(2.0), 0.5).unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        for al in [a(0.3), a(1.0), a(7.0), Alpha::Infinity] {
            assert_eq!(alpha_loss(al, 1.0).unwrap(), 0.0);
        }
        assert!(alpha_loss(a(2.0), 0.0).is_err());
        assert!(alpha_loss(a(2.0), 1.5).is_err());
        assert!(alpha_loss(a(2.0), f64::NAN).is_err());
    }

    #[test]
    fn alpha_loss_is_continuous_in_alpha() {
        for p in [0.1, 0.5, 0.9] {
            let at_one = alpha_loss(a(1.0), p).unwrap();
            for al in [1.0 + 1e-7, 1.0 - 1e-7] {
                assert!((alpha_loss(a(al), p).unwrap() - at_one).abs() < 1e-6);
            }
            let at_inf = alpha_loss(Alpha::Infinity, p).unwrap();
            assert!((alpha_loss(a(1e9), p).unwrap() - at_inf).abs() < 1e-6);
        }
        // across the log-loss branch switch itself
        for p in [1e-3, 0.1, 0.5, 0.9] {
            for side in [1.0, -1.0] {
                let c_in = side * 0.999_999e-6;
                let c_out = side * 1.000_001e-6;
                let inside = alpha_loss(a(1.0 / (1.0 - c_in)), p).unwrap();
                let outside = alpha_loss(a(1.0 / (1.0 - c_out)), p).unwrap();
                assert!((inside - outside).abs() < 1e-9, "p={p} {inside} {outside}");
            }
        }
    }

    #[test]
    fn loss_margin_examples() {
        let s = sample(&[0.3, -0.4], -1);
        assert!((loss_margin(a(1.0), &v(&[0.0, 0.0]), &s) - LN2).abs() < 1e-15);
        let s = sample(&[1.0, 0.0], 1);
        let got = loss_margin(a(1.0), &v(&[5.0, 0.0]), &s);
        assert!((got - 0.006_715_348_489_118_068).abs() < 1e-15);
        let s = sample(&[1.0, 0.0], -1);
        let got = loss_margin(Alpha::Infinity, &v(&[5.0, 0.0]), &s);
        assert!((got - 0.993_307_149_075_715_1).abs() < 1e-15);
    }

    #[test]
    fn factor_examples() {
        let zero = v(&[0.0, 0.0]);
        let pos = sample(&[1.0, 0.0], 1);
        let neg = sample(&[1.0, 0.0], -1);
        // -y σ(0)^0 (1 - σ(0)) = ∓1/2
        assert!((grad_factor(a(1.0), &zero, &pos) + 0.5).abs() < 1e-15);
        assert!((grad_factor(a(1.0), &zero, &neg) - 0.5).abs() < 1e-15);
        assert!((grad_factor(a(2.0), &zero, &pos) + 0.5f64.sqrt() * 0.5).abs() < 1e-15);
        assert_eq!(loss_grad(a(1.0), &zero, &pos).as_slice(), &[-0.5, 0.0]);
        let origin = sample(&[0.0, 0.0], 1);
        assert_eq!(loss_grad(a(3.0), &v(&[1.0, 2.0]), &origin).as_slice(), &[0.0, 0.0]);

        assert!((hess_factor(a(1.0), &zero, &pos) - 0.25).abs() < 1e-15);
        assert!((hess_factor(a(2.0), &zero, &pos) - 2f64.sqrt() / 16.0).abs() < 1e-15);
        let h = loss_hess(a(1.0), &zero, &pos);
        assert_eq!(h.rows(), vec![vec![0.25, 0.0], vec![0.0, 0.0]]);
        let h = loss_hess(a(1.0), &v(&[1.0, 2.0]), &origin);
        assert_eq!(h.rows(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let alphas = [a(0.5), a(0.77), a(1.0), a(1.3), a(2.0), a(10.0), Alpha::Infinity];
        let mut rng = RngState::new(2024);
        let h = 1e-5;
        for i in 0..200 {
            let alpha = alphas[i % alphas.len()];
            let theta = rng.uniform_in_ball::<f64>(2, 5.0);
            let x = rng.uniform_in_ball::<f64>(2, 1.0);
            let y = if rng.uniform::<f64>() < 0.5 { -1 } else { 1 };
            let s = sample(x.as_slice(), y);
            let g = loss_grad(alpha, &theta, &s);
            let hm = loss_hess(alpha, &theta, &s);
            for j in 0..2 {
                let mut up = theta.clone().into_inner();
                let mut dn = up.clone();
                up[j] += h;
                dn[j] -= h;
                let (up, dn) = (v(&up), v(&dn));
                let fd = (loss_margin(alpha, &up, &s) - loss_margin(alpha, &dn, &s)) / (2.0 * h);
                assert!(rel_err(g[j], fd) <= 1e-6, "grad alpha={alpha} j={j}: {} vs {fd}", g[j]);
                let gu = loss_grad(alpha, &up, &s);
                let gd = loss_grad(alpha, &dn, &s);
                for k in 0..2 {
                    let fd2 = (gu[k] - gd[k]) / (2.0 * h);
                    assert!(rel_err(hm.get(k, j), fd2) <= 1e-5, "hess alpha={alpha}");
                }
            }
        }
    }

    #[test]
    fn margin_shape_convex_below_one_monotone_above() {
        let zs: Vec<f64> = (0..=400).map(|i| -8.0 + 0.04 * i as f64).collect();
        for al in [a(0.3), a(0.5), a(0.8), a(1.0)] {
            let l: Vec<f64> = zs.iter().map(|&z| loss_of_margin(al, z)).collect();
            for w in l.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12, "alpha={al}");
            }
        }
        for al in [a(1.5), a(2.0), a(10.0), Alpha::Infinity] {
            let l: Vec<f64> = zs.iter().map(|&z| loss_of_margin(al, z)).collect();
            for w in l.windows(2) {
                assert!(w[1] <= w[0], "alpha={al} not nonincreasing");
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_strong(a(1.0), 5.0).unwrap();
        assert!((l - 0.006_648_056_670_790_155).abs() < 1e-15);
        let l = lambda_strong(a(0.5), 1.0).unwrap();
        assert!((l - 0.367_879_441_171_442_3).abs() < 1e-14);
        let l = lambda_strong(a(1.0), 1e-9).unwrap();
        assert!((l - 0.25).abs() < 1e-12);
        assert!(lambda_strong(a(1.5), 1.0).is_err());
        assert!(lambda_strong(Alpha::Infinity, 1.0).is_err());
        assert!(lambda_strong(a(0.5), 0.0).is_err());
    }

    #[test]
    fn lambda_decreases_in_alpha() {
        for r in [0.5, 1.0, 5.0] {
            let vals: Vec<f64> = (1..=100)
                .map(|i| lambda_strong(a(i as f64 / 100.0), r).unwrap())
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] < w[0], "r={r}");
            }
        }
    }

    #[test]
    fn hess_factor_bounded_below_by_lambda() {
        for al in [0.1, 0.25, 0.5, 0.77, 1.0] {
            for r in [0.5, 1.0, 5.0] {
                let lam = lambda_strong(a(al), r).unwrap();
                for i in 0..=2000 {
                    let m = -r + 2.0 * r * i as f64 / 2000.0;
                    assert!(hess_factor_of_margin(a(al), m) >= lam - 1e-12, "alpha={al} r={r} m={m}");
                }
            }
        }
    }

    #[test]
    fn lipschitz_constants() {
        let s5 = 0.993_307_149_075_715_1;
        assert!((lipschitz_c(a(1.0), 5.0).unwrap() - s5).abs() < 1e-15);
        assert!((lipschitz_c(a(1.0), 2.0).unwrap() - sigmoid_unchecked(2.0)).abs() < 1e-15);
        assert!((lipschitz_c(a(0.5), 5.0).unwrap() - 148.413_159_102_576_6).abs() < 1e-10);
        let seq: Vec<f64> = [1.0, 0.5, 0.1, 0.05, 0.01]
            .iter()
            .map(|&al| lipschitz_c(a(al), 5.0).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] > w[0]));
        assert!(*seq.last().unwrap() > 1e100);

        assert!((lipschitz_l(5.0_f64) - 16.205_962_409_758_827).abs() < 1e-12);
        assert!((lipschitz_l(1e-12_f64) - 0.240_226_506_959_100_7).abs() < 1e-11);
        assert!(lipschitz_l(2.0_f64) > lipschitz_l(1.0));
        assert!((lipschitz_j(5.0_f64) - 5.655_043_795_190_445).abs() < 1e-12);
        assert!((lipschitz_j(1e-12_f64) - 0.346_573_590_279_972_6).abs() < 1e-11);
        for r in [0.1, 1.0, 5.0, 30.0] {
            assert!(lipschitz_j::<f64>(r) < r + LN2);
        }
    }

    #[test]
    fn generic_over_f32() {
        let al = Alpha::<f32>::new(2.0).unwrap();
        let s = Sample::new(Vector::from_slice(&[1.0_f32, 0.0]).unwrap(), Label::Pos).unwrap();
        let theta = Vector::from_slice(&[0.0_f32, 0.0]).unwrap();
        assert!((loss_margin(al, &theta, &s) - (2.0 - 2f32.sqrt())).abs() < 1e-6);
        assert!((lambda_strong(Alpha::<f32>::one(), 5.0).unwrap() - 0.006_648_057).abs() < 1e-7);
    }

    #[test]
    fn sample_rejects_points_outside_unit_ball() {
        assert!(Sample::new(v(&[1.0, 1.0]), Label::Pos).is_err());
        assert!(Sample::new(v(&[1.0 + 1e-10, 0.0]), Label::Pos).is_ok());
        assert!(Label::from_int(0).is_err());
        assert!(ModelPoint::new(v(&[3.0, 4.0]), 4.0).is_err());
        assert!(ModelPoint::new(v(&[3.0, 4.0]), 5.0).is_ok());
    }
}
