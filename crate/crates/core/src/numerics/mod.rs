//! Overflow-safe scalar functions, small dense linear algebra and seeded randomness.
//!
//! Everything here is generic over [`Scalar`] so the same code runs in `f32` and `f64`.

mod linalg;
mod rng;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Index;

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub use linalg::{cholesky, min_eigen_sym, LowerTriangular, SymMatrix, JACOBI_MAX_SWEEPS, JACOBI_OFF_TOL};
pub use linalg::{CHOLESKY_RESIDUAL_TOL, SYMMETRY_TOL};
pub use rng::{gaussian_pair, RngState};

/// Floating-point scalar the landscape code is generic over.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target type cannot hold any value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function, `1/(1+e^{-z})`.
pub fn sigmoid<T: Scalar>(z: T) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::domain(format!("sigmoid of non-finite input {z}")));
    }
    Ok(sigmoid_unchecked(z))
}

/// [`sigmoid`] without the finiteness check. Evaluated branch-wise on the sign
/// of `z` so neither branch can overflow.
#[inline]
pub fn sigmoid_unchecked<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln σ(z) = -softplus(-z)`.
pub fn log_sigmoid<T: Scalar>(z: T) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::domain(format!("log_sigmoid of non-finite input {z}")));
    }
    Ok(log_sigmoid_unchecked(z))
}

#[inline]
pub fn log_sigmoid_unchecked<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// A finite, non-empty real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::usage("vector must have dimension at least 1"));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "vector entry {i} is not finite ({})",
                entries[i]
            )));
        }
        Ok(Vector(entries))
    }

    pub fn from_slice(entries: &[T]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// Panics if `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector must have dimension at least 1");
        Vector(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    /// Panics on a dimension mismatch.
    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }

    pub fn scaled(&self, s: T) -> Self {
        Vector(self.0.iter().map(|&v| v * s).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    pub fn distance(&self, other: &Self) -> T {
        self.sub(other).norm()
    }

    /// Used internally where finiteness follows from construction.
    pub(crate) fn from_vec_unchecked(entries: Vec<T>) -> Self {
        debug_assert!(!entries.is_empty());
        Vector(entries)
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> AsRef<[T]> for Vector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| x.mul_add(y, acc))
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    // hypot-style scaling so large entries do not overflow the sum of squares
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss = a
        .iter()
        .map(|&v| {
            let s = v / scale;
            s * s
        })
        .fold(T::zero(), |acc, v| acc + v);
    scale * ss.sqrt()
}

/// Euclidean projection onto the closed ball of radius `r` about the origin.
pub fn project_ball<T: Scalar>(v: &Vector<T>, r: T) -> Result<Vector<T>> {
    if !(r.is_finite() && r > T::zero()) {
        return Err(Error::domain(format!("projection radius must be positive and finite, got {r}")));
    }
    Ok(project_ball_unchecked(v, r))
}

pub(crate) fn project_ball_unchecked<T: Scalar>(v: &Vector<T>, r: T) -> Vector<T> {
    let n = v.norm();
    if n <= r {
        v.clone()
    } else {
        let s = r / n;
        let mut out = v.scaled(s);
        // rounding in the rescale can leave the norm one ulp above r
        while out.norm() > r {
            out = out.scaled(T::one() - T::epsilon());
        }
        out
    }
}

/// Neumaier-compensated running sum. Terms must be added in a fixed order for
/// bit-reproducible totals.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}
