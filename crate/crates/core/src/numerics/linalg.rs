use super::Scalar;
use crate::error::{Error, Result};

/// Absolute tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Target Frobenius norm of the off-diagonal part in the Jacobi iteration.
pub const JACOBI_OFF_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Max-norm bound on `L Lᵀ - A` accepted from [`cholesky`].
pub const CHOLESKY_RESIDUAL_TOL: f64 = 1e-10;

/// Dense symmetric `d×d` matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Builds from row-major entries. Asymmetry up to [`SYMMETRY_TOL`] is
    /// accepted and averaged away.
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("matrix dimension must be at least 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::usage(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "matrix entry ({}, {}) is not finite",
                k / dim,
                k % dim
            )));
        }
        let tol = T::lit(SYMMETRY_TOL);
        let mut m = SymMatrix { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (m.data[i * dim + j], m.data[j * dim + i]);
                if (a - b).abs() > tol {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b} (tolerance {SYMMETRY_TOL:e})"
                    )));
                }
                let avg = (a + b) / T::lit(2.0);
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::usage("matrix rows must all have length equal to the row count"));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        SymMatrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `self += s · x xᵀ`, writing mirrored entries from one product so the
    /// result stays exactly symmetric.
    pub fn add_outer_scaled(&mut self, s: T, x: &[T]) {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        let d = self.dim;
        for i in 0..d {
            for j in i..d {
                let v = self.data[i * d + j] + s * x[i] * x[j];
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        let d = self.dim;
        let mut acc = T::zero();
        for i in 0..d {
            for j in 0..d {
                acc = acc + v[i] * self.data[i * d + j] * v[j];
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// All eigenvalues in ascending order, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let mut ev = jacobi_eigenvalues(self)?;
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(ev)
    }
}

fn off_diagonal_norm<T: Scalar>(a: &[T], d: usize) -> T {
    let mut s = T::zero();
    for i in 0..d {
        for j in (i + 1)..d {
            s = s + a[i * d + j] * a[i * d + j];
        }
    }
    (s + s).sqrt()
}

fn jacobi_eigenvalues<T: Scalar>(m: &SymMatrix<T>) -> Result<Vec<T>> {
    let d = m.dim;
    let mut a = m.data.clone();
    let frob = a.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
    // 1e-12 absolute, relaxed to machine precision for large or f32 matrices
    let tol = T::lit(JACOBI_OFF_TOL).max(T::epsilon() * frob);
    let two = T::lit(2.0);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, d) < tol {
            return Ok((0..d).map(|i| a[i * d + i]).collect());
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (two * apq);
                // tangent of the rotation angle, smaller root
                let t = if theta.abs() > T::lit(1e150) {
                    T::one() / (two * theta)
                } else {
                    let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = T::zero();
                a[q * d + p] = T::zero();
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    a[k * d + p] = nkp;
                    a[p * d + k] = nkp;
                    a[k * d + q] = nkq;
                    a[q * d + k] = nkq;
                }
            }
        }
    }
    let residual = off_diagonal_norm(&a, d);
    if residual < tol {
        return Ok((0..d).map(|i| a[i * d + i]).collect());
    }
    Err(Error::numeric(format!(
        "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps: off-diagonal norm {residual:e} (target {:e})",
        tol
    )))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigen_sym<T: Scalar>(a: &SymMatrix<T>) -> Result<T> {
    let ev = jacobi_eigenvalues(a)?;
    Ok(ev.into_iter().fold(T::infinity(), T::min))
}

/// Lower-triangular factor with `L Lᵀ = A`, row-major with zeros above the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> LowerTriangular<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// `L z`.
    pub fn mul_vec(&self, z: &[T]) -> Vec<T> {
        assert_eq!(z.len(), self.dim);
        let d = self.dim;
        (0..d)
            .map(|i| (0..=i).fold(T::zero(), |acc, j| acc + self.data[i * d + j] * z[j]))
            .collect()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let d = self.dim;
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let v = (0..=j).fold(T::zero(), |acc, k| acc + self.get(i, k) * self.get(j, k));
                out.data[i * d + j] = v;
                out.data[j * d + i] = v;
            }
        }
        out
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &SymMatrix<T>) -> Result<LowerTriangular<T>> {
    let d = a.dim;
    let mut l = vec![T::zero(); d * d];
    for j in 0..d {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag = diag - l[j * d + k] * l[j * d + k];
        }
        if !(diag > T::zero()) {
            return Err(Error::domain(format!(
                "matrix is not positive definite: leading minor of order {} has pivot {diag:e}",
                j + 1
            )));
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut v = a.get(i, j);
            for k in 0..j {
                v = v - l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = v / ljj;
        }
    }
    let factor = LowerTriangular { dim: d, data: l };
    let residual = factor.reconstruct().max_abs_diff(a);
    let tol = T::lit(CHOLESKY_RESIDUAL_TOL)
        .max(T::lit(64.0 * d as f64) * T::epsilon() * frob_max(a));
    if residual > tol {
        return Err(Error::numeric(format!(
            "Cholesky reconstruction residual {residual:e} exceeds {tol:e}"
        )));
    }
    Ok(factor)
}

fn frob_max<T: Scalar>(a: &SymMatrix<T>) -> T {
    a.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}
