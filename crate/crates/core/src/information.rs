//! Discrete joints `P(x, y)`: α-risk of arbitrary posteriors, the α-tilted
//! posterior, Arimoto conditional entropy and the minimal α-risk. All
//! logarithms are natural.

use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::{alpha_loss, Alpha};
use crate::numerics::{CompensatedSum, Scalar};

/// Tolerance on the total mass of a joint and on posterior row sums.
pub const MASS_TOL: f64 = 1e-12;

/// Joint distribution on a finite `X × Y`, stored row-major (row = x).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteJoint<T> {
    nx: usize,
    ny: usize,
    p: Vec<T>,
}

/// Conditional distribution `Q(y|x)`, one row per x.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior<T> {
    nx: usize,
    ny: usize,
    q: Vec<T>,
    undefined_rows: Vec<usize>,
}

fn flatten<T: Scalar>(rows: &[Vec<T>], what: &str) -> Result<(usize, usize, Vec<T>)> {
    let nx = rows.len();
    let ny = rows.first().map_or(0, Vec::len);
    if nx == 0 || ny == 0 {
        return Err(Error::Validation(format!("{what} must have at least one row and one column")));
    }
    let mut flat = Vec::with_capacity(nx * ny);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ny {
            return Err(Error::Validation(format!(
                "{what} row {i} has {} columns, expected {ny}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::Validation(format!(
                    "{what} entry at row {i}, column {j} must be finite and nonnegative, got {v}"
                )));
            }
            flat.push(v);
        }
    }
    Ok((nx, ny, flat))
}

fn sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

impl<T: Scalar> DiscreteJoint<T> {
    pub fn new(rows: &[Vec<T>]) -> Result<Self> {
        let (nx, ny, p) = flatten(rows, "joint")?;
        let total = sum(p.iter().copied());
        if (total - T::one()).abs() > T::lit(MASS_TOL) {
            return Err(Error::Validation(format!(
                "joint entries sum to {total}, expected 1 within {MASS_TOL:e}"
            )));
        }
        Ok(DiscreteJoint { nx, ny, p })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::new(&read_matrix_csv(path)?)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.p[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.p[x * self.ny..(x + 1) * self.ny]
    }

    /// `P(x)`.
    pub fn marginal_x(&self) -> Vec<T> {
        (0..self.nx).map(|x| sum(self.row(x).iter().copied())).collect()
    }

    /// `P(y|x)`; rows with `P(x) = 0` are filled uniform and flagged.
    pub fn true_posterior(&self) -> Posterior<T> {
        tilted_posterior(self, Alpha::one())
    }
}

impl<T: Scalar> Posterior<T> {
    pub fn new(rows: &[Vec<T>]) -> Result<Self> {
        let (nx, ny, q) = flatten(rows, "posterior")?;
        for x in 0..nx {
            let s = sum(q[x * ny..(x + 1) * ny].iter().copied());
            if (s - T::one()).abs() > T::lit(MASS_TOL) {
                return Err(Error::Validation(format!(
                    "posterior row {x} sums to {s}, expected 1 within {MASS_TOL:e}"
                )));
            }
        }
        Ok(Posterior {
            nx,
            ny,
            q,
            undefined_rows: Vec::new(),
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::new(&read_matrix_csv(path)?)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.q[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.q[x * self.ny..(x + 1) * self.ny]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.q.chunks(self.ny).map(<[T]>::to_vec).collect()
    }

    /// Rows whose conditioning event has probability zero. Their entries are
    /// placeholders and never enter a risk.
    pub fn undefined_rows(&self) -> &[usize] {
        &self.undefined_rows
    }
}

/// Reads a headerless numeric CSV matrix. `#` lines are comments.
pub fn read_matrix_csv<T: Scalar>(path: &Path) -> Result<Vec<Vec<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text)
}

pub fn parse_matrix_csv<T: Scalar>(text: &str) -> Result<Vec<Vec<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                    line,
                    message: format!("column {j}: cannot parse {f:?} as a number"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn check_shapes<T>(joint: &DiscreteJoint<T>, posterior: &Posterior<T>) -> Result<()> {
    if joint.nx != posterior.nx || joint.ny != posterior.ny {
        return Err(Error::usage(format!(
            "joint is {}x{} but posterior is {}x{}",
            joint.nx, joint.ny, posterior.nx, posterior.ny
        )));
    }
    Ok(())
}

/// `l^α(q)` extended to `q = 0`: `+∞` for `α ≤ 1`, `α/(α-1)` for finite `α > 1`, 1 at `∞`.
fn loss_at<T: Scalar>(alpha: Alpha<T>, q: T) -> T {
    if q > T::zero() {
        return alpha_loss(alpha, q.min(T::one())).expect("q in (0, 1]");
    }
    match alpha {
        Alpha::Infinity => T::one(),
        Alpha::Finite(a) if a > T::one() => a / (a - T::one()),
        Alpha::Finite(_) => T::infinity(),
    }
}

/// `Σ_{x,y} P(x,y) l^α(Q(y|x))`. Terms with `P(x,y) = 0` contribute nothing.
pub fn discrete_alpha_risk<T: Scalar>(
    joint: &DiscreteJoint<T>,
    posterior: &Posterior<T>,
    alpha: Alpha<T>,
) -> Result<T> {
    check_shapes(joint, posterior)?;
    let mut acc = CompensatedSum::new();
    for (&p, &q) in joint.p.iter().zip(&posterior.q) {
        if p > T::zero() {
            let l = loss_at(alpha, q);
            if l.is_infinite() {
                return Ok(T::infinity());
            }
            acc.add(p * l);
        }
    }
    Ok(acc.value())
}

/// Row x is `P(·|x)^α` renormalized; at `α = ∞`, uniform over the maximizers.
pub fn tilted_posterior<T: Scalar>(joint: &DiscreteJoint<T>, alpha: Alpha<T>) -> Posterior<T> {
    let (nx, ny) = (joint.nx, joint.ny);
    let uniform = T::one() / T::lit(ny as f64);
    let mut q = Vec::with_capacity(nx * ny);
    let mut undefined_rows = Vec::new();
    for x in 0..nx {
        let row = joint.row(x);
        let max = row.iter().copied().fold(T::zero(), T::max);
        if max == T::zero() {
            undefined_rows.push(x);
            q.extend(std::iter::repeat_n(uniform, ny));
            continue;
        }
        // P(y|x) ∝ P(x,y); dividing by the row max keeps large powers from underflowing
        let w: Vec<T> = match alpha {
            Alpha::Infinity => row
                .iter()
                .map(|&v| if v == max { T::one() } else { T::zero() })
                .collect(),
            Alpha::Finite(a) => row.iter().map(|&v| (v / max).powf(a)).collect(),
        };
        let total = sum(w.iter().copied());
        q.extend(w.into_iter().map(|v| v / total));
    }
    Posterior {
        nx,
        ny,
        q,
        undefined_rows,
    }
}

/// `Σ_x ‖P(x,·)‖_α`.
fn sum_of_row_norms<T: Scalar>(joint: &DiscreteJoint<T>, a: T) -> T {
    sum((0..joint.nx).map(|x| {
        let row = joint.row(x);
        let max = row.iter().copied().fold(T::zero(), T::max);
        if max == T::zero() {
            return T::zero();
        }
        let s = sum(row.iter().map(|&v| (v / max).powf(a)));
        max * s.powf(T::one() / a)
    }))
}

/// Shannon `H(Y|X)` in nats.
fn shannon_conditional<T: Scalar>(joint: &DiscreteJoint<T>) -> T {
    let px = joint.marginal_x();
    let mut acc = CompensatedSum::new();
    for (x, &pxv) in px.iter().enumerate() {
        for &p in joint.row(x) {
            if p > T::zero() {
                acc.add(-p * (p / pxv).ln());
            }
        }
    }
    acc.value().max(T::zero())
}

fn sum_of_row_max<T: Scalar>(joint: &DiscreteJoint<T>) -> T {
    sum((0..joint.nx).map(|x| joint.row(x).iter().copied().fold(T::zero(), T::max)))
}

/// Arimoto conditional entropy `α/(1-α) ln Σ_x ‖P(x,·)‖_α`, with the Shannon
/// limit at `α = 1` and `-ln Σ_x max_y P(x,y)` at `∞`.
pub fn arimoto_cond_entropy<T: Scalar>(joint: &DiscreteJoint<T>, alpha: Alpha<T>) -> T {
    match alpha {
        Alpha::Infinity => -sum_of_row_max(joint).ln(),
        Alpha::Finite(a) if a == T::one() => shannon_conditional(joint),
        Alpha::Finite(a) => a / (T::one() - a) * sum_of_row_norms(joint, a).ln(),
    }
}

/// Minimal α-risk over all posteriors, `α/(α-1)(1 - Σ_x ‖P(x,·)‖_α)`, equal to
/// `H(Y|X)` at `α = 1` and `1 - Σ_x max_y P(x,y)` at `∞`.
pub fn min_alpha_risk<T: Scalar>(joint: &DiscreteJoint<T>, alpha: Alpha<T>) -> T {
    match alpha {
        Alpha::Infinity => T::one() - sum_of_row_max(joint),
        Alpha::Finite(a) if a == T::one() => shannon_conditional(joint),
        Alpha::Finite(a) => a / (a - T::one()) * (T::one() - sum_of_row_norms(joint, a)),
    }
}
