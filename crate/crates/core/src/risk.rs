//! Empirical α-risk over a dataset, grid scans of the landscape, and the
//! uniform distance between risks at two orders.
//!
//! Sums run in sample-index order through [`CompensatedSum`], so every value
//! is bit-reproducible. Grid scans fan out over nodes with rayon. Each node is
//! evaluated sequentially, so the worker count never changes a result.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::{
    hess_factor_of_margin, loss_and_grad_magnitude, loss_of_margin, Alpha, Sample,
};
use crate::numerics::{CompensatedSum, Scalar, SymMatrix, Vector};

/// Nodes beyond this count are refused by [`landscape_scan`].
pub const MAX_GRID_NODES: usize = 10_000_000;
/// Slack on `‖θ‖ ≤ r` when masking grid nodes.
pub const MASK_SLACK: f64 = 1e-12;

/// Non-empty collection of samples sharing one feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<Sample<T>>,
    dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::usage("dataset must contain at least one sample"))?;
        let dim = first.dim();
        if let Some(i) = samples.iter().position(|s| s.dim() != dim) {
            return Err(Error::usage(format!(
                "sample {i} has dimension {} but the dataset has dimension {dim}",
                samples[i].dim()
            )));
        }
        Ok(Dataset { samples, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    /// `Σ̂ = (1/n) Σ xᵢ xᵢᵀ`.
    pub fn second_moment(&self) -> SymMatrix<T> {
        let d = self.dim;
        let mut acc = vec![CompensatedSum::new(); d * d];
        for s in &self.samples {
            let x = s.x().as_slice();
            for i in 0..d {
                for j in i..d {
                    acc[i * d + j].add(x[i] * x[j]);
                }
            }
        }
        let n = T::lit(self.len() as f64);
        symmetric_from_upper(d, &acc, n)
    }

    fn check_dim(&self, theta: &Vector<T>) -> Result<()> {
        if theta.dim() != self.dim {
            return Err(Error::usage(format!(
                "parameter has dimension {} but the dataset has dimension {}",
                theta.dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

fn symmetric_from_upper<T: Scalar>(d: usize, acc: &[CompensatedSum<T>], n: T) -> SymMatrix<T> {
    let mut data = vec![T::zero(); d * d];
    for i in 0..d {
        for j in i..d {
            let v = acc[i * d + j].value() / n;
            data[i * d + j] = v;
            data[j * d + i] = v;
        }
    }
    SymMatrix::new(d, data).expect("mirrored entries are symmetric")
}

/// `R̂_α(θ)`: the sample mean of the α-loss.
pub fn empirical_risk<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, data: &Dataset<T>) -> Result<T> {
    data.check_dim(theta)?;
    Ok(risk_unchecked(alpha, theta, data))
}

fn risk_unchecked<T: Scalar>(alpha: Alpha<T>, theta: &Vector<T>, data: &Dataset<T>) -> T {
    let mut acc = CompensatedSum::new();
    for s in &data.samples {
        acc.add(loss_of_margin(alpha, s.margin(theta)));
    }
    acc.value() / T::lit(data.len() as f64)
}

/// `∇R̂_α(θ)`: the sample mean of `F₁ x`.
pub fn empirical_risk_grad<T: Scalar>(
    alpha: Alpha<T>,
    theta: &Vector<T>,
    data: &Dataset<T>,
) -> Result<Vector<T>> {
    Ok(risk_and_grad(alpha, theta, data)?.1)
}

/// Risk and gradient from a single pass over the samples.
pub fn risk_and_grad<T: Scalar>(
    alpha: Alpha<T>,
    theta: &Vector<T>,
    data: &Dataset<T>,
) -> Result<(T, Vector<T>)> {
    data.check_dim(theta)?;
    let d = data.dim;
    let mut value = CompensatedSum::new();
    let mut grad = vec![CompensatedSum::new(); d];
    for s in &data.samples {
        let (loss, magnitude) = loss_and_grad_magnitude(alpha, s.margin(theta));
        value.add(loss);
        let f1 = -s.y().sign::<T>() * magnitude;
        for (g, &xj) in grad.iter_mut().zip(s.x().as_slice()) {
            g.add(f1 * xj);
        }
    }
    let n = T::lit(data.len() as f64);
    let grad = grad.iter().map(|g| g.value() / n).collect();
    Ok((value.value() / n, Vector::from_vec_unchecked(grad)))
}

/// `∇²R̂_α(θ)`: the sample mean of `F₂ x xᵀ`.
pub fn empirical_risk_hess<T: Scalar>(
    alpha: Alpha<T>,
    theta: &Vector<T>,
    data: &Dataset<T>,
) -> Result<SymMatrix<T>> {
    data.check_dim(theta)?;
    let d = data.dim;
    let mut acc = vec![CompensatedSum::new(); d * d];
    for s in &data.samples {
        let f2 = hess_factor_of_margin(alpha, s.margin(theta));
        let x = s.x().as_slice();
        for i in 0..d {
            for j in i..d {
                acc[i * d + j].add(f2 * x[i] * x[j]);
            }
        }
    }
    Ok(symmetric_from_upper(d, &acc, T::lit(data.len() as f64)))
}

/// Risks at several orders from one pass (the margins are shared).
pub fn empirical_risks<T: Scalar>(
    alphas: &[Alpha<T>],
    theta: &Vector<T>,
    data: &Dataset<T>,
) -> Result<Vec<T>> {
    data.check_dim(theta)?;
    Ok(risks_unchecked(alphas, theta, data))
}

fn risks_unchecked<T: Scalar>(alphas: &[Alpha<T>], theta: &Vector<T>, data: &Dataset<T>) -> Vec<T> {
    let mut acc = vec![CompensatedSum::new(); alphas.len()];
    for s in &data.samples {
        let m = s.margin(theta);
        for (a, &alpha) in acc.iter_mut().zip(alphas) {
            a.add(loss_of_margin(alpha, m));
        }
    }
    let n = T::lit(data.len() as f64);
    acc.iter().map(|a| a.value() / n).collect()
}

/// One axis of a [`GridSpec`]: `count` evenly spaced points from `min` to `max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis<T> {
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Scalar> GridAxis<T> {
    #[inline]
    fn point(&self, i: usize) -> T {
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * T::lit(i as f64) / T::lit((self.count - 1) as f64)
    }
}

/// Tensor grid of parameter vectors, optionally masked to a ball.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    axes: Vec<GridAxis<T>>,
    mask_radius: Option<T>,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(axes: Vec<GridAxis<T>>, mask_radius: Option<T>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::usage("grid needs at least one axis"));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.count < 2 {
                return Err(Error::usage(format!("grid axis {k} needs at least 2 points")));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::usage(format!(
                    "grid axis {k} needs finite min < max, got [{}, {}]",
                    a.min, a.max
                )));
            }
        }
        if let Some(r) = mask_radius {
            crate::loss::check_radius(r)?;
        }
        Ok(GridSpec { axes, mask_radius })
    }

    /// Same `[min, max]` and `count` on each of `dim` axes.
    pub fn square(dim: usize, min: T, max: T, count: usize, mask_radius: Option<T>) -> Result<Self> {
        Self::new(vec![GridAxis { min, max, count }; dim], mask_radius)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis<T>] {
        &self.axes
    }

    pub fn mask_radius(&self) -> Option<T> {
        self.mask_radius
    }

    /// Node count before masking, `None` on overflow.
    pub fn raw_len(&self) -> Option<usize> {
        self.axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
    }

    /// Nodes in row-major order (last axis fastest), masked nodes omitted.
    pub fn nodes(&self) -> Result<Vec<Vector<T>>> {
        let total = self
            .raw_len()
            .filter(|&n| n <= MAX_GRID_NODES)
            .ok_or_else(|| {
                Error::usage(format!("grid exceeds the {MAX_GRID_NODES}-node limit"))
            })?;
        let d = self.axes.len();
        let limit = self.mask_radius.map(|r| r + T::lit(MASK_SLACK));
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let theta: Vec<T> = idx.iter().zip(&self.axes).map(|(&i, a)| a.point(i)).collect();
            let theta = Vector::from_vec_unchecked(theta);
            if limit.is_none_or(|l| theta.norm() <= l) {
                out.push(theta);
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }
}

/// Risk values over grid nodes, with the metadata needed to regenerate them.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeTable<T> {
    pub alpha: Alpha<T>,
    pub mask_radius: Option<T>,
    pub nodes: Vec<Vector<T>>,
    pub risks: Vec<T>,
    /// Extra `key=value` lines (dataset id, seed, sample count, ...), in order.
    pub metadata: Vec<(String, String)>,
}

/// Formats with 17 significant digits, the precision needed for `f64` round trips.
pub fn fmt17<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

impl<T: Scalar> LandscapeTable<T> {
    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |n| n.dim())
    }

    /// `#`-prefixed metadata, header `theta_1,...,theta_d,risk`, then one row per node.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# alpha={}", self.alpha);
        match self.mask_radius {
            Some(r) => {
                let _ = writeln!(s, "# r={r}");
            }
            None => s.push_str("# r=none\n"),
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        let d = self.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("theta_{i}")).collect();
        let _ = writeln!(s, "{},risk", header.join(","));
        for (node, risk) in self.nodes.iter().zip(&self.risks) {
            for v in node.iter() {
                s.push_str(&fmt17(*v));
                s.push(',');
            }
            s.push_str(&fmt17(*risk));
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
    }

    pub fn max_risk(&self) -> T {
        self.risks.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }
}

/// Evaluates `R̂_α` at every grid node.
pub fn landscape_scan<T: Scalar>(
    alpha: Alpha<T>,
    grid: &GridSpec<T>,
    data: &Dataset<T>,
) -> Result<LandscapeTable<T>> {
    check_grid_dim(grid, data)?;
    let nodes = grid.nodes()?;
    let risks = nodes
        .par_iter()
        .map(|theta| risk_unchecked(alpha, theta, data))
        .collect();
    Ok(LandscapeTable {
        alpha,
        mask_radius: grid.mask_radius(),
        nodes,
        risks,
        metadata: Vec::new(),
    })
}

/// Risks at every order for every node: `out[node][k]` is `R̂_{alphas[k]}`.
pub fn multi_alpha_scan<T: Scalar>(
    alphas: &[Alpha<T>],
    grid: &GridSpec<T>,
    data: &Dataset<T>,
) -> Result<(Vec<Vector<T>>, Vec<Vec<T>>)> {
    check_grid_dim(grid, data)?;
    let nodes = grid.nodes()?;
    let risks = nodes
        .par_iter()
        .map(|theta| risks_unchecked(alphas, theta, data))
        .collect();
    Ok((nodes, risks))
}

fn check_grid_dim<T: Scalar>(grid: &GridSpec<T>, data: &Dataset<T>) -> Result<()> {
    if grid.dim() != data.dim() {
        return Err(Error::usage(format!(
            "grid has dimension {} but the dataset has dimension {}",
            grid.dim(),
            data.dim()
        )));
    }
    Ok(())
}

fn require_at_least_one<T: Scalar>(alpha: Alpha<T>) -> Result<()> {
    match alpha {
        Alpha::Finite(v) if v < T::one() => Err(Error::domain(format!(
            "the saturation bound needs alpha in [1, inf], got {alpha}"
        ))),
        _ => Ok(()),
    }
}

/// `max |R̂_α(θ) - R̂_α'(θ)|` over the grid nodes. Both orders must lie in `[1, ∞]`.
pub fn saturation_sup<T: Scalar>(
    alpha: Alpha<T>,
    alpha2: Alpha<T>,
    grid: &GridSpec<T>,
    data: &Dataset<T>,
) -> Result<T> {
    let sups = saturation_sups(alpha2, &[alpha], grid, data)?;
    Ok(sups[0])
}

/// `max_θ |R̂_{α_k}(θ) - R̂_ref(θ)|` for each `α_k`, sharing one grid pass.
pub fn saturation_sups<T: Scalar>(
    reference: Alpha<T>,
    alphas: &[Alpha<T>],
    grid: &GridSpec<T>,
    data: &Dataset<T>,
) -> Result<Vec<T>> {
    require_at_least_one(reference)?;
    for &a in alphas {
        require_at_least_one(a)?;
    }
    let mut all = Vec::with_capacity(alphas.len() + 1);
    all.push(reference);
    all.extend_from_slice(alphas);
    let (nodes, risks) = multi_alpha_scan(&all, grid, data)?;
    if nodes.is_empty() {
        return Err(Error::usage("grid has no nodes inside the mask radius"));
    }
    Ok((0..alphas.len())
        .map(|k| {
            risks
                .iter()
                .map(|row| (row[k + 1] - row[0]).abs())
                .fold(T::zero(), T::max)
        })
        .collect())
}
