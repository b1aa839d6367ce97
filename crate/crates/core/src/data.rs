//! Seeded two-component Gaussian mixtures, the figure presets, rescaling into
//! the unit ball, and dataset CSV files.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{Alpha, Label, Sample, FEATURE_NORM_SLACK};
use crate::numerics::{cholesky, RngState, Scalar, SymMatrix, Vector};
use crate::risk::{fmt17, Dataset};

/// Two-component Gaussian mixture over labels `{-1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmSpec<T> {
    prior_neg: T,
    mean_neg: Vector<T>,
    mean_pos: Vector<T>,
    cov_neg: SymMatrix<T>,
    cov_pos: SymMatrix<T>,
}

impl<T: Scalar> GmmSpec<T> {
    pub fn new(
        prior_neg: T,
        mean_neg: Vector<T>,
        mean_pos: Vector<T>,
        cov_neg: SymMatrix<T>,
        cov_pos: SymMatrix<T>,
    ) -> Result<Self> {
        if !(prior_neg > T::zero() && prior_neg < T::one()) {
            return Err(Error::domain(format!("prior_neg must lie in (0, 1), got {prior_neg}")));
        }
        let d = mean_neg.dim();
        if mean_pos.dim() != d || cov_neg.dim() != d || cov_pos.dim() != d {
            return Err(Error::usage(format!(
                "mixture dimensions disagree: means {d} and {}, covariances {} and {}",
                mean_pos.dim(),
                cov_neg.dim(),
                cov_pos.dim()
            )));
        }
        cholesky(&cov_neg)?;
        cholesky(&cov_pos)?;
        Ok(GmmSpec {
            prior_neg,
            mean_neg,
            mean_pos,
            cov_neg,
            cov_pos,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean_neg.dim()
    }

    pub fn prior_neg(&self) -> T {
        self.prior_neg
    }

    pub fn mean(&self, y: Label) -> &Vector<T> {
        match y {
            Label::Neg => &self.mean_neg,
            Label::Pos => &self.mean_pos,
        }
    }

    pub fn cov(&self, y: Label) -> &SymMatrix<T> {
        match y {
            Label::Neg => &self.cov_neg,
            Label::Pos => &self.cov_pos,
        }
    }
}

/// JSON form of a [`GmmSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmSpecJson {
    pub prior_neg: f64,
    pub mean_neg: Vec<f64>,
    pub mean_pos: Vec<f64>,
    pub cov_neg: Vec<Vec<f64>>,
    pub cov_pos: Vec<Vec<f64>>,
}

impl GmmSpec<f64> {
    pub fn to_json(&self) -> GmmSpecJson {
        GmmSpecJson {
            prior_neg: self.prior_neg,
            mean_neg: self.mean_neg.as_slice().to_vec(),
            mean_pos: self.mean_pos.as_slice().to_vec(),
            cov_neg: self.cov_neg.rows(),
            cov_pos: self.cov_pos.rows(),
        }
    }
}

impl TryFrom<&GmmSpecJson> for GmmSpec<f64> {
    type Error = Error;

    fn try_from(j: &GmmSpecJson) -> Result<Self> {
        GmmSpec::new(
            j.prior_neg,
            Vector::from_slice(&j.mean_neg)?,
            Vector::from_slice(&j.mean_pos)?,
            SymMatrix::from_rows(&j.cov_neg)?,
            SymMatrix::from_rows(&j.cov_pos)?,
        )
    }
}

/// Mixtures from the three landscape figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig1, Preset::Fig2, Preset::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        }
    }

    /// Radius stated alongside the figure.
    pub fn default_radius(self) -> f64 {
        match self {
            Preset::Fig1 | Preset::Fig3 => 100.0,
            Preset::Fig2 => 5.0,
        }
    }

    /// Orders plotted in the figure.
    pub fn figure_alphas<T: Scalar>(self) -> Vec<Alpha<T>> {
        let f = |v: f64| Alpha::Finite(T::lit(v));
        match self {
            Preset::Fig1 => vec![f(0.95), f(1.0), f(2.0), f(10.0)],
            Preset::Fig2 => vec![f(1.0), f(1.001)],
            Preset::Fig3 => vec![f(4.0), Alpha::Infinity],
        }
    }

    /// Adjustments made to the published parameters, if any.
    pub fn note(self) -> Option<&'static str> {
        match self {
            Preset::Fig1 => Some(
                "published cov_neg is asymmetric (off-diagonal -2.02 vs -2.01); symmetrized to -2.015",
            ),
            _ => None,
        }
    }

    pub fn spec<T: Scalar>(self) -> GmmSpec<T> {
        let v = |x: &[f64]| Vector::new(x.iter().map(|&e| T::lit(e)).collect()).expect("finite");
        let m = |a: f64, b: f64, c: f64| {
            SymMatrix::new(2, vec![T::lit(a), T::lit(b), T::lit(b), T::lit(c)]).expect("symmetric")
        };
        let spec = match self {
            Preset::Fig1 => GmmSpec::new(
                T::lit(0.12),
                v(&[-0.18, 1.49]),
                v(&[-0.01, 0.16]),
                m(3.20, -2.015, 2.71),
                m(4.19, 1.27, 0.90),
            ),
            Preset::Fig2 => GmmSpec::new(
                T::lit(0.5),
                v(&[0.4, 0.4]),
                v(&[1.0, 1.0]),
                m(3.0, 0.2, 1.5),
                m(3.0, 0.2, 1.5),
            ),
            Preset::Fig3 => GmmSpec::new(
                T::lit(0.61),
                v(&[-0.14, 0.21]),
                v(&[0.06, 0.43]),
                m(0.38, 0.25, 3.17),
                m(2.07, -1.62, 1.97),
            ),
        };
        spec.expect("preset covariances are positive definite")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::usage(format!("unknown preset {s:?}, expected fig1, fig2 or fig3")))
    }
}

/// A labelled draw before rescaling; `x` may lie outside the unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSample<T> {
    pub x: Vector<T>,
    pub y: Label,
}

/// Draws `n` samples: the label first (`-1` with probability `prior_neg`),
/// then `x = μ_y + L_y z` with `L_y` the Cholesky factor of `Σ_y`.
pub fn sample_gmm<T: Scalar>(spec: &GmmSpec<T>, n: usize, rng: &mut RngState) -> Result<Vec<RawSample<T>>> {
    if n == 0 {
        return Err(Error::usage("sample count must be at least 1"));
    }
    let l_neg = cholesky(&spec.cov_neg)?;
    let l_pos = cholesky(&spec.cov_pos)?;
    let d = spec.dim();
    let mut out = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(d + 1);
    for _ in 0..n {
        let y = if rng.uniform::<T>() < spec.prior_neg {
            Label::Neg
        } else {
            Label::Pos
        };
        z.clear();
        while z.len() < d {
            let (a, b) = rng.gaussian_pair::<T>();
            z.push(a);
            z.push(b);
        }
        z.truncate(d);
        let (mu, l) = match y {
            Label::Neg => (&spec.mean_neg, &l_neg),
            Label::Pos => (&spec.mean_pos, &l_pos),
        };
        let x: Vec<T> = l.mul_vec(&z).iter().zip(mu.iter()).map(|(&a, &b)| a + b).collect();
        out.push(RawSample { x: Vector::new(x)?, y });
    }
    Ok(out)
}

/// The divisor applied to every feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizationRecord<T> {
    pub scale: T,
}

/// Divides all features by the largest raw norm (or by 1 when every norm is
/// already at most 1).
pub fn normalize_features<T: Scalar>(raw: &[RawSample<T>]) -> Result<(Dataset<T>, NormalizationRecord<T>)> {
    let max = raw.iter().map(|s| s.x.norm()).fold(T::zero(), T::max);
    let scale = if max <= T::one() { T::one() } else { max };
    let samples = raw
        .iter()
        .map(|s| {
            let mut x = if scale == T::one() { s.x.clone() } else { s.x.scaled(T::one() / scale) };
            // rounding can leave the largest vector one ulp outside the ball
            while x.norm() > T::one() {
                x = x.scaled(T::one() - T::epsilon());
            }
            Sample::new(x, s.y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(samples)?, NormalizationRecord { scale }))
}

/// Dataset CSV: header `y,x_1,...,x_d`, labels as `-1`/`1`, features with 17 significant digits.
pub fn write_dataset_csv<T: Scalar, W: Write>(data: &Dataset<T>, mut w: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=data.dim()).map(|i| format!("x_{i}")).collect();
    writeln!(w, "y,{}", header.join(","))?;
    let mut line = String::new();
    for s in data.samples() {
        line.clear();
        line.push_str(if s.y() == Label::Pos { "1" } else { "-1" });
        for &v in s.x().iter() {
            line.push(',');
            line.push_str(&fmt17(v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn dataset_to_csv_string<T: Scalar>(data: &Dataset<T>) -> String {
    let mut buf = Vec::new();
    write_dataset_csv(data, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_dataset_csv<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_csv(&text)
}

/// Parses the dataset CSV schema. `#` lines are comments.
pub fn parse_dataset_csv<T: Scalar>(text: &str) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, message: String| Error::Parse {
        line: line as usize,
        message,
    };
    let header = reader
        .headers()
        .map_err(|e| parse_err(e.position().map_or(1, |p| p.line()), e.to_string()))?
        .clone();
    let header_line = reader.position().line().max(1);
    let d = header.len().saturating_sub(1);
    let well_formed = d >= 1
        && &header[0] == "y"
        && header.iter().skip(1).enumerate().all(|(i, h)| h == format!("x_{}", i + 1));
    if !well_formed {
        return Err(parse_err(header_line, "expected header y,x_1,...,x_d".into()));
    }
    let mut samples = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 1 {
            return Err(parse_err(line, format!("expected {} fields, found {}", d + 1, rec.len())));
        }
        let y = match &rec[0] {
            "1" | "+1" => Label::Pos,
            "-1" => Label::Neg,
            other => return Err(parse_err(line, format!("label must be -1 or 1, got {other:?}"))),
        };
        let x = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| parse_err(line, format!("cannot parse feature {f:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        let x = Vector::new(x)?;
        let n = x.norm();
        if n > T::one() + T::lit(FEATURE_NORM_SLACK) {
            return Err(Error::Validation(format!(
                "line {line}: feature norm {n} exceeds 1 (normalize the data first)"
            )));
        }
        samples.push(Sample::new(x, y)?);
    }
    if samples.is_empty() {
        return Err(Error::Validation("dataset file has no samples".into()));
    }
    Dataset::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::min_eigen_sym;

    fn fraction_neg(raw: &[RawSample<f64>]) -> f64 {
        raw.iter().filter(|s| s.y == Label::Neg).count() as f64 / raw.len() as f64
    }

    #[test]
    fn presets_match_reference_parameters() {
        let f1 = Preset::Fig1.spec::<f64>();
        assert_eq!(f1.prior_neg(), 0.12);
        assert_eq!(f1.cov(Label::Neg).get(0, 1), -2.015);
        assert_eq!(f1.cov(Label::Neg).get(1, 0), -2.015);
        let f2 = Preset::Fig2.spec::<f64>();
        assert_eq!(f2.cov(Label::Neg).rows(), vec![vec![3.0, 0.2], vec![0.2, 1.5]]);
        assert_eq!(f2.cov(Label::Pos), f2.cov(Label::Neg));
        assert_eq!(f2.mean(Label::Pos).as_slice(), &[1.0, 1.0]);
        let f3 = Preset::Fig3.spec::<f64>();
        assert_eq!(f3.prior_neg(), 0.61);
        let c = f3.cov(Label::Pos);
        assert!((c.get(0, 0) * c.get(1, 1) - c.get(0, 1).powi(2) - 1.4535).abs() < 1e-12);
        assert!(cholesky(c).is_ok());
        assert_eq!("FIG2".parse::<Preset>().unwrap(), Preset::Fig2);
        assert!("fig4".parse::<Preset>().is_err());
    }

    #[test]
    fn class_frequencies_and_means() {
        let raw = sample_gmm(&Preset::Fig2.spec::<f64>(), 10_000, &mut RngState::new(42)).unwrap();
        assert!((fraction_neg(&raw) - 0.5).abs() < 0.02);
        let pos: Vec<_> = raw.iter().filter(|s| s.y == Label::Pos).collect();
        for j in 0..2 {
            let mean = pos.iter().map(|s| s.x[j]).sum::<f64>() / pos.len() as f64;
            assert!((mean - 1.0).abs() < 0.1, "coordinate {j}: {mean}");
        }
        let raw = sample_gmm(&Preset::Fig1.spec::<f64>(), 10_000, &mut RngState::new(42)).unwrap();
        assert!((fraction_neg(&raw) - 0.12).abs() < 0.015);
    }

    #[test]
    fn sample_covariance_tracks_spec() {
        let spec = Preset::Fig3.spec::<f64>();
        let raw = sample_gmm(&spec, 40_000, &mut RngState::new(9)).unwrap();
        let neg: Vec<_> = raw.iter().filter(|s| s.y == Label::Neg).collect();
        let n = neg.len() as f64;
        let mu: Vec<f64> = (0..2).map(|j| neg.iter().map(|s| s.x[j]).sum::<f64>() / n).collect();
        let c01 = neg.iter().map(|s| (s.x[0] - mu[0]) * (s.x[1] - mu[1])).sum::<f64>() / n;
        let c11 = neg.iter().map(|s| (s.x[1] - mu[1]).powi(2)).sum::<f64>() / n;
        assert!((c01 - 0.25).abs() < 0.06, "{c01}");
        assert!((c11 - 3.17).abs() < 0.15, "{c11}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = Preset::Fig2.spec::<f64>();
        let a = sample_gmm(&spec, 500, &mut RngState::new(7)).unwrap();
        let b = sample_gmm(&spec, 500, &mut RngState::new(7)).unwrap();
        assert_eq!(a, b);
        let (da, _) = normalize_features(&a).unwrap();
        let (db, _) = normalize_features(&b).unwrap();
        assert_eq!(dataset_to_csv_string(&da), dataset_to_csv_string(&db));
        assert!(sample_gmm(&spec, 0, &mut RngState::new(7)).is_err());
    }

    #[test]
    fn three_dimensional_mixture() {
        let id = SymMatrix::<f64>::identity(3);
        let spec = GmmSpec::new(
            0.3,
            Vector::zeros(3),
            Vector::from_slice(&[1.0, 2.0, 3.0]).unwrap(),
            id.clone(),
            id,
        )
        .unwrap();
        let raw = sample_gmm(&spec, 10, &mut RngState::new(1)).unwrap();
        assert!(raw.iter().all(|s| s.x.dim() == 3));
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let err = GmmSpec::new(0.5, Vector::zeros(2), Vector::zeros(2), bad.clone(), bad).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    fn raw(xs: &[[f64; 2]]) -> Vec<RawSample<f64>> {
        xs.iter()
            .map(|x| RawSample {
                x: Vector::from_slice(x).unwrap(),
                y: Label::Pos,
            })
            .collect()
    }

    #[test]
    fn normalization_examples() {
        let small = raw(&[[0.3, 0.4], [0.0, -1.0]]);
        let (d, rec) = normalize_features(&small).unwrap();
        assert_eq!(rec.scale, 1.0);
        assert_eq!(d.samples()[0].x().as_slice(), &[0.3, 0.4]);

        let big = raw(&[[2.0, 0.0], [0.0, 4.0]]);
        let (d, rec) = normalize_features(&big).unwrap();
        assert_eq!(rec.scale, 4.0);
        assert_eq!(d.samples()[0].x().norm(), 0.5);
        assert_eq!(d.samples()[1].x().norm(), 1.0);
    }

    #[test]
    fn normalization_is_idempotent() {
        let r = sample_gmm(&Preset::Fig1.spec::<f64>(), 2000, &mut RngState::new(3)).unwrap();
        let (once, rec) = normalize_features(&r).unwrap();
        assert!(rec.scale > 1.0);
        let max = once.samples().iter().map(|s| s.x().norm()).fold(0.0, f64::max);
        assert!(max <= 1.0 && (max - 1.0).abs() < 1e-12);
        let again: Vec<_> = once
            .samples()
            .iter()
            .map(|s| RawSample { x: s.x().clone(), y: s.y() })
            .collect();
        let (twice, rec2) = normalize_features(&again).unwrap();
        assert_eq!(rec2.scale, 1.0);
        assert_eq!(once, twice);
        let ev = once.second_moment().eigenvalues().unwrap();
        assert!(min_eigen_sym(&once.second_moment()).unwrap() >= 0.0);
        assert!(ev.iter().all(|&e| e <= 1.0 + 1e-12));
    }

    #[test]
    fn csv_round_trip() {
        let r = sample_gmm(&Preset::Fig3.spec::<f64>(), 300, &mut RngState::new(5)).unwrap();
        let (d, _) = normalize_features(&r).unwrap();
        let text = dataset_to_csv_string(&d);
        assert!(text.starts_with("y,x_1,x_2\n"));
        let back: Dataset<f64> = parse_dataset_csv(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_errors() {
        let err = parse_dataset_csv::<f64>("y,x_1,x_2\n1,0.1,0.2\n0,0.1,0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_dataset_csv::<f64>("y,x_1,x_2\n1,1.5,0\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = parse_dataset_csv::<f64>("y,x_1,x_2\n1,0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_dataset_csv::<f64>("y,x_1,x_2\n1,0.1,zz\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_dataset_csv::<f64>("label,a\n1,0.1\n").is_err());
        assert!(parse_dataset_csv::<f64>("y,x_1\n").is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = Preset::Fig1.spec::<f64>();
        let json = serde_json::to_string(&spec.to_json()).unwrap();
        for key in ["prior_neg", "mean_neg", "mean_pos", "cov_neg", "cov_pos"] {
            assert!(json.contains(key));
        }
        let back: GmmSpecJson = serde_json::from_str(&json).unwrap();
        assert_eq!(GmmSpec::try_from(&back).unwrap(), spec);
    }
}
