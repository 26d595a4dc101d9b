//! LIBSVM text ingestion and seeded synthetic problems.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, SymMatrix};
use crate::objectives::{LogisticProblem, QuadraticProblem};
use crate::scalar::Scalar;

/// Largest `m·n` materialized densely.
pub const MAX_DENSE_ENTRIES: usize = 10_000_000;

/// A binary classification dataset with labels in `{−1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: DenseMatrix<f64>,
    pub labels: Vec<f64>,
    pub source: String,
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// `γ = 1/(10m)`.
    pub fn default_gamma(&self) -> f64 {
        1.0 / (10.0 * self.samples() as f64)
    }

    /// The regularized logistic loss of this dataset; `gamma` defaults to
    /// [`default_gamma`](Self::default_gamma).
    pub fn logistic_problem(&self, gamma: Option<f64>) -> Result<LogisticProblem<f64>> {
        let g = gamma.unwrap_or_else(|| self.default_gamma());
        LogisticProblem::new(self.features.clone(), self.labels.clone(), g)
    }
}

fn parse_label(line_no: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::MalformedLine { line_no, reason: format!("bad label `{tok}`") })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::NonBinaryLabel { line_no, label: tok.to_string() })
    }
}

/// Parses `<label> <index>:<value> ...` lines with 1-based ascending indices
/// into a dense dataset whose width is the largest index seen. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label = parse_label(line_no, toks.next().expect("line is nonempty"))?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::MalformedLine {
                line_no,
                reason: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&j| j >= 1)
                .ok_or_else(|| Error::MalformedLine { line_no, reason: format!("bad index `{idx}`") })?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::MalformedLine { line_no, reason: format!("bad value `{val}`") })?;
            if idx <= last {
                return Err(Error::NonAscendingIndex { line_no });
            }
            last = idx;
            row.push((idx, val));
        }
        width = width.max(last);
        labels.push(label);
        sparse.push(row);
    }
    if labels.is_empty() {
        return Err(Error::MalformedLine { line_no: 1, reason: "no samples".into() });
    }
    if labels.len().saturating_mul(width) > MAX_DENSE_ENTRIES {
        return Err(Error::InvalidArgument(format!("{} x {width} exceeds the dense size limit", labels.len())));
    }
    let mut features = DenseMatrix::zeros(labels.len(), width);
    for (r, row) in sparse.iter().enumerate() {
        for &(j, v) in row {
            features.set(r, j - 1, v);
        }
    }
    Ok(Dataset { features, labels, source: "libsvm".into() })
}

/// Writes a dataset in LIBSVM format, omitting zero entries. Values use the
/// shortest decimal form that reparses to the same `f64`.
pub fn serialize_libsvm(d: &Dataset) -> String {
    let mut out = String::new();
    for r in 0..d.samples() {
        out.push_str(if d.labels[r] > 0.0 { "+1" } else { "-1" });
        for (j, &v) in d.features.row(r).iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{v:?}", j + 1).expect("writing to a String");
            }
        }
        out.push('\n');
    }
    out
}

/// `m` samples in `ℝⁿ`. Rows are `N(0, I/n)`; labels follow the logistic
/// model `P(b = +1) = σ(separation·√n·⟨a, w⟩)` for a planted unit direction
/// `w`, so `separation = 0` gives fair coin labels.
pub fn gen_synthetic_logistic(m: usize, n: usize, seed: u64, separation: f64) -> Result<Dataset> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m and n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let wn = linalg::norm(&w);
    w.iter_mut().for_each(|v| *v /= wn);
    let scale = 1.0 / (n as f64).sqrt();
    let mut features = DenseMatrix::zeros(m, n);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let row: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let t = separation * (n as f64).sqrt() * linalg::dot(&row, &w);
        let p = 1.0 / (1.0 + (-t).exp());
        labels.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
        for (j, v) in row.into_iter().enumerate() {
            features.set(i, j, v);
        }
    }
    Ok(Dataset { features, labels, source: format!("synthetic(m={m},n={n},seed={seed},separation={separation})") })
}

/// `A = QᵀDQ` with `Q` a product of `n` seeded Householder reflections and
/// `D` log-uniform in `[1, κ]` with both endpoints present, so `μ = 1` and
/// `L = κ` hold to working precision; `b` is standard Gaussian. For `n = 1`
/// the spectrum is `{κ}`.
///
/// The random draws are made in `f64`; the assembly of `A` runs in `T`.
pub fn gen_quadratic<T: Scalar>(n: usize, kappa: f64, seed: u64) -> Result<QuadraticProblem<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must be at least 1, got {kappa}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![kappa; n];
    if n >= 2 {
        d[0] = 1.0;
        for v in d.iter_mut().take(n - 1).skip(1) {
            *v = kappa.powf(rng.random::<f64>());
        }
    }
    let mut a = SymMatrix::from_diag(&linalg::cast_vec::<f64, T>(&d));
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        a = reflect(&a, &linalg::cast_vec(&v));
    }
    let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mu = if n >= 2 { 1.0 } else { kappa };
    QuadraticProblem::with_constants(a, linalg::cast_vec(&b), T::from_f64(mu), T::from_f64(kappa))
}

/// `PAP` for the reflection `P = I − 2vvᵀ/(vᵀv)`.
fn reflect<T: Scalar>(a: &SymMatrix<T>, v: &[T]) -> SymMatrix<T> {
    let beta = (T::one() + T::one()) / linalg::dot(v, v);
    let p = linalg::scale(&a.mul_vec(v), beta);
    let k = beta * T::half() * linalg::dot(v, &p);
    let q = linalg::axpy(&p, -k, v);
    SymMatrix::from_fn(a.order(), |i, j| a.get(i, j) - v[i] * q[j] - q[i] * v[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvals_sym;
    use crate::objectives::Objective;

    #[test]
    fn parse_examples() {
        let d = parse_libsvm("+1 1:0.5 3:2").unwrap();
        assert_eq!(d.labels, vec![1.0]);
        assert_eq!(d.features.row(0), &[0.5, 0.0, 2.0]);
        let d = parse_libsvm("-1\n+1 2:1").unwrap();
        assert_eq!(d.features.row(0), &[0.0, 0.0]);
        assert_eq!(d.features.row(1), &[0.0, 1.0]);
        let d = parse_libsvm("# header\n0 1:1\n\n1 1:2\n").unwrap();
        assert_eq!(d.labels, vec![-1.0, 1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(parse_libsvm("+1 1:1\n2 1:1"), Err(Error::NonBinaryLabel { line_no: 2, label: "2".into() }));
        assert_eq!(parse_libsvm("+1 2:1 1:1"), Err(Error::NonAscendingIndex { line_no: 1 }));
        assert_eq!(parse_libsvm("+1 1:1 1:2"), Err(Error::NonAscendingIndex { line_no: 1 }));
        assert!(matches!(parse_libsvm("+1 1:1\n-1 0:1"), Err(Error::MalformedLine { line_no: 2, .. })));
        assert!(matches!(parse_libsvm("+1 1:x"), Err(Error::MalformedLine { line_no: 1, .. })));
        assert!(matches!(parse_libsvm("+1 11"), Err(Error::MalformedLine { line_no: 1, .. })));
        assert!(matches!(parse_libsvm("yes 1:1"), Err(Error::MalformedLine { line_no: 1, .. })));
        assert!(matches!(parse_libsvm("# only\n"), Err(Error::MalformedLine { .. })));
    }

    #[test]
    fn round_trip() {
        let d = gen_synthetic_logistic(20, 5, 3, 1.0).unwrap();
        let text = serialize_libsvm(&d);
        let back = parse_libsvm(&text).unwrap();
        assert_eq!(back.features, d.features);
        assert_eq!(back.labels, d.labels);
        assert_eq!(serialize_libsvm(&back), text);
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced_without_separation() {
        assert_eq!(gen_synthetic_logistic(50, 4, 9, 2.0).unwrap(), gen_synthetic_logistic(50, 4, 9, 2.0).unwrap());
        let d = gen_synthetic_logistic(400, 10, 1, 0.0).unwrap();
        let mean = d.labels.iter().sum::<f64>() / 400.0;
        assert!(mean.abs() <= 0.2, "{mean}");
        let p = d.logistic_problem(None).unwrap();
        assert_eq!(p.gamma, 1.0 / 4000.0);
        assert!(p.kappa() > 1.0 && p.kappa().is_finite());
    }

    #[test]
    fn quadratic_spectrum_endpoints() {
        let p = gen_quadratic::<f64>(20, 1e3, 5).unwrap();
        let ev = eigvals_sym(&p.a);
        assert!((ev[0] - 1.0).abs() <= 1e-10);
        assert!((ev[19] - 1e3).abs() <= 1e-10 * 1e3);
        assert_eq!((p.mu(), p.lip()), (1.0, 1e3));
        let id = gen_quadratic::<f64>(6, 1.0, 2).unwrap();
        assert!(id.a.sub(&SymMatrix::identity(6)).unwrap().max_abs() < 1e-14);
        assert_eq!(gen_quadratic::<f64>(6, 10.0, 4).unwrap(), gen_quadratic::<f64>(6, 10.0, 4).unwrap());
        assert!(gen_quadratic::<f64>(3, 0.5, 1).is_err());
    }
}
