//! Objective functions: the evaluation contract, the quadratic and
//! L2-regularized logistic regression problems, the averaged Hessian along a
//! segment and a central-difference derivative checker.

use crate::error::{Error, Result};
use crate::linalg::{self, dot, eigvals_sym, DenseMatrix, SymMatrix};
use crate::scalar::Scalar;

/// A twice differentiable, strongly convex function with known constants
/// `μ I ⪯ ∇²f(x) ⪯ L I`.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    fn hessian(&self, x: &[T]) -> SymMatrix<T>;
    /// `∇²f(x)·v` without forming the Hessian.
    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T>;
    /// Strong convexity parameter μ.
    fn mu(&self) -> T;
    /// Gradient Lipschitz constant L.
    fn lip(&self) -> T;
    /// The Hessian when it does not depend on `x`.
    fn constant_hessian(&self) -> Option<&SymMatrix<T>> {
        None
    }
    /// `∇f(x + u) − ∇f(x)`. Implementations should avoid forming the two
    /// gradients separately, whose cancellation leaves only a few correct
    /// digits once `u` is small.
    fn gradient_difference(&self, x: &[T], u: &[T]) -> Vec<T> {
        linalg::sub(&self.gradient(&linalg::axpy(x, T::one(), u)), &self.gradient(x))
    }
    /// `κ = L/μ`.
    fn kappa(&self) -> T {
        self.lip() / self.mu()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `f(x) = ½xᵀAx − bᵀx` with SPD `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProblem<T> {
    pub a: SymMatrix<T>,
    pub b: Vec<T>,
    mu: T,
    lip: T,
}

impl<T: Scalar> QuadraticProblem<T> {
    /// Builds the problem, computing μ and L as the extreme eigenvalues of `a`.
    pub fn new(a: SymMatrix<T>, b: Vec<T>) -> Result<Self> {
        check_dim(a.order(), b.len())?;
        let ev = eigvals_sym(&a);
        let (mu, lip) = (ev[0], ev[ev.len() - 1]);
        if !(mu > T::zero()) {
            return Err(Error::NotPositiveDefinite { index: 0, pivot: mu.to_f64() });
        }
        Ok(QuadraticProblem { a, b, mu, lip })
    }

    /// Builds the problem with externally known spectral bounds.
    pub fn with_constants(a: SymMatrix<T>, b: Vec<T>, mu: T, lip: T) -> Result<Self> {
        check_dim(a.order(), b.len())?;
        if !(mu > T::zero()) || lip < mu {
            return Err(Error::InvalidArgument(format!("need 0 < mu <= lip, got mu = {mu}, lip = {lip}")));
        }
        Ok(QuadraticProblem { a, b, mu, lip })
    }

    /// The minimizer `A⁻¹b`.
    pub fn minimizer(&self) -> Result<Vec<T>> {
        linalg::solve_spd(&self.a, &self.b)
    }

    /// The same problem in another scalar type.
    pub fn cast<U: Scalar>(&self) -> QuadraticProblem<U> {
        QuadraticProblem {
            a: self.a.cast(),
            b: linalg::cast_vec(&self.b),
            mu: U::from_f64(self.mu.to_f64()),
            lip: U::from_f64(self.lip.to_f64()),
        }
    }
}

impl<T: Scalar> Objective<T> for QuadraticProblem<T> {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[T]) -> T {
        self.a.quad_form(x) * T::half() - dot(&self.b, x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        linalg::sub(&self.a.mul_vec(x), &self.b)
    }
    fn hessian(&self, _x: &[T]) -> SymMatrix<T> {
        self.a.clone()
    }
    fn hvp(&self, _x: &[T], v: &[T]) -> Vec<T> {
        self.a.mul_vec(v)
    }
    fn gradient_difference(&self, _x: &[T], u: &[T]) -> Vec<T> {
        self.a.mul_vec(u)
    }
    fn mu(&self) -> T {
        self.mu
    }
    fn lip(&self) -> T {
        self.lip
    }
    fn constant_hessian(&self) -> Option<&SymMatrix<T>> {
        Some(&self.a)
    }
}

/// Value, gradient and Hessian of a quadratic at `x`.
pub fn quad_eval<T: Scalar>(p: &QuadraticProblem<T>, x: &[T]) -> Result<(T, Vec<T>, SymMatrix<T>)> {
    check_dim(p.dim(), x.len())?;
    Ok((p.value(x), p.gradient(x), p.a.clone()))
}

/// `f(x) = (1/m) Σ ln(1 + exp(−b_i a_iᵀx)) + (γ/2)‖x‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticProblem<T> {
    pub features: DenseMatrix<T>,
    pub labels: Vec<T>,
    pub gamma: T,
    lip: T,
}

/// `ln(1 + exp(−t))` without overflow.
fn softplus_neg<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(−t))` without overflow.
fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticProblem<T> {
    /// Validates dimensions and labels, and computes L from the spectrum of
    /// `ZᵀZ`.
    pub fn new(features: DenseMatrix<T>, labels: Vec<T>, gamma: T) -> Result<Self> {
        check_dim(features.rows(), labels.len())?;
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidArgument("empty feature matrix".into()));
        }
        for (i, &b) in labels.iter().enumerate() {
            if b != T::one() && b != -T::one() {
                return Err(Error::NonBinaryLabel { line_no: i + 1, label: b.to_string() });
            }
        }
        let m = T::from_usize(features.rows());
        let ev = eigvals_sym(&features.gram());
        let four = T::from_f64(4.0);
        let lip = ev[ev.len() - 1].max(T::zero()) / (four * m) + gamma;
        Ok(LogisticProblem { features, labels, gamma, lip })
    }

    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    fn margins(&self, x: &[T]) -> Vec<T> {
        (0..self.samples()).map(|i| self.labels[i] * dot(self.features.row(i), x)).collect()
    }

    /// Hessian weights `s_i(1 − s_i)`, `s_i = σ(b_i a_iᵀx)`.
    fn curvature_weights(&self, x: &[T]) -> Vec<T> {
        self.margins(x)
            .into_iter()
            .map(|t| {
                let s = sigmoid(t);
                s * (T::one() - s)
            })
            .collect()
    }

    /// A constant `M` for which `∇²f(y) − ∇²f(x) ⪯ M‖y − x‖_z ∇²f(w)` holds
    /// for all points.
    ///
    /// The sigmoid variance `w(t) = s(1 − s)` is Lipschitz with constant
    /// `1/(6√3)`, `‖·‖_z ≥ √γ‖·‖`, and `∇²f(w) ⪰ γI`, which gives
    /// `M = max‖a_i‖·λ_max(ZᵀZ)/(6√3·m·γ^{3/2})`. The bound is loose; the
    /// experiments treat `M` as a tuning constant instead.
    pub fn self_concordance_bound(&self) -> Result<T> {
        let (mu, lip) = logistic_constants(self)?;
        let m = T::from_usize(self.samples());
        let four = T::from_f64(4.0);
        let gram_max = (lip - mu) * four * m;
        let max_row = (0..self.samples()).map(|i| linalg::norm(self.features.row(i))).fold(T::zero(), |a, b| a.max(b));
        let c = T::one() / (T::from_f64(6.0) * T::from_f64(3.0).sqrt());
        Ok(c * max_row * gram_max / (m * mu * mu.sqrt()))
    }
}

impl<T: Scalar> Objective<T> for LogisticProblem<T> {
    fn dim(&self) -> usize {
        self.features.cols()
    }
    fn value(&self, x: &[T]) -> T {
        let m = T::from_usize(self.samples());
        let mut s = T::zero();
        for t in self.margins(x) {
            s += softplus_neg(t);
        }
        s / m + self.gamma * T::half() * dot(x, x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        let m = T::from_usize(self.samples());
        let mut g = linalg::scale(x, self.gamma);
        for (i, t) in self.margins(x).into_iter().enumerate() {
            let c = -self.labels[i] * sigmoid(-t) / m;
            for (gj, &aj) in g.iter_mut().zip(self.features.row(i)) {
                *gj += c * aj;
            }
        }
        g
    }
    fn hessian(&self, x: &[T]) -> SymMatrix<T> {
        let n = self.dim();
        let m = T::from_usize(self.samples());
        let w = self.curvature_weights(x);
        let mut rows = vec![vec![T::zero(); n]; n];
        for (i, &wi) in w.iter().enumerate() {
            let a = self.features.row(i);
            let c = wi / m;
            for p in 0..n {
                let cap = c * a[p];
                for q in 0..=p {
                    rows[p][q] += cap * a[q];
                }
            }
        }
        SymMatrix::from_fn(n, |p, q| if p == q { rows[p][q] + self.gamma } else { rows[p][q] })
    }
    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let m = T::from_usize(self.samples());
        let mut out = linalg::scale(v, self.gamma);
        for (i, wi) in self.curvature_weights(x).into_iter().enumerate() {
            let a = self.features.row(i);
            let c = wi * dot(a, v) / m;
            for (o, &aj) in out.iter_mut().zip(a) {
                *o += c * aj;
            }
        }
        out
    }
    /// With `t_i = b_i a_iᵀx` and `δ_i = b_i a_iᵀu`, the sigmoid difference is
    /// `σ(−t_i − δ_i) − σ(−t_i) = −σ(−t_i − δ_i)σ(t_i)(e^{δ_i} − 1)`.
    fn gradient_difference(&self, x: &[T], u: &[T]) -> Vec<T> {
        let m = T::from_usize(self.samples());
        let mut g = linalg::scale(u, self.gamma);
        for (i, t) in self.margins(x).into_iter().enumerate() {
            let a = self.features.row(i);
            let b = self.labels[i];
            let delta = b * dot(a, u);
            let c = b * sigmoid(-t - delta) * sigmoid(t) * delta.exp_m1() / m;
            for (gj, &aj) in g.iter_mut().zip(a) {
                *gj += c * aj;
            }
        }
        g
    }
    fn mu(&self) -> T {
        self.gamma
    }
    fn lip(&self) -> T {
        self.lip
    }
}

/// Value, gradient and Hessian of the logistic objective at `x`.
pub fn logistic_eval<T: Scalar>(p: &LogisticProblem<T>, x: &[T]) -> Result<(T, Vec<T>, SymMatrix<T>)> {
    check_dim(p.dim(), x.len())?;
    Ok((p.value(x), p.gradient(x), p.hessian(x)))
}

/// `(μ, L) = (γ, λ_max(ZᵀZ)/(4m) + γ)`.
pub fn logistic_constants<T: Scalar>(p: &LogisticProblem<T>) -> Result<(T, T)> {
    if !(p.gamma > T::zero()) {
        return Err(Error::NonconvexConfiguration { gamma: p.gamma.to_f64() });
    }
    Ok((p.gamma, p.lip))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> Vec<(T, T)> {
    assert!(n >= 1, "quadrature needs at least one node");
    let two = T::one() + T::one();
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut z = T::from_f64(guess);
        let mut dp = T::one();
        for _ in 0..100 {
            // Three-term recurrence for P_n(z) and P_{n-1}(z).
            let (mut p0, mut p1) = (T::one(), z);
            for k in 2..=n {
                let kf = T::from_usize(k);
                let p2 = ((two * kf - T::one()) * z * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { T::one() } else { p0 };
            dp = T::from_usize(n) * (z * pn - pm) / (z * z - T::one());
            let step = pn / dp;
            z -= step;
            if step.abs() <= T::epsilon() * T::from_f64(4.0) {
                break;
            }
        }
        let w = two / ((T::one() - z * z) * dp * dp);
        rule.push(((T::one() - z) * T::half(), w * T::half()));
    }
    rule
}

/// Default number of quadrature nodes for [`averaged_hessian`].
pub const DEFAULT_QUADRATURE_NODES: usize = 16;

/// `J = ∫₀¹ ∇²f(x + t u) dt` by Gauss–Legendre quadrature.
pub fn averaged_hessian<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x: &[T],
    u: &[T],
    nodes: usize,
) -> Result<SymMatrix<T>> {
    check_dim(o.dim(), x.len())?;
    check_dim(o.dim(), u.len())?;
    if nodes == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    if let Some(a) = o.constant_hessian() {
        return Ok(a.clone());
    }
    if u.iter().all(|&ui| ui == T::zero()) {
        return Ok(o.hessian(x));
    }
    let mut j = SymMatrix::zeros(o.dim());
    for (t, w) in gauss_legendre::<T>(nodes) {
        let h = o.hessian(&linalg::axpy(x, t, u));
        j = j.add(&h.scale(w))?;
    }
    Ok(j)
}

/// `y = ∇f(x + u) − ∇f(x)`.
pub fn secant_vector<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x: &[T], u: &[T]) -> Vec<T> {
    o.gradient_difference(x, u)
}

/// Mixed relative error `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞, 1)`.
fn mixed_error(a: &[f64], b: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf(&diff) / inf(a).max(inf(b)).max(1.0)
}

/// Compares the analytic gradient with central differences of the value and
/// the analytic Hessian with central differences of the gradient. Returns
/// `(grad_err, hess_err)`, each `‖analytic − fd‖∞ / max(‖analytic‖∞, ‖fd‖∞, 1)`.
pub fn fd_check<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x: &[T], h: T) -> (f64, f64) {
    let n = o.dim();
    let two_h = h + h;
    let g = o.gradient(x);
    let hess = o.hessian(x);
    let mut fd_g = Vec::with_capacity(n);
    let mut analytic_h = Vec::with_capacity(n * n);
    let mut fd_h = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        fd_g.push(((o.value(&xp) - o.value(&xm)) / two_h).to_f64());
        let col = linalg::sub(&o.gradient(&xp), &o.gradient(&xm));
        for (j, c) in col.into_iter().enumerate() {
            fd_h.push((c / two_h).to_f64());
            analytic_h.push(hess.get(j, i).to_f64());
        }
    }
    let g64: Vec<f64> = g.iter().map(|v| v.to_f64()).collect();
    (mixed_error(&g64, &fd_g), mixed_error(&analytic_h, &fd_h))
}
