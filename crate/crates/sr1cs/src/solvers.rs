//! Iteration loops: SR1 on quadratics with the exact Hessian, SR1 with the
//! correction strategy, uncorrected SR1, Newton's method and a BFGS baseline.
//!
//! Every solver takes unit steps `x_{k+1} = x_k − H_k∇f(x_k)` and emits one
//! [`IterationRecord`] per visited iterate. Record `k` describes `x_k` and the
//! step taken from it; the last record describes the final iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, dot, norm, LowerTriangular, SymMatrix};
use crate::objectives::{averaged_hessian, secant_vector, Objective, QuadraticProblem, DEFAULT_QUADRATURE_NODES};
use crate::potentials::{logdet_potential, nu_measure, theta_measure, trace_potential};
use crate::report::{DenomSign, IterationRecord};
use crate::scalar::Scalar;
use crate::sr1_core::{
    apply_correction, correction_factor, FactoredResidual, HessianApprox, SkipRule, UpdateKind, UpdateOutcome,
    DEFAULT_SKIP_TOL,
};

/// How the quadratic solver carries `G_k − A`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateForm {
    /// `r = (G − A)u` from the stored `G`.
    #[default]
    Direct,
    /// `G − A = FFᵀ` is kept as a factor, see [`FactoredResidual`].
    Factored,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Self-concordance constant `M ≥ 0` of the correction strategy.
    pub m_const: f64,
    /// Angle threshold of the skip rule.
    pub skip_tol: f64,
    /// Noise-floor threshold of the skip rule, relative to `‖y‖`.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Stop once `‖∇f(x_k)‖ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Newton steps taken before the quasi-Newton phase.
    pub warm_start_steps: usize,
    /// Gauss–Legendre nodes for the averaged Hessian.
    pub quadrature_nodes: usize,
    /// Fill `ν`, `θ`, `σ`, `V` in the records.
    pub record_diagnostics: bool,
    pub update_form: UpdateForm,
    /// Overrides `L` in `G₀ = L·I`.
    pub g0_scale: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m_const: 0.0,
            skip_tol: DEFAULT_SKIP_TOL,
            residual_tol: DEFAULT_SKIP_TOL,
            max_iters: 1000,
            grad_tol: 1e-12,
            warm_start_steps: 0,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            record_diagnostics: false,
            update_form: UpdateForm::Direct,
            g0_scale: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("grad_tol must be positive".into()));
        }
        if !(self.m_const >= 0.0) || !self.m_const.is_finite() {
            return Err(Error::NegativeArgument { name: "m_const", value: self.m_const });
        }
        if self.quadrature_nodes == 0 {
            return Err(Error::InvalidArgument("quadrature_nodes must be at least 1".into()));
        }
        if let Some(c) = self.g0_scale {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidArgument("g0_scale must be positive".into()));
            }
        }
        Ok(())
    }

    fn skip_rule(&self) -> SkipRule {
        SkipRule { angle_tol: self.skip_tol, residual_tol: self.residual_tol }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    MaxIters,
    /// The skip rule fired and the next gradient met the tolerance.
    ExactOptimum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<T> {
    pub final_x: Vec<T>,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub applied_updates: usize,
    /// `x_0, x_1, …, final_x`.
    pub iterates: Vec<Vec<T>>,
}

/// What a solver exposes after each step `k`.
pub struct StepView<'a, T> {
    pub k: usize,
    pub x: &'a [T],
    pub u: &'a [T],
    /// `G_k`.
    pub g: &'a SymMatrix<T>,
    /// `G̃_k = a_k G_k`, the matrix that was updated.
    pub g_tilde: &'a SymMatrix<T>,
    /// `G_{k+1}`.
    pub g_next: &'a SymMatrix<T>,
    pub outcome: UpdateOutcome<T>,
    pub a_k: T,
    pub r_k: T,
    /// The averaged Hessian `J_k`, when diagnostics are recorded.
    pub j: Option<&'a SymMatrix<T>>,
}

pub trait StepObserver<T> {
    fn on_step(&mut self, view: &StepView<'_, T>);
}

impl<T> StepObserver<T> for () {
    fn on_step(&mut self, _view: &StepView<'_, T>) {}
}

impl<T, F: FnMut(&StepView<'_, T>)> StepObserver<T> for F {
    fn on_step(&mut self, view: &StepView<'_, T>) {
        self(view)
    }
}

fn denom_sign<T: Scalar>(o: &UpdateOutcome<T>) -> DenomSign {
    if o.kind == UpdateKind::Skipped || o.denominator == T::zero() {
        DenomSign::Zero
    } else if o.denominator > T::zero() {
        DenomSign::Pos
    } else {
        DenomSign::Neg
    }
}

fn check_dim(n: usize, x: &[impl Sized]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    Ok(())
}

fn sqrt_nonneg<T: Scalar>(v: T) -> T {
    v.max(T::zero()).sqrt()
}

fn base_record<T: Scalar>(k: usize, f: T, grad: &[T], lambda_f: T, h: &SymMatrix<T>) -> IterationRecord {
    IterationRecord {
        k,
        f_value: f.to_f64(),
        grad_norm: norm(grad).to_f64(),
        lambda_f: lambda_f.to_f64(),
        g_norm: sqrt_nonneg(h.quad_form(grad)).to_f64(),
        r_k: 0.0,
        a_k: 1.0,
        nu: None,
        theta: None,
        sigma: None,
        v_potential: None,
        skipped: false,
        denom_sign: DenomSign::Zero,
    }
}

fn potentials_into<T: Scalar>(rec: &mut IterationRecord, target: &SymMatrix<T>, g: &SymMatrix<T>) {
    rec.sigma = trace_potential(target, g).ok().map(|v| v.to_f64());
    rec.v_potential = logdet_potential(target, g).ok().map(|v| v.to_f64());
}

fn initial_scale<T: Scalar, O: Objective<T> + ?Sized>(o: &O, cfg: &SolverConfig) -> T {
    cfg.g0_scale.map_or_else(|| o.lip(), T::from_f64)
}

/// `[∇²f(x)]⁻¹∇f(x)` and `λ_f(x)`.
fn newton_direction<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x: &[T], grad: &[T]) -> Result<(Vec<T>, T)> {
    let d = cholesky(&o.hessian(x))?.solve(grad);
    let lam = sqrt_nonneg(dot(grad, &d));
    Ok((d, lam))
}

fn lambda_f<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x: &[T], grad: &[T]) -> Result<T> {
    newton_direction(o, x, grad).map(|(_, l)| l)
}

/// SR1 on a quadratic with the exact Hessian: `u_k = −H_k∇f(x_k)` and `G_{k+1}` the SR1
/// update of `G_k` towards `A` along `u_k`, from `G₀ = L·I`.
pub fn solve_quadratic_sr1<T: Scalar>(p: &QuadraticProblem<T>, x0: &[T], cfg: &SolverConfig) -> Result<SolveResult<T>> {
    solve_quadratic_sr1_observed(p, x0, cfg, &mut ())
}

/// [`solve_quadratic_sr1`] reporting every step to `obs`.
pub fn solve_quadratic_sr1_observed<T: Scalar>(
    p: &QuadraticProblem<T>,
    x0: &[T],
    cfg: &SolverConfig,
    obs: &mut impl StepObserver<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let n = p.dim();
    check_dim(n, x0)?;
    let a = &p.a;
    let l0 = initial_scale(p, cfg);
    if l0.to_f64() < p.lip().to_f64() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument("G0 scale is below the largest eigenvalue of A".into()));
    }
    let chol_a: LowerTriangular<T> = cholesky(a)?;
    let mut ha = HessianApprox::scaled_identity(n, l0);
    let mut factor = match cfg.update_form {
        UpdateForm::Factored => Some(FactoredResidual::new(&ha.g, a)?),
        UpdateForm::Direct => None,
    };
    let rule = cfg.skip_rule();
    let grad_tol = T::from_f64(cfg.grad_tol);
    let mut x = x0.to_vec();
    let mut records = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut applied = 0;
    let mut last_skipped = false;
    let mut k = 0;
    let termination = loop {
        let grad = p.gradient(&x);
        let lam = sqrt_nonneg(dot(&grad, &chol_a.solve(&grad)));
        let mut rec = base_record(k, p.value(&x), &grad, lam, &ha.h);
        if cfg.record_diagnostics {
            potentials_into(&mut rec, a, &ha.g);
        }
        if norm(&grad) <= grad_tol {
            records.push(rec);
            break if last_skipped { Termination::ExactOptimum } else { Termination::GradTol };
        }
        if k == cfg.max_iters {
            records.push(rec);
            break Termination::MaxIters;
        }
        let u = linalg::scale(&ha.h.mul_vec(&grad), -T::one());
        let y = a.mul_vec(&u);
        rec.r_k = sqrt_nonneg(dot(&u, &y)).to_f64();
        if cfg.record_diagnostics {
            rec.nu = nu_measure(a, &ha.g, &u).ok().map(|v| v.to_f64());
            rec.theta = theta_measure(a, &ha.g, &u).ok().map(|v| v.to_f64());
        }
        let (next, outcome) = match factor.as_mut() {
            None => ha.residual_update(&u, &ha.g.sub(a)?.mul_vec(&u), &y, &rule)?,
            Some(f) => factored_step(&ha, f, &u, &y, &rule)?,
        };
        obs.on_step(&StepView {
            k,
            x: &x,
            u: &u,
            g: &ha.g,
            g_tilde: &ha.g,
            g_next: &next.g,
            outcome,
            a_k: T::one(),
            r_k: T::from_f64(rec.r_k),
            j: None,
        });
        last_skipped = !outcome.applied();
        applied += usize::from(outcome.applied());
        rec.skipped = last_skipped;
        rec.denom_sign = denom_sign(&outcome);
        records.push(rec);
        ha = next;
        x = linalg::axpy(&x, T::one(), &u);
        iterates.push(x.clone());
        k += 1;
    };
    Ok(SolveResult { final_x: x, records, termination, applied_updates: applied, iterates })
}

/// One SR1 step with the residual taken from the factor of `G − A`.
fn factored_step<T: Scalar>(
    ha: &HessianApprox<T>,
    f: &mut FactoredResidual<T>,
    u: &[T],
    y: &[T],
    rule: &SkipRule,
) -> Result<(HessianApprox<T>, UpdateOutcome<T>)> {
    let (w, r) = f.residual(u);
    let d = dot(&w, &w);
    if rule.fires(u, &r, d, y) {
        return Ok((ha.clone(), UpdateOutcome { kind: UpdateKind::Skipped, denominator: d }));
    }
    let g = linalg::rank_one_update(&ha.g, -T::one() / d, &r)?;
    // u − HAu = H(G − A)u.
    let s = ha.h.mul_vec(&r);
    let h = linalg::rank_one_update(&ha.h, T::one() / dot(y, &s), &s)?;
    f.downdate(&w);
    let mut next = HessianApprox { g, h };
    next.enforce_consistency()?;
    Ok((next, UpdateOutcome { kind: UpdateKind::Applied, denominator: d }))
}

/// `steps` Newton iterations `x_{j+1} = x_j − [∇²f(x_j)]⁻¹∇f(x_j)`.
pub fn newton_warm_start<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x0: &[T], steps: usize) -> Result<Vec<T>> {
    check_dim(o.dim(), x0)?;
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let grad = o.gradient(&x);
        let (d, _) = newton_direction(o, &x, &grad)?;
        x = linalg::axpy(&x, -T::one(), &d);
    }
    Ok(x)
}

/// SR1 with the correction strategy
/// `G̃_k = a_k G_k`, `a_k = (1 + Mr_{k−1}/2)(1 + Mr_k/2)`, `r_k = ‖u_k‖_{x_k}`.
///
/// Returns [`Error::NotPositiveDefinite`] if an approximation loses
/// definiteness, which means the constant `M` was too small for `f`.
pub fn solve_sr1_cs<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    solve_sr1_cs_observed(o, x0, cfg, &mut ())
}

/// [`solve_sr1_cs`] reporting every step to `obs`.
pub fn solve_sr1_cs_observed<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
    obs: &mut impl StepObserver<T>,
) -> Result<SolveResult<T>> {
    sr1_general(o, x0, cfg, true, obs)
}

/// SR1 on a general objective without correction (`a_k = 1`). Indefinite
/// approximations and negative denominators are recorded, not repaired.
pub fn solve_sr1_vanilla<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    solve_sr1_vanilla_observed(o, x0, cfg, &mut ())
}

/// [`solve_sr1_vanilla`] reporting every step to `obs`.
pub fn solve_sr1_vanilla_observed<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
    obs: &mut impl StepObserver<T>,
) -> Result<SolveResult<T>> {
    sr1_general(o, x0, cfg, false, obs)
}

fn sr1_general<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
    corrected: bool,
    obs: &mut impl StepObserver<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let n = o.dim();
    check_dim(n, x0)?;
    let m = T::from_f64(if corrected { cfg.m_const } else { 0.0 });
    let rule = cfg.skip_rule();
    let grad_tol = T::from_f64(cfg.grad_tol);
    let mut ha = HessianApprox::scaled_identity(n, initial_scale(o, cfg));
    let mut x = newton_warm_start(o, x0, cfg.warm_start_steps)?;
    let mut grad = o.gradient(&x);
    let mut records = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut applied = 0;
    let mut r_prev = T::zero();
    let mut k = 0;
    let termination = loop {
        let mut rec = base_record(k, o.value(&x), &grad, lambda_f(o, &x, &grad)?, &ha.h);
        if norm(&grad) <= grad_tol {
            records.push(rec);
            break Termination::GradTol;
        }
        if k == cfg.max_iters {
            records.push(rec);
            break Termination::MaxIters;
        }
        let u = linalg::scale(&ha.h.mul_vec(&grad), -T::one());
        let r_k = sqrt_nonneg(dot(&u, &o.hvp(&x, &u)));
        let a_k = correction_factor(r_prev, r_k, m)?;
        let tilde = apply_correction(&ha, a_k)?;
        let x_next = linalg::axpy(&x, T::one(), &u);
        let grad_next = o.gradient(&x_next);
        let y = secant_vector(o, &x, &u);
        let (next, outcome) = tilde.secant_update(&u, &y, &rule)?;
        if corrected {
            cholesky(&next.g)?;
        }
        let j = if cfg.record_diagnostics {
            let j = averaged_hessian(o, &x, &u, cfg.quadrature_nodes)?;
            potentials_into(&mut rec, &j, &tilde.g);
            rec.nu = nu_measure(&j, &tilde.g, &u).ok().map(|v| v.to_f64());
            rec.theta = theta_measure(&j, &ha.g, &u).ok().map(|v| v.to_f64());
            Some(j)
        } else {
            None
        };
        obs.on_step(&StepView {
            k,
            x: &x,
            u: &u,
            g: &ha.g,
            g_tilde: &tilde.g,
            g_next: &next.g,
            outcome,
            a_k,
            r_k,
            j: j.as_ref(),
        });
        rec.r_k = r_k.to_f64();
        rec.a_k = a_k.to_f64();
        rec.skipped = !outcome.applied();
        rec.denom_sign = denom_sign(&outcome);
        applied += usize::from(outcome.applied());
        records.push(rec);
        ha = next;
        x = x_next;
        grad = grad_next;
        iterates.push(x.clone());
        r_prev = r_k;
        k += 1;
    };
    Ok(SolveResult { final_x: x, records, termination, applied_updates: applied, iterates })
}

/// Newton's method with unit steps, traced like the quasi-Newton solvers
/// (`G_k = ∇²f(x_k)`).
pub fn solve_newton<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    check_dim(o.dim(), x0)?;
    let grad_tol = T::from_f64(cfg.grad_tol);
    let mut x = x0.to_vec();
    let mut records = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut k = 0;
    let termination = loop {
        let grad = o.gradient(&x);
        let (d, lam) = newton_direction(o, &x, &grad)?;
        let mut rec = IterationRecord {
            g_norm: lam.to_f64(),
            ..base_record(k, o.value(&x), &grad, lam, &SymMatrix::zeros(o.dim()))
        };
        if norm(&grad) <= grad_tol {
            records.push(rec);
            break Termination::GradTol;
        }
        if k == cfg.max_iters {
            records.push(rec);
            break Termination::MaxIters;
        }
        rec.r_k = lam.to_f64();
        records.push(rec);
        x = linalg::axpy(&x, -T::one(), &d);
        iterates.push(x.clone());
        k += 1;
    };
    Ok(SolveResult { final_x: x, records, termination, applied_updates: 0, iterates })
}

/// BFGS with unit steps from `G₀ = L·I`; the update is skipped when
/// `uᵀy ≤ skip_tol·‖u‖‖y‖`.
pub fn solve_bfgs<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x0: &[T], cfg: &SolverConfig) -> Result<SolveResult<T>> {
    solve_bfgs_observed(o, x0, cfg, &mut ())
}

/// [`solve_bfgs`] reporting every step to `obs`.
pub fn solve_bfgs_observed<T: Scalar, O: Objective<T> + ?Sized>(
    o: &O,
    x0: &[T],
    cfg: &SolverConfig,
    obs: &mut impl StepObserver<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let n = o.dim();
    check_dim(n, x0)?;
    let grad_tol = T::from_f64(cfg.grad_tol);
    let mut ha = HessianApprox::scaled_identity(n, initial_scale(o, cfg));
    let mut x = newton_warm_start(o, x0, cfg.warm_start_steps)?;
    let mut grad = o.gradient(&x);
    let mut records = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut applied = 0;
    let mut k = 0;
    let termination = loop {
        let mut rec = base_record(k, o.value(&x), &grad, lambda_f(o, &x, &grad)?, &ha.h);
        if norm(&grad) <= grad_tol {
            records.push(rec);
            break Termination::GradTol;
        }
        if k == cfg.max_iters {
            records.push(rec);
            break Termination::MaxIters;
        }
        let u = linalg::scale(&ha.h.mul_vec(&grad), -T::one());
        let x_next = linalg::axpy(&x, T::one(), &u);
        let grad_next = o.gradient(&x_next);
        let y = secant_vector(o, &x, &u);
        let (next, outcome) = bfgs_update(&ha, &u, &y, cfg.skip_tol)?;
        obs.on_step(&StepView {
            k,
            x: &x,
            u: &u,
            g: &ha.g,
            g_tilde: &ha.g,
            g_next: &next.g,
            outcome,
            a_k: T::one(),
            r_k: sqrt_nonneg(dot(&u, &o.hvp(&x, &u))),
            j: None,
        });
        rec.r_k = sqrt_nonneg(dot(&u, &o.hvp(&x, &u))).to_f64();
        rec.skipped = !outcome.applied();
        rec.denom_sign = denom_sign(&outcome);
        applied += usize::from(outcome.applied());
        records.push(rec);
        ha = next;
        x = x_next;
        grad = grad_next;
        iterates.push(x.clone());
        k += 1;
    };
    Ok(SolveResult { final_x: x, records, termination, applied_updates: applied, iterates })
}

/// `G₊ = G − GuuᵀG/(uᵀGu) + yyᵀ/(yᵀu)` with the matching inverse
/// `H₊ = (I − ρuyᵀ)H(I − ρyuᵀ) + ρuuᵀ`, `ρ = 1/(yᵀu)`.
pub fn bfgs_update<T: Scalar>(
    ha: &HessianApprox<T>,
    u: &[T],
    y: &[T],
    skip_tol: f64,
) -> Result<(HessianApprox<T>, UpdateOutcome<T>)> {
    let n = ha.order();
    check_dim(n, u)?;
    check_dim(n, y)?;
    let uy = dot(u, y);
    if uy <= T::from_f64(skip_tol) * norm(u) * norm(y) {
        return Ok((ha.clone(), UpdateOutcome { kind: UpdateKind::Skipped, denominator: uy }));
    }
    let gu = ha.g.mul_vec(u);
    let g = linalg::rank_one_update(&linalg::rank_one_update(&ha.g, -T::one() / dot(u, &gu), &gu)?, T::one() / uy, y)?;
    let hy = ha.h.mul_vec(y);
    let rho = T::one() / uy;
    let yhy = dot(y, &hy);
    let h = SymMatrix::from_fn(n, |i, j| {
        ha.h.get(i, j) - rho * (u[i] * hy[j] + hy[i] * u[j]) + (rho * rho * yhy + rho) * u[i] * u[j]
    });
    Ok((HessianApprox { g, h }, UpdateOutcome { kind: UpdateKind::Applied, denominator: uy }))
}
