//! Seeded property suites exercising the invariants of the SR1 update, the
//! quadratic solver and the correction strategy on logistic regression.
//!
//! Each case draws its own seed from the master seed, so any single case can
//! be rerun in isolation. A case passes when all of its checks pass; every
//! failed check is reported with the size of its violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds::{
    general_envelope, general_poly_threshold, local_condition, nonzero_condition, quad_logdet_envelope,
    quad_trace_envelope, theorem41_quantities, ProblemConstants, RateEnvelope,
};
use crate::data::{gen_quadratic, gen_synthetic_logistic};
use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, eigvals_sym, spectral_norm, SymMatrix, DEFAULT_RANK_TOL};
use crate::objectives::Objective;
use crate::potentials::{logdet_potential, nu_measure};
use crate::report::{CaseFailure, DenomSign, IterationRecord, SuiteSummary};
use crate::scalar::{f256, Scalar};
use crate::solvers::{solve_quadratic_sr1_observed, solve_sr1_cs_observed, SolverConfig, StepView, UpdateForm};
use crate::sr1_core::{sr1_inverse_update, sr1_update_matrix, DEFAULT_SKIP_TOL};

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 3] = ["lemmas", "quadratic", "general"];

/// One step of the splitmix64 generator.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of case `i` under `master`.
pub fn case_seed(master: u64, i: usize) -> u64 {
    splitmix64(master ^ splitmix64(i as u64))
}

/// Deliberate defects for testing that the suites catch them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Applies only half of the rank-one correction.
    HalfUpdate,
}

/// Collects per-case check results into a [`SuiteSummary`].
struct Tally {
    summary: SuiteSummary,
    case_failed: bool,
}

impl Tally {
    fn new(suite: &str) -> Self {
        Tally {
            summary: SuiteSummary { suite: suite.into(), cases: 0, passes: 0, failures: vec![] },
            case_failed: false,
        }
    }

    /// Records `check` as failed for `case` unless `violation ≤ 0`.
    fn check(&mut self, case: &str, check: &str, violation: f64) {
        if violation > 0.0 || violation.is_nan() {
            self.fail(case, check, violation);
        }
    }

    fn fail(&mut self, case: &str, check: &str, violation: f64) {
        self.case_failed = true;
        self.summary.failures.push(CaseFailure { case: case.into(), check: check.into(), violation });
    }

    fn end_case(&mut self) {
        self.summary.cases += 1;
        self.summary.passes += usize::from(!self.case_failed);
        self.case_failed = false;
    }
}

fn min_eig(m: &SymMatrix<f64>) -> f64 {
    eigvals_sym(m)[0]
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `r` orthonormal vectors of length `n` (`r ≤ n`), by twice-applied
/// modified Gram–Schmidt on Gaussian vectors.
fn orthonormal(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(r);
    while q.len() < r {
        let mut v = gaussian(rng, n);
        for _ in 0..2 {
            for b in &q {
                let c = linalg::dot(&v, b);
                v = linalg::axpy(&v, -c, b);
            }
        }
        let nv = linalg::norm(&v);
        if nv > 1e-6 {
            q.push(linalg::scale(&v, 1.0 / nv));
        }
    }
    q
}

/// A lemma-suite instance: SPD `A`, `G = A + R` with `R` positive
/// semidefinite of rank `rank`, and a direction `u`.
pub struct LemmaInstance {
    pub a: SymMatrix<f64>,
    pub g: SymMatrix<f64>,
    pub u: Vec<f64>,
    pub rank: usize,
}

/// Draws a lemma instance: `n ≤ 20`, `κ(A) ≤ 10³`, nonzero spectrum of
/// `G − A` log-uniform in `[0.1, 100]`.
pub fn lemma_instance(seed: u64) -> LemmaInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=20);
    let kappa = 10f64.powf(3.0 * rng.random::<f64>());
    let a = gen_quadratic::<f64>(n, kappa, rng.random()).expect("valid generator arguments").a;
    let rank = rng.random_range(1..=n);
    let q = orthonormal(&mut rng, n, rank);
    let d: Vec<f64> = (0..rank).map(|_| 10f64.powf(3.0 * rng.random::<f64>() - 1.0)).collect();
    let r = SymMatrix::from_fn(n, |i, j| (0..rank).map(|t| d[t] * q[t][i] * q[t][j]).sum());
    let g = a.add(&r).expect("same order");
    let u = gaussian(&mut rng, n);
    LemmaInstance { a, g, u, rank }
}

/// Smallest nonzero eigenvalue and sum of the nonzero eigenvalues.
fn positive_spectrum(m: &SymMatrix<f64>) -> (f64, f64, f64) {
    let ev = eigvals_sym(m);
    let top = ev.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    let pos: Vec<f64> = ev.into_iter().filter(|&x| x > DEFAULT_RANK_TOL * top).collect();
    let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
    (min, pos.iter().sum(), top)
}

/// Checks the eigenvalue sandwich, the trace decrease, the rank drop, the
/// monotone condition number, the log-det identity, the lower bound on `ν`
/// and the agreement of the direct and inverse updates.
pub fn lemma_suite(cases: usize, seed: u64, fault: Fault) -> SuiteSummary {
    let mut t = Tally::new("lemmas");
    for i in 0..cases {
        let cs = case_seed(seed, i);
        let case = format!("case={i} seed={cs}");
        let inst = lemma_instance(cs);
        let (a, g, u) = (&inst.a, &inst.g, &inst.u[..]);
        let n = a.order();
        let (mut gp, _) = sr1_update_matrix(a, g, u, DEFAULT_SKIP_TOL).expect("orders match");
        if fault == Fault::HalfUpdate {
            gp = g.add(&gp).expect("same order").scale(0.5);
        }
        let diff = g.sub(a).expect("same order");
        let diff_p = gp.sub(a).expect("same order");
        let scale = spectral_norm(g).max(1.0);

        let lo = min_eig(&diff_p).min(min_eig(&g.sub(&gp).expect("same order")));
        t.check(&case, "sandwich", -lo - 1e-10 * scale);

        let sigma = diff.trace();
        let (lmin, lsum, _) = positive_spectrum(&diff);
        let bound = (1.0 - lmin / lsum) * sigma;
        t.check(&case, "trace_decrease", diff_p.trace() - bound - 1e-10 * sigma.max(1.0));

        // Count against the pre-update scale: at rank one, G₊ − A is pure
        // rounding noise and a relative count would see full rank.
        let (_, _, top) = positive_spectrum(&diff);
        let rank_p = eigvals_sym(&diff_p).iter().filter(|x| x.abs() > DEFAULT_RANK_TOL * top).count();
        t.check(&case, "rank_drop", (rank_p as f64 - (inst.rank as f64 - 1.0)).abs());
        if inst.rank >= 2 && rank_p >= 1 {
            let before = nonzero_condition(&eigvals_sym(&diff)).unwrap_or(1.0);
            let after = nonzero_condition(&eigvals_sym(&diff_p)).unwrap_or(1.0);
            t.check(&case, "condition_monotone", after - before * (1.0 + 1e-8));
        }

        match (nu_measure(a, g, u), logdet_potential(a, g), logdet_potential(a, &gp)) {
            (Ok(nu), Ok(v0), Ok(v1)) => {
                t.check(&case, "logdet_decrease", ((v0 - v1) - (nu * nu).ln_1p()).abs() - 1e-8);
                let r = diff.mul_vec(u);
                let rhs = match cholesky(&gp) {
                    Ok(l) => linalg::dot(&r, &l.solve(&r)) / g.quad_form(u),
                    Err(_) => f64::INFINITY,
                };
                t.check(&case, "nu_lower_bound", rhs - nu * nu - 1e-9 * rhs.max(1.0));
            }
            _ => t.fail(&case, "logdet_decrease", f64::INFINITY),
        }

        let consistency = linalg::inverse_spd(g)
            .and_then(|h| sr1_inverse_update(&h, u, &a.mul_vec(u), DEFAULT_SKIP_TOL))
            .and_then(|(hp, _)| gp.inverse_residual(&hp));
        match consistency {
            Ok(res) => t.check(&case, "inverse_consistency", res - 1e-8 * n as f64),
            Err(_) => t.fail(&case, "inverse_consistency", f64::INFINITY),
        }
        t.end_case();
    }
    t.summary
}

/// Dimension and condition number of quadratic-suite case `i`.
pub fn quadratic_case_shape(i: usize) -> (usize, f64) {
    const NS: [usize; 3] = [5, 20, 50];
    const KAPPAS: [f64; 3] = [10.0, 1e3, 1e4];
    (NS[i % 3], KAPPAS[(i / 3) % 3])
}

/// Measurements of one quadratic run, all reduced to `f64`.
#[derive(Clone, Debug)]
pub struct QuadraticRun {
    pub n: usize,
    pub kappa: f64,
    /// Records of a run continued for `n + 1` steps regardless of the
    /// gradient tolerance.
    pub records: Vec<IterationRecord>,
    /// First `k` with `‖∇f(x_k)‖ ≤ 10⁻⁸‖∇f(x_0)‖`.
    pub k_reached: Option<usize>,
    pub applied_updates: usize,
    /// `spectra[j]` is the spectrum of `G_j − A`.
    pub spectra: Vec<Vec<f64>>,
    /// Worst violation of `A ⪯ G_k ⪯ κA`, tolerance included.
    pub order_violation: f64,
    /// `η_k = λ_max(A^{-1/2}G_kA^{-1/2})` per step.
    pub etas: Vec<f64>,
    /// Worst violation of `‖G_k u_i − Au_i‖ ≤ 10⁻⁸‖Au_i‖` over `i < k`.
    pub hereditary_violation: f64,
    /// Smallest singular value of the normalized applied directions.
    pub min_singular_value: f64,
}

/// Relative gradient tolerance at which a quadratic run counts as finished.
pub const QUAD_REL_TOL: f64 = 1e-8;

/// Runs the quadratic solver on `gen_quadratic(n, kappa, seed)` in scalar
/// type `T` for `n + 1` steps and measures the per-step invariants.
pub fn quadratic_run<T: Scalar>(n: usize, kappa: f64, seed: u64, form: UpdateForm) -> Result<QuadraticRun> {
    let p = gen_quadratic::<T>(n, kappa, seed)?;
    let x0 = vec![T::zero(); n];
    let cfg = SolverConfig { update_form: form, grad_tol: f64::MIN_POSITIVE, max_iters: n + 1, ..Default::default() };
    let a = &p.a;
    let chol_a = cholesky(&a.cast::<f64>())?;
    let kappa_a = a.scale(T::from_f64(kappa));
    let mut spectra = Vec::new();
    let mut etas = Vec::new();
    let mut order_violation = f64::NEG_INFINITY;
    let mut hereditary_violation = f64::NEG_INFINITY;
    let mut applied_dirs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut unit_dirs: Vec<Vec<T>> = Vec::new();
    let mut obs = |v: &StepView<'_, T>| {
        let d = v.g.sub(a).expect("same order");
        let d64 = d.cast::<f64>();
        let scale = spectral_norm(&v.g.cast::<f64>());
        let upper = kappa_a.sub(v.g).expect("same order").cast::<f64>();
        let spec = eigvals_sym(&d64);
        order_violation = order_violation.max(-spec[0].min(min_eig(&upper)) - ORDER_SLACK * scale);
        // A ⪯ G_k ⪯ G₀ keeps ‖G_k − A‖ ≤ ‖G₀‖, so the f64 residual is
        // accurate far below the 1e-8 tolerance.
        for (ui, aui) in &applied_dirs {
            let lhs = linalg::norm(&d64.mul_vec(ui));
            hereditary_violation = hereditary_violation.max(lhs - 1e-8 * aui);
        }
        etas.push(1.0 + eigvals_sym(&congruent(&chol_a, &d64)).last().copied().unwrap_or(0.0));
        spectra.push(spec);
        if v.outcome.applied() {
            let unit = linalg::scale(v.u, T::one() / linalg::norm(v.u));
            applied_dirs.push((linalg::cast_vec(&unit), linalg::norm(&a.mul_vec(&unit)).to_f64()));
            unit_dirs.push(unit);
        }
    };
    let res = solve_quadratic_sr1_observed(&p, &x0, &cfg, &mut obs)?;
    let g0 = res.records[0].grad_norm;
    let k_reached = res.records.iter().position(|r| r.grad_norm <= QUAD_REL_TOL * g0);
    Ok(QuadraticRun {
        n,
        kappa,
        k_reached,
        applied_updates: res.applied_updates,
        spectra,
        order_violation,
        etas,
        hereditary_violation,
        min_singular_value: min_singular_value(&unit_dirs),
        records: res.records,
    })
}

/// Slack of the ordering checks, relative to `‖G‖₂`.
const ORDER_SLACK: f64 = 1e-10;

/// `L⁻¹DL⁻ᵀ` for the Cholesky factor `L`.
fn congruent(l: &linalg::LowerTriangular<f64>, d: &SymMatrix<f64>) -> SymMatrix<f64> {
    let n = d.order();
    // Column j of W = L⁻¹D; D is symmetric, so its columns are its rows.
    let w: Vec<Vec<f64>> = d.to_rows().iter().map(|c| l.solve_lower(c)).collect();
    // Column i of L⁻¹Wᵀ is L⁻¹ applied to row i of W.
    let m: Vec<Vec<f64>> = (0..n).map(|i| l.solve_lower(&w.iter().map(|c| c[i]).collect::<Vec<_>>())).collect();
    SymMatrix::from_fn(n, |i, j| 0.5 * (m[j][i] + m[i][j]))
}

/// Smallest singular value of the matrix whose columns are the unit vectors
/// `dirs`, from the Gram matrix evaluated in the scalar type of `dirs`.
fn min_singular_value<T: Scalar>(dirs: &[Vec<T>]) -> f64 {
    if dirs.is_empty() {
        return f64::INFINITY;
    }
    let gram = SymMatrix::from_fn(dirs.len(), |i, j| linalg::dot(&dirs[i], &dirs[j]));
    eigvals_sym(&gram)[0].max(T::zero()).sqrt().to_f64()
}

/// The three quadratic envelopes of a run: trace with fed spectra, trace
/// from the initial spectrum alone, and log-det.
pub fn quadratic_envelopes(run: &QuadraticRun) -> Result<[RateEnvelope; 3]> {
    let k_max = run.records.len() - 1;
    let mut c = ProblemConstants::new(run.n, run.kappa);
    c.mu = Some(1.0);
    c.trace0 = Some(run.spectra[0].iter().sum());
    c.kappa_g0 = nonzero_condition(&run.spectra[0]);
    let coarse = quad_trace_envelope(&c, k_max)?;
    c.eig_history = Some(run.spectra.clone());
    Ok([quad_trace_envelope(&c, k_max)?, coarse, quad_logdet_envelope(&c, k_max)?])
}

fn check_quadratic_run(t: &mut Tally, case: &str, run: &QuadraticRun) {
    let n = run.n;
    let k_stop = run.k_reached.unwrap_or(run.records.len() - 1);
    match run.k_reached {
        Some(k) => t.check(case, "termination_steps", k as f64 - (n as f64 + 1.0)),
        None => t.fail(case, "termination_steps", f64::INFINITY),
    }
    t.check(case, "applied_updates", run.applied_updates as f64 - n as f64);
    t.check(case, "order_bounds", run.order_violation);
    let lam: Vec<f64> = run.records.iter().map(|r| r.lambda_f).collect();
    let worst_decrease =
        (0..k_stop).map(|k| lam[k + 1] - (1.0 - 1.0 / run.etas[k]) * lam[k] - 1e-10).fold(f64::NEG_INFINITY, f64::max);
    t.check(case, "one_step_decrease", worst_decrease);
    t.check(case, "hereditary_secant", run.hereditary_violation);
    t.check(case, "direction_independence", 1e-8 - run.min_singular_value);

    let envelopes = match quadratic_envelopes(run) {
        Ok(e) => e,
        Err(_) => {
            t.fail(case, "envelopes", f64::INFINITY);
            return;
        }
    };
    let names = ["trace_envelope", "trace_envelope_coarse", "logdet_envelope"];
    for (env, name) in envelopes.iter().zip(names) {
        let worst = (0..=k_stop)
            .filter_map(|k| env.at(k).map(|m| lam[k] / lam[0] - m * (1.0 + 1e-8)))
            .fold(f64::NEG_INFINITY, f64::max);
        t.check(case, name, worst);
    }
    match envelopes[0].at(n) {
        Some(m) => t.check(case, "trace_envelope_zero_at_n", m),
        None => t.fail(case, "trace_envelope_zero_at_n", f64::INFINITY),
    }
}

/// Finite termination, ordering, hereditary and envelope checks on
/// generated quadratics, run in 256-bit precision with the factored update.
pub fn quadratic_suite(cases: usize, seed: u64) -> SuiteSummary {
    quadratic_suite_in::<f256>(cases, seed, UpdateForm::Factored)
}

/// [`quadratic_suite`] in scalar type `T` with the given update form.
pub fn quadratic_suite_in<T: Scalar>(cases: usize, seed: u64, form: UpdateForm) -> SuiteSummary {
    let mut t = Tally::new("quadratic");
    for i in 0..cases {
        let (n, kappa) = quadratic_case_shape(i);
        let cs = case_seed(seed, i);
        let case = format!("case={i} seed={cs} n={n} kappa={kappa}");
        match quadratic_run::<T>(n, kappa, cs, form) {
            Ok(run) => check_quadratic_run(&mut t, &case, &run),
            Err(e) => t.fail(&case, &format!("solver_error: {e}"), f64::INFINITY),
        }
        t.end_case();
    }
    t.summary
}

/// Sample count, dimension and self-concordance constant of the general suite.
pub const GENERAL_SHAPE: (usize, usize, f64) = (200, 30, 1.0);
/// Newton steps before the quasi-Newton phase in the general suite.
pub const GENERAL_WARM_START: usize = 3;
/// Largest warm start tried when no run meets the local condition.
pub const GENERAL_MAX_WARM_START: usize = 12;

/// Measurements of one correction-strategy run on logistic regression.
#[derive(Clone, Debug)]
pub struct GeneralRun {
    pub n: usize,
    pub kappa: f64,
    pub m_const: f64,
    pub warm_start_steps: usize,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Worst `−min-eig(G̃_k − J_k) − 10⁻⁸‖G̃_k‖₂`.
    pub corrected_order_violation: f64,
    /// Worst `−min-eig(G_{k+1} − J_k) − 10⁻⁸‖G_{k+1}‖₂`.
    pub previous_order_violation: f64,
    /// Skips whose stored `G_{k+1}` differs from `G̃_k`.
    pub bad_skips: usize,
    pub skips: usize,
    pub negative_denominators: usize,
    /// Threshold and verdict of the local condition at `x_0`.
    pub local: (f64, bool),
}

/// Runs the correction strategy on the general-suite logistic instance of
/// `seed` with `warm` Newton warm-start steps.
pub fn general_run(seed: u64, warm: usize) -> Result<GeneralRun> {
    let (m, n, m_const) = GENERAL_SHAPE;
    let p = gen_synthetic_logistic(m, n, seed, 1.0)?.logistic_problem(None)?;
    let cfg = SolverConfig {
        m_const,
        warm_start_steps: warm,
        max_iters: 100,
        grad_tol: 1e-12,
        record_diagnostics: true,
        ..Default::default()
    };
    let mut corrected = f64::NEG_INFINITY;
    let mut previous = f64::NEG_INFINITY;
    let (mut bad_skips, mut skips) = (0, 0);
    let mut obs = |v: &StepView<'_, f64>| {
        if let Some(j) = v.j {
            for (g, worst) in [(v.g_tilde, &mut corrected), (v.g_next, &mut previous)] {
                let gap = min_eig(&g.sub(j).expect("same order"));
                *worst = worst.max(-gap - 1e-8 * spectral_norm(g));
            }
        }
        if !v.outcome.applied() {
            skips += 1;
            bad_skips += usize::from(v.g_next != v.g_tilde);
        }
    };
    let res = solve_sr1_cs_observed(&p, &vec![0.0; n], &cfg, &mut obs)?;
    let kappa = p.kappa();
    let mut c = ProblemConstants::new(n, kappa);
    c.m_const = Some(m_const);
    c.lambda0 = Some(res.records[0].lambda_f);
    let local = local_condition(&c)?;
    Ok(GeneralRun {
        n,
        kappa,
        m_const,
        warm_start_steps: warm,
        converged: res.termination == crate::solvers::Termination::GradTol,
        negative_denominators: res.records.iter().filter(|r| r.denom_sign == DenomSign::Neg).count(),
        corrected_order_violation: corrected,
        previous_order_violation: previous,
        bad_skips,
        skips,
        local,
        records: res.records,
    })
}

/// Checks that only need the correction strategy to be well defined.
fn check_general_run(t: &mut Tally, case: &str, run: &GeneralRun) {
    t.check(case, "order_after_correction", run.corrected_order_violation);
    t.check(case, "skip_keeps_corrected", run.bad_skips as f64);
    t.check(case, "negative_denominator", run.negative_denominators as f64);
    let iters = run.records.len() - 1;
    if !run.converged {
        t.fail(case, "convergence", run.records.last().map_or(f64::INFINITY, |r| r.grad_norm));
    } else {
        t.check(case, "convergence", iters as f64 - 100.0);
    }
}

/// Checks conditional on the local condition at `x_0`.
fn check_local_run(t: &mut Tally, case: &str, run: &GeneralRun) {
    let lam0 = run.records[0].lambda_f;
    let rho = 1.0 - 1.0 / (2.0 * run.kappa);
    let mut decay = f64::NEG_INFINITY;
    let mut step_decay = f64::NEG_INFINITY;
    let mut r_prev = 0.0;
    for (k, rec) in run.records.iter().enumerate() {
        let bound = rho.powi(k as i32) * lam0 * (1.0 + 1e-6);
        decay = decay.max((run.m_const * r_prev / 2.0).exp() * rec.lambda_f - bound);
        step_decay = step_decay.max(rec.r_k - bound);
        r_prev = rec.r_k;
    }
    t.check(case, "decay", decay);
    t.check(case, "step_decay", step_decay);
    t.check(case, "order_previous", run.previous_order_violation);

    let mut c = ProblemConstants::new(run.n, run.kappa);
    c.m_const = Some(run.m_const);
    match theorem41_quantities(&run.records, &c) {
        Ok(q) => t.check(case, "xi_bound", q.iter().map(|s| s.xi - 1.5 - 1e-9).fold(f64::NEG_INFINITY, f64::max)),
        Err(_) => t.fail(case, "xi_bound", f64::INFINITY),
    }

    let k_run = run.records.len() - 1;
    let k_max = k_run.max(general_poly_threshold(&c).ceil() as usize + 100);
    match general_envelope(&c, k_max) {
        Ok((exp, poly)) => {
            let worst = (1..=k_run)
                .filter_map(|k| exp.at(k).map(|m| run.records[k].lambda_f / lam0 - m * (1.0 + 1e-6)))
                .fold(f64::NEG_INFINITY, f64::max);
            t.check(case, "general_envelope", worst);
            let dominance =
                (1..=k_max).filter_map(|k| Some(exp.at(k)? - poly.at(k)?)).fold(f64::NEG_INFINITY, f64::max);
            t.check(case, "poly_dominates_exp", dominance);
        }
        Err(_) => t.fail(case, "general_envelope", f64::INFINITY),
    }
}

/// Correction-strategy checks on synthetic logistic regression. The
/// decay and envelope checks run on cases where the local condition holds
/// after the warm start; if none does, the warm start of the first case is
/// lengthened until it holds.
pub fn general_suite(cases: usize, seed: u64) -> SuiteSummary {
    let mut t = Tally::new("general");
    let mut exercised = 0;
    for i in 0..cases {
        let cs = case_seed(seed, i);
        let case = format!("case={i} seed={cs}");
        match general_run(cs, GENERAL_WARM_START) {
            Ok(run) => {
                check_general_run(&mut t, &case, &run);
                if run.local.1 {
                    exercised += 1;
                    check_local_run(&mut t, &case, &run);
                }
            }
            Err(e) => t.fail(&case, &format!("solver_error: {e}"), f64::INFINITY),
        }
        t.end_case();
    }
    if cases > 0 && exercised == 0 {
        let cs = case_seed(seed, 0);
        let found = (GENERAL_WARM_START + 1..=GENERAL_MAX_WARM_START)
            .find_map(|warm| general_run(cs, warm).ok().filter(|r| r.local.1));
        let case = format!("case=0 seed={cs} extended warm start");
        match found {
            Some(run) => check_local_run(&mut t, &case, &run),
            None => t.fail(&case, "local_condition_exercised", 1.0),
        }
        t.end_case();
    }
    t.summary
}

/// Runs the named suite, or all of them for `"all"`.
pub fn run_suite(name: &str, cases: usize, seed: u64) -> Result<Vec<SuiteSummary>> {
    match name {
        "lemmas" => Ok(vec![lemma_suite(cases, seed, Fault::None)]),
        "quadratic" => Ok(vec![quadratic_suite(cases, seed)]),
        "general" => Ok(vec![general_suite(cases, seed)]),
        "all" => {
            Ok(vec![lemma_suite(cases, seed, Fault::None), quadratic_suite(cases, seed), general_suite(cases, seed)])
        }
        other => Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
    }
}

/// Failures of `summary` whose check is one of `checks`.
pub fn failures_of<'a>(summary: &'a SuiteSummary, checks: &[&str]) -> Vec<&'a crate::report::CaseFailure> {
    summary.failures.iter().filter(|f| checks.contains(&f.check.as_str())).collect()
}
