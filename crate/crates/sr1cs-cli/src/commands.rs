use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;
use sr1cs::bounds::{
    general_envelope, general_poly_threshold, local_condition, local_threshold, nonzero_condition,
    quad_logdet_envelope, quad_trace_envelope, starting_moments, ProblemConstants, RateEnvelope,
};
use sr1cs::data::{gen_quadratic, gen_synthetic_logistic, parse_libsvm, serialize_libsvm, Dataset};
use sr1cs::linalg::{self, eigvals_sym};
use sr1cs::objectives::Objective;
use sr1cs::report::{
    verify_summary, write_envelopes_csv, write_trace_csv, ManifestConstants, RunManifest, SuiteSummary,
};
use sr1cs::solvers::{self, SolverConfig, StepView, UpdateForm};
use sr1cs::verify::{self, Fault};
use sr1cs::{f256, Scalar};

use crate::{BoundsArgs, FaultArg, Form, GenArgs, LogisticArgs, Method, Precision, QuadArgs, SuiteArg, VerifyArgs};

/// A flag value the command cannot run with; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// `t.csv` → `t.envelopes.csv`.
fn envelope_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.with_extension("envelopes.csv"))
}

fn write_trace(path: &Path, records: &[sr1cs::report::IterationRecord], manifest: &RunManifest) -> Result<()> {
    let mut w = create(path)?;
    write_trace_csv(records, manifest, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_envelopes(path: &Path, envelopes: &[RateEnvelope]) -> Result<()> {
    let mut w = create(path)?;
    write_envelopes_csv(envelopes, &mut w)?;
    w.flush()?;
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(usage(format!("--kappa must be a finite number ≥ 1, got {kappa}")));
    }
    Ok(())
}

pub fn quad(a: &QuadArgs) -> Result<u8> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    check_kappa(a.kappa)?;
    if !(a.rel_tol > 0.0) {
        return Err(usage("--rel-tol must be positive"));
    }
    if a.iters == Some(0) {
        return Err(usage("--iters must be at least 1"));
    }
    match a.precision {
        Precision::F64 => quad_in::<f64>(a),
        Precision::F256 => quad_in::<f256>(a),
    }
}

fn quad_in<T: Scalar>(a: &QuadArgs) -> Result<u8> {
    let p = gen_quadratic::<T>(a.n, a.kappa, a.seed)?;
    let x0 = vec![T::zero(); a.n];
    let g0 = linalg::norm(&p.gradient(&x0)).to_f64();
    let cfg = SolverConfig {
        max_iters: a.iters.unwrap_or(a.n + 1),
        grad_tol: (a.rel_tol * g0).max(f64::MIN_POSITIVE),
        record_diagnostics: a.diagnostics,
        update_form: match a.form {
            Form::Direct => UpdateForm::Direct,
            Form::Factored => UpdateForm::Factored,
        },
        ..Default::default()
    };
    let mut spectra = Vec::new();
    let mut obs = |v: &StepView<'_, T>| {
        spectra.push(eigvals_sym(&v.g.sub(&p.a).expect("same order").cast::<f64>()));
    };
    let res = solvers::solve_quadratic_sr1_observed(&p, &x0, &cfg, &mut obs)?;
    let manifest = RunManifest {
        method: "sr1_quadratic".into(),
        config: json!({
            "solver": cfg,
            "precision": format!("{:?}", a.precision).to_lowercase(),
            "rel_tol": a.rel_tol,
        }),
        constants: ManifestConstants {
            n: a.n,
            kappa: a.kappa,
            mu: p.mu().to_f64(),
            lip: p.lip().to_f64(),
            m_const: 0.0,
            gamma: None,
        },
        seed: Some(a.seed),
        timestamps: None,
    };
    write_trace(&a.out, &res.records, &manifest)?;

    let k_max = res.records.len() - 1;
    let mut c = ProblemConstants::new(a.n, a.kappa);
    c.mu = Some(p.mu().to_f64());
    let spec0 = eigvals_sym(&linalg::SymMatrix::scaled_identity(a.n, p.lip()).sub(&p.a)?.cast::<f64>());
    c.trace0 = Some(spec0.iter().sum());
    c.kappa_g0 = Some(nonzero_condition(&spec0).unwrap_or(1.0));
    let coarse = quad_trace_envelope(&c, k_max)?;
    c.eig_history = Some(spectra);
    let envelopes = [quad_trace_envelope(&c, k_max)?, coarse, quad_logdet_envelope(&c, k_max)?];
    write_envelopes(&envelope_path(&a.out, &a.envelopes), &envelopes)?;

    let last = res.records.last().expect("records are nonempty");
    println!(
        "{}",
        json!({
            "iterations": k_max,
            "termination": format!("{:?}", res.termination),
            "applied_updates": res.applied_updates,
            "final_grad_norm": last.grad_norm,
            "final_lambda_f": last.lambda_f,
        })
    );
    Ok(0)
}

fn load_dataset(a: &LogisticArgs) -> Result<Dataset> {
    match &a.data {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            parse_libsvm(&text).with_context(|| format!("cannot parse {}", path.display()))
        }
        None => {
            if a.m == 0 || a.n == 0 {
                return Err(usage("--m and --n must be at least 1"));
            }
            Ok(gen_synthetic_logistic(a.m, a.n, a.seed, a.separation)?)
        }
    }
}

pub fn logistic(a: &LogisticArgs) -> Result<u8> {
    if let Some(g) = a.gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(usage(format!("--gamma must be positive, got {g}")));
        }
    }
    if !(a.m_const >= 0.0) || !a.m_const.is_finite() {
        return Err(usage(format!("--m-const must be nonnegative, got {}", a.m_const)));
    }
    if a.iters == 0 || !(a.tol > 0.0) {
        return Err(usage("--iters must be at least 1 and --tol positive"));
    }
    let data = load_dataset(a)?;
    let p = data.logistic_problem(a.gamma)?;
    let n = p.dim();
    let cfg = SolverConfig {
        m_const: a.m_const,
        warm_start_steps: a.warm_start,
        max_iters: a.iters,
        grad_tol: a.tol,
        record_diagnostics: a.diagnostics,
        ..Default::default()
    };
    let x0 = vec![0.0; n];
    let res = match a.method {
        Method::Sr1 => solvers::solve_sr1_vanilla(&p, &x0, &cfg),
        Method::Sr1Cs => solvers::solve_sr1_cs(&p, &x0, &cfg),
        Method::Bfgs => solvers::solve_bfgs(&p, &x0, &cfg),
        Method::Newton => solvers::solve_newton(&p, &x0, &cfg),
    }?;
    let method = match a.method {
        Method::Sr1 => "sr1",
        Method::Sr1Cs => "sr1_cs",
        Method::Bfgs => "bfgs",
        Method::Newton => "newton",
    };
    let kappa = p.kappa();
    let manifest = RunManifest {
        method: method.into(),
        config: json!({ "solver": cfg, "data": data.source }),
        constants: ManifestConstants { n, kappa, mu: p.mu(), lip: p.lip(), m_const: a.m_const, gamma: Some(p.gamma) },
        seed: Some(a.seed),
        timestamps: None,
    };
    write_trace(&a.out, &res.records, &manifest)?;

    let k_max = res.records.len() - 1;
    let mut c = ProblemConstants::new(n, kappa);
    c.m_const = Some(a.m_const);
    c.lambda0 = Some(res.records[0].lambda_f);
    let (exp, poly) = general_envelope(&c, k_max)?;
    write_envelopes(&envelope_path(&a.out, &a.envelopes), &[exp, poly])?;

    let (threshold, holds) = local_condition(&c)?;
    if !holds && a.method == Method::Sr1Cs {
        eprintln!(
            "warning: local condition fails after {} warm-start steps: M·λ₀ = {:e} > {:e}",
            a.warm_start,
            a.m_const * res.records[0].lambda_f,
            threshold
        );
    }
    let last = res.records.last().expect("records are nonempty");
    println!(
        "{}",
        json!({
            "method": method,
            "iterations": k_max,
            "termination": format!("{:?}", res.termination),
            "final_grad_norm": last.grad_norm,
            "gamma": p.gamma,
            "kappa": kappa,
            "local_condition": {
                "lambda0": res.records[0].lambda_f,
                "m_lambda0": a.m_const * res.records[0].lambda_f,
                "threshold": threshold,
                "satisfied": holds,
            },
        })
    );
    Ok(0)
}

/// Drops the `k = 0` row, where none of the printed envelopes is defined.
fn from_one(mut e: RateEnvelope) -> RateEnvelope {
    e.values.retain(|&(k, _)| k >= 1);
    e
}

pub fn bounds(a: &BoundsArgs) -> Result<u8> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    check_kappa(a.kappa)?;
    for (name, v) in [("--lambda0", a.lambda0), ("--m-const", a.m_const)] {
        if let Some(v) = v {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(usage(format!("{name} must be nonnegative, got {v}")));
            }
        }
    }
    let mut c = ProblemConstants::new(a.n, a.kappa);
    c.lambda0 = a.lambda0;
    c.m_const = a.m_const;
    let logdet = quad_logdet_envelope(&c, a.k_max)?;
    let (exp, poly) = general_envelope(&c, a.k_max)?;
    write_envelopes(&a.out, &[from_one(logdet), from_one(exp), from_one(poly)])?;
    let satisfied = match (a.lambda0, a.m_const) {
        (Some(_), Some(_)) => Some(local_condition(&c)?.1),
        _ => None,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "starting_moments": starting_moments(&c)?,
            "poly_threshold": general_poly_threshold(&c),
            "local_threshold": local_threshold(&c)?,
            "local_satisfied": satisfied,
        }))?
    );
    Ok(0)
}

pub fn verify(a: &VerifyArgs) -> Result<u8> {
    let fault = match a.fault {
        FaultArg::None => Fault::None,
        FaultArg::HalfUpdate => Fault::HalfUpdate,
    };
    let suites: &[(&str, usize)] = match a.suite {
        SuiteArg::Lemmas => &[("lemmas", 1000)],
        SuiteArg::Quadratic => &[("quadratic", 50)],
        SuiteArg::General => &[("general", 10)],
        SuiteArg::All => &[("lemmas", 1000), ("quadratic", 50), ("general", 10)],
    };
    let mut summaries: Vec<SuiteSummary> = Vec::new();
    for &(name, default_cases) in suites {
        let cases = a.cases.unwrap_or(default_cases);
        if cases == 0 {
            eprintln!("warning: suite {name} has zero cases and passes vacuously");
        }
        summaries.push(match name {
            "lemmas" => verify::lemma_suite(cases, a.seed, fault),
            "quadratic" => verify::quadratic_suite(cases, a.seed),
            _ => verify::general_suite(cases, a.seed),
        });
    }
    let text =
        if summaries.len() == 1 { verify_summary(&summaries[0]) } else { serde_json::to_string_pretty(&summaries)? };
    println!("{text}");
    if let Some(path) = &a.out {
        std::fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut failed = false;
    for s in &summaries {
        if s.ok() {
            continue;
        }
        failed = true;
        let mut checks: Vec<&str> = s.failures.iter().map(|f| f.check.as_str()).collect();
        checks.sort_unstable();
        checks.dedup();
        eprintln!(
            "suite {}: {} of {} cases failed; violated checks: {}",
            s.suite,
            s.cases - s.passes,
            s.cases,
            checks.join(", ")
        );
    }
    Ok(u8::from(failed))
}

pub fn gen(a: &GenArgs) -> Result<u8> {
    if a.m == 0 || a.n == 0 {
        return Err(usage("--m and --n must be at least 1"));
    }
    if !a.separation.is_finite() {
        return Err(usage("--separation must be finite"));
    }
    let d = gen_synthetic_logistic(a.m, a.n, a.seed, a.separation)?;
    std::fs::write(&a.out, serialize_libsvm(&d)).with_context(|| format!("cannot write {}", a.out.display()))?;
    Ok(0)
}
