//! Closed-form convergence envelopes, the local convergence condition, and
//! the starting moments of superlinear convergence of several quasi-Newton
//! methods.
//!
//! Envelopes are multipliers on `λ_f(x_0)`: a run is within the bound at
//! iteration `k` when `λ_f(x_k)/λ_f(x_0) ≤ multiplier(k)`. A multiplier is
//! `None` where its formula is undefined (outside the index range it is
//! stated for) or does not fit in an `f64`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::IterationRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvelopeKind {
    /// Trace-potential bound for quadratics, with per-step spectra when
    /// available and the `κ(G₀ − A)` form otherwise.
    QuadTrace,
    /// Log-det potential bound for quadratics.
    QuadLogDet,
    /// Exponential-form bound for strongly self-concordant objectives.
    GeneralExp,
    /// Polynomial-form bound, valid for `k > 4n ln(eκ)/ln 2`.
    GeneralPoly,
}

impl EnvelopeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeKind::QuadTrace => "quad_trace",
            EnvelopeKind::QuadLogDet => "quad_logdet",
            EnvelopeKind::GeneralExp => "general_exp",
            EnvelopeKind::GeneralPoly => "general_poly",
        }
    }
}

/// Tabulated multipliers `(k, bound)` for `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEnvelope {
    pub kind: EnvelopeKind,
    pub values: Vec<(usize, Option<f64>)>,
}

impl RateEnvelope {
    pub fn ks(&self) -> Vec<usize> {
        self.values.iter().map(|v| v.0).collect()
    }

    /// Multiplier at iteration `k`, if tabulated and defined.
    pub fn at(&self, k: usize) -> Option<f64> {
        self.values.iter().find(|v| v.0 == k).and_then(|v| v.1)
    }
}

/// Constants the bounds are stated in. Fields that a given bound does not
/// need may be left `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemConstants {
    pub n: usize,
    pub kappa: f64,
    pub mu: Option<f64>,
    pub lip: Option<f64>,
    pub m_const: Option<f64>,
    pub lambda0: Option<f64>,
    /// `tr(G₀ − A)`.
    pub trace0: Option<f64>,
    /// `κ(G₀ − A)` over its nonzero spectrum.
    pub kappa_g0: Option<f64>,
    /// `eig_history[j]` is the spectrum of `G_j − A`.
    pub eig_history: Option<Vec<Vec<f64>>>,
}

/// Relative threshold separating the nonzero spectrum of `G − A` from
/// rounding noise.
pub const SPECTRUM_REL_TOL: f64 = 1e-8;

impl ProblemConstants {
    pub fn new(n: usize, kappa: f64) -> Self {
        ProblemConstants { n, kappa, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::MissingConstants("n"));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::MissingConstants("kappa"));
        }
        Ok(())
    }
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingConstants(name))
}

/// Converts a log-multiplier to a multiplier, `None` on overflow.
fn from_log(log_m: f64) -> Option<f64> {
    if log_m == f64::NEG_INFINITY {
        return Some(0.0);
    }
    let m = log_m.exp();
    m.is_finite().then_some(m)
}

/// Nonzero part of a spectrum: `(λ_min⁺, Σλ⁺)`, or `None` if it is empty.
fn positive_part(spectrum: &[f64]) -> Option<(f64, f64)> {
    let top = spectrum.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return None;
    }
    let pos: Vec<f64> = spectrum.iter().copied().filter(|&x| x > SPECTRUM_REL_TOL * top).collect();
    if pos.is_empty() {
        return None;
    }
    let min = pos.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    Some((min, pos.iter().sum()))
}

fn spectral_top(spectrum: &[f64]) -> f64 {
    spectrum.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Smallest of the `m` largest eigenvalues over their sum, clamped to
/// `[0, 1]`; `1` when every eigenvalue is at most `zero_tol`.
fn leading_factor(spectrum: &[f64], m: usize, zero_tol: f64) -> f64 {
    if spectral_top(spectrum) <= zero_tol {
        return 1.0;
    }
    let mut desc = spectrum.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    desc.truncate(m);
    let sum: f64 = desc.iter().sum();
    let min = desc.last().copied().unwrap_or(0.0).max(0.0);
    (min / sum).clamp(0.0, 1.0)
}

/// Condition number of the nonzero spectrum, `None` if there is none.
pub fn nonzero_condition(spectrum: &[f64]) -> Option<f64> {
    let top = spectrum.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    positive_part(spectrum).map(|(min, _)| top / min)
}

/// `Π_{j=1..k}(1 − factor_j)·tr(G₀ − A)/μ`.
///
/// With per-step spectra, `factor_j` is the smallest of the `n − j + 1`
/// largest eigenvalues of `G_{j−1} − A` over their sum, the rank of
/// `G_{j−1} − A` being at most `n − j + 1`; once `G_{j−1} = A` (relative to
/// the scale of `G₀ − A`) the remaining potential is zero and `factor_j = 1`.
/// Steps beyond the recorded history, or beyond `n` while the product is
/// still positive, are `None`. Without spectra,
/// `factor_j = 1/((n − j + 1)κ(G₀ − A))`, stated for `k ≤ n`.
pub fn quad_trace_envelope(c: &ProblemConstants, k_max: usize) -> Result<RateEnvelope> {
    c.check()?;
    let mu = need(c.mu, "mu")?;
    let trace0 = need(c.trace0, "trace0")?;
    let base = trace0 / mu;
    let mut values = Vec::with_capacity(k_max + 1);
    let mut log_prod = 0.0_f64;
    let mut defined = true;
    if let Some(hist) = &c.eig_history {
        let scale0 = hist.first().map_or(0.0, |s| spectral_top(s));
        for k in 0..=k_max {
            if k >= 1 && defined {
                match hist.get(k - 1).filter(|_| k <= c.n) {
                    Some(spec) => {
                        let factor = leading_factor(spec, c.n - k + 1, SPECTRUM_REL_TOL * scale0);
                        log_prod += (1.0 - factor).max(0.0).ln();
                    }
                    None => defined = log_prod == f64::NEG_INFINITY,
                }
            }
            values.push((k, if defined { from_log(log_prod + base.ln()) } else { None }));
        }
    } else {
        let kg = need(c.kappa_g0, "kappa_g0")?;
        for k in 0..=k_max {
            if k >= 1 && k <= c.n {
                let factor = 1.0 / ((c.n - k + 1) as f64 * kg);
                log_prod += (1.0 - factor).max(0.0).ln();
            }
            values.push((k, if k <= c.n { from_log(log_prod + base.ln()) } else { None }));
        }
    }
    Ok(RateEnvelope { kind: EnvelopeKind::QuadTrace, values })
}

/// `(e^{(n/k) ln κ} − 1)^{k/2}·√κ` for `k ≥ 1`.
pub fn quad_logdet_envelope(c: &ProblemConstants, k_max: usize) -> Result<RateEnvelope> {
    c.check()?;
    let n = c.n as f64;
    let ln_k = c.kappa.ln();
    let values = (0..=k_max)
        .map(|k| {
            if k == 0 {
                return (k, None);
            }
            let kf = k as f64;
            let inner = (n / kf * ln_k).exp_m1();
            (k, from_log(kf / 2.0 * inner.ln() + 0.5 * ln_k))
        })
        .collect();
    Ok(RateEnvelope { kind: EnvelopeKind::QuadLogDet, values })
}

/// `4n ln(eκ)/ln 2`, the index after which the polynomial general envelope
/// holds.
pub fn general_poly_threshold(c: &ProblemConstants) -> f64 {
    4.0 * c.n as f64 * (1.0 + c.kappa.ln()) / std::f64::consts::LN_2
}

/// The exponential form `(e^{2n ln(eκ)/k} − 1)^{k/2}·√(3κ)` and the
/// polynomial form `(4n ln(eκ)/k)^{k/2}·√(3κ)`, both for `k ≥ 1`; the latter
/// only for `k > 4n ln(eκ)/ln 2`.
pub fn general_envelope(c: &ProblemConstants, k_max: usize) -> Result<(RateEnvelope, RateEnvelope)> {
    c.check()?;
    let n = c.n as f64;
    let ln_ek = 1.0 + c.kappa.ln();
    let log_tail = 0.5 * (3.0 * c.kappa).ln();
    let threshold = general_poly_threshold(c);
    let mut exp_vals = Vec::with_capacity(k_max + 1);
    let mut poly_vals = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k == 0 {
            exp_vals.push((k, None));
            poly_vals.push((k, None));
            continue;
        }
        let kf = k as f64;
        let inner = (2.0 * n * ln_ek / kf).exp_m1();
        exp_vals.push((k, from_log(kf / 2.0 * inner.ln() + log_tail)));
        let poly = if kf > threshold { from_log(kf / 2.0 * (4.0 * n * ln_ek / kf).ln() + log_tail) } else { None };
        poly_vals.push((k, poly));
    }
    Ok((
        RateEnvelope { kind: EnvelopeKind::GeneralExp, values: exp_vals },
        RateEnvelope { kind: EnvelopeKind::GeneralPoly, values: poly_vals },
    ))
}

/// The local condition `Mλ₀ ≤ ln(3/2)/(4κ)`: returns the threshold and
/// whether it holds.
pub fn local_condition(c: &ProblemConstants) -> Result<(f64, bool)> {
    let threshold = local_threshold(c)?;
    let m = need(c.m_const, "m_const")?;
    let lambda0 = need(c.lambda0, "lambda0")?;
    Ok((threshold, m * lambda0 <= threshold))
}

/// `ln(3/2)/(4κ)`, the bound on `Mλ₀` in [`local_condition`].
pub fn local_threshold(c: &ProblemConstants) -> Result<f64> {
    c.check()?;
    Ok(1.5_f64.ln() / (4.0 * c.kappa))
}

/// Starting moments of superlinear convergence, keyed by method:
/// `sr1_cs`, `greedy_sr1`, `rand_bfgs`, `bfgs`, `dfp`.
pub fn starting_moments(c: &ProblemConstants) -> Result<BTreeMap<&'static str, f64>> {
    c.check()?;
    let n = c.n as f64;
    let k = c.kappa;
    let mut out = BTreeMap::new();
    out.insert("sr1_cs", 2.0 * n * (1.0 + k.ln()) / std::f64::consts::LN_2);
    out.insert("greedy_sr1", 4.0 * n.max(k) * (2.0 * n * k).ln());
    out.insert("rand_bfgs", n.max(2.0 * k) * (4.0 * n * k).ln());
    out.insert("bfgs", 8.0 * n * (2.0 * k).ln());
    out.insert("dfp", 18.0 * n * k * (2.0 * k).ln());
    Ok(out)
}

/// Per-step quantities of the correction-strategy analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem41Step {
    pub k: usize,
    /// `ξ_k = exp(M Σ_{i<k}(r_{i−1} + r_i))`, `r_{−1} = 0`.
    pub xi: f64,
    /// `α_k = (1 + Mr_k/2)(1 + Mr_{k−1}/2) − 1`.
    pub alpha: f64,
    /// `β_k = 1 − 1/(κ ξ_k (1 + Mr_{k−1}/2)(1 + Mr_k/2))`.
    pub beta: f64,
}

/// Evaluates `ξ_k`, `α_k`, `β_k` along a recorded run.
pub fn theorem41_quantities(records: &[IterationRecord], c: &ProblemConstants) -> Result<Vec<Theorem41Step>> {
    c.check()?;
    let m = need(c.m_const, "m_const")?;
    let mut out = Vec::with_capacity(records.len());
    let mut sum = 0.0_f64;
    let mut r_prev = 0.0_f64;
    for rec in records {
        let xi = (m * sum).exp();
        let a = (1.0 + m * rec.r_k / 2.0) * (1.0 + m * r_prev / 2.0);
        out.push(Theorem41Step { k: rec.k, xi, alpha: a - 1.0, beta: 1.0 - 1.0 / (c.kappa * xi * a) });
        sum += r_prev + rec.r_k;
        r_prev = rec.r_k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::DenomSign;

    #[test]
    fn trace_envelope_at_zero_is_trace_over_mu() {
        let mut c = ProblemConstants::new(3, 10.0);
        c.mu = Some(2.0);
        c.trace0 = Some(5.0);
        c.kappa_g0 = Some(4.0);
        let e = quad_trace_envelope(&c, 5).unwrap();
        assert!((e.at(0).unwrap() - 2.5).abs() < 1e-15);
        let want1 = (1.0 - 1.0 / 12.0) * 2.5;
        assert!((e.at(1).unwrap() - want1).abs() < 1e-14);
        assert_eq!(e.at(4), None);
        assert_eq!(quad_trace_envelope(&ProblemConstants::new(3, 10.0), 2), Err(Error::MissingConstants("mu")));
    }

    #[test]
    fn trace_envelope_projector_hits_zero() {
        let mut c = ProblemConstants::new(2, 1.0);
        c.mu = Some(1.0);
        c.trace0 = Some(2.0);
        c.eig_history = Some(vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
        let e = quad_trace_envelope(&c, 3).unwrap();
        assert!((e.at(1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(e.at(2), Some(0.0));
        assert_eq!(e.at(3), Some(0.0));
        c.eig_history = Some(vec![vec![1.0, 2.0]]);
        let e = quad_trace_envelope(&c, 3).unwrap();
        assert!(e.at(1).is_some() && e.at(2).is_none());
    }

    #[test]
    fn trace_envelope_rank_deficient_start_reaches_zero_at_n() {
        let mut c = ProblemConstants::new(3, 10.0);
        c.mu = Some(1.0);
        c.trace0 = Some(3.0);
        c.eig_history = Some(vec![vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.5], vec![1e-20, 0.0, 0.0]]);
        let e = quad_trace_envelope(&c, 4).unwrap();
        // The (n − j + 1)-th largest eigenvalue is zero until G = A.
        assert!((e.at(1).unwrap() - 3.0).abs() < 1e-14);
        assert!((e.at(2).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(e.at(3), Some(0.0));
        assert_eq!(e.at(4), Some(0.0));
    }

    #[test]
    fn logdet_envelope_examples() {
        let e = quad_logdet_envelope(&ProblemConstants::new(5, 1.0), 4).unwrap();
        assert_eq!(e.at(0), None);
        assert!((1..=4).all(|k| e.at(k) == Some(0.0)));
        let c = ProblemConstants::new(10, 100.0);
        let onset = (10.0 * 100.0_f64.ln() / 2.0_f64.ln()).ceil() as usize;
        let e = quad_logdet_envelope(&c, onset + 40).unwrap();
        let k = onset + 40;
        let direct = ((10.0 / k as f64 * 100.0_f64.ln()).exp() - 1.0).powf(k as f64 / 2.0) * 10.0;
        assert!((e.at(k).unwrap() - direct).abs() <= 1e-10 * direct);
        assert!(e.at(k).unwrap() < 1.0);
        assert!(e.at(onset / 2).unwrap() > 1.0);
    }

    #[test]
    fn general_envelope_examples() {
        let (ex, _) = general_envelope(&ProblemConstants::new(4, 1.0), 10).unwrap();
        for k in 1..=10 {
            let want = ((8.0 / k as f64).exp() - 1.0).powf(k as f64 / 2.0) * 3.0_f64.sqrt();
            assert!((ex.at(k).unwrap() - want).abs() <= 1e-12 * want);
        }
        let c = ProblemConstants::new(10, 100.0);
        let t = general_poly_threshold(&c);
        assert!((t - 323.5).abs() < 0.1, "{t}");
        let (ex, po) = general_envelope(&c, 1000).unwrap();
        assert_eq!(po.at(323), None);
        for k in 324..=1000 {
            assert!(po.at(k).unwrap() >= ex.at(k).unwrap());
        }
    }

    #[test]
    fn local_condition_examples() {
        let mut c = ProblemConstants::new(3, 1.0);
        c.m_const = Some(0.0);
        c.lambda0 = Some(1e6);
        assert!(local_condition(&c).unwrap().1);
        let (t, _) = local_condition(&c).unwrap();
        assert!((t - 0.101366).abs() < 1e-6);
        c.m_const = Some(1.0);
        assert!(!local_condition(&c).unwrap().1);
        c.lambda0 = None;
        assert_eq!(local_condition(&c), Err(Error::MissingConstants("lambda0")));
    }

    #[test]
    fn starting_moment_values() {
        let s = starting_moments(&ProblemConstants::new(10, 100.0)).unwrap();
        assert!((s["sr1_cs"] - 161.7).abs() < 0.05);
        assert_eq!(s["bfgs"], 80.0 * 200.0_f64.ln());
        for kappa in [1.0, 2.0, 50.0, 1e4] {
            let s = starting_moments(&ProblemConstants::new(7, kappa)).unwrap();
            assert!(s["dfp"] >= s["bfgs"]);
        }
    }

    fn rec(k: usize, r: f64) -> IterationRecord {
        IterationRecord {
            k,
            f_value: 0.0,
            grad_norm: 0.0,
            lambda_f: 0.0,
            g_norm: 0.0,
            r_k: r,
            a_k: 1.0,
            nu: None,
            theta: None,
            sigma: None,
            v_potential: None,
            skipped: false,
            denom_sign: DenomSign::Pos,
        }
    }

    #[test]
    fn step_quantities_degenerate_cases() {
        let mut c = ProblemConstants::new(3, 8.0);
        c.m_const = Some(0.0);
        let recs: Vec<_> = (0..4).map(|k| rec(k, 0.3)).collect();
        for q in theorem41_quantities(&recs, &c).unwrap() {
            assert_eq!((q.xi, q.alpha, q.beta), (1.0, 0.0, 1.0 - 1.0 / 8.0));
        }
        c.m_const = Some(2.0);
        let zero: Vec<_> = (0..4).map(|k| rec(k, 0.0)).collect();
        for q in theorem41_quantities(&zero, &c).unwrap() {
            assert_eq!((q.xi, q.alpha, q.beta), (1.0, 0.0, 1.0 - 1.0 / 8.0));
        }
        let q = theorem41_quantities(&[rec(0, 0.1), rec(1, 0.2)], &c).unwrap();
        assert!((q[1].xi - (2.0_f64 * 0.1).exp()).abs() < 1e-15);
        assert!((q[1].alpha - (1.2 * 1.1 - 1.0)).abs() < 1e-15);
    }
}
