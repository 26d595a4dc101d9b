//! Potential and measure functions of the SR1 analysis: the trace
//! potential σ, the log-det potential V, the directional measures ν and θ,
//! and the local gradient norms λ_f and g_k.

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, dot, norm, SymMatrix};
use crate::objectives::{Objective, QuadraticProblem};
use crate::scalar::Scalar;

/// Tolerance of the `G ⪰ A` precondition of [`nu_measure`].
pub const ORDER_TOL: f64 = 1e-10;
/// `(G − A)u` counts as zero below this multiple of `‖G‖_F·‖u‖`.
pub const NULL_DIRECTION_TOL: f64 = 1e-13;

/// One snapshot of every measure.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport<T> {
    pub sigma: T,
    pub v_potential: T,
    pub nu: Option<T>,
    pub theta: Option<T>,
    pub lambda_f: T,
    pub g_norm: T,
}

/// `σ(A, G) = tr(G − A)`.
pub fn trace_potential<T: Scalar>(a: &SymMatrix<T>, g: &SymMatrix<T>) -> Result<T> {
    Ok(g.sub(a)?.trace())
}

/// `V(A, G) = ln det(G A⁻¹) = ln det G − ln det A`.
pub fn logdet_potential<T: Scalar>(a: &SymMatrix<T>, g: &SymMatrix<T>) -> Result<T> {
    if a.order() != g.order() {
        return Err(Error::DimensionMismatch { expected: a.order(), found: g.order() });
    }
    Ok(cholesky(g)?.logdet() - cholesky(a)?.logdet())
}

/// `ν(A, G, u) = sqrt(uᵀ(G − A)G⁻¹(G − A)u / uᵀ(A − AG⁻¹A)u)`, zero when
/// `(G − A)u` vanishes.
///
/// The denominator is evaluated as `(u − G⁻¹v)ᵀv` with `v = (G − A)u`, which
/// equals `uᵀ(A − AG⁻¹A)u` because `A − AG⁻¹A = AG⁻¹(G − A)`.
pub fn nu_measure<T: Scalar>(a: &SymMatrix<T>, g: &SymMatrix<T>, u: &[T]) -> Result<T> {
    let (min_eig, scale) = linalg::order_gap(a, g)?;
    if min_eig < -T::from_f64(ORDER_TOL) * T::one().max(scale) {
        return Err(Error::OrderViolated { min_eig: min_eig.to_f64() });
    }
    let v = g.sub(a)?.try_mul_vec(u)?;
    if norm(&v) <= T::from_f64(NULL_DIRECTION_TOL) * g.frobenius_norm() * norm(u) {
        return Ok(T::zero());
    }
    let ginv_v = linalg::solve_spd(g, &v)?;
    let num = dot(&v, &ginv_v);
    let den = dot(&linalg::sub(u, &ginv_v), &v);
    if !(den > T::zero()) {
        return Err(Error::DegenerateDirection { denominator: den.to_f64() });
    }
    Ok((num / den).sqrt())
}

/// `θ(J, G, u) = sqrt(uᵀ(G − J)J⁻¹(G − J)u / uᵀGJ⁻¹Gu)`; no ordering between
/// `G` and `J` is required.
pub fn theta_measure<T: Scalar>(j: &SymMatrix<T>, g: &SymMatrix<T>, u: &[T]) -> Result<T> {
    if u.iter().all(|&x| x == T::zero()) {
        return Err(Error::ZeroDirection);
    }
    let l = cholesky(j)?;
    let v = g.sub(j)?.try_mul_vec(u)?;
    let gu = g.mul_vec(u);
    let num = dot(&v, &l.solve(&v));
    let den = dot(&gu, &l.solve(&gu));
    Ok((num / den).sqrt())
}

/// `λ = ‖∇f(x)‖_{A⁻¹}` for a quadratic.
pub fn lambda_quadratic<T: Scalar>(p: &QuadraticProblem<T>, x: &[T]) -> Result<T> {
    lambda_general(p, x)
}

/// `λ_f(x) = sqrt(∇f(x)ᵀ[∇²f(x)]⁻¹∇f(x))`.
pub fn lambda_general<T: Scalar, O: Objective<T> + ?Sized>(o: &O, x: &[T]) -> Result<T> {
    if o.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: o.dim(), found: x.len() });
    }
    let grad = o.gradient(x);
    let l = cholesky(&o.hessian(x))?;
    Ok(dot(&grad, &l.solve(&grad)).max(T::zero()).sqrt())
}

/// `g_k = ‖∇f(x_k)‖_{H_k}` with `H_k = G_k⁻¹`.
pub fn g_norm<T: Scalar>(grad: &[T], h: &SymMatrix<T>) -> Result<T> {
    linalg::weighted_norm(grad, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sr1_core::sr1_update_matrix;

    fn d2(a: f64, b: f64) -> SymMatrix<f64> {
        SymMatrix::from_diag(&[a, b])
    }

    #[test]
    fn trace_potential_examples() {
        let a = d2(1.0, 2.0);
        let g = d2(2.0, 3.0);
        assert_eq!(trace_potential(&a, &a).unwrap(), 0.0);
        assert_eq!(trace_potential(&a, &g).unwrap(), 2.0);
        let (g1, _) = sr1_update_matrix(&a, &g, &[1.0, 0.0], 1e-8).unwrap();
        assert_eq!(trace_potential(&a, &g1).unwrap(), 1.0);
    }

    #[test]
    fn logdet_potential_examples() {
        let a = d2(1.0, 2.0);
        assert_eq!(logdet_potential(&a, &a).unwrap(), 0.0);
        assert!((logdet_potential(&a, &d2(2.0, 3.0)).unwrap() - 3.0_f64.ln()).abs() < 1e-15);
        let v = logdet_potential(&SymMatrix::identity(4), &SymMatrix::scaled_identity(4, 7.0)).unwrap();
        assert!((v - 4.0 * 7.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn nu_measure_examples() {
        let a = d2(1.0, 2.0);
        let g = d2(2.0, 3.0);
        assert_eq!(nu_measure(&a, &a, &[1.0, 1.0]).unwrap(), 0.0);
        let u = [1.0, 0.0];
        let nu = nu_measure(&a, &g, &u).unwrap();
        assert!((nu - 1.0).abs() < 1e-15);
        let (g1, _) = sr1_update_matrix(&a, &g, &u, 1e-8).unwrap();
        let dv = logdet_potential(&a, &g).unwrap() - logdet_potential(&a, &g1).unwrap();
        assert!((dv - (1.0 + nu * nu).ln()).abs() < 1e-9);
        assert!(matches!(nu_measure(&g, &a, &u), Err(Error::OrderViolated { .. })));
    }

    #[test]
    fn theta_measure_examples() {
        let j = SymMatrix::<f64>::identity(3);
        assert_eq!(theta_measure(&j, &j, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let g = SymMatrix::scaled_identity(3, 2.0);
        assert!((theta_measure(&j, &g, &[0.0, 1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(theta_measure(&j, &g, &[0.0; 3]), Err(Error::ZeroDirection));
        assert!(matches!(
            theta_measure(&d2(1.0, -1.0), &d2(1.0, 1.0), &[1.0, 0.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn lambda_examples() {
        let p = QuadraticProblem::new(d2(1.0, 2.0), vec![0.0, 0.0]).unwrap();
        assert_eq!(lambda_quadratic(&p, &[0.0, 0.0]).unwrap(), 0.0);
        assert!((lambda_quadratic(&p, &[1.0, 1.0]).unwrap() - 3.0_f64.sqrt()).abs() < 1e-15);
        let q = QuadraticProblem::new(SymMatrix::identity(2), vec![1.0, 0.0]).unwrap();
        let x = [3.0, 4.0];
        assert!((lambda_quadratic(&q, &x).unwrap() - norm(&q.gradient(&x))).abs() < 1e-15);
        assert_eq!(lambda_general(&q, &x).unwrap(), lambda_quadratic(&q, &x).unwrap());
    }

    #[test]
    fn g_norm_examples() {
        let grad = [1.0, 2.0];
        assert!((g_norm(&grad, &SymMatrix::identity(2)).unwrap() - 5.0_f64.sqrt()).abs() < 1e-15);
        let v = g_norm(&grad, &d2(0.5, 1.0 / 3.0)).unwrap();
        assert!((v - (0.5_f64 + 4.0 / 3.0).sqrt()).abs() < 1e-15);
    }
}
