//! The SR1 update in direct, secant and inverse form, the correction factor
//! of the correction strategy, and the skip rule.
//!
//! For a target matrix `A`, current approximation `G` and direction `u`, the
//! update is
//!
//! ```text
//! G₊ = G − (G − A)uuᵀ(G − A) / (uᵀ(G − A)u),
//! ```
//!
//! and `G₊ = G` when `(G − A)u = 0`. In floating point the exact zero test
//! becomes a relative threshold (see [`SkipRule`]).

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, SymMatrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum UpdateKind {
    Applied,
    Skipped,
}

/// Result classification of one update attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateOutcome<T> {
    pub kind: UpdateKind,
    /// The curvature denominator `uᵀ(G − A)u` (or `uᵀ(Gu − y)`) that was used
    /// or rejected.
    pub denominator: T,
}

impl<T: Scalar> UpdateOutcome<T> {
    pub fn applied(&self) -> bool {
        self.kind == UpdateKind::Applied
    }
}

/// Thresholds deciding when the residual `r = (G − A)u` counts as zero.
///
/// The update is skipped when `|uᵀr| ≤ angle_tol·‖u‖·‖r‖` (which includes
/// `r = 0`), or when `‖r‖ ≤ residual_tol·‖Au‖`. The second test catches
/// residuals that are pure rounding noise; it is off (`0`) in the bare update
/// functions and on in the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkipRule {
    pub angle_tol: f64,
    pub residual_tol: f64,
}

/// Default relative skip threshold.
pub const DEFAULT_SKIP_TOL: f64 = 1e-8;

impl SkipRule {
    /// Only the angle test, with tolerance `tol`.
    pub fn angle(tol: f64) -> Self {
        SkipRule { angle_tol: tol, residual_tol: 0.0 }
    }

    /// Decides whether to skip given the direction, the residual, the
    /// denominator `uᵀr` and the image `y = Au`.
    pub fn fires<T: Scalar>(&self, u: &[T], r: &[T], denom: T, y: &[T]) -> bool {
        let nr = norm(r);
        if nr <= T::from_f64(self.residual_tol) * norm(y) {
            return true;
        }
        denom.abs() <= T::from_f64(self.angle_tol) * norm(u) * nr
    }
}

impl Default for SkipRule {
    fn default() -> Self {
        SkipRule { angle_tol: DEFAULT_SKIP_TOL, residual_tol: DEFAULT_SKIP_TOL }
    }
}

fn check_len<T>(n: usize, v: &[T]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    Ok(())
}

/// Applies `g − rrᵀ/d` when the rule allows it.
fn downdate<T: Scalar>(
    g: &SymMatrix<T>,
    u: &[T],
    r: &[T],
    y: &[T],
    rule: &SkipRule,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    let d = dot(u, r);
    if rule.fires(u, r, d, y) {
        return Ok((g.clone(), UpdateOutcome { kind: UpdateKind::Skipped, denominator: d }));
    }
    let g1 = linalg::rank_one_update(g, -T::one() / d, r)?;
    Ok((g1, UpdateOutcome { kind: UpdateKind::Applied, denominator: d }))
}

/// The SR1 update of `g` towards the known matrix `a` along `u`.
///
/// ```
/// use sr1cs::linalg::SymMatrix;
/// use sr1cs::sr1_core::{sr1_update_matrix, UpdateKind};
/// let a = SymMatrix::from_diag(&[1.0, 2.0]);
/// let g = SymMatrix::from_diag(&[2.0, 3.0]);
/// let (g1, out) = sr1_update_matrix(&a, &g, &[1.0, 0.0], 1e-8).unwrap();
/// assert_eq!(g1, SymMatrix::from_diag(&[1.0, 3.0]));
/// assert_eq!(out.kind, UpdateKind::Applied);
/// ```
pub fn sr1_update_matrix<T: Scalar>(
    a: &SymMatrix<T>,
    g: &SymMatrix<T>,
    u: &[T],
    skip_tol: f64,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    sr1_update_matrix_with(a, g, u, &SkipRule::angle(skip_tol))
}

/// [`sr1_update_matrix`] with an explicit [`SkipRule`].
pub fn sr1_update_matrix_with<T: Scalar>(
    a: &SymMatrix<T>,
    g: &SymMatrix<T>,
    u: &[T],
    rule: &SkipRule,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    let diff = g.sub(a)?;
    check_len(g.order(), u)?;
    let r = diff.mul_vec(u);
    downdate(g, u, &r, &a.mul_vec(u), rule)
}

/// The SR1 update with `Au` replaced by a secant vector `y`:
/// `g − (gu − y)(gu − y)ᵀ / (uᵀ(gu − y))`.
pub fn sr1_update_secant<T: Scalar>(
    g: &SymMatrix<T>,
    u: &[T],
    y: &[T],
    skip_tol: f64,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    sr1_update_secant_with(g, u, y, &SkipRule::angle(skip_tol))
}

/// [`sr1_update_secant`] with an explicit [`SkipRule`].
pub fn sr1_update_secant_with<T: Scalar>(
    g: &SymMatrix<T>,
    u: &[T],
    y: &[T],
    rule: &SkipRule,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    check_len(g.order(), u)?;
    check_len(g.order(), y)?;
    let r = linalg::sub(&g.mul_vec(u), y);
    downdate(g, u, &r, y, rule)
}

/// The inverse SR1 update `h + (u − hy)(u − hy)ᵀ / (yᵀ(u − hy))`, skipped when
/// `|yᵀs| ≤ skip_tol·‖y‖·‖s‖` for `s = u − hy`.
pub fn sr1_inverse_update<T: Scalar>(
    h: &SymMatrix<T>,
    u: &[T],
    y: &[T],
    skip_tol: f64,
) -> Result<(SymMatrix<T>, UpdateOutcome<T>)> {
    check_len(h.order(), u)?;
    check_len(h.order(), y)?;
    let s = linalg::sub(u, &h.mul_vec(y));
    let d = dot(y, &s);
    if d.abs() <= T::from_f64(skip_tol) * norm(y) * norm(&s) {
        return Ok((h.clone(), UpdateOutcome { kind: UpdateKind::Skipped, denominator: d }));
    }
    let h1 = linalg::rank_one_update(h, T::one() / d, &s)?;
    Ok((h1, UpdateOutcome { kind: UpdateKind::Applied, denominator: d }))
}

/// `a_k = (1 + M r_{k−1}/2)(1 + M r_k/2)`.
pub fn correction_factor<T: Scalar>(r_prev: T, r_cur: T, m_const: T) -> Result<T> {
    for (name, v) in [("r_prev", r_prev), ("r_cur", r_cur), ("m_const", m_const)] {
        if v < T::zero() || !v.is_finite() {
            return Err(Error::NegativeArgument { name, value: v.to_f64() });
        }
    }
    let half = T::half();
    Ok((T::one() + m_const * r_prev * half) * (T::one() + m_const * r_cur * half))
}

/// An approximation `G` paired with its maintained inverse `H = G⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianApprox<T> {
    pub g: SymMatrix<T>,
    pub h: SymMatrix<T>,
}

impl<T: Scalar> HessianApprox<T> {
    /// Pairs `g` with its inverse.
    pub fn new(g: SymMatrix<T>) -> Result<Self> {
        let h = linalg::inverse_spd(&g)?;
        Ok(HessianApprox { g, h })
    }

    /// `G = c·I`, `H = I/c`.
    pub fn scaled_identity(n: usize, c: T) -> Self {
        HessianApprox { g: SymMatrix::scaled_identity(n, c), h: SymMatrix::scaled_identity(n, T::one() / c) }
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    /// `‖GH − I‖_F`, evaluated in double precision.
    pub fn inverse_residual(&self) -> f64 {
        let g = self.g.cast::<f64>();
        let h = self.h.cast::<f64>();
        g.inverse_residual(&h).expect("paired matrices share their order")
    }

    /// Largest tolerated [`inverse_residual`](Self::inverse_residual).
    pub fn consistency_tol(&self) -> f64 {
        1e-8 * self.order() as f64
    }

    /// Re-inverts `G` if the pair drifted apart. Returns whether it did.
    pub fn enforce_consistency(&mut self) -> Result<bool> {
        if self.inverse_residual() <= self.consistency_tol() {
            return Ok(false);
        }
        self.h = linalg::inverse_spd(&self.g)?;
        Ok(true)
    }

    /// The secant SR1 step on both `G` and `H`: `G` by the direct formula,
    /// `H` by the inverse formula, sharing one skip decision.
    pub fn secant_update(&self, u: &[T], y: &[T], rule: &SkipRule) -> Result<(Self, UpdateOutcome<T>)> {
        check_len(self.order(), u)?;
        check_len(self.order(), y)?;
        let r = linalg::sub(&self.g.mul_vec(u), y);
        self.residual_update(u, &r, y, rule)
    }

    /// The SR1 step given the residual `r = (G − A)u` and `y = Au` directly.
    pub fn residual_update(&self, u: &[T], r: &[T], y: &[T], rule: &SkipRule) -> Result<(Self, UpdateOutcome<T>)> {
        let d = dot(u, r);
        if rule.fires(u, r, d, y) {
            return Ok((self.clone(), UpdateOutcome { kind: UpdateKind::Skipped, denominator: d }));
        }
        let g = linalg::rank_one_update(&self.g, -T::one() / d, r)?;
        let s = linalg::sub(u, &self.h.mul_vec(y));
        let h = linalg::rank_one_update(&self.h, T::one() / dot(y, &s), &s)?;
        let mut next = HessianApprox { g, h };
        next.enforce_consistency()?;
        Ok((next, UpdateOutcome { kind: UpdateKind::Applied, denominator: d }))
    }
}

/// `(G̃, H̃) = (a_k G, H / a_k)`.
pub fn apply_correction<T: Scalar>(ha: &HessianApprox<T>, a_k: T) -> Result<HessianApprox<T>> {
    if !(a_k >= T::one()) || !a_k.is_finite() {
        return Err(Error::InvalidFactor { value: a_k.to_f64() });
    }
    if a_k == T::one() {
        return Ok(ha.clone());
    }
    Ok(HessianApprox { g: ha.g.scale(a_k), h: ha.h.scale(T::one() / a_k) })
}

/// `G − A` held as `FFᵀ` with `F` of width `rank(G₀ − A)`.
///
/// The SR1 step maps `FFᵀ` to `F(I − wwᵀ/‖w‖²)Fᵀ`, `w = Fᵀu`. It is carried
/// out by a Householder reflection `Q` with `Qw ∥ e_last` followed by
/// dropping the last column of `FQ`, so `G − A` stays positive semidefinite,
/// its rank drops by exactly one, and directions already removed cannot
/// re-enter through rounding. The residual `(G − A)u = Fw` is computed
/// without the cancellation in `G − A`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredResidual<T> {
    n: usize,
    width: usize,
    f: Vec<T>,
}

impl<T: Scalar> FactoredResidual<T> {
    /// Factors `G₀ − A`, which must be positive semidefinite up to rounding
    /// at the scale of `G₀`.
    pub fn new(g0: &SymMatrix<T>, a: &SymMatrix<T>) -> Result<Self> {
        let f = linalg::psd_factor_scaled(&g0.sub(a)?, g0.max_abs())?;
        Ok(FactoredResidual {
            n: f.rows(),
            width: f.cols(),
            f: (0..f.rows()).flat_map(|i| f.row(i).to_vec()).collect(),
        })
    }

    /// `G − A = FFᵀ`.
    pub fn matrix(&self) -> SymMatrix<T> {
        SymMatrix::from_fn(self.n, |i, j| {
            dot(&self.f[i * self.width..(i + 1) * self.width], &self.f[j * self.width..(j + 1) * self.width])
        })
    }

    /// `(w, r) = (Fᵀu, Fw)`.
    pub fn residual(&self, u: &[T]) -> (Vec<T>, Vec<T>) {
        let mut w = vec![T::zero(); self.width];
        for (i, &ui) in u.iter().enumerate() {
            for (wk, &fik) in w.iter_mut().zip(&self.f[i * self.width..(i + 1) * self.width]) {
                *wk += fik * ui;
            }
        }
        let r = (0..self.n).map(|i| dot(&self.f[i * self.width..(i + 1) * self.width], &w)).collect();
        (w, r)
    }

    /// Number of columns of `F`, an upper bound on `rank(G − A)`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Removes the direction `w = Fᵀu` from the factor.
    pub fn downdate(&mut self, w: &[T]) {
        let m = self.width;
        if m == 0 {
            return;
        }
        // v = w + sign(w_last)‖w‖e_last, so that (I − 2vvᵀ/vᵀv)w ∥ e_last.
        let mut v = w.to_vec();
        let nw = norm(w);
        let last = v[m - 1];
        v[m - 1] = if last >= T::zero() { last + nw } else { last - nw };
        let vv = dot(&v, &v);
        let mut f = Vec::with_capacity(self.n * (m - 1));
        for i in 0..self.n {
            let row = &self.f[i * m..(i + 1) * m];
            if vv > T::zero() {
                let c = T::from_f64(2.0) * dot(row, &v) / vv;
                f.extend(row[..m - 1].iter().zip(&v).map(|(&x, &vk)| x - c * vk));
            } else {
                f.extend_from_slice(&row[..m - 1]);
            }
        }
        self.f = f;
        self.width = m - 1;
    }
}
