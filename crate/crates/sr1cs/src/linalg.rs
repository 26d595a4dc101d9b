//! Dense symmetric linear algebra: Cholesky factorization, a Jacobi
//! eigenvalue solver, the PSD ordering test, rank-one updates and weighted
//! norms.
//!
//! Every routine is generic over [`Scalar`] and allocates its result; inputs
//! are never mutated.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Position of entry `(i, j)`, `j <= i`, in packed lower-triangular storage.
#[inline]
fn packed(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Dense symmetric matrix stored as its packed lower triangle, so that
/// `get(i, j) == get(j, i)` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// The zero matrix of order `n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        SymMatrix { n, data: vec![T::zero(); n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, c: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, c);
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on the lower triangle `j <= i`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.data[packed(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from square row data; the lower triangle is taken as
    /// authoritative.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix order must be at least 1".into()));
        }
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j <= i {
            self.data[packed(i, j)]
        } else {
            self.data[packed(j, i)]
        }
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        if j <= i {
            self.data[packed(i, j)] = v;
        } else {
            self.data[packed(j, i)] = v;
        }
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.n {
            t += self.get(i, i);
        }
        t
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n, "vector length must match matrix order");
        let mut out = vec![T::zero(); self.n];
        for i in 0..self.n {
            let row = &self.data[packed(i, 0)..=packed(i, i)];
            let mut acc = T::zero();
            for (j, &a) in row.iter().enumerate() {
                acc += a * v[j];
                if j < i {
                    out[j] += a * v[i];
                }
            }
            out[i] += acc;
        }
        out
    }

    /// Checked matrix-vector product.
    pub fn try_mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_len(v)?;
        Ok(self.mul_vec(v))
    }

    /// The quadratic form `vᵀ·self·v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        dot(v, &self.mul_vec(v))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, c: T) -> Self {
        SymMatrix { n: self.n, data: self.data.iter().map(|&a| a * c).collect() }
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..=i {
                let a = self.get(i, j);
                s += if i == j { a * a } else { (a + a) * a };
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    /// Entrywise conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> SymMatrix<U> {
        SymMatrix { n: self.n, data: self.data.iter().map(|&a| U::from_f64(a.to_f64())).collect() }
    }

    /// Dense product `self · other` (not symmetric in general).
    pub fn mul_dense(&self, other: &Self) -> Result<Vec<Vec<T>>> {
        self.check_order(other)?;
        let a = self.to_rows();
        let b = other.to_rows();
        let n = self.n;
        let mut out = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i][k];
                for j in 0..n {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
        Ok(out)
    }

    /// `‖self·other − I‖_F`, the consistency measure of a matrix and its
    /// maintained inverse.
    pub fn inverse_residual(&self, other: &Self) -> Result<T> {
        let p = self.mul_dense(other)?;
        let mut s = T::zero();
        for (i, row) in p.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let d = if i == j { x - T::one() } else { x };
                s += d * d;
            }
        }
        Ok(s.sqrt())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        SymMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    fn check_len(&self, v: &[T]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
        }
        Ok(())
    }
}

/// Lower-triangular Cholesky factor with strictly positive diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> LowerTriangular<T> {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`; zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> T {
        if j <= i {
            self.data[packed(i, j)]
        } else {
            T::zero()
        }
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in 0..self.n {
            let mut s = x[i];
            for (j, &xj) in x.iter().enumerate().take(i) {
                s -= self.data[packed(i, j)] * xj;
            }
            x[i] = s / self.data[packed(i, i)];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for (j, &xj) in x.iter().enumerate().skip(i + 1) {
                s -= self.data[packed(j, i)] * xj;
            }
            x[i] = s / self.data[packed(i, i)];
        }
        x
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        SymMatrix::from_fn(self.n, |i, j| {
            let mut s = T::zero();
            for k in 0..=j {
                s += self.data[packed(i, k)] * self.data[packed(j, k)];
            }
            s
        })
    }

    /// `ln det(L Lᵀ)`.
    pub fn logdet(&self) -> T {
        let two = T::one() + T::one();
        let mut s = T::zero();
        for i in 0..self.n {
            s += self.data[packed(i, i)].ln();
        }
        two * s
    }

    /// `(L Lᵀ)⁻¹`, assembled column by column.
    pub fn inverse(&self) -> SymMatrix<T> {
        let n = self.n;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for (i, &c) in col.iter().enumerate().skip(j) {
                inv.set(i, j, c);
            }
        }
        inv
    }
}

/// Cholesky factorization `m = L Lᵀ`.
///
/// Fails with [`Error::NotPositiveDefinite`] as soon as a pivot is not
/// strictly positive.
///
/// ```
/// use sr1cs::linalg::{cholesky, SymMatrix};
/// let l = cholesky(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
/// assert_eq!(l.diag(), vec![2.0, 3.0]);
/// ```
pub fn cholesky<T: Scalar>(m: &SymMatrix<T>) -> Result<LowerTriangular<T>> {
    let n = m.order();
    let mut l = vec![T::zero(); n * (n + 1) / 2];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            let x = l[packed(j, k)];
            d -= x * x;
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d.to_f64() });
        }
        let djj = d.sqrt();
        l[packed(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[packed(i, k)] * l[packed(j, k)];
            }
            l[packed(i, j)] = s / djj;
        }
    }
    Ok(LowerTriangular { n, data: l })
}

/// Solves `m x = v` for SPD `m`.
pub fn solve_spd<T: Scalar>(m: &SymMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    m.check_len(v)?;
    Ok(cholesky(m)?.solve(v))
}

/// Inverse of an SPD matrix.
pub fn inverse_spd<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    Ok(cholesky(m)?.inverse())
}

/// Eigenvalues of a symmetric matrix in ascending order: Householder
/// reduction to tridiagonal form followed by the implicit QL iteration.
pub fn eigvals_sym<T: Scalar>(m: &SymMatrix<T>) -> Vec<T> {
    let n = m.order();
    let mut a = m.to_rows();
    let (mut d, mut e) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    debug_assert_eq!(d.len(), n);
    d
}

/// Reduces `a` in place; returns the diagonal and the subdiagonal, the
/// latter stored in `e[1..]`.
#[allow(clippy::needless_range_loop)] // the inner loops read rows and columns of `a` together
fn tridiagonalize<T: Scalar>(a: &mut [Vec<T>]) -> (Vec<T>, Vec<T>) {
    let n = a.len();
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale = a[i][..=l].iter().fold(T::zero(), |s, x| s + x.abs());
            if scale == T::zero() {
                e[i] = a[i][l];
            } else {
                for x in &mut a[i][..=l] {
                    *x /= scale;
                    h += *x * *x;
                }
                let f = a[i][l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut f = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let aik = a[i][k];
                        a[j][k] -= f * e[k] + g * aik;
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
    }
    let d = (0..n).map(|i| a[i][i]).collect();
    (d, e)
}

/// `sqrt(a² + b²)` without intermediate overflow.
fn hypot<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    let (big, small) = if a > b { (a, b) } else { (b, a) };
    if big == T::zero() {
        return T::zero();
    }
    let q = small / big;
    big * (T::one() + q * q).sqrt()
}

/// Eigenvalues of the symmetric tridiagonal matrix `(d, e[1..])`, left in
/// `d`.
fn tridiagonal_ql<T: Scalar>(d: &mut [T], e: &mut [T]) {
    let n = d.len();
    if n < 2 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::one() + T::one();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l || iter == 60 {
                break;
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = hypot(g, T::one());
            let signed_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm<T: Scalar>(m: &SymMatrix<T>) -> T {
    let ev = eigvals_sym(m);
    ev[0].abs().max(ev[ev.len() - 1].abs())
}

/// Smallest eigenvalue of `b − a` together with `‖b − a‖₂`.
pub fn order_gap<T: Scalar>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<(T, T)> {
    let d = b.sub(a)?;
    let ev = eigvals_sym(&d);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    Ok((lo, lo.abs().max(hi.abs())))
}

/// `a ⪯ b` up to a relative eigenvalue floor:
/// `λ_min(b − a) ≥ −tol·max(1, ‖b − a‖₂)`.
pub fn psd_dominates<T: Scalar>(a: &SymMatrix<T>, b: &SymMatrix<T>, tol: T) -> Result<bool> {
    let (lo, norm) = order_gap(a, b)?;
    Ok(lo >= -tol * T::one().max(norm))
}

/// Factor `F` (`n × r`) of a positive semidefinite `m` with `m ≈ FFᵀ`, by
/// Cholesky with diagonal pivoting. Elimination stops once every remaining
/// pivot is below `n·ε·max_i m_ii`, so `r` is the numerical rank. A diagonal
/// entry below `−max(n·ε, √ε)·max_i m_ii` is an error.
pub fn psd_factor<T: Scalar>(m: &SymMatrix<T>) -> Result<DenseMatrix<T>> {
    psd_factor_scaled(m, T::zero())
}

/// [`psd_factor`] with `max_i m_ii` replaced by `max(scale, max_i m_ii)`, for an
/// `m` formed as a difference of matrices of size `scale`, where rounding in
/// the subtraction can leave slightly negative diagonal entries.
pub fn psd_factor_scaled<T: Scalar>(m: &SymMatrix<T>, scale: T) -> Result<DenseMatrix<T>> {
    let n = m.order();
    let mut d = m.diag();
    let top = d.iter().fold(scale, |acc, &x| acc.max(x));
    let tol = T::from_usize(n) * T::epsilon() * top;
    let reject = tol.max(T::epsilon().sqrt() * top);
    if let Some((i, &x)) = d.iter().enumerate().find(|(_, &x)| x < -reject) {
        return Err(Error::NotPositiveDefinite { index: i, pivot: x.to_f64() });
    }
    let mut done = vec![false; n];
    let mut cols: Vec<Vec<T>> = Vec::new();
    for _ in 0..n {
        let (p, dp) = (0..n).filter(|&i| !done[i]).map(|i| (i, d[i])).fold((usize::MAX, T::zero()), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        });
        if p == usize::MAX || dp <= tol {
            break;
        }
        let piv = dp.sqrt();
        let mut col = vec![T::zero(); n];
        col[p] = piv;
        for i in (0..n).filter(|&i| !done[i] && i != p) {
            let mut s = m.get(i, p);
            for c in &cols {
                s -= c[i] * c[p];
            }
            col[i] = s / piv;
            d[i] -= col[i] * col[i];
        }
        done[p] = true;
        cols.push(col);
    }
    let mut f = DenseMatrix::zeros(n, cols.len());
    for (k, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            f.set(i, k, v);
        }
    }
    Ok(f)
}

/// `m + c·vvᵀ`.
pub fn rank_one_update<T: Scalar>(m: &SymMatrix<T>, c: T, v: &[T]) -> Result<SymMatrix<T>> {
    m.check_len(v)?;
    let mut out = m.clone();
    for i in 0..m.order() {
        let cvi = c * v[i];
        for (j, &vj) in v[..=i].iter().enumerate() {
            out.data[packed(i, j)] += cvi * vj;
        }
    }
    Ok(out)
}

/// `‖v‖_m = sqrt(vᵀ m v)`. Slightly negative forms caused by rounding are
/// clamped to zero; anything below `−1e-10·‖v‖²·‖m‖_F` is reported as
/// [`Error::IndefiniteWeight`].
pub fn weighted_norm<T: Scalar>(v: &[T], m: &SymMatrix<T>) -> Result<T> {
    m.check_len(v)?;
    let q = m.quad_form(v);
    let floor = T::from_f64(1e-10) * dot(v, v) * m.frobenius_norm();
    if q < -floor {
        return Err(Error::IndefiniteWeight { value: q.to_f64() });
    }
    Ok(q.max(T::zero()).sqrt())
}

/// `ln det m` for SPD `m`, from the Cholesky diagonal.
pub fn logdet_spd<T: Scalar>(m: &SymMatrix<T>) -> Result<T> {
    Ok(cholesky(m)?.logdet())
}

/// Number of eigenvalues with `|λ| > rel_tol·max|λ|`; zero for the zero
/// matrix.
pub fn numerical_rank<T: Scalar>(m: &SymMatrix<T>, rel_tol: T) -> usize {
    let ev = eigvals_sym(m);
    let top = ev.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if top == T::zero() {
        return 0;
    }
    ev.iter().filter(|x| x.abs() > rel_tol * top).count()
}

/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Dense row-major `rows × cols` matrix, used for feature matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// `ZᵀZ`.
    pub fn gram(&self) -> SymMatrix<T> {
        let mut g = SymMatrix::zeros(self.cols.max(1));
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                for j in 0..=i {
                    g.data[packed(i, j)] += row[i] * row[j];
                }
            }
        }
        g
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| U::from_f64(a.to_f64())).collect(),
        }
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `a + c·b`.
pub fn axpy<T: Scalar>(a: &[T], c: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + c * y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Scalar>(a: &[T], c: T) -> Vec<T> {
    a.iter().map(|&x| x * c).collect()
}

pub fn cast_vec<S: Scalar, T: Scalar>(a: &[S]) -> Vec<T> {
    a.iter().map(|&x| T::from_f64(x.to_f64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        SymMatrix::from_fn(n, |i, j| {
            let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
            if i == j {
                s + 0.5
            } else {
                s
            }
        })
    }

    fn rel_frob(a: &SymMatrix<f64>, b: &SymMatrix<f64>) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn symmetric_access() {
        let mut m = SymMatrix::<f64>::zeros(3);
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
        assert_eq!(m.get(0, 2), 5.0);
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(l.reconstruct(), SymMatrix::identity(3));
        let l = cholesky(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l.diag(), vec![2.0, 3.0]);
        assert_eq!(l.get(1, 0), 0.0);
        let m = random_spd(5, 11);
        assert!(rel_frob(&cholesky(&m).unwrap().reconstruct(), &m) <= 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(cholesky(&m), Err(Error::NotPositiveDefinite { index: 1, .. })));
        assert!(cholesky(&SymMatrix::<f64>::zeros(2)).is_err());
    }

    #[test]
    fn solve_examples() {
        let v = vec![1.5, -2.0];
        assert_eq!(solve_spd(&SymMatrix::identity(2), &v).unwrap(), v);
        let x = solve_spd(&SymMatrix::from_diag(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert!(x.iter().all(|&xi| (xi - 1.0).abs() <= 1e-15));
        let m = random_spd(7, 3);
        let b: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let x = solve_spd(&m, &b).unwrap();
        assert!(norm(&sub(&m.mul_vec(&x), &b)) <= 1e-10 * norm(&b));
        assert!(matches!(solve_spd(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn eigen_examples() {
        assert_eq!(eigvals_sym(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])), vec![1.0, 2.0, 3.0]);
        assert_eq!(eigvals_sym(&SymMatrix::<f64>::identity(4)), vec![1.0; 4]);
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = eigvals_sym(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let m = random_spd(12, 5);
        let ev = eigvals_sym(&m);
        let sum: f64 = ev.iter().sum();
        assert!((sum - m.trace()).abs() <= 1e-10 * m.trace());
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenvalues_of_a_known_spectrum() {
        // Rotating diag(1, 10, 100) by a Householder reflection keeps the
        // spectrum.
        let v = [1.0 / 3.0_f64.sqrt(); 3];
        let h = SymMatrix::from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j]);
        let hr = h.to_rows();
        let d = [1.0, 10.0, 100.0];
        let m = SymMatrix::from_fn(3, |i, j| (0..3).map(|k| hr[i][k] * d[k] * hr[k][j]).sum());
        let ev = eigvals_sym(&m);
        for (e, want) in ev.iter().zip(d) {
            assert!((e - want).abs() < 1e-12 * 100.0);
        }
    }

    #[test]
    fn psd_dominates_examples() {
        let i2 = SymMatrix::<f64>::identity(2);
        assert!(psd_dominates(&i2, &i2.scale(2.0), 1e-10).unwrap());
        assert!(!psd_dominates(&i2.scale(2.0), &i2, 1e-10).unwrap());
        assert!(psd_dominates(&i2, &SymMatrix::identity(3), 1e-10).is_err());
    }

    #[test]
    fn rank_one_examples() {
        let e1 = [1.0, 0.0];
        assert_eq!(rank_one_update(&SymMatrix::zeros(2), 1.0, &e1).unwrap(), SymMatrix::from_diag(&[1.0, 0.0]));
        assert_eq!(rank_one_update(&SymMatrix::identity(2), -1.0, &e1).unwrap(), SymMatrix::from_diag(&[0.0, 1.0]));
        assert_eq!(
            rank_one_update(&SymMatrix::from_diag(&[2.0, 3.0]), -4.0, &[-0.5, 0.0]).unwrap(),
            SymMatrix::from_diag(&[1.0, 3.0])
        );
    }

    #[test]
    fn weighted_norm_examples() {
        let v = [3.0, 4.0];
        assert_eq!(weighted_norm(&v, &SymMatrix::identity(2)).unwrap(), 5.0);
        assert_eq!(weighted_norm(&[1.0, 1.0], &SymMatrix::from_diag(&[4.0, 9.0])).unwrap(), 13.0_f64.sqrt());
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(weighted_norm(&[1.0, 0.0], &m).unwrap(), 2.0_f64.sqrt());
        let bad = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(weighted_norm(&[0.0, 1.0], &bad), Err(Error::IndefiniteWeight { .. })));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_spd(&SymMatrix::<f64>::identity(4)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((logdet_spd(&SymMatrix::from_diag(&[e, e * e])).unwrap() - 3.0).abs() < 1e-15);
        let m = random_spd(6, 9);
        let via_eig: f64 = eigvals_sym(&m).iter().map(|x| x.ln()).sum();
        assert!((logdet_spd(&m).unwrap() - via_eig).abs() <= 1e-10 * via_eig.abs().max(1.0));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&SymMatrix::<f64>::zeros(3), 1e-8), 0);
        assert_eq!(numerical_rank(&SymMatrix::from_diag(&[1.0, 0.0, 2.0]), 1e-8), 2);
    }

    #[test]
    fn inverse_residual_of_exact_inverse() {
        let m = random_spd(6, 2);
        let h = inverse_spd(&m).unwrap();
        assert!(m.inverse_residual(&h).unwrap() <= 1e-12);
    }

    #[test]
    fn psd_factor_of_singular_matrix() {
        let v = [1.0, 2.0, -1.0];
        let w = [0.5, 0.0, 1.0];
        let m = SymMatrix::from_fn(3, |i, j| v[i] * v[j] + w[i] * w[j]);
        let f = psd_factor(&m).unwrap();
        assert_eq!(f.cols(), 2);
        let back = SymMatrix::from_fn(3, |i, j| dot(f.row(i), f.row(j)));
        assert!(back.sub(&m).unwrap().max_abs() < 1e-14);
        assert!(psd_factor(&SymMatrix::from_diag(&[1.0, -1.0])).is_err());
        assert_eq!(psd_factor(&SymMatrix::<f64>::zeros(2)).unwrap().cols(), 0);
        let noise = SymMatrix::from_diag(&[-4e-16, 2e-16]);
        assert!(psd_factor(&noise).is_err());
        assert_eq!(psd_factor_scaled(&noise, 1.0).unwrap().cols(), 0);
    }

    #[test]
    fn gram_of_identity() {
        let z = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(z.gram(), SymMatrix::identity(2));
    }

    #[test]
    fn generic_over_f32_and_f256() {
        let m32 = SymMatrix::<f32>::from_diag(&[4.0, 9.0]);
        assert_eq!(cholesky(&m32).unwrap().diag(), vec![2.0, 3.0]);
        let m = random_spd(5, 4).cast::<crate::f256>();
        let l = cholesky(&m).unwrap();
        let r = l.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(r.to_f64() < 1e-60);
    }
}
