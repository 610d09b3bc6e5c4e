//! Dense linear-algebra helpers shared by the reduction pipeline.
//!
//! Thin wrappers over nalgebra decompositions plus the few kernels nalgebra
//! does not ship: orthonormal complements, null spaces of rectangular
//! matrices, truncated pseudoinverses and a Bartels-Stewart Sylvester solver.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn eye<T: Scalar>(n: usize) -> DMatrix<T> {
    DMatrix::identity(n, n)
}

pub fn zeros<T: Scalar>(r: usize, c: usize) -> DMatrix<T> {
    DMatrix::zeros(r, c)
}

/// Frobenius norm; zero for empty matrices.
pub fn fro<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        T::zero()
    } else {
        m.norm()
    }
}

/// Singular value decomposition with values sorted in descending order.
///
/// Returns `(U, s, V)` where `U` is `r x k`, `V` is `c x k` and `k = min(r, c)`.
/// The LAPACK-style bidiagonal SVD is checked for backward stability and
/// replaced by one-sided Jacobi when it falls short.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return (zeros(r, 0), Vec::new(), zeros(c, 0));
    }
    if let Some(out) = bidiagonal_svd(m) {
        return out;
    }
    if r >= c {
        jacobi_svd(m)
    } else {
        let (u, s, v) = jacobi_svd(&m.transpose());
        (v, s, u)
    }
}

fn bidiagonal_svd<T: Scalar>(m: &DMatrix<T>) -> Option<(DMatrix<T>, Vec<T>, DMatrix<T>)> {
    let (r, c) = m.shape();
    let k = r.min(c);
    let svd = m.clone().try_svd(true, true, T::eps(), 0)?;
    let u = svd.u?;
    let vt = svd.v_t?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s: Vec<T> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(r, k, |i, j| u[(i, order[j])]);
    let v_sorted = DMatrix::from_fn(c, k, |i, j| vt[(order[j], i)]);
    let tol = T::lit(64.0) * T::from_count(r.max(c)) * T::eps();
    let scaled = DMatrix::from_fn(r, k, |i, j| u_sorted[(i, j)] * s[j]);
    let recon = fro(&(&scaled * v_sorted.transpose() - m));
    let ortho_u = fro(&(u_sorted.transpose() * &u_sorted - eye::<T>(k)));
    let ortho_v = fro(&(v_sorted.transpose() * &v_sorted - eye::<T>(k)));
    let ok = recon <= tol * fro(m) && ortho_u <= tol && ortho_v <= tol && s.iter().all(|x| x.is_finite());
    ok.then_some((u_sorted, s, v_sorted))
}

/// One-sided Jacobi SVD of a tall matrix (`r >= c`).
fn jacobi_svd<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (r, c) = m.shape();
    let mut u = m.clone();
    let mut v = eye::<T>(c);
    let tol = T::eps() * T::from_count(r);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..r {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..r {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = cs * x - sn * y;
                    u[(i, q)] = sn * x + cs * y;
                }
                for i in 0..c {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * x - sn * y;
                    v[(i, q)] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..c).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let s: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or_else(T::zero);
    let cutoff = T::from_count(r) * T::eps() * smax;
    let mut basis = zeros::<T>(r, 0);
    for (j, &col) in order.iter().enumerate() {
        if s[j] > cutoff && s[j] > T::zero() {
            let uj = DMatrix::from_fn(r, 1, |i, _| u[(i, col)] / s[j]);
            basis = hstack(&basis, &uj);
        }
    }
    // directions of (numerically) zero singular values get an arbitrary
    // orthonormal completion
    let mut e = 0;
    while basis.ncols() < c {
        let mut cand = zeros::<T>(r, 1);
        cand[(e % r, 0)] = T::one();
        e += 1;
        for _ in 0..2 {
            let proj = basis.transpose() * &cand;
            cand -= &basis * proj;
        }
        let nc = cand.norm();
        if nc > T::lit(0.5) {
            basis = hstack(&basis, &(cand * (T::one() / nc)));
        }
    }
    let vs = DMatrix::from_fn(c, c, |i, j| v[(i, order[j])]);
    (basis, s, vs)
}

pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    svd(m).1
}

/// Spectral norm.
pub fn norm2<T: Scalar>(m: &DMatrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// 2-norm condition number; infinite for singular or empty-rank matrices.
pub fn cond2<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let s = singular_values(m);
    let smax = s[0].as_f64();
    let smin = s[s.len() - 1].as_f64();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Reciprocal condition estimate from the pivots of a partially pivoted LU.
///
/// Cheap and only an estimate, but it reliably flags exactly singular and
/// badly scaled matrices.
pub fn pivot_rcond<T: Scalar>(m: &DMatrix<T>) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::one();
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut lo = T::max_value().unwrap();
    let mut hi = T::zero();
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if hi == T::zero() || !hi.is_finite() {
        T::zero()
    } else {
        lo / hi
    }
}

/// [`pivot_rcond`] after row and column scaling by powers of two, so that a
/// merely badly scaled matrix is not mistaken for a singular one.
pub fn equilibrated_rcond<T: Scalar>(m: &DMatrix<T>) -> T {
    let pow2 = |x: T| if x > T::zero() && x.is_finite() { T::lit(2f64.powi(-x.as_f64().log2().round() as i32)) } else { T::one() };
    let mut m = m.clone();
    for i in 0..m.nrows() {
        let s = pow2(m.row(i).amax());
        m.row_mut(i).scale_mut(s);
    }
    for j in 0..m.ncols() {
        let s = pow2(m.column(j).amax());
        m.column_mut(j).scale_mut(s);
    }
    pivot_rcond(&m)
}

/// Complex counterpart of [`equilibrated_rcond`].
pub fn equilibrated_rcond_complex<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let pow2 = |x: T| if x > T::zero() && x.is_finite() { T::lit(2f64.powi(-x.as_f64().log2().round() as i32)) } else { T::one() };
    let modulus = |z: &Complex<T>| nalgebra::ComplexField::modulus(*z);
    let mut m = m.clone();
    for i in 0..m.nrows() {
        let s = pow2(m.row(i).iter().map(modulus).fold(T::zero(), |a, b| a.max(b)));
        m.row_mut(i).scale_mut(s);
    }
    for j in 0..m.ncols() {
        let s = pow2(m.column(j).iter().map(modulus).fold(T::zero(), |a, b| a.max(b)));
        m.column_mut(j).scale_mut(s);
    }
    pivot_rcond_complex(&m)
}

/// Same estimate for complex matrices.
pub fn pivot_rcond_complex<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::one();
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut lo = T::max_value().unwrap();
    let mut hi = T::zero();
    for i in 0..n {
        let d = nalgebra::ComplexField::modulus(u[(i, i)]);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if hi == T::zero() || !hi.is_finite() {
        T::zero()
    } else {
        lo / hi
    }
}

/// Solves `a x = b`; `None` when `a` is exactly singular.
pub fn solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.nrows() == 0 {
        return Some(zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

/// Solves `x a = b`.
pub fn solve_right<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    solve(&a.transpose(), &b.transpose()).map(|x| x.transpose())
}

pub fn inverse<T: Scalar>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    a.clone().try_inverse()
}

/// `ln |det a|` via LU; `-inf` for singular input.
pub fn log_abs_det<T: Scalar>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::zero();
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut acc = T::zero();
    for i in 0..n {
        acc += u[(i, i)].abs().ln();
    }
    acc
}

/// Orthonormal basis of the range, keeping singular values above `tol`.
pub fn orth<T: Scalar>(m: &DMatrix<T>, tol: T) -> DMatrix<T> {
    let (u, s, _) = svd(m);
    let r = s.iter().filter(|&&x| x > tol).count();
    u.columns(0, r).into_owned()
}

/// Leading `r` left singular vectors.
pub fn leading_left<T: Scalar>(m: &DMatrix<T>, r: usize) -> DMatrix<T> {
    let (u, _, _) = svd(m);
    u.columns(0, r.min(u.ncols())).into_owned()
}

/// Orthonormal basis of the null space of `m`, taking the `dim` right
/// singular vectors belonging to the smallest singular values.
pub fn null_space_dim<T: Scalar>(m: &DMatrix<T>, dim: usize) -> DMatrix<T> {
    let (r, c) = m.shape();
    if dim == 0 {
        return zeros(c, 0);
    }
    // zero padding makes the SVD return a full set of right vectors
    let padded = if r < c {
        let mut p = zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let (_, _, v) = svd(&padded);
    v.columns(c - dim, dim).into_owned()
}

/// Orthonormal basis of the orthogonal complement of `range(q)`, `q` having
/// orthonormal columns.
pub fn orth_complement<T: Scalar>(q: &DMatrix<T>) -> DMatrix<T> {
    let (n, k) = q.shape();
    if k == 0 {
        return eye(n);
    }
    if k >= n {
        return zeros(n, 0);
    }
    let proj = eye::<T>(n) - q * q.transpose();
    leading_left(&proj, n - k)
}

pub fn block_diag<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn hstack<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let rows = a.nrows().max(b.nrows());
    debug_assert!(a.ncols() == 0 || b.ncols() == 0 || a.nrows() == b.nrows());
    let mut out = zeros(rows, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.view_mut((0, 0), a.shape()).copy_from(a);
    }
    if b.ncols() > 0 {
        out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    }
    out
}

pub fn vstack<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    hstack(&a.transpose(), &b.transpose()).transpose()
}

pub fn sym<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Moore-Penrose pseudoinverse discarding singular values at or below
/// `rtol * s_max`.
pub fn pinv<T: Scalar>(m: &DMatrix<T>, rtol: T) -> DMatrix<T> {
    let (u, s, v) = svd(m);
    let (r, c) = m.shape();
    let mut out = zeros(c, r);
    let smax = s.first().copied().unwrap_or_else(T::zero);
    for (j, &sj) in s.iter().enumerate() {
        if sj > rtol * smax && sj > T::zero() {
            out += v.column(j) * u.column(j).transpose() * (T::one() / sj);
        }
    }
    out
}

/// Eigen-decomposition of the symmetric part of `x`, eigenvalues ascending.
pub fn symmetric_eigen<T: Scalar>(x: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = x.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let xs = sym(x);
    let eig = SymmetricEigen::try_new(xs.clone(), T::eps(), 0);
    let tol = T::lit(64.0) * T::from_count(n) * T::eps();
    let (vals, vecs) = match eig {
        Some(e) => {
            let recon = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
            let ok = fro(&(recon - &xs)) <= tol * fro(&xs)
                && fro(&(e.eigenvectors.transpose() * &e.eigenvectors - eye::<T>(n))) <= tol;
            if ok {
                (e.eigenvalues.iter().copied().collect::<Vec<T>>(), e.eigenvectors)
            } else {
                jacobi_eigen(&xs)
            }
        }
        None => jacobi_eigen(&xs),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let v = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    (sorted, v)
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
fn jacobi_eigen<T: Scalar>(x: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = x.nrows();
    let mut a = x.clone();
    let mut v = eye::<T>(n);
    let scale = fro(x);
    for _ in 0..80 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= T::eps() * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Symmetric square-root-free factor: returns `Z` with `Z Z^T ~ X`, keeping
/// eigenvalues above `rtol * lambda_max`. Negative eigenvalues are dropped.
pub fn sym_factor<T: Scalar>(x: &DMatrix<T>, rtol: T) -> DMatrix<T> {
    let n = x.nrows();
    if n == 0 {
        return zeros(0, 0);
    }
    let (vals, vecs) = symmetric_eigen(x);
    let lmax = vals.last().copied().unwrap_or_else(T::zero);
    if lmax <= T::zero() {
        return zeros(n, 0);
    }
    let idx: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > rtol * lmax).collect();
    DMatrix::from_fn(n, idx.len(), |i, j| vecs[(i, idx[j])] * vals[idx[j]].sqrt())
}

pub fn symmetric_eigenvalues<T: Scalar>(x: &DMatrix<T>) -> Vec<T> {
    symmetric_eigen(x).0
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<Complex<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

type SchurParts<T> = (DMatrix<T>, DMatrix<T>, Vec<(usize, usize)>);

/// Real Schur form `a = q t q^T` with a list of diagonal block starts/sizes.
fn real_schur<T: Scalar>(a: &DMatrix<T>) -> Result<SchurParts<T>> {
    let n = a.nrows();
    let schur = Schur::try_new(a.clone(), T::eps(), 200 * n.max(1))
        .ok_or_else(|| Error::NoConvergence("real Schur decomposition".into()))?;
    let (q, mut t) = schur.unpack();
    let tol = T::lit(64.0) * T::from_count(n) * T::eps();
    if fro(&(&q * &t * q.transpose() - a)) > tol * fro(a) || fro(&(q.transpose() * &q - eye::<T>(n))) > tol {
        return Err(Error::NoConvergence("real Schur decomposition is inaccurate".into()));
    }
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n {
            let sub = t[(i + 1, i)].abs();
            let scale = t[(i, i)].abs() + t[(i + 1, i + 1)].abs();
            if sub > T::eps() * scale && sub > T::zero() {
                blocks.push((i, 2));
                i += 2;
                continue;
            }
            t[(i + 1, i)] = T::zero();
        }
        blocks.push((i, 1));
        i += 1;
    }
    Ok((q, t, blocks))
}

/// Solves `s y + y t = r` for blocks of size at most 2 via their Kronecker form.
fn small_sylvester<T: Scalar>(s: &DMatrix<T>, t: &DMatrix<T>, r: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (k, rhs) = kron_system(s, t, r);
    let sol = k
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("Sylvester operator is singular".into()))?;
    let p = s.nrows();
    let y = DMatrix::from_fn(p, t.nrows(), |a, b| sol[a + p * b]);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("Sylvester operator is singular".into()));
    }
    Ok(y)
}

/// `(I (x) s + t^T (x) I) vec(y) = vec(r)` in column-major vectorization.
fn kron_system<T: Scalar>(s: &DMatrix<T>, t: &DMatrix<T>, r: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let p = s.nrows();
    let q = t.nrows();
    let dim = p * q;
    let mut k = zeros::<T>(dim, dim);
    for b in 0..q {
        for a in 0..p {
            let row = a + p * b;
            for c in 0..p {
                k[(row, c + p * b)] += s[(a, c)];
            }
            for d in 0..q {
                k[(row, a + p * d)] += t[(d, b)];
            }
        }
    }
    let rhs = DVector::from_fn(dim, |i, _| r[(i % p, i / p)]);
    (k, rhs)
}

/// Bartels-Stewart solver for `a x + x b = c`.
pub fn solve_sylvester<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let m = b.nrows();
    if c.shape() != (n, m) {
        return Err(Error::DimensionMismatch(format!(
            "Sylvester right-hand side is {:?}, expected ({n}, {m})",
            c.shape()
        )));
    }
    if n == 0 || m == 0 {
        return Ok(zeros(n, m));
    }
    let (qa, sa, blocks_a) = real_schur(a)?;
    let (qb, tb, blocks_b) = real_schur(b)?;
    let rhs = qa.transpose() * c * &qb;
    let mut y = zeros::<T>(n, m);
    for &(j0, bj) in &blocks_b {
        let mut rj = rhs.columns(j0, bj).into_owned();
        if j0 > 0 {
            rj -= y.columns(0, j0) * tb.view((0, j0), (j0, bj));
        }
        let tjj = tb.view((j0, j0), (bj, bj)).into_owned();
        for &(i0, bi) in blocks_a.iter().rev() {
            let mut rij = rj.rows(i0, bi).into_owned();
            let tail = i0 + bi;
            if tail < n {
                rij -= sa.view((i0, tail), (bi, n - tail)) * y.view((tail, j0), (n - tail, bj));
            }
            let sii = sa.view((i0, i0), (bi, bi)).into_owned();
            let yij = small_sylvester(&sii, &tjj, &rij)?;
            y.view_mut((i0, j0), (bi, bj)).copy_from(&yij);
        }
    }
    Ok(&qa * y * qb.transpose())
}

/// Kronecker-product dense solve of `a x + x b = c`, for small problems and
/// as an independent check of [`solve_sylvester`].
pub fn solve_sylvester_kron<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let p = a.nrows();
    let q = b.nrows();
    if p * q == 0 {
        return Ok(zeros(p, q));
    }
    let (k, rhs) = kron_system(a, b, c);
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("Sylvester operator is singular".into()))?;
    Ok(DMatrix::from_fn(p, q, |i, j| sol[i + p * j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        fro(&(a - b)) / fro(b).max(1e-300)
    }

    #[test]
    fn sylvester_matches_kronecker() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, -3.0, -1.0, 0.2, 0.0, 0.4, -2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]);
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        let y = solve_sylvester_kron(&a, &b, &c).unwrap();
        assert!(rel(&x, &y) < 1e-12);
        assert!(rel(&(&a * &x + &x * &b), &c) < 1e-12);
    }

    #[test]
    fn sylvester_singular_operator() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let c = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(solve_sylvester(&a, &b, &c), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space_dim(&m, 2);
        assert_eq!(ns.shape(), (3, 2));
        assert!(fro(&(&m * &ns)) < 1e-14);
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let c = orth_complement(&q);
        assert_eq!(c.ncols(), 2);
        assert!(fro(&(q.transpose() * &c)) < 1e-14);
        assert!(rel(&(c.transpose() * &c), &eye(2)) < 1e-14);
    }

    #[test]
    fn pinv_of_column() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let p = pinv(&m, 1e-12);
        assert!(rel(&p, &DMatrix::from_row_slice(1, 2, &[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn svd_of_rank_one_projector() {
        // bidiagonal SVD loses accuracy on this matrix
        let r1 = DMatrix::from_row_slice(2, 1, &[-0.9173484657213145, -0.3980851572700883]);
        let p = eye::<f64>(2) - &r1 * r1.transpose();
        let (u, s, v) = svd(&p);
        let rec = DMatrix::from_fn(2, 2, |i, j| u[(i, j)] * s[j]) * v.transpose();
        assert!(fro(&(rec - &p)) < 1e-14);
        let c = orth_complement(&r1);
        assert!(fro(&(r1.transpose() * c)) < 1e-14);
    }

    #[test]
    fn jacobi_paths_agree() {
        let m = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64).sin());
        let (u, s, v) = jacobi_svd(&m);
        let rec = DMatrix::from_fn(5, 3, |i, j| u[(i, j)] * s[j]) * v.transpose();
        assert!(fro(&(rec - &m)) < 1e-13);
        assert!(fro(&(u.transpose() * &u - eye::<f64>(3))) < 1e-13);
        let x = &m.transpose() * &m - eye::<f64>(3);
        let (vals, vecs) = jacobi_eigen(&x);
        let rec = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals)) * vecs.transpose();
        assert!(fro(&(rec - &x)) < 1e-13);
    }
}
