//! Dense generalized Lyapunov solvers and Gramian factors.

use nalgebra::DMatrix;

use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfact::{Decoupled, ProjectorPair, SpectralSplit};

/// Default cap on the index searched for by [`improper_factors`].
pub const NU_MAX: usize = 10;

/// Full-rank Gramian factors in the block-diagonal coordinates of `split`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianFactors<T: Scalar> {
    pub z_pc: DMatrix<T>,
    pub z_po: DMatrix<T>,
    pub z_ic: DMatrix<T>,
    pub z_io: DMatrix<T>,
    /// Nilpotency index of the fast block (0 when there is no fast block).
    pub index: usize,
    pub split: SpectralSplit<T>,
}

/// Proper and improper Gramian factors of a decoupled system.
pub fn gramian_factors<T: Scalar>(dec: &Decoupled<T>) -> Result<GramianFactors<T>> {
    let s = &dec.slow;
    let f = &dec.fast;
    let z_pc = solve_cont_lyap(&s.e, &s.a, &s.b)?;
    let z_po = solve_cont_lyap(&s.e.transpose(), &s.a.transpose(), &s.c.transpose())?;
    let (z_ic, z_io, terms) = improper_factors(&f.e, &f.a, &f.b, &f.c, None, NU_MAX)?;
    // the Krylov term count can undershoot when B or C miss the deepest chain
    let index = dec.split.index.unwrap_or(terms).max(terms);
    Ok(GramianFactors { z_pc, z_po, z_ic, z_io, index, split: dec.split.clone() })
}

/// Factor `Z` of the solution `X = Z Z^T` of `E X A^T + A X E^T + F F^T = 0`
/// for a c-stable pencil.
pub fn solve_cont_lyap<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, f: &DMatrix<T>) -> Result<DMatrix<T>> {
    let x = solve_cont_lyap_dense(e, a, &(f * f.transpose()))?;
    let n = x.nrows();
    Ok(full_rank(dense::sym_factor(&x, T::from_count(n) * T::eps())))
}

/// Symmetric solution of `E X A^T + A X E^T + Q = 0` by the sign-function
/// iteration, with one step of residual correction.
pub fn solve_cont_lyap_dense<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if e.shape() != (n, n) || a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch("Lyapunov operands have inconsistent sizes".into()));
    }
    if n == 0 {
        return Ok(dense::zeros(0, 0));
    }
    let nq = dense::fro(q);
    if nq == T::zero() {
        return Ok(dense::zeros(n, n));
    }
    let mut x = sign_lyap(e, a, q)?;
    let res = cont_residual(e, a, &x, q);
    if res > T::lit(1e-12) * nq {
        let r = dense::sym(&(e * &x * a.transpose() + a * &x * e.transpose() + q));
        x += sign_lyap(e, a, &r)?;
    }
    Ok(dense::sym(&x))
}

/// `||E X A^T + A X E^T + Q||_F`
pub fn cont_residual<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, x: &DMatrix<T>, q: &DMatrix<T>) -> T {
    dense::fro(&(e * x * a.transpose() + a * x * e.transpose() + q))
}

/// `||A X A^T - E X E^T - Q||_F`
pub fn disc_residual<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, x: &DMatrix<T>, q: &DMatrix<T>) -> T {
    dense::fro(&(a * x * a.transpose() - e * x * e.transpose() - q))
}

fn sign_lyap<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let nt = T::from_count(n);
    let tol = T::eps().sqrt();
    let log_det_e = dense::log_abs_det(e);
    if !log_det_e.is_finite() {
        return Err(Error::SingularSystem("E is singular".into()));
    }
    let mut ak = a.clone();
    let mut qk = dense::sym(q);
    let mut scale = true;
    let mut extra = 0;
    for _ in 0..100 {
        let ainv = match dense::inverse(&ak) {
            Some(v) if v.iter().all(|x| x.is_finite()) => v,
            _ => return Err(Error::NotStable),
        };
        let c = if scale { ((log_det_e - dense::log_abs_det(&ak)) / nt).exp() } else { T::one() };
        let c = if c.is_finite() && c > T::zero() { c } else { T::one() };
        let ea = e * ainv;
        let next_a = (&ak * c + &ea * e * (T::one() / c)) * T::lit(0.5);
        let next_q = dense::sym(&((&qk * c + &ea * &qk * ea.transpose() * (T::one() / c)) * T::lit(0.5)));
        let diff = dense::fro(&(&next_a - &ak));
        let size = dense::fro(&ak);
        ak = next_a;
        qk = next_q;
        if diff < T::lit(1e-2) * size {
            scale = false;
        }
        if diff <= tol * size {
            // quadratic convergence: one more step reaches working accuracy
            extra += 1;
            if extra > 1 {
                break;
            }
        }
    }
    if dense::fro(&(&ak + e)) > T::lit(1e3) * tol * dense::fro(e) {
        return Err(Error::NotStable);
    }
    let half = dense::solve(e, &qk).ok_or(Error::NotStable)?;
    let x = dense::solve_right(&e.transpose(), &half).ok_or(Error::NotStable)?;
    Ok(x * T::lit(0.5))
}

/// `E X A^T + A X E^T + Q = 0` for invertible `E` by Bartels-Stewart on
/// `E^{-1} A`. Needs no stability, only `lambda_i + lambda_j != 0`.
pub fn solve_cont_lyap_general<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(dense::zeros(0, 0));
    }
    let m = dense::solve(e, a).ok_or_else(|| Error::SingularSystem("E is singular".into()))?;
    let eq = dense::solve(e, q).ok_or_else(|| Error::SingularSystem("E is singular".into()))?;
    let qh = dense::solve_right(&e.transpose(), &eq).ok_or_else(|| Error::SingularSystem("E is singular".into()))?;
    let x = dense::solve_sylvester(&m, &m.transpose(), &(-qh))?;
    Ok(dense::sym(&x))
}

/// Smith sum for `A X A^T - E X E^T - F F^T = 0`. Returns the solution and
/// the number of nonzero terms, which is the index when `A^{-1} E` is
/// nilpotent.
pub fn solve_disc_lyap<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, f: &DMatrix<T>) -> Result<(DMatrix<T>, usize)> {
    let n = a.nrows();
    if e.shape() != (n, n) || a.ncols() != n || f.nrows() != n {
        return Err(Error::DimensionMismatch("Lyapunov operands have inconsistent sizes".into()));
    }
    if n == 0 {
        return Ok((dense::zeros(0, 0), 0));
    }
    let lu = a.clone().lu();
    let nil = lu.solve(e).ok_or(Error::SingularA)?;
    let g = lu.solve(f).ok_or(Error::SingularA)?;
    let g_norm = dense::fro(&g);
    let mut x = dense::zeros::<T>(n, n);
    if g_norm == T::zero() {
        return Ok((x, 0));
    }
    let rho = dense::eigenvalues(&nil).iter().fold(T::zero(), |acc, z| acc.max(nalgebra::ComplexField::modulus(*z)));
    if rho >= T::one() {
        return Err(Error::NotConvergent);
    }
    let cutoff = T::from_count(n) * T::eps() * g_norm;
    let mut term = g;
    for terms in 0..10_000 {
        if dense::fro(&term) <= cutoff {
            return Ok((dense::sym(&x), terms));
        }
        x += &term * term.transpose();
        term = &nil * term;
    }
    Err(Error::NotConvergent)
}

/// Explicit improper Gramian factors
/// `Z_ic = [Q_r A^{-1} B, (A^{-1} E) Q_r A^{-1} B, ...]` and the dual `Z_io`.
/// Without projectors `Q_r = Q_l = I`, which is exact on a fast subsystem.
/// Returns `(Z_ic, Z_io, nu)`.
pub fn improper_factors<T: Scalar>(
    e: &DMatrix<T>,
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
    projectors: Option<&ProjectorPair<T>>,
    nu_max: usize,
) -> Result<(DMatrix<T>, DMatrix<T>, usize)> {
    let n = a.nrows();
    if e.shape() != (n, n) || a.ncols() != n || b.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch("improper factor operands have inconsistent sizes".into()));
    }
    if n == 0 {
        return Ok((dense::zeros(0, b.ncols()), dense::zeros(0, c.nrows()), 0));
    }
    if dense::pivot_rcond(a) <= T::from_count(n) * T::eps() {
        return Err(Error::SingularA);
    }
    let lu = a.clone().lu();
    let lut = a.transpose().lu();
    let nil = lu.solve(e).ok_or(Error::SingularA)?;
    let nil_t = lut.solve(&e.transpose()).ok_or(Error::SingularA)?;
    let ainv_b = lu.solve(b).ok_or(Error::SingularA)?;
    let ainv_ct = lut.solve(&c.transpose()).ok_or(Error::SingularA)?;
    let (qr, qlt) = match projectors {
        Some(p) => {
            let q = p.complement();
            (q.right, q.left.transpose())
        }
        None => (dense::eye(n), dense::eye(n)),
    };
    let (z_ic, nu_c) = krylov_factor(&nil, &(qr * &ainv_b), dense::fro(&ainv_b), nu_max)?;
    let (z_io, nu_o) = krylov_factor(&nil_t, &(qlt * &ainv_ct), dense::fro(&ainv_ct), nu_max)?;
    Ok((z_ic, z_io, nu_c.max(nu_o)))
}

fn krylov_factor<T: Scalar>(nil: &DMatrix<T>, start: &DMatrix<T>, scale: T, nu_max: usize) -> Result<(DMatrix<T>, usize)> {
    let n = nil.nrows();
    let cutoff = T::from_count(n) * T::eps() * scale;
    let mut blocks: Vec<DMatrix<T>> = Vec::new();
    let mut term = start.clone();
    loop {
        if dense::fro(&term) <= cutoff {
            break;
        }
        if blocks.len() == nu_max {
            return Err(Error::IndexExceeded(nu_max));
        }
        let next = nil * &term;
        blocks.push(term);
        term = next;
    }
    let nu = blocks.len();
    let mut z = dense::zeros::<T>(n, 0);
    for blk in &blocks {
        z = dense::hstack(&z, blk);
    }
    Ok((full_rank(z), nu))
}

/// Compresses `Z` to full column rank keeping `Z Z^T` up to `n eps` relative.
fn full_rank<T: Scalar>(z: DMatrix<T>) -> DMatrix<T> {
    if z.ncols() == 0 {
        return z;
    }
    let (u, s, _) = dense::svd(&z);
    let smax = s.first().copied().unwrap_or_else(T::zero);
    let cutoff = T::from_count(z.nrows().max(z.ncols())) * T::eps() * smax;
    let r = s.iter().filter(|&&x| x > cutoff).count();
    DMatrix::from_fn(z.nrows(), r, |i, j| u[(i, j)] * s[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_cont() {
        let z = solve_cont_lyap(&m(1, 1, &[1.0]), &m(1, 1, &[-1.0]), &m(1, 1, &[2f64.sqrt()])).unwrap();
        assert!(((z[(0, 0)] * z[(0, 0)]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_empty_factor() {
        let z = solve_cont_lyap(&dense::eye::<f64>(2), &(-dense::eye::<f64>(2)), &dense::zeros(2, 1)).unwrap();
        assert_eq!(z.ncols(), 0);
    }

    #[test]
    fn diagonal_cont() {
        let a = [0.3, 2.0, 7.5, 40.0];
        let am = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, a.iter().map(|x| -x)));
        let mut f = dense::zeros::<f64>(4, 1);
        f[(0, 0)] = 1.0;
        let x = solve_cont_lyap_dense(&dense::eye(4), &am, &(&f * f.transpose())).unwrap();
        let mut expect = dense::zeros::<f64>(4, 4);
        expect[(0, 0)] = 1.0 / (2.0 * a[0]);
        assert!(dense::fro(&(x - expect)) < 1e-14);
    }

    #[test]
    fn unstable_pencil_rejected() {
        let r = solve_cont_lyap(&m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]));
        assert_eq!(r, Err(Error::NotStable));
        let r = solve_cont_lyap(&dense::eye::<f64>(2), &m(2, 2, &[0.0, 1.0, -1.0, 0.0]), &dense::eye(2));
        assert_eq!(r, Err(Error::NotStable));
    }

    #[test]
    fn general_solver_matches_sign_solver() {
        let e = m(3, 3, &[2.0, 0.1, 0.0, 0.0, 1.0, 0.3, 0.2, 0.0, 1.5]);
        let a = m(3, 3, &[-3.0, 1.0, 0.0, 0.5, -2.0, 0.4, 0.0, 0.3, -1.0]);
        let f = m(3, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0]);
        let q = &f * f.transpose();
        let x1 = solve_cont_lyap_dense(&e, &a, &q).unwrap();
        let x2 = solve_cont_lyap_general(&e, &a, &q).unwrap();
        assert!(dense::fro(&(&x1 - &x2)) <= 1e-12 * dense::fro(&x2));
        assert!(cont_residual(&e, &a, &x1, &q) <= 1e-12 * dense::fro(&q));
    }

    #[test]
    fn disc_examples() {
        let (x, k) = solve_disc_lyap(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
        assert_eq!((x[(0, 0)], k), (1.0, 1));
        let (x, k) = solve_disc_lyap(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0])).unwrap();
        assert_eq!((x[(0, 0)], k), (0.0, 0));
        let e = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = m(2, 1, &[0.0, 1.0]);
        let (x, k) = solve_disc_lyap(&e, &dense::eye(2), &f).unwrap();
        assert_eq!(k, 2);
        assert_eq!(x, dense::eye(2));
        assert_eq!(disc_residual(&e, &dense::eye(2), &x, &(&f * f.transpose())), 0.0);
    }

    #[test]
    fn disc_divergent() {
        let r = solve_disc_lyap(&m(1, 1, &[2.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]));
        assert_eq!(r, Err(Error::NotConvergent));
    }

    #[test]
    fn improper_examples() {
        let (zic, zio, nu) = improper_factors(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[2.0]), &m(1, 1, &[1.0]), None, NU_MAX).unwrap();
        assert_eq!(nu, 1);
        assert!(((&zic * zic.transpose())[(0, 0)] - 4.0).abs() < 1e-14);
        assert_eq!(zio.ncols(), 1);

        // E = I: Q_r = 0
        let p = ProjectorPair { left: dense::eye::<f64>(2), right: dense::eye::<f64>(2) };
        let (zic, _, _) = improper_factors(&dense::eye(2), &(-dense::eye::<f64>(2)), &m(2, 1, &[1.0, 1.0]), &m(1, 2, &[1.0, 0.0]), Some(&p), NU_MAX).unwrap();
        assert_eq!(zic.ncols(), 0);
    }

    #[test]
    fn improper_index_cap() {
        // a 3-block Jordan chain needs nu = 3
        let e = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = m(3, 1, &[0.0, 0.0, 1.0]);
        let c = m(1, 3, &[1.0, 0.0, 0.0]);
        let (_, _, nu) = improper_factors(&e, &dense::eye(3), &b, &c, None, NU_MAX).unwrap();
        assert_eq!(nu, 3);
        assert_eq!(improper_factors(&e, &dense::eye(3), &b, &c, None, 2), Err(Error::IndexExceeded(2)));
    }

    #[test]
    fn singular_a() {
        let r = improper_factors(&m(1, 1, &[0.0]), &m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), None, NU_MAX);
        assert_eq!(r, Err(Error::SingularA));
    }
}
