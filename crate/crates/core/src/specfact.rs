//! Spectral factorization of matrix pencils.
//!
//! Splits `lambda E - A` into two decoupled blocks, either finite versus
//! infinite eigenvalues or open left versus open right half-plane, and
//! derives the spectral projectors and the slow/fast (or stable/anti-stable)
//! subsystems from the split.
//!
//! The split is assembled from two orthogonal upper block triangularizations:
//! with `Q = [Q1, Q2]`, `Z = [Z1, Z2]` putting the selected eigenvalues first
//! and `U = [U1, U2]`, `V = [V1, V2]` putting them last, the pair
//! `X = [U2, Q2]`, `Y = [Z1, V1]` makes `X^T E Y` and `X^T A Y` block
//! diagonal. Only the four deflating subspaces enter, so the backend that
//! computes them is interchangeable:
//!
//! * finite/infinite: subspace iteration on `M = (mu E - A)^{-1} E` and
//!   `N = E (mu E - A)^{-1}`, whose nilpotent parts carry the infinite
//!   eigenvalues, so `range(M^nu)` is exactly the finite right deflating
//!   subspace after `nu` (the index) steps;
//! * half-plane: the generalized matrix sign function of the pencil, whose
//!   shifted kernels are the stable and anti-stable deflating subspaces.

use nalgebra::{Complex, DMatrix};

use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::{singular_threshold, DescriptorSystem};

/// Eigenvalue region carried by the leading block of a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    FiniteSpectrum,
    InfiniteSpectrum,
    OpenLeftHalfPlane,
    OpenRightHalfPlane,
}

/// Transformation pair block-diagonalizing a pencil: `X^T E Y` and
/// `X^T A Y` have diagonal blocks of sizes `n1` and `n - n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit<T: Scalar> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    pub n1: usize,
    pub region: Region,
    /// Off-diagonal Frobenius mass relative to `||E||_F + ||A||_F`.
    pub residual: T,
    /// Nilpotency index detected while splitting off the infinite part.
    pub index: Option<usize>,
}

impl<T: Scalar> SpectralSplit<T> {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    fn identity(n: usize, n1: usize, region: Region, index: Option<usize>) -> Self {
        Self { x: dense::eye(n), y: dense::eye(n), n1, region, residual: T::zero(), index }
    }

    /// Leading and trailing diagonal blocks of `X^T M Y`.
    pub fn blocks(&self, m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let t = self.x.transpose() * m * &self.y;
        let n = t.nrows();
        let k = self.n1;
        (t.view((0, 0), (k, k)).into_owned(), t.view((k, k), (n - k, n - k)).into_owned())
    }
}

/// Left and right spectral projectors onto the deflating subspaces of the
/// finite eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair<T: Scalar> {
    pub left: DMatrix<T>,
    pub right: DMatrix<T>,
}

impl<T: Scalar> ProjectorPair<T> {
    /// Complementary projectors `(I - P_left, I - P_right)` onto the
    /// infinite deflating subspaces.
    pub fn complement(&self) -> Self {
        let n = self.left.nrows();
        Self { left: dense::eye::<T>(n) - &self.left, right: dense::eye::<T>(n) - &self.right }
    }

    /// `max(||P^2 - P|| / ||P||)` over both projectors.
    pub fn idempotency_residual(&self) -> T {
        let r = |p: &DMatrix<T>| {
            let np = dense::fro(p);
            if np == T::zero() {
                T::zero()
            } else {
                dense::fro(&(p * p - p)) / np
            }
        };
        r(&self.left).max(r(&self.right))
    }

    /// `max(||E P_r - P_l E|| / ||E||, ||A P_r - P_l A|| / ||A||)`.
    pub fn commutation_residual(&self, e: &DMatrix<T>, a: &DMatrix<T>) -> T {
        let r = |m: &DMatrix<T>| {
            let nm = dense::fro(m);
            if nm == T::zero() {
                T::zero()
            } else {
                dense::fro(&(m * &self.right - &self.left * m)) / nm
            }
        };
        r(e).max(r(a))
    }
}

/// Tunables of the splitting backends.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOptions<T: Scalar> {
    /// Relative singular-value cutoff for rank decisions in the subspace
    /// iteration (relative to the spectral norm of the iterated matrix).
    pub rank_rtol: T,
    /// Real shift `mu` for `mu E - A`; chosen as `||A|| / ||E||` when `None`.
    pub shift: Option<T>,
    /// Stopping tolerance of the sign iteration.
    pub sign_tol: T,
    pub sign_max_iter: usize,
    /// Largest accepted relative off-diagonal residual of a split.
    pub max_residual: T,
}

impl<T: Scalar> Default for SplitOptions<T> {
    fn default() -> Self {
        Self {
            rank_rtol: T::eps().sqrt(),
            shift: None,
            sign_tol: T::eps().sqrt(),
            sign_max_iter: 100,
            max_residual: T::lit(1e-6),
        }
    }
}

/// Matrix sign function by the determinant-scaled Newton iteration
/// `S <- (c S + S^{-1} / c) / 2`, `c = |det S|^{-1/n}`.
pub fn matrix_sign<T: Scalar>(a: &DMatrix<T>, max_iter: usize, tol: T) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("matrix_sign needs a square matrix".into()));
    }
    let n = a.nrows();
    let s = pencil_sign(&dense::eye(n), a, max_iter, tol)?;
    let res = dense::fro(&(&s * &s - dense::eye::<T>(n)));
    if res > T::lit(10.0) * T::from_count(n) * tol {
        return Err(Error::NoConvergence(format!("||S^2 - I|| = {:.3e} after sign iteration", res.as_f64())));
    }
    Ok(s)
}

/// Generalized sign iteration for `lambda E - A` with invertible `E`;
/// returns `E sign(E^{-1} A)` without forming `E^{-1}`.
pub(crate) fn pencil_sign<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, max_iter: usize, tol: T) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(dense::zeros(0, 0));
    }
    let nt = T::from_count(n);
    let log_det_e = dense::log_abs_det(e);
    let mut z = a.clone();
    let mut scale = true;
    for _ in 0..max_iter {
        let zinv = match dense::inverse(&z) {
            Some(v) if v.iter().all(|x| x.is_finite()) => v,
            _ => return Err(Error::NoConvergence("sign iterate became singular".into())),
        };
        let c = if scale { ((log_det_e - dense::log_abs_det(&z)) / nt).exp() } else { T::one() };
        let c = if c.is_finite() && c > T::zero() { c } else { T::one() };
        let next = (&z * c + e * zinv * e * (T::one() / c)) * T::lit(0.5);
        let diff = dense::fro(&(&next - &z));
        let size = dense::fro(&z);
        z = next;
        if diff <= tol * size {
            return Ok(z);
        }
        if diff < T::lit(1e-2) * size {
            scale = false;
        }
    }
    Err(Error::NoConvergence(format!("sign iteration did not converge in {max_iter} steps")))
}

/// Splits `lambda E - A` so that the leading block carries exactly the
/// eigenvalues in `region`.
pub fn split_pencil<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, region: Region) -> Result<SpectralSplit<T>> {
    split_pencil_with(e, a, region, &SplitOptions::default())
}

pub fn split_pencil_with<T: Scalar>(
    e: &DMatrix<T>,
    a: &DMatrix<T>,
    region: Region,
    opts: &SplitOptions<T>,
) -> Result<SpectralSplit<T>> {
    let n = a.nrows();
    if !a.is_square() || e.shape() != (n, n) {
        return Err(Error::DimensionMismatch("pencil matrices must be square of equal size".into()));
    }
    let split = match region {
        Region::FiniteSpectrum => finite_split(e, a, opts)?,
        Region::InfiniteSpectrum => {
            let f = finite_split(e, a, opts)?;
            swap_blocks(f, Region::InfiniteSpectrum)
        }
        Region::OpenLeftHalfPlane | Region::OpenRightHalfPlane => {
            if dense::equilibrated_rcond(e) > singular_threshold::<T>(n) {
                half_plane_split(e, a, region, opts)?
            } else {
                // peel off the infinite part first; it belongs to neither half-plane
                let f = finite_split(e, a, opts)?;
                let (ef, _) = f.blocks(e);
                let (af, _) = f.blocks(a);
                let h = half_plane_split(&ef, &af, region, opts)?;
                let ninf = n - f.n1;
                let x = &f.x * dense::block_diag(&h.x, &dense::eye(ninf));
                let y = &f.y * dense::block_diag(&h.y, &dense::eye(ninf));
                SpectralSplit { x, y, n1: h.n1, region, residual: T::zero(), index: f.index }
            }
        }
    };
    finish(e, a, split, opts)
}

fn swap_blocks<T: Scalar>(s: SpectralSplit<T>, region: Region) -> SpectralSplit<T> {
    let n = s.n();
    let k = s.n1;
    let perm = |m: &DMatrix<T>| dense::hstack(&m.columns(k, n - k).into_owned(), &m.columns(0, k).into_owned());
    SpectralSplit { x: perm(&s.x), y: perm(&s.y), n1: n - k, region, residual: s.residual, index: s.index }
}

fn offdiag_residual<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, s: &SpectralSplit<T>) -> T {
    let n = s.n();
    let k = s.n1;
    let off = |m: &DMatrix<T>| {
        let t = s.x.transpose() * m * &s.y;
        dense::fro(&t.view((0, k), (k, n - k)).into_owned()) + dense::fro(&t.view((k, 0), (n - k, k)).into_owned())
    };
    let scale = dense::fro(e) + dense::fro(a);
    if scale == T::zero() {
        T::zero()
    } else {
        (off(e) + off(a)) / scale
    }
}

fn finish<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, mut s: SpectralSplit<T>, opts: &SplitOptions<T>) -> Result<SpectralSplit<T>> {
    s.residual = offdiag_residual(e, a, &s);
    // also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(s.residual <= opts.max_residual) {
        return Err(Error::NoConvergence(format!(
            "block diagonalization residual {:.3e} exceeds {:.3e}",
            s.residual.as_f64(),
            opts.max_residual.as_f64()
        )));
    }
    Ok(s)
}

/// Orthonormal basis of `range(M^k)` for `k` large enough that the nilpotent
/// part is annihilated. Returns the basis and the number of rank-dropping steps.
fn stable_range<T: Scalar>(m: &DMatrix<T>, rtol: T) -> (DMatrix<T>, usize) {
    let n = m.nrows();
    let tol = rtol * dense::norm2(m);
    let settle = T::lit(10.0) * T::from_count(n) * T::eps();
    let mut v = dense::eye::<T>(n);
    let mut drops = 0;
    // the rank settles after nu steps, but nilpotent components left in the
    // basis by round-off can take a few more products to die out
    for _ in 0..2 * n + 10 {
        if v.ncols() == 0 {
            break;
        }
        let w = m * &v;
        let (u, s, _) = dense::svd(&w);
        let r = s.iter().filter(|&&x| x > tol).count();
        let next = u.columns(0, r).into_owned();
        if r < v.ncols() {
            drops += 1;
            v = next;
            continue;
        }
        let moved = dense::fro(&(&next - &v * (v.transpose() * &next)));
        v = next;
        if moved <= settle {
            break;
        }
    }
    (v, drops)
}

/// Real shift `mu` with `mu E - A` well conditioned.
fn pick_shift<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, opts: &SplitOptions<T>) -> Result<T> {
    let n = a.nrows();
    let ne = dense::fro(e);
    let na = dense::fro(a);
    let base = match opts.shift {
        Some(mu) => mu,
        None if ne > T::zero() && na > T::zero() => na / ne,
        None => T::one(),
    };
    let threshold = singular_threshold::<T>(n);
    for factor in [1.0, 1.618, 0.618, 2.75, 0.37, -1.0, 3.3, -2.5] {
        let mu = base * T::lit(factor);
        if dense::equilibrated_rcond(&(e * mu - a)) > threshold {
            return Ok(mu);
        }
    }
    Err(Error::SingularSystem("no regular shift found; the pencil appears singular".into()))
}

fn finite_split<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, opts: &SplitOptions<T>) -> Result<SpectralSplit<T>> {
    let b = finite_bases(e, a, opts)?;
    let n = a.nrows();
    let nf = b.z1.ncols();
    if nf == n {
        return Ok(SpectralSplit::identity(n, n, Region::FiniteSpectrum, Some(0)));
    }
    if nf == 0 {
        return Ok(SpectralSplit::identity(n, 0, Region::FiniteSpectrum, Some(b.index)));
    }
    let x = dense::hstack(&b.u2, &b.q2);
    let y = dense::hstack(&b.z1, &b.v1);
    Ok(SpectralSplit { x, y, n1: nf, region: Region::FiniteSpectrum, residual: T::zero(), index: Some(b.index) })
}

/// Orthonormal bases of the finite/infinite deflating subspaces.
struct FiniteBases<T: Scalar> {
    /// right finite
    z1: DMatrix<T>,
    /// right infinite
    v1: DMatrix<T>,
    /// left finite
    q1: DMatrix<T>,
    /// complement of the left finite subspace
    q2: DMatrix<T>,
    /// complement of the left infinite subspace
    u2: DMatrix<T>,
    index: usize,
}

fn finite_bases<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, opts: &SplitOptions<T>) -> Result<FiniteBases<T>> {
    let n = a.nrows();
    if n == 0 {
        let z = dense::zeros(0, 0);
        return Ok(FiniteBases { z1: z.clone(), v1: z.clone(), q1: z.clone(), q2: z.clone(), u2: z, index: 0 });
    }
    let mu = pick_shift(e, a, opts)?;
    let k = e * mu - a;
    let lu = k.clone().lu();
    let m = lu.solve(e).ok_or_else(|| Error::SingularSystem("shifted pencil is singular".into()))?;
    let kt_lu = k.transpose().lu();
    // N = E K^{-1}, so N^T = K^{-T} E^T
    let nt = kt_lu
        .solve(&e.transpose())
        .ok_or_else(|| Error::SingularSystem("shifted pencil is singular".into()))?;

    let (z1, drops_m) = stable_range(&m, opts.rank_rtol);
    let (r_mt, drops_mt) = stable_range(&m.transpose(), opts.rank_rtol);
    let (q1, drops_n) = stable_range(&nt.transpose(), opts.rank_rtol);
    let (u2, drops_nt) = stable_range(&nt, opts.rank_rtol);
    let nf = z1.ncols();
    if r_mt.ncols() != nf || q1.ncols() != nf || u2.ncols() != nf {
        return Err(Error::NoConvergence(format!(
            "inconsistent finite subspace dimensions ({}, {}, {}, {})",
            nf,
            r_mt.ncols(),
            q1.ncols(),
            u2.ncols()
        )));
    }
    let index = drops_m.max(drops_mt).max(drops_n).max(drops_nt);
    let v1 = dense::orth_complement(&r_mt);
    let q2 = dense::orth_complement(&q1);
    Ok(FiniteBases { z1, v1, q1, q2, u2, index })
}

fn half_plane_split<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, region: Region, opts: &SplitOptions<T>) -> Result<SpectralSplit<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(SpectralSplit::identity(0, 0, region, None));
    }
    let z = match pencil_sign(e, a, opts.sign_max_iter, opts.sign_tol) {
        Ok(z) => z,
        Err(Error::NoConvergence(_)) => return Err(Error::RegionBoundaryEigenvalue),
        Err(err) => return Err(err),
    };
    // trace(E^{-1} Z) = #anti-stable - #stable
    let s = dense::solve(e, &z).ok_or_else(|| Error::SingularSystem("E is singular".into()))?;
    let tr = s.trace().as_f64();
    let nf = n as f64;
    let stable = (nf - tr) / 2.0;
    let n_stable = stable.round();
    if (stable - n_stable).abs() > 0.1 || n_stable < 0.0 || n_stable > nf {
        return Err(Error::RegionBoundaryEigenvalue);
    }
    let n_stable = n_stable as usize;
    let n_anti = n - n_stable;
    let n1 = if region == Region::OpenLeftHalfPlane { n_stable } else { n_anti };
    if n1 == 0 || n1 == n {
        return Ok(SpectralSplit::identity(n, n1, region, None));
    }
    let plus = &z + e;
    let minus = &z - e;
    let v_stable = dense::null_space_dim(&plus, n_stable);
    let v_anti = dense::null_space_dim(&minus, n_anti);
    let w_stable_perp = dense::null_space_dim(&minus.transpose(), n_anti);
    let w_anti_perp = dense::null_space_dim(&plus.transpose(), n_stable);
    let (x, y) = if region == Region::OpenLeftHalfPlane {
        (dense::hstack(&w_anti_perp, &w_stable_perp), dense::hstack(&v_stable, &v_anti))
    } else {
        (dense::hstack(&w_stable_perp, &w_anti_perp), dense::hstack(&v_anti, &v_stable))
    };
    let split = SpectralSplit { x, y, n1, region, residual: T::zero(), index: None };
    check_half_plane_blocks(e, a, &split)?;
    Ok(split)
}

fn check_half_plane_blocks<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, split: &SpectralSplit<T>) -> Result<()> {
    let (e1, e2) = split.blocks(e);
    let (a1, a2) = split.blocks(a);
    let lead_negative = split.region == Region::OpenLeftHalfPlane;
    for (eb, ab, negative) in [(e1, a1, lead_negative), (e2, a2, !lead_negative)] {
        for lam in pencil_eigenvalues_regular(&eb, &ab)? {
            if (lam.re < T::zero()) != negative || lam.re == T::zero() {
                return Err(Error::RegionBoundaryEigenvalue);
            }
        }
    }
    Ok(())
}

/// Eigenvalues of `lambda E - A` for invertible `E`.
fn pencil_eigenvalues_regular<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let m = dense::solve(e, a).ok_or_else(|| Error::SingularSystem("E is singular".into()))?;
    Ok(dense::eigenvalues(&m))
}

/// Finite eigenvalues of a regular pencil.
pub fn finite_eigenvalues<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let split = split_pencil(e, a, Region::FiniteSpectrum)?;
    let (ef, _) = split.blocks(e);
    let (af, _) = split.blocks(a);
    pencil_eigenvalues_regular(&ef, &af)
}

/// Solves `E_f Y - Z E_inf = -E_u`, `A_f Y - Z A_inf = -A_u`.
pub fn solve_coupled_sylvester<T: Scalar>(
    ef: &DMatrix<T>,
    einf: &DMatrix<T>,
    af: &DMatrix<T>,
    ainf: &DMatrix<T>,
    eu: &DMatrix<T>,
    au: &DMatrix<T>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let nf = ef.nrows();
    let ni = einf.nrows();
    if eu.shape() != (nf, ni) || au.shape() != (nf, ni) || af.shape() != (nf, nf) || ainf.shape() != (ni, ni) {
        return Err(Error::DimensionMismatch("coupled Sylvester blocks are inconsistent".into()));
    }
    if nf == 0 || ni == 0 {
        return Ok((dense::zeros(nf, ni), dense::zeros(nf, ni)));
    }
    let scale = dense::fro(eu) + dense::fro(au);
    if scale == T::zero() {
        return Ok((dense::zeros(nf, ni), dense::zeros(nf, ni)));
    }
    if let Some(sol) = coupled_sylvester_stein(ef, einf, af, ainf, eu, au) {
        let (y, z) = &sol;
        let res = dense::fro(&(ef * y - z * einf + eu)) + dense::fro(&(af * y - z * ainf + au));
        if res <= T::lit(1e-10) * scale {
            return Ok(sol);
        }
    }
    coupled_sylvester_kron(ef, einf, af, ainf, eu, au)
}

/// Eliminates `Z` through `A_inf^{-1}` and sums the Stein series
/// `Y = sum_j K^j R N^j`, which is finite when `N = A_inf^{-1} E_inf` is
/// nilpotent.
fn coupled_sylvester_stein<T: Scalar>(
    ef: &DMatrix<T>,
    einf: &DMatrix<T>,
    af: &DMatrix<T>,
    ainf: &DMatrix<T>,
    eu: &DMatrix<T>,
    au: &DMatrix<T>,
) -> Option<(DMatrix<T>, DMatrix<T>)> {
    let ni = einf.nrows();
    let threshold = T::lit(1e3) * T::eps();
    if dense::pivot_rcond(ef) < threshold || dense::pivot_rcond(ainf) < threshold {
        return None;
    }
    let nil = dense::solve(ainf, einf)?;
    let k = dense::solve(ef, af)?;
    let r = dense::solve(ef, &(au * &nil - eu))?;
    let mut y = r.clone();
    let mut term = r;
    for _ in 0..=ni {
        term = &k * term * &nil;
        let t = dense::fro(&term);
        y += &term;
        if t <= T::eps() * dense::fro(&y) {
            let ainv_t = dense::solve_right(ainf, &(af * &y + au))?;
            return Some((y, ainv_t));
        }
    }
    None
}

const KRON_LIMIT: usize = 4096;

fn coupled_sylvester_kron<T: Scalar>(
    ef: &DMatrix<T>,
    einf: &DMatrix<T>,
    af: &DMatrix<T>,
    ainf: &DMatrix<T>,
    eu: &DMatrix<T>,
    au: &DMatrix<T>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let nf = ef.nrows();
    let ni = einf.nrows();
    let block = nf * ni;
    if 2 * block > KRON_LIMIT {
        return Err(Error::SingularSystem(format!(
            "coupled Sylvester system with {} unknowns is not nilpotent-solvable and too large for a dense solve",
            2 * block
        )));
    }
    // column-major vec: vec(F Y) = (I (x) F) vec Y, vec(Z G) = (G^T (x) I) vec Z
    let mut k = dense::zeros::<T>(2 * block, 2 * block);
    for (row_off, f, g) in [(0, ef, einf), (block, af, ainf)] {
        for j in 0..ni {
            for i in 0..nf {
                let row = row_off + i + nf * j;
                for c in 0..nf {
                    k[(row, c + nf * j)] += f[(i, c)];
                }
                for d in 0..ni {
                    k[(row, block + i + nf * d)] -= g[(d, j)];
                }
            }
        }
    }
    let mut rhs = dense::zeros::<T>(2 * block, 1);
    for j in 0..ni {
        for i in 0..nf {
            rhs[(i + nf * j, 0)] = -eu[(i, j)];
            rhs[(block + i + nf * j, 0)] = -au[(i, j)];
        }
    }
    if dense::pivot_rcond(&k) < T::lit(1e3) * T::eps() {
        return Err(Error::SingularSystem("finite and infinite spectra are not disjoint".into()));
    }
    let sol = dense::solve(&k, &rhs).ok_or_else(|| Error::SingularSystem("finite and infinite spectra are not disjoint".into()))?;
    let y = DMatrix::from_fn(nf, ni, |i, j| sol[(i + nf * j, 0)]);
    let z = DMatrix::from_fn(nf, ni, |i, j| sol[(block + i + nf * j, 0)]);
    Ok((y, z))
}

/// How the block-diagonalizing transformation is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    /// Two orthogonal triangularizations combined directly.
    #[default]
    Projective,
    /// One orthogonal triangularization plus the coupled Sylvester equations.
    CoupledSylvester,
}

/// Slow/fast decomposition of a descriptor system.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoupled<T: Scalar> {
    /// `(E_f, A_f, B_f, C_f, 0)` with invertible `E_f`.
    pub slow: DescriptorSystem<T>,
    /// `(E_inf, A_inf, B_inf, C_inf, D)` with invertible `A_inf`.
    pub fast: DescriptorSystem<T>,
    pub split: SpectralSplit<T>,
}

pub fn block_diagonalize<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<Decoupled<T>> {
    block_diagonalize_with(sys, Assembly::Projective, &SplitOptions::default())
}

pub fn block_diagonalize_with<T: Scalar>(
    sys: &DescriptorSystem<T>,
    assembly: Assembly,
    opts: &SplitOptions<T>,
) -> Result<Decoupled<T>> {
    let split = match assembly {
        Assembly::Projective => split_pencil_with(&sys.e, &sys.a, Region::FiniteSpectrum, opts)?,
        Assembly::CoupledSylvester => {
            let s = sylvester_split(&sys.e, &sys.a, opts)?;
            finish(&sys.e, &sys.a, s, opts)?
        }
    };
    let (slow, fast) = decouple(sys, &split, true)?;
    Ok(Decoupled { slow, fast, split })
}

fn sylvester_split<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, opts: &SplitOptions<T>) -> Result<SpectralSplit<T>> {
    let n = a.nrows();
    let b = finite_bases(e, a, opts)?;
    let nf = b.z1.ncols();
    if nf == n || nf == 0 {
        return Ok(SpectralSplit::identity(n, nf, Region::FiniteSpectrum, Some(b.index)));
    }
    let ni = n - nf;
    let q = dense::hstack(&b.q1, &b.q2);
    let z = dense::hstack(&b.z1, &dense::orth_complement(&b.z1));
    let te = q.transpose() * e * &z;
    let ta = q.transpose() * a * &z;
    let blk = |m: &DMatrix<T>, r: usize, c: usize, h: usize, w: usize| m.view((r, c), (h, w)).into_owned();
    let (ys, zs) = solve_coupled_sylvester(
        &blk(&te, 0, 0, nf, nf),
        &blk(&te, nf, nf, ni, ni),
        &blk(&ta, 0, 0, nf, nf),
        &blk(&ta, nf, nf, ni, ni),
        &blk(&te, 0, nf, nf, ni),
        &blk(&ta, 0, nf, nf, ni),
    )?;
    let mut wl = dense::eye::<T>(n);
    wl.view_mut((nf, 0), (ni, nf)).copy_from(&(-zs.transpose()));
    let mut tr = dense::eye::<T>(n);
    tr.view_mut((0, nf), (nf, ni)).copy_from(&ys);
    Ok(SpectralSplit { x: q * wl, y: z * tr, n1: nf, region: Region::FiniteSpectrum, residual: T::zero(), index: Some(b.index) })
}

/// Applies a split to the full realization. The feed-through goes to the
/// trailing block when `d_trailing` is set, to the leading block otherwise.
fn decouple<T: Scalar>(sys: &DescriptorSystem<T>, split: &SpectralSplit<T>, d_trailing: bool) -> Result<(DescriptorSystem<T>, DescriptorSystem<T>)> {
    let n = sys.n();
    let k = split.n1;
    let (e1, e2) = split.blocks(&sys.e);
    let (a1, a2) = split.blocks(&sys.a);
    let xb = split.x.transpose() * &sys.b;
    let cy = &sys.c * &split.y;
    let b1 = xb.rows(0, k).into_owned();
    let b2 = xb.rows(k, n - k).into_owned();
    let c1 = cy.columns(0, k).into_owned();
    let c2 = cy.columns(k, n - k).into_owned();
    let zero_d = DMatrix::zeros(sys.p(), sys.m());
    let (d1, d2) = if d_trailing { (zero_d, sys.d.clone()) } else { (sys.d.clone(), zero_d) };
    Ok((DescriptorSystem::new(e1, a1, b1, c1, d1)?, DescriptorSystem::new(e2, a2, b2, c2, d2)?))
}

/// Stable/anti-stable decomposition `G = G_stable + G_anti` of a system with
/// invertible `E`. The feed-through is assigned to the stable part.
pub fn additive_decomposition<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<(DescriptorSystem<T>, DescriptorSystem<T>)> {
    let n = sys.n();
    if n > 0 && dense::equilibrated_rcond(&sys.e) <= singular_threshold::<T>(n) {
        return Err(Error::InvalidInput("additive decomposition needs an invertible E".into()));
    }
    let split = split_pencil(&sys.e, &sys.a, Region::OpenLeftHalfPlane)?;
    decouple(sys, &split, false)
}

/// `P_left = X^{-T} diag(I, 0) X^T`, `P_right = Y diag(I, 0) Y^{-1}`.
pub fn spectral_projectors<T: Scalar>(split: &SpectralSplit<T>) -> Result<ProjectorPair<T>> {
    if split.region != Region::FiniteSpectrum {
        return Err(Error::InvalidInput("spectral projectors need a finite/infinite split".into()));
    }
    let limit = 1.0 / T::eps().sqrt().as_f64();
    for m in [&split.x, &split.y] {
        let c = dense::cond2(m);
        if c > limit {
            return Err(Error::IllConditionedTransform(c));
        }
    }
    let n = split.n();
    let k = split.n1;
    let mut sel = dense::zeros::<T>(n, n);
    for i in 0..k {
        sel[(i, i)] = T::one();
    }
    let xinv = dense::inverse(&split.x).ok_or(Error::IllConditionedTransform(f64::INFINITY))?;
    let yinv = dense::inverse(&split.y).ok_or(Error::IllConditionedTransform(f64::INFINITY))?;
    let left = xinv.transpose() * &sel * split.x.transpose();
    let right = &split.y * sel * yinv;
    Ok(ProjectorPair { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn sign_of_diagonal() {
        let s = matrix_sign(&m(2, 2, &[-2.0, 0.0, 0.0, 3.0]), 100, 1e-8).unwrap();
        assert!(dense::fro(&(s - m(2, 2, &[-1.0, 0.0, 0.0, 1.0]))) < 1e-14);
    }

    #[test]
    fn sign_of_identity() {
        let s = matrix_sign(&dense::eye::<f64>(3), 100, 1e-8).unwrap();
        assert!(dense::fro(&(s - dense::eye(3))) < 1e-15);
    }

    #[test]
    fn sign_of_rotation_fails() {
        let r = matrix_sign(&m(2, 2, &[0.0, 1.0, -1.0, 0.0]), 100, 1e-8);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn finite_split_of_diagonal_pencil() {
        let e = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = m(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let s = split_pencil(&e, &a, Region::FiniteSpectrum).unwrap();
        assert_eq!(s.n1, 1);
        assert!(s.residual <= 1e-12);
        assert_eq!(s.index, Some(1));
    }

    #[test]
    fn half_plane_split_of_diagonal() {
        let e = dense::eye::<f64>(2);
        let a = m(2, 2, &[-3.0, 0.0, 0.0, 2.0]);
        let s = split_pencil(&e, &a, Region::OpenLeftHalfPlane).unwrap();
        assert_eq!(s.n1, 1);
        let (e1, _) = s.blocks(&e);
        let (a1, _) = s.blocks(&a);
        assert!(((a1[(0, 0)] / e1[(0, 0)]) + 3.0).abs() < 1e-12);
        let s = split_pencil(&e, &a, Region::OpenRightHalfPlane).unwrap();
        let (e1, _) = s.blocks(&e);
        let (a1, _) = s.blocks(&a);
        assert!(((a1[(0, 0)] / e1[(0, 0)]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_region_leads_with_infinite_block() {
        let e = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = m(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let s = split_pencil(&e, &a, Region::InfiniteSpectrum).unwrap();
        assert_eq!(s.n1, 1);
        let (e1, _) = s.blocks(&e);
        assert!(e1[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn coupled_sylvester_scalar() {
        let one = |v: f64| m(1, 1, &[v]);
        let (y, z) = solve_coupled_sylvester(&one(1.0), &one(0.0), &one(-1.0), &one(1.0), &one(2.0), &one(3.0)).unwrap();
        assert!((y[(0, 0)] + 2.0).abs() < 1e-14);
        assert!((z[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn coupled_sylvester_zero_rhs() {
        let (y, z) = solve_coupled_sylvester(
            &dense::eye::<f64>(2),
            &dense::zeros(1, 1),
            &(-dense::eye::<f64>(2)),
            &dense::eye(1),
            &dense::zeros(2, 1),
            &dense::zeros(2, 1),
        )
        .unwrap();
        assert_eq!(dense::fro(&y) + dense::fro(&z), 0.0);
    }

    #[test]
    fn coupled_sylvester_overlapping_spectra() {
        // both pencils have the eigenvalue 1
        let one = |v: f64| m(1, 1, &[v]);
        let r = solve_coupled_sylvester(&one(1.0), &one(1.0), &one(1.0), &one(1.0), &one(1.0), &one(0.0));
        assert!(matches!(r, Err(Error::SingularSystem(_))));
    }

    #[test]
    fn projectors_of_simple_pencils() {
        let e = dense::eye::<f64>(3);
        let a = -dense::eye::<f64>(3);
        let p = spectral_projectors(&split_pencil(&e, &a, Region::FiniteSpectrum).unwrap()).unwrap();
        assert!(dense::fro(&(&p.left - dense::eye(3))) < 1e-15);
        assert!(dense::fro(&(&p.right - dense::eye(3))) < 1e-15);

        let e = dense::zeros::<f64>(2, 2);
        let a = dense::eye::<f64>(2);
        let p = spectral_projectors(&split_pencil(&e, &a, Region::FiniteSpectrum).unwrap()).unwrap();
        assert_eq!(dense::fro(&p.left) + dense::fro(&p.right), 0.0);

        let e = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = m(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let p = spectral_projectors(&split_pencil(&e, &a, Region::FiniteSpectrum).unwrap()).unwrap();
        let expect = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(dense::fro(&(&p.left - &expect)) < 1e-14);
        assert!(dense::fro(&(&p.right - &expect)) < 1e-14);
    }

    #[test]
    fn projectors_need_finite_split() {
        let s = split_pencil(&dense::eye::<f64>(2), &m(2, 2, &[-1.0, 0.0, 0.0, 1.0]), Region::OpenLeftHalfPlane).unwrap();
        assert!(matches!(spectral_projectors(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn imaginary_axis_eigenvalue_is_rejected() {
        let r = split_pencil(&dense::eye::<f64>(2), &m(2, 2, &[0.0, 1.0, -1.0, 0.0]), Region::OpenLeftHalfPlane);
        assert_eq!(r, Err(Error::RegionBoundaryEigenvalue));
    }

    #[test]
    fn additive_decomposition_needs_invertible_e() {
        let sys = DescriptorSystem::<f64>::from_rows(1, 1, 1, &[0.0], &[1.0], &[1.0], &[1.0], &[0.0]).unwrap();
        assert!(matches!(additive_decomposition(&sys), Err(Error::InvalidInput(_))));
    }
}
