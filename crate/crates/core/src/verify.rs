//! Executable checks: Hankel semi-norm, polynomial part, all-pass
//! certificates and sampled frequency-domain bounds.

use nalgebra::{Complex, DMatrix};

use crate::balance::HsvSpectrum;
use crate::dense;
use crate::error::{Error, Result};
use crate::lyap;
use crate::scalar::Scalar;
use crate::specfact::{self, Region};
use crate::system::{sigma_max, DescriptorSystem, FrequencyGrid};

/// Hankel semi-norm: largest proper HSV of the stable slow part.
pub fn hankel_seminorm<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<T> {
    let dec = specfact::block_diagonalize(sys)?;
    if dec.slow.n() == 0 {
        return Ok(T::zero());
    }
    let (stable, _) = specfact::additive_decomposition(&dec.slow)?;
    if stable.n() == 0 {
        return Ok(T::zero());
    }
    let zc = lyap::solve_cont_lyap(&stable.e, &stable.a, &stable.b)?;
    let zo = lyap::solve_cont_lyap(&stable.e.transpose(), &stable.a.transpose(), &stable.c.transpose())?;
    Ok(dense::singular_values(&(zo.transpose() * &stable.e * zc)).first().copied().unwrap_or_else(T::zero))
}

/// Coefficients `M_0, ..., M_{k_max}` of the polynomial part
/// `C (s E - A)^{-1} B + D = sum_k M_k s^k` of a fast subsystem.
pub fn polynomial_markov<T: Scalar>(fast: &DescriptorSystem<T>, k_max: usize) -> Result<Vec<DMatrix<T>>> {
    let n = fast.n();
    let mut out = Vec::with_capacity(k_max + 1);
    if n == 0 {
        out.push(fast.d.clone());
        out.extend((0..k_max).map(|_| DMatrix::zeros(fast.p(), fast.m())));
        return Ok(out);
    }
    if dense::pivot_rcond(&fast.a) <= T::from_count(n) * T::eps() {
        return Err(Error::SingularA);
    }
    let lu = fast.a.clone().lu();
    let nil = lu.solve(&fast.e).ok_or(Error::SingularA)?;
    let mut v = lu.solve(&fast.b).ok_or(Error::SingularA)?;
    out.push(&fast.d - &fast.c * &v);
    for _ in 0..k_max {
        v = &nil * v;
        out.push(-(&fast.c * &v));
    }
    Ok(out)
}

/// Residuals of the all-pass conditions for a square descriptor system.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPassCertificate<T> {
    pub sigma: T,
    pub tol: T,
    /// `G_pc = P_r G_pc P_r^T`
    pub proj_controllability: T,
    /// `G_po = P_l^T G_po P_l`
    pub proj_observability: T,
    pub lyap_controllability: T,
    pub lyap_observability: T,
    /// `G_pc E^T G_po E = sigma^2 P_r`
    pub hsv_right: T,
    /// `G_po E G_pc E^T = sigma^2 P_l^T`
    pub hsv_left: T,
    /// `M_0 M_0^T = sigma^2 I`
    pub m0: T,
    /// `max_k ||M_k|| / sigma` for `k >= 1`
    pub m_higher: T,
    /// `M_0^T C P_r + B^T G_po E = 0`
    pub constraint_right: T,
    /// `M_0 B^T P_l^T + C G_pc E^T = 0`
    pub constraint_left: T,
    pub pass: bool,
}

impl<T: Scalar> AllPassCertificate<T> {
    pub fn residuals(&self) -> [(&'static str, T); 10] {
        [
            ("proj_controllability", self.proj_controllability),
            ("proj_observability", self.proj_observability),
            ("lyap_controllability", self.lyap_controllability),
            ("lyap_observability", self.lyap_observability),
            ("hsv_right", self.hsv_right),
            ("hsv_left", self.hsv_left),
            ("m0", self.m0),
            ("m_higher", self.m_higher),
            ("constraint_right", self.constraint_right),
            ("constraint_left", self.constraint_left),
        ]
    }
}

/// `||lhs - rhs|| / max(||lhs||, ||rhs||)`, zero for `0 / 0`.
fn rel_residual<T: Scalar>(diff: &DMatrix<T>, terms: &[&DMatrix<T>]) -> T {
    let scale = terms.iter().fold(T::zero(), |acc, m| acc.max(dense::fro(m)));
    let d = dense::fro(diff);
    if scale == T::zero() {
        if d == T::zero() {
            T::zero()
        } else {
            T::max_value().unwrap_or_else(T::one)
        }
    } else {
        d / scale
    }
}

/// Evaluates the all-pass conditions with Gramians, projectors and the
/// polynomial part computed from the block-diagonal form.
pub fn allpass_certificate<T: Scalar>(sys: &DescriptorSystem<T>, sigma: T, tol: T) -> Result<AllPassCertificate<T>> {
    if sys.m() != sys.p() {
        return Err(Error::NotSquare);
    }
    let n = sys.n();
    let (e, a, b, c) = (&sys.e, &sys.a, &sys.b, &sys.c);
    let split = specfact::split_pencil(e, a, Region::FiniteSpectrum)?;
    let proj = specfact::spectral_projectors(&split)?;
    let (pl, pr) = (&proj.left, &proj.right);
    let (ef, einf) = split.blocks(e);
    let (af, ainf) = split.blocks(a);
    let k = split.n1;
    let xb = split.x.transpose() * b;
    let cy = c * &split.y;
    let bf = xb.rows(0, k).into_owned();
    let cf = cy.columns(0, k).into_owned();
    let xf = lyap::solve_cont_lyap_general(&ef, &af, &(&bf * bf.transpose()))?;
    let qf = lyap::solve_cont_lyap_general(&ef.transpose(), &af.transpose(), &(cf.transpose() * &cf))?;
    let embed = |m: &DMatrix<T>| {
        let mut full = dense::zeros::<T>(n, n);
        full.view_mut((0, 0), (k, k)).copy_from(m);
        full
    };
    let gpc = &split.y * embed(&xf) * split.y.transpose();
    let gpo = &split.x * embed(&qf) * split.x.transpose();

    let fast = DescriptorSystem::new(einf, ainf, xb.rows(k, n - k).into_owned(), cy.columns(k, n - k).into_owned(), sys.d.clone())?;
    let markov = polynomial_markov(&fast, (n - k).max(1))?;
    let m0 = &markov[0];
    let s2 = sigma * sigma;

    let proj_controllability = rel_residual(&(&gpc - pr * &gpc * pr.transpose()), &[&gpc]);
    let proj_observability = rel_residual(&(&gpo - pl.transpose() * &gpo * pl), &[&gpo]);
    let lc1 = e * &gpc * a.transpose();
    let lc2 = pl * b * b.transpose() * pl.transpose();
    let lyap_controllability = rel_residual(&(&lc1 + lc1.transpose() + &lc2), &[&lc1, &lc2]);
    let lo1 = e.transpose() * &gpo * a;
    let lo2 = pr.transpose() * c.transpose() * c * pr;
    let lyap_observability = rel_residual(&(&lo1 + lo1.transpose() + &lo2), &[&lo1, &lo2]);
    let h1 = &gpc * e.transpose() * &gpo * e;
    let h1r = pr * s2;
    let hsv_right = rel_residual(&(&h1 - &h1r), &[&h1, &h1r]);
    let h2 = &gpo * e * &gpc * e.transpose();
    let h2r = pl.transpose() * s2;
    let hsv_left = rel_residual(&(&h2 - &h2r), &[&h2, &h2r]);
    let mm = m0 * m0.transpose();
    let id = dense::eye::<T>(sys.p()) * s2;
    let m0_res = rel_residual(&(&mm - &id), &[&mm, &id]);
    let m_higher = markov[1..].iter().fold(T::zero(), |acc, mk| {
        let v = dense::fro(mk);
        acc.max(if sigma > T::zero() { v / sigma } else { v })
    });
    let c1 = m0.transpose() * c * pr;
    let c2 = b.transpose() * &gpo * e;
    let constraint_right = rel_residual(&(&c1 + &c2), &[&c1, &c2]);
    let d1 = m0 * b.transpose() * pl.transpose();
    let d2 = c * &gpc * e.transpose();
    let constraint_left = rel_residual(&(&d1 + &d2), &[&d1, &d2]);

    let mut cert = AllPassCertificate {
        sigma,
        tol,
        proj_controllability,
        proj_observability,
        lyap_controllability,
        lyap_observability,
        hsv_right,
        hsv_left,
        m0: m0_res,
        m_higher,
        constraint_right,
        constraint_left,
        pass: false,
    };
    cert.pass = cert.residuals().iter().all(|(_, r)| *r <= tol);
    Ok(cert)
}

/// Largest `||G(iw) G(iw)^* - sigma^2 I||_2 / sigma^2` over the grid.
/// Returns whether it stays within `tol` and the deviation.
pub fn check_allpass_frequency<T: Scalar>(sys: &DescriptorSystem<T>, sigma: T, grid: &FrequencyGrid<T>, tol: T) -> Result<(bool, T)> {
    if sys.m() != sys.p() {
        return Err(Error::NotSquare);
    }
    let resp = sys.frequency_sweep(grid);
    let s2 = sigma * sigma;
    let p = sys.p();
    let mut worst = T::zero();
    for (_, g) in &resp.points {
        let Some(g) = g else {
            return Ok((false, T::max_value().unwrap_or_else(T::one)));
        };
        let mut dev = g * g.adjoint();
        for i in 0..p {
            dev[(i, i)] -= Complex::new(s2, T::zero());
        }
        let d = sigma_max(&dev);
        let d = if s2 > T::zero() { d / s2 } else { d };
        worst = worst.max(d);
    }
    Ok((worst <= tol, worst))
}

/// Sampled `sup_w sigma_max(G(iw) - H(iw))`; `None` if some grid point hits a
/// pole of either system.
pub fn sampled_error<T: Scalar>(g: &DescriptorSystem<T>, h: &DescriptorSystem<T>, grid: &FrequencyGrid<T>) -> Result<Vec<(T, Option<T>)>> {
    let err = g.error_system(h)?;
    let resp = err.frequency_sweep(grid);
    Ok(resp.points.iter().map(|(w, v)| (*w, v.as_ref().map(sigma_max))).collect())
}

/// Sampled H-infinity error against `2 sum_{k > r} sigma_k + 1e-8 sigma_1`.
/// Returns `(holds, sampled sup, bound)`.
pub fn check_hinf_bound<T: Scalar>(
    g: &DescriptorSystem<T>,
    reduced: &DescriptorSystem<T>,
    spectrum: &HsvSpectrum<T>,
    r: usize,
    grid: &FrequencyGrid<T>,
) -> Result<(bool, T, T)> {
    let samples = sampled_error(g, reduced, grid)?;
    let bound = T::lit(2.0) * spectrum.tail_sum(r) + T::lit(1e-8) * spectrum.sigma_max();
    let mut sup = T::zero();
    let mut complete = true;
    for (_, v) in samples {
        match v {
            Some(v) => sup = sup.max(v),
            None => complete = false,
        }
    }
    Ok((complete && sup <= bound, sup, bound))
}
