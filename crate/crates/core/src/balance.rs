//! Generalized balanced truncation by the square-root method.

use nalgebra::DMatrix;

use crate::dense;
use crate::error::{Error, Result};
use crate::lyap::{self, GramianFactors};
use crate::scalar::Scalar;
use crate::specfact::{self, Decoupled};
use crate::system::DescriptorSystem;

/// Proper and improper Hankel singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvSpectrum<T: Scalar> {
    /// Descending, padded with zeros to `n_f` entries.
    pub proper: Vec<T>,
    /// Descending, nonzero values only.
    pub improper: Vec<T>,
    pub n_f: usize,
    pub n_inf: usize,
    /// Nilpotency index of the fast part.
    pub index: usize,
}

impl<T: Scalar> HsvSpectrum<T> {
    pub fn sigma_max(&self) -> T {
        self.proper.first().copied().unwrap_or_else(T::zero)
    }

    /// `sum_{k >= from} sigma_k` (zero-based `from`).
    pub fn tail_sum(&self, from: usize) -> T {
        self.proper.iter().skip(from).fold(T::zero(), |acc, &s| acc + s)
    }
}

/// Balanced slow/fast realization produced by [`gbt_sr`].
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedRealization<T: Scalar> {
    /// `(I, A_f, B_f, C_f, 0)`, balanced.
    pub slow: DescriptorSystem<T>,
    /// `(E_inf, I, B_inf, C_inf, D)` with nilpotent `E_inf`.
    pub fast: DescriptorSystem<T>,
    pub sigma1: Vec<T>,
    /// Left projection, `n x l`.
    pub w_l: DMatrix<T>,
    /// Right projection, `n x l`.
    pub t_l: DMatrix<T>,
    /// `2 * sum` of the discarded proper HSVs.
    pub truncation_tail: T,
    pub spectrum: HsvSpectrum<T>,
    /// Cutoff below which an improper HSV counts as zero.
    pub improper_cutoff: T,
    /// Trailing noise-level states removed because keeping them made the
    /// slow part unstable.
    pub noise_dropped: usize,
}

impl<T: Scalar> BalancedRealization<T> {
    /// The truncated model as one descriptor system `diag(slow, fast)`.
    pub fn system(&self) -> Result<DescriptorSystem<T>> {
        couple(&self.slow, &self.fast)
    }
}

/// `diag(G_1, G_2)` with added outputs: `G_1 + G_2`.
pub(crate) fn couple<T: Scalar>(a: &DescriptorSystem<T>, b: &DescriptorSystem<T>) -> Result<DescriptorSystem<T>> {
    a.sum_system(b)
}

/// Truncation policy for the proper part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation<T> {
    /// Keep the largest `l_f` proper HSVs.
    Order(usize),
    /// Keep every proper HSV above the tolerance.
    Tolerance(T),
    /// Tolerance from [`default_tolerance`].
    Default,
}

/// `min(nu m, nu p, n_inf)`
pub fn improper_rank_bound(nu: usize, m: usize, p: usize, n_inf: usize) -> usize {
    (nu * m).min(nu * p).min(n_inf)
}

/// `ln(n) * eps * sigma_max`
pub fn default_tolerance<T: Scalar>(n: usize, sigma_max: T) -> T {
    default_tolerance_base(n, sigma_max, std::f64::consts::E)
}

/// `log_base(n) * eps * sigma_max`
pub fn default_tolerance_base<T: Scalar>(n: usize, sigma_max: T, base: f64) -> T {
    let l = (n.max(1) as f64).ln() / base.ln();
    T::lit(l) * T::eps() * sigma_max
}

/// Gramian factors together with the SVDs that define the HSVs.
pub(crate) struct Factored<T: Scalar> {
    pub dec: Decoupled<T>,
    pub factors: GramianFactors<T>,
    pub proper: (DMatrix<T>, Vec<T>, DMatrix<T>),
    pub improper: (DMatrix<T>, Vec<T>, DMatrix<T>),
    pub improper_cutoff: T,
    pub spectrum: HsvSpectrum<T>,
}

pub(crate) fn factor<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<Factored<T>> {
    let dec = specfact::block_diagonalize(sys)?;
    let factors = lyap::gramian_factors(&dec)?;
    let n_f = dec.slow.n();
    let n_inf = dec.fast.n();
    let proper = dense::svd(&(factors.z_po.transpose() * &dec.slow.e * &factors.z_pc));
    let improper = dense::svd(&(factors.z_io.transpose() * &dec.fast.a * &factors.z_ic));
    let mut p: Vec<T> = proper.1.clone();
    p.resize(n_f, T::zero());
    let theta1 = improper.1.first().copied().unwrap_or_else(T::zero);
    let improper_cutoff = T::from_count(sys.n().max(1)) * T::eps() * theta1.max(dense::fro(&sys.a));
    let imp: Vec<T> = improper.1.iter().copied().filter(|&t| t > improper_cutoff).collect();
    let spectrum = HsvSpectrum { proper: p, improper: imp, n_f, n_inf, index: factors.index };
    Ok(Factored { dec, factors, proper, improper, improper_cutoff, spectrum })
}

/// Proper and improper Hankel singular values of a c-stable system.
pub fn hankel_singular_values<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<HsvSpectrum<T>> {
    Ok(factor(sys)?.spectrum)
}

/// Balanced truncation keeping the proper HSVs selected by `policy` and all
/// nonzero improper HSVs.
pub fn gbt_sr<T: Scalar>(sys: &DescriptorSystem<T>, policy: Truncation<T>) -> Result<BalancedRealization<T>> {
    let f = factor(sys)?;
    balance_factored(sys, &f, policy)
}

pub(crate) fn balance_factored<T: Scalar>(
    sys: &DescriptorSystem<T>,
    f: &Factored<T>,
    policy: Truncation<T>,
) -> Result<BalancedRealization<T>> {
    let n = sys.n();
    let n_f = f.dec.slow.n();
    let sigma = &f.proper.1;
    let nonzero = sigma.iter().filter(|&&s| s > T::zero()).count();
    let l_f = match policy {
        Truncation::Order(l) => l.min(nonzero),
        Truncation::Tolerance(tau) => sigma.iter().filter(|&&s| s > tau).count(),
        Truncation::Default => {
            let tau = default_tolerance(n, f.spectrum.sigma_max());
            sigma.iter().filter(|&&s| s > tau).count()
        }
    };
    let l_inf = f.spectrum.improper.len();
    if l_f == 0 && l_inf == 0 && n_f > 0 {
        return Err(Error::EmptyModel);
    }

    // HSVs near rounding level carry inaccurate singular vectors and can
    // yield unstable states; shed them until the slow part is stable.
    let noise = T::eps().sqrt() * f.spectrum.sigma_max();
    let mut keep = l_f;
    let (slow, wp, tp) = loop {
        let (wp, tp) = sr_projections(&f.factors.z_po, &f.factors.z_pc, &f.proper, keep);
        let slow = DescriptorSystem::new(
            dense::eye(keep),
            wp.transpose() * &f.dec.slow.a * &tp,
            wp.transpose() * &f.dec.slow.b,
            &f.dec.slow.c * &tp,
            DMatrix::zeros(sys.p(), sys.m()),
        )?;
        let stable = dense::eigenvalues(&slow.a).iter().all(|z| z.re < T::zero());
        if stable || keep == 0 || sigma[keep - 1] > noise {
            break (slow, wp, tp);
        }
        keep -= 1;
    };
    let noise_dropped = l_f - keep;
    let l_f = keep;
    let (wi, ti) = sr_projections(&f.factors.z_io, &f.factors.z_ic, &f.improper, l_inf);
    let fa = &f.dec.fast;
    let fast = DescriptorSystem::new(
        wi.transpose() * &fa.e * &ti,
        dense::eye(l_inf),
        wi.transpose() * &fa.b,
        &fa.c * &ti,
        fa.d.clone(),
    )?;
    let split = &f.dec.split;
    let k = split.n1;
    let w_l = split.x.columns(0, k) * &wp;
    let w_l = dense::hstack(&w_l, &(split.x.columns(k, n - k) * &wi));
    let t_l = split.y.columns(0, k) * &tp;
    let t_l = dense::hstack(&t_l, &(split.y.columns(k, n - k) * &ti));
    let truncation_tail = T::lit(2.0) * f.spectrum.tail_sum(l_f);
    Ok(BalancedRealization {
        slow,
        fast,
        sigma1: sigma[..l_f].to_vec(),
        w_l,
        t_l,
        truncation_tail,
        spectrum: f.spectrum.clone(),
        improper_cutoff: f.improper_cutoff,
        noise_dropped,
    })
}

/// `W = L U_1 S_1^{-1/2}`, `T = R V_1 S_1^{-1/2}` from `L^T M R = U S V^T`.
fn sr_projections<T: Scalar>(
    l: &DMatrix<T>,
    r: &DMatrix<T>,
    svd: &(DMatrix<T>, Vec<T>, DMatrix<T>),
    keep: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let (u, s, v) = svd;
    let scale = DMatrix::from_fn(keep, keep, |i, j| if i == j { T::one() / s[i].sqrt() } else { T::zero() });
    let w = l * u.columns(0, keep) * &scale;
    let t = r * v.columns(0, keep) * &scale;
    (w, t)
}

/// Largest of `||P - diag(sigma)||_F` and `||Q - diag(sigma)||_F` relative to
/// `||sigma||`, with `P`, `Q` the Gramians of a standard system recomputed
/// from scratch.
pub fn balanced_residual<T: Scalar>(slow: &DescriptorSystem<T>, sigma: &[T]) -> Result<T> {
    let n = slow.n();
    if n == 0 {
        return Ok(T::zero());
    }
    let p = lyap::solve_cont_lyap_dense(&slow.e, &slow.a, &(&slow.b * slow.b.transpose()))?;
    let q = lyap::solve_cont_lyap_dense(&slow.e.transpose(), &slow.a.transpose(), &(slow.c.transpose() * &slow.c))?;
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { sigma[i] } else { T::zero() });
    let scale = dense::fro(&d);
    if scale == T::zero() {
        return Ok(T::zero());
    }
    Ok((dense::fro(&(p - &d)).max(dense::fro(&(q - &d)))) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> DescriptorSystem<f64> {
        DescriptorSystem::from_rows(1, 1, 1, &[1.0], &[-1.0], &[1.0], &[1.0], &[0.0]).unwrap()
    }

    #[test]
    fn hsv_first_order() {
        let s = hankel_singular_values(&first_order()).unwrap();
        assert_eq!(s.proper.len(), 1);
        assert!((s.proper[0] - 0.5).abs() < 1e-15);
        assert!(s.improper.is_empty());
    }

    #[test]
    fn hsv_algebraic() {
        let sys = DescriptorSystem::<f64>::from_rows(1, 1, 1, &[0.0], &[1.0], &[1.0], &[1.0], &[0.0]).unwrap();
        let s = hankel_singular_values(&sys).unwrap();
        assert!(s.proper.is_empty());
        assert_eq!(s.improper.len(), 1);
        assert!((s.improper[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_bound() {
        assert_eq!(improper_rank_bound(2, 1, 1, 12798), 2);
        assert_eq!(improper_rank_bound(0, 4, 2, 9), 0);
        assert_eq!(improper_rank_bound(3, 1, 3, 1), 1);
    }

    #[test]
    fn default_tolerance_values() {
        assert_eq!(default_tolerance(1, 1.0f64), 0.0);
        assert!((default_tolerance(19039, 1.0f64) / f64::EPSILON - 19039f64.ln()).abs() < 1e-12);
        let e = default_tolerance_base(100, 1.0f64, 10.0);
        assert!((e / f64::EPSILON - 2.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_first_order() {
        let b = gbt_sr(&first_order(), Truncation::Order(1)).unwrap();
        assert_eq!(b.sigma1.len(), 1);
        assert!((b.sigma1[0] - 0.5).abs() < 1e-15);
        assert!((b.slow.a[(0, 0)] + 1.0).abs() < 1e-14);
        assert!((b.slow.b[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((b.slow.b[(0, 0)] - b.slow.c[(0, 0)]).abs() < 1e-14);
        assert_eq!(b.fast.n(), 0);
        assert!(balanced_residual(&b.slow, &b.sigma1).unwrap() < 1e-14);
    }

    #[test]
    fn tolerance_above_sigma1_empties_model() {
        assert_eq!(gbt_sr(&first_order(), Truncation::Tolerance(1.0)), Err(Error::EmptyModel));
    }
}
