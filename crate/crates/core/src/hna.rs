//! Generalized Hankel-norm approximation.

use nalgebra::DMatrix;

use crate::balance::{self, BalancedRealization, HsvSpectrum, Truncation};
use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfact;
use crate::system::DescriptorSystem;

/// Target of the reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy<T> {
    /// Keep `r` slow states.
    Order(usize),
    /// Smallest `r` with `sigma_{r+1} <= tol`.
    HankelTol(T),
}

/// Pre-truncation of the balanced slow part before the all-pass step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Approx<T> {
    /// Keep every proper HSV above the default tolerance.
    #[default]
    Off,
    /// Keep proper HSVs above `tau_b`.
    Tol(T),
    /// Smallest `n_b` with `2 sum_{k > n_b} sigma_k <= 1e-3 sigma_{r+1}`.
    Auto,
}

/// Choice of `U` in the all-pass transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UChoice {
    /// Orthogonal completion of the pseudoinverse solution when `m == p`,
    /// pseudoinverse otherwise.
    #[default]
    Unitary,
    /// `U = (C_2^T)^+ B_2`.
    PseudoInverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhnaOptions<T> {
    pub approx: Approx<T>,
    /// Relative tolerance for grouping equal HSVs.
    pub cluster_tol: T,
    pub u_choice: UChoice,
    /// Replace a fast part with `E_inf = 0` by its constant `-C_inf B_inf`.
    pub fold_static_fast: bool,
}

impl<T: Scalar> Default for GhnaOptions<T> {
    fn default() -> Self {
        Self { approx: Approx::Off, cluster_tol: T::lit(1e-10), u_choice: UChoice::default(), fold_static_fast: false }
    }
}

/// Error bookkeeping of a reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport<T> {
    /// Retained slow order.
    pub r: usize,
    /// Retained fast order.
    pub ell_inf: usize,
    pub sigma_r1: T,
    /// Multiplicity of `sigma_{r+1}`.
    pub k: usize,
    pub hankel_error_exact: T,
    pub hinf_bound: T,
    pub approx_extra: T,
    /// `max |Gamma_ii| / min |Gamma_ii|` of `Gamma = Sigma^2 - sigma^2 I`.
    pub gamma_condition: T,
    /// Order of the balanced slow part fed to the all-pass step.
    pub n_b: usize,
    pub antistable_order: usize,
    /// Cutoff that decided `n_b`.
    pub balance_tol: T,
    pub improper_cutoff: T,
    pub warnings: Vec<String>,
}

/// Reduced model together with the intermediate stages.
#[derive(Debug, Clone, PartialEq)]
pub struct GhnaResult<T: Scalar> {
    pub reduced: DescriptorSystem<T>,
    pub report: ReductionReport<T>,
    pub balanced: BalancedRealization<T>,
    /// All-pass transformed slow system before the stable part is taken.
    pub allpass: DescriptorSystem<T>,
    pub spectrum: HsvSpectrum<T>,
}

/// Number of HSVs in the cluster of `sigma_{r+1}`.
pub fn choose_multiplicity<T: Scalar>(hsv: &[T], r: usize, cluster_tol: T) -> Result<usize> {
    if r >= hsv.len() {
        return Err(Error::InvalidInput(format!("order {r} is not below the {} available HSVs", hsv.len())));
    }
    let s = hsv[r];
    let within = |x: T| (x - s).abs() <= cluster_tol * s;
    if r > 0 && within(hsv[r - 1]) {
        return Err(Error::AmbiguousOrder);
    }
    Ok(hsv[r..].iter().take_while(|&&x| within(x)).count())
}

/// `(hankel, hinf, approx_extra)` error figures of a reduction to order `r`
/// from a balanced order `n_b`.
pub fn error_bounds<T: Scalar>(spectrum: &HsvSpectrum<T>, r: usize, n_b: usize) -> (T, T, T) {
    let two = T::lit(2.0);
    let hankel = spectrum.proper.get(r).copied().unwrap_or_else(T::zero);
    (hankel, two * spectrum.tail_sum(r), two * spectrum.tail_sum(n_b))
}

/// All-pass transform of a balanced standard system with Gramians
/// `diag(sigma)`, removing the cluster `sigma_{r+1} = ... = sigma_{r+k}`.
pub fn allpass_transform<T: Scalar>(
    balanced: &DescriptorSystem<T>,
    sigma: &[T],
    r: usize,
    k: usize,
    u_choice: UChoice,
) -> Result<(DescriptorSystem<T>, Vec<String>)> {
    let n = balanced.n();
    if sigma.len() != n || r + k > n || k == 0 {
        return Err(Error::DimensionMismatch("HSV list does not fit the balanced realization".into()));
    }
    let (m, p) = (balanced.m(), balanced.p());
    let s = sigma[r];
    let keep: Vec<usize> = (0..r).chain(r + k..n).collect();
    let drop: Vec<usize> = (r..r + k).collect();
    let pick = |mat: &DMatrix<T>, rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| mat[(rows[i], cols[j])]);
    let all_m: Vec<usize> = (0..m).collect();
    let all_p: Vec<usize> = (0..p).collect();
    let a11 = pick(&balanced.a, &keep, &keep);
    let b1 = pick(&balanced.b, &keep, &all_m);
    let b2 = pick(&balanced.b, &drop, &all_m);
    let c1 = pick(&balanced.c, &all_p, &keep);
    let c2 = pick(&balanced.c, &all_p, &drop);

    let mut warnings = Vec::new();
    let c2t = c2.transpose();
    let rtol = T::from_count(k.max(m)) * T::eps();
    let mut u = dense::pinv(&c2t, rtol) * &b2;
    let lsq = dense::fro(&(&c2t * &u - &b2));
    if lsq > T::lit(1e-8) * dense::fro(&b2) {
        warnings.push(format!("RankDeficientU: ||C2^T U - B2|| = {:.3e}", lsq.as_f64()));
    }
    if u_choice == UChoice::Unitary && m == p {
        u = unitary_completion(&u);
    }

    let check = DMatrix::from_fn(keep.len(), keep.len(), |i, j| if i == j { sigma[keep[i]] } else { T::zero() });
    let s2 = s * s;
    let e = &check * &check - dense::eye::<T>(keep.len()) * s2;
    let a = a11.transpose() * s2 + &check * &a11 * &check + c1.transpose() * &u * b1.transpose() * s;
    let b = &check * &b1 - c1.transpose() * &u * s;
    let c = &c1 * &check - &u * b1.transpose() * s;
    let d = &balanced.d + &u * s;
    Ok((DescriptorSystem::new(e, a, b, c, d)?, warnings))
}

/// Completes the partial isometry `U_0 = R T^T` to an orthogonal matrix
/// `R T^T + R_perp T_perp^T`.
fn unitary_completion<T: Scalar>(u0: &DMatrix<T>) -> DMatrix<T> {
    let (r, s, t) = dense::svd(u0);
    let p = u0.nrows();
    let rank = s.iter().filter(|&&x| x > T::lit(0.5)).count();
    let r1 = r.columns(0, rank).into_owned();
    let t1 = t.columns(0, rank).into_owned();
    let r_perp = dense::orth_complement(&r1);
    let t_perp = dense::orth_complement(&t1);
    let mut u = &r1 * t1.transpose();
    if r_perp.ncols() == t_perp.ncols() && r_perp.ncols() + rank == p {
        u += r_perp * t_perp.transpose();
    }
    u
}

/// Hankel-norm approximation of a c-stable descriptor system.
pub fn ghna<T: Scalar>(sys: &DescriptorSystem<T>, policy: Policy<T>) -> Result<(DescriptorSystem<T>, ReductionReport<T>)> {
    let out = ghna_with(sys, policy, &GhnaOptions::default())?;
    Ok((out.reduced, out.report))
}

pub fn ghna_with<T: Scalar>(sys: &DescriptorSystem<T>, policy: Policy<T>, opts: &GhnaOptions<T>) -> Result<GhnaResult<T>> {
    let f = balance::factor(sys)?;
    let spectrum = f.spectrum.clone();
    let sigma = &spectrum.proper;
    let n_f = spectrum.n_f;

    let r = match policy {
        Policy::Order(r) => r,
        Policy::HankelTol(tol) => sigma.iter().filter(|&&s| s > tol).count(),
    };
    if r > n_f {
        return Err(Error::InvalidInput(format!("order {r} exceeds the slow dimension {n_f}")));
    }
    let sigma_r1 = sigma.get(r).copied().unwrap_or_else(T::zero);
    let k = if r < n_f { choose_multiplicity(sigma, r, opts.cluster_tol)? } else { 0 };

    let default_tol = balance::default_tolerance(sys.n(), spectrum.sigma_max());
    let balance_tol = match opts.approx {
        Approx::Off => default_tol,
        Approx::Tol(tau) => tau,
        Approx::Auto => {
            let target = T::lit(1e-3) * sigma_r1;
            let mut n_b = n_f;
            while n_b > r + k && T::lit(2.0) * spectrum.tail_sum(n_b - 1) <= target {
                n_b -= 1;
            }
            // tolerance that reproduces n_b
            if n_b < n_f { sigma[n_b] } else { default_tol }
        }
    };
    let n_b_max = sigma.iter().filter(|&&s| s > balance_tol).count();
    let bal = match balance::balance_factored(sys, &f, Truncation::Order(n_b_max)) {
        Err(Error::EmptyModel) => balance::balance_factored(sys, &f, Truncation::Order(n_b_max.max(1)))?,
        other => other?,
    };
    let n_b = bal.slow.n();
    let (hankel, hinf, approx_extra) = error_bounds(&spectrum, r, n_b);
    let approx_extra = if opts.approx == Approx::Off { T::zero() } else { approx_extra };

    let mut warnings = Vec::new();
    if bal.noise_dropped > 0 {
        warnings.push(format!("dropped {} noise-level balanced states to keep the slow part stable", bal.noise_dropped));
    }
    let (slow_h, allpass, antistable_order, gamma_condition) = if r >= n_b || k == 0 {
        if r < n_f {
            warnings.push(format!("order {r} keeps the whole balanced slow part of order {n_b}"));
        }
        (bal.slow.clone(), bal.slow.clone(), 0, T::one())
    } else {
        let k_b = k.min(n_b - r);
        let (ap, w) = allpass_transform(&bal.slow, &bal.sigma1, r, k_b, opts.u_choice)?;
        warnings.extend(w);
        let diag: Vec<T> = (0..ap.n()).map(|i| ap.e[(i, i)].abs()).collect();
        let gmin = diag.iter().copied().fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
        let gmax = diag.iter().copied().fold(T::zero(), |a, b| a.max(b));
        let s1 = spectrum.sigma_max();
        if !diag.is_empty() && gmin < T::lit(1e3) * T::eps() * s1 * s1 {
            warnings.push("Gamma is nearly singular; approximate mode is recommended".into());
        }
        let gamma_condition = if diag.is_empty() { T::one() } else { gmax / gmin };
        // |Gamma|^{-1/2} on both sides balances the all-pass realization, whose
        // Gramians are Sigma Gamma^{-1} and Sigma Gamma; E becomes sign(Gamma)
        let scale = DMatrix::from_fn(ap.n(), ap.n(), |i, j| {
            if i == j && diag[i] > T::zero() { T::one() / diag[i].sqrt() } else if i == j { T::one() } else { T::zero() }
        });
        let (stable, anti) = specfact::additive_decomposition(&ap.transform(&scale, &scale)?)?;
        let sing = || Error::SingularSystem("stable part has a singular E".into());
        let ea = dense::solve(&stable.e, &stable.a).ok_or_else(sing)?;
        let eb = dense::solve(&stable.e, &stable.b).ok_or_else(sing)?;
        let stable = DescriptorSystem::standard(ea, eb, stable.c, stable.d)?;
        if stable.n() != r {
            warnings.push(format!("stable part has order {} instead of {r}", stable.n()));
        }
        (stable, ap, anti.n(), gamma_condition)
    };

    let mut fast = bal.fast.clone();
    let mut reduced_slow = slow_h;
    if opts.fold_static_fast && fast.n() > 0 && dense::fro(&fast.e) == T::zero() {
        // (s 0 - I)^{-1} = -I: the fast part is the constant D - C B
        reduced_slow.d += -(&fast.c * &fast.b);
        fast = DescriptorSystem::constant(fast.d.clone());
    }
    let reduced = balance::couple(&reduced_slow, &fast)?;

    let report = ReductionReport {
        r: reduced_slow.n(),
        ell_inf: fast.n(),
        sigma_r1,
        k,
        hankel_error_exact: hankel,
        hinf_bound: hinf,
        approx_extra,
        gamma_condition,
        n_b,
        antistable_order,
        balance_tol,
        improper_cutoff: bal.improper_cutoff,
        warnings,
    };
    Ok(GhnaResult { reduced, report, balanced: bal, allpass, spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn first_order() -> DescriptorSystem<f64> {
        DescriptorSystem::from_rows(1, 1, 1, &[1.0], &[-1.0], &[1.0], &[1.0], &[0.0]).unwrap()
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(choose_multiplicity(&[1.0, 0.5, 0.5, 0.1], 1, 1e-10), Ok(2));
        assert_eq!(choose_multiplicity(&[1.0, 0.5, 0.1], 1, 1e-10), Ok(1));
        assert_eq!(choose_multiplicity(&[1.0, 0.5 + 1e-14, 0.5, 0.1], 1, 1e-10), Ok(2));
        assert_eq!(choose_multiplicity(&[1.0, 0.5, 0.5, 0.1], 2, 1e-10), Err(Error::AmbiguousOrder));
    }

    #[test]
    fn bounds_examples() {
        let s = HsvSpectrum { proper: vec![1.0, 0.5, 0.25], improper: vec![], n_f: 3, n_inf: 0, index: 0 };
        assert_eq!(error_bounds(&s, 0, 3), (1.0, 3.5, 0.0));
        assert_eq!(error_bounds(&s, 2, 3).1, 0.5);
    }

    #[test]
    fn scalar_allpass_transform() {
        let (g, _) = allpass_transform(&first_order(), &[0.5], 0, 1, UChoice::PseudoInverse).unwrap();
        assert_eq!(g.n(), 0);
        assert_eq!(g.d[(0, 0)], 0.5);
    }

    #[test]
    fn pinv_u_from_consistent_system() {
        let c2t = DMatrix::<f64>::from_row_slice(2, 1, &[1.0, 0.0]);
        let b2 = DMatrix::from_row_slice(2, 1, &[2.0, 0.0]);
        let u = dense::pinv(&c2t, 1e-15) * b2;
        assert!((u[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_state_allpass_error() {
        // balanced SISO system with Gramians diag(2, 1)
        let b = [1.0f64, 0.7];
        let sig = [2.0, 1.0];
        let a = DMatrix::from_fn(2, 2, |i, j| -b[i] * b[j] / (sig[i] + sig[j]));
        let sys = DescriptorSystem::standard(
            a,
            DMatrix::from_row_slice(2, 1, &b),
            DMatrix::from_row_slice(1, 2, &b),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(balance::balanced_residual(&sys, &sig).unwrap() < 1e-12);
        let (g, _) = allpass_transform(&sys, &sig, 1, 1, UChoice::PseudoInverse).unwrap();
        let err = sys.error_system(&g).unwrap();
        for w in [0.1, 1.0, 10.0] {
            let v = err.eval_transfer(Complex::new(0.0, w)).unwrap()[(0, 0)];
            assert!((v.norm() - 1.0).abs() < 1e-8, "{w}: {}", v.norm());
        }
    }

    #[test]
    fn scalar_ghna() {
        let (red, rep) = ghna(&first_order(), Policy::Order(0)).unwrap();
        assert_eq!(red.n(), 0);
        assert!((red.d[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((rep.hankel_error_exact - 0.5).abs() < 1e-15);
        assert_eq!(rep.k, 1);
    }

    #[test]
    fn algebraic_system_is_kept() {
        let sys = DescriptorSystem::<f64>::from_rows(1, 1, 1, &[0.0], &[1.0], &[2.0], &[3.0], &[1.0]).unwrap();
        let (red, rep) = ghna(&sys, Policy::Order(0)).unwrap();
        assert_eq!(rep.hankel_error_exact, 0.0);
        assert_eq!(red.n(), 1);
        let v = red.eval_transfer(Complex::new(0.0, 1.0)).unwrap()[(0, 0)];
        assert!((v - Complex::new(-5.0, 0.0)).norm() < 1e-13);
    }
}
