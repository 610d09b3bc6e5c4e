//! Deterministic benchmark systems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfact::ProjectorPair;
use crate::system::DescriptorSystem;

/// Benchmark family and its size parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchSpec {
    Msd { g: usize, params: MsdParams },
    StokesLike { n_v: usize, n_p: usize, seed: u64 },
    RandomStable { n: usize, m: usize, p: usize, seed: u64 },
}

impl BenchSpec {
    pub fn generate<T: Scalar>(&self) -> Result<DescriptorSystem<T>> {
        match self {
            BenchSpec::Msd { g, params } => gen_msd(*g, params),
            BenchSpec::StokesLike { n_v, n_p, seed } => Ok(gen_stokes_like(*n_v, *n_p, *seed)?.0),
            BenchSpec::RandomStable { n, m, p, seed } => gen_random_stable(*n, *m, *p, *seed),
        }
    }
}

/// Physical constants of the constrained mass-spring-damper chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdParams {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for MsdParams {
    fn default() -> Self {
        Self { mass: 100.0, stiffness: 2.0, damping: 5.0 }
    }
}

fn tridiag<T: Scalar>(g: usize, c: f64) -> DMatrix<T> {
    DMatrix::from_fn(g, g, |i, j| {
        if i == j {
            T::lit(-2.0 * c)
        } else if i.abs_diff(j) == 1 {
            T::lit(c)
        } else {
            T::zero()
        }
    })
}

/// Damped mass-spring chain of `g` masses whose end masses are tied by a
/// holonomic constraint, in first-order form of size `2 g + 1` (index 3).
pub fn gen_msd<T: Scalar>(g: usize, params: &MsdParams) -> Result<DescriptorSystem<T>> {
    if g < 3 {
        return Err(Error::InvalidInput("the mass-spring chain needs at least 3 masses".into()));
    }
    let n = 2 * g + 1;
    let mut e = dense::zeros::<T>(n, n);
    let mut a = dense::zeros::<T>(n, n);
    for i in 0..g {
        e[(i, i)] = T::one();
        e[(g + i, g + i)] = T::lit(params.mass);
        a[(i, g + i)] = T::one();
    }
    a.view_mut((g, 0), (g, g)).copy_from(&tridiag::<T>(g, params.stiffness));
    a.view_mut((g, g), (g, g)).copy_from(&tridiag::<T>(g, params.damping));
    // G = [1, 0, ..., 0, -1]
    a[(g, 2 * g)] = -T::one();
    a[(2 * g - 1, 2 * g)] = T::one();
    a[(2 * g, 0)] = T::one();
    a[(2 * g, g - 1)] = -T::one();
    let mut b = dense::zeros::<T>(n, 1);
    b[(g, 0)] = T::one();
    let mut c = dense::zeros::<T>(3, n);
    c[(0, 0)] = T::one();
    c[(1, 1)] = T::one();
    c[(2, g - 2)] = T::one();
    DescriptorSystem::new(e, a, b, c, DMatrix::zeros(3, 1))
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<T> {
    DMatrix::from_fn(r, c, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// Stokes-type index-2 system `E = diag(I, 0)`,
/// `A = [[A11, A12], [A12^T, 0]]` with symmetric negative definite `A11`,
/// plus its spectral projectors in closed form.
pub fn gen_stokes_like<T: Scalar>(n_v: usize, n_p: usize, seed: u64) -> Result<(DescriptorSystem<T>, ProjectorPair<T>)> {
    if n_p == 0 || n_p >= n_v {
        return Err(Error::InvalidInput("need 0 < n_p < n_v".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_v + n_p;
    let s = gaussian::<T>(&mut rng, n_v, n_v);
    let a11 = -(&s * s.transpose() * (T::one() / T::from_count(n_v)) + dense::eye::<T>(n_v) * T::lit(0.1));
    let a12 = gaussian::<T>(&mut rng, n_v, n_p);
    let sv = dense::singular_values(&a12);
    if sv[n_p - 1] <= T::eps().sqrt() * sv[0] {
        return Err(Error::RankDeficientConstraint);
    }
    let b = gaussian::<T>(&mut rng, n, 1);
    let c = gaussian::<T>(&mut rng, 1, n);

    let mut e = dense::zeros::<T>(n, n);
    e.view_mut((0, 0), (n_v, n_v)).copy_from(&dense::eye::<T>(n_v));
    let mut a = dense::zeros::<T>(n, n);
    a.view_mut((0, 0), (n_v, n_v)).copy_from(&a11);
    a.view_mut((0, n_v), (n_v, n_p)).copy_from(&a12);
    a.view_mut((n_v, 0), (n_p, n_v)).copy_from(&a12.transpose());
    let sys = DescriptorSystem::new(e, a, b, c, DMatrix::zeros(1, 1))?;

    let gram_inv = dense::inverse(&(a12.transpose() * &a12)).ok_or(Error::RankDeficientConstraint)?;
    let pi = dense::eye::<T>(n_v) - &a12 * &gram_inv * a12.transpose();
    let mut left = dense::zeros::<T>(n, n);
    left.view_mut((0, 0), (n_v, n_v)).copy_from(&pi);
    left.view_mut((0, n_v), (n_v, n_p)).copy_from(&(-(&pi * &a11 * &a12 * &gram_inv)));
    let mut right = dense::zeros::<T>(n, n);
    right.view_mut((0, 0), (n_v, n_v)).copy_from(&pi);
    right.view_mut((n_v, 0), (n_p, n_v)).copy_from(&(-(&gram_inv * a12.transpose() * &a11 * &pi)));
    Ok((sys, ProjectorPair { left, right }))
}

/// Standard system `E = I`, `A = Q diag(-a) Q^{-1}` with `a` log-uniform in
/// `[1e-2, 1e2]` and Gaussian `B`, `C`.
pub fn gen_random_stable<T: Scalar>(n: usize, m: usize, p: usize, seed: u64) -> Result<DescriptorSystem<T>> {
    if n == 0 || m == 0 || p == 0 {
        return Err(Error::InvalidInput("n, m and p must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
    let g = gaussian::<T>(&mut rng, n, n);
    let q = dense::eye::<T>(n) + g * (T::lit(0.5) / T::from_count(n).sqrt());
    let qinv = dense::inverse(&q).ok_or_else(|| Error::SingularSystem("random basis is singular".into()))?;
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { T::lit(-decay[i]) } else { T::zero() });
    let a = &q * d * qinv;
    let b = gaussian::<T>(&mut rng, n, m);
    let c = gaussian::<T>(&mut rng, p, n);
    DescriptorSystem::standard(a, b, c, DMatrix::zeros(p, m))
}
