//! Descriptor-system realizations and frequency-domain evaluation.
//!
//! A realization `(E, A, B, C, D)` describes `E x' = A x + B u`,
//! `y = C x + D u` with a possibly singular `E`. The frequency-domain
//! description assumes the consistent initial condition `E x(0) = 0`; no
//! time-domain simulation is provided.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Realization `(E, A, B, C, D)` of a linear time-invariant descriptor system.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSystem<T: Scalar> {
    pub e: DMatrix<T>,
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
}

impl<T: Scalar> DescriptorSystem<T> {
    pub fn new(e: DMatrix<T>, a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || e.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "E is {:?} and A is {:?}; both must be square of equal size",
                e.shape(),
                a.shape()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::DimensionMismatch(format!(
                "D is {:?}, expected ({}, {})",
                d.shape(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { e, a, b, c, d })
    }

    /// Standard state-space system with `E = I`.
    pub fn standard(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        Self::new(DMatrix::identity(n, n), a, b, c, d)
    }

    /// Zero-order system `G(s) = D`.
    pub fn constant(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self { e: dense::zeros(0, 0), a: dense::zeros(0, 0), b: dense::zeros(0, m), c: dense::zeros(p, 0), d }
    }

    /// Builds a system from row-major slices; convenient for small examples.
    #[allow(clippy::too_many_arguments)]
    pub fn from_rows(n: usize, m: usize, p: usize, e: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Self> {
        let conv = |r: usize, c: usize, v: &[f64]| -> Result<DMatrix<T>> {
            if v.len() != r * c {
                return Err(Error::DimensionMismatch(format!("expected {} entries, got {}", r * c, v.len())));
            }
            Ok(DMatrix::from_row_iterator(r, c, v.iter().map(|&x| T::lit(x))))
        };
        Self::new(conv(n, n, e)?, conv(n, n, a)?, conv(n, m, b)?, conv(p, n, c)?, conv(p, m, d)?)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Applies the restricted system equivalence `(W E T, W A T, W B, C T, D)`.
    pub fn transform(&self, w: &DMatrix<T>, t: &DMatrix<T>) -> Result<Self> {
        Self::new(w * &self.e * t, w * &self.a * t, w * &self.b, &self.c * t, self.d.clone())
    }

    /// `G(s) = C (sE - A)^{-1} B + D`.
    pub fn eval_transfer(&self, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
        let n = self.n();
        let dc = self.d.map(|x| Complex::new(x, T::zero()));
        if n == 0 {
            return Ok(dc);
        }
        let mut pencil = DMatrix::from_fn(n, n, |i, j| {
            Complex::new(self.e[(i, j)], T::zero()) * s - Complex::new(self.a[(i, j)], T::zero())
        });
        // row then column equilibration by powers of two
        let modulus = |z: Complex<T>| nalgebra::ComplexField::modulus(z);
        let pow2 = |m: T| if m > T::zero() { T::lit(2f64.powi(-m.as_f64().log2().round() as i32)) } else { T::one() };
        let mut rows = vec![T::one(); n];
        for i in 0..n {
            rows[i] = pow2((0..n).map(|j| modulus(pencil[(i, j)])).fold(T::zero(), |a, b| a.max(b)));
            pencil.row_mut(i).scale_mut(rows[i]);
        }
        let mut cols = vec![T::one(); n];
        for j in 0..n {
            cols[j] = pow2((0..n).map(|i| modulus(pencil[(i, j)])).fold(T::zero(), |a, b| a.max(b)));
            pencil.column_mut(j).scale_mut(cols[j]);
        }
        let lu = pencil.lu();
        let u = lu.u();
        let mut lo = T::max_value().unwrap();
        let mut hi = T::zero();
        for i in 0..n {
            let v = modulus(u[(i, i)]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == T::zero() || lo / hi < singular_threshold::<T>(n) {
            return Err(Error::SingularAtPoint);
        }
        let bc = DMatrix::from_fn(n, self.m(), |i, j| Complex::new(self.b[(i, j)] * rows[i], T::zero()));
        let y = lu.solve(&bc).ok_or(Error::SingularAtPoint)?;
        let x = DMatrix::from_fn(n, self.m(), |i, j| y[(i, j)] * Complex::new(cols[i], T::zero()));
        let cc = self.c.map(|x| Complex::new(x, T::zero()));
        Ok(cc * x + dc)
    }

    /// Evaluates the transfer function on a frequency grid. Grid points are
    /// processed in parallel; the output keeps grid order. Points where the
    /// pencil is singular are reported as `None`.
    pub fn frequency_sweep(&self, grid: &FrequencyGrid<T>) -> FrequencyResponse<T> {
        let omegas = grid.frequencies();
        let values: Vec<Option<DMatrix<Complex<T>>>> = omegas
            .par_iter()
            .map(|&w| self.eval_transfer(Complex::new(T::zero(), w)).ok())
            .collect();
        FrequencyResponse { grid: grid.clone(), points: omegas.into_iter().zip(values).collect() }
    }

    /// Realization of `G - H`.
    pub fn error_system(&self, other: &Self) -> Result<Self> {
        if self.m() != other.m() || self.p() != other.p() {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract a {}x{} system from a {}x{} system",
                other.p(),
                other.m(),
                self.p(),
                self.m()
            )));
        }
        Self::new(
            dense::block_diag(&self.e, &other.e),
            dense::block_diag(&self.a, &other.a),
            dense::vstack(&self.b, &other.b),
            dense::hstack(&self.c, &(-&other.c)),
            &self.d - &other.d,
        )
    }

    /// Parallel interconnection `G + H`.
    pub fn sum_system(&self, other: &Self) -> Result<Self> {
        let neg = Self { c: -&other.c, d: -&other.d, ..other.clone() };
        self.error_system(&neg)
    }

    /// Probabilistic regularity test of the pencil `lambda E - A`.
    ///
    /// Draws `trials` points on a circle of radius `||A|| / ||E||` and
    /// returns the first one at which the pencil is well conditioned.
    pub fn probe_regular(&self, trials: usize, seed: u64) -> (bool, Option<Complex<T>>) {
        let n = self.n();
        if n == 0 {
            return (true, Some(Complex::new(T::one(), T::zero())));
        }
        let ne = dense::fro(&self.e);
        let na = dense::fro(&self.a);
        let radius = if ne == T::zero() || na == T::zero() { T::one() } else { na / ne };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let threshold = singular_threshold::<T>(n);
        for _ in 0..trials.max(1) {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let lambda = Complex::new(radius * T::lit(phase.cos()), radius * T::lit(phase.sin()));
            let pencil = DMatrix::from_fn(n, n, |i, j| {
                Complex::new(self.e[(i, j)], T::zero()) * lambda - Complex::new(self.a[(i, j)], T::zero())
            });
            if dense::equilibrated_rcond_complex(&pencil) > threshold {
                return (true, Some(lambda));
            }
        }
        (false, None)
    }
}

/// Pivot-ratio threshold below which `lambda E - A` counts as singular,
/// the reciprocal of the `1 / (n eps 1e4)` conditioning bound.
pub(crate) fn singular_threshold<T: Scalar>(n: usize) -> T {
    T::from_count(n.max(1)) * T::eps() * T::lit(1e4)
}

/// Logarithmically spaced grid of positive radian frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T: Scalar> {
    pub omega_min: T,
    pub omega_max: T,
    pub count: usize,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn logspace(omega_min: T, omega_max: T, count: usize) -> Result<Self> {
        if count == 0 || omega_min <= T::zero() || (count > 1 && omega_max <= omega_min) {
            return Err(Error::InvalidInput("frequency grid needs 0 < w_min < w_max and count >= 1".into()));
        }
        Ok(Self { omega_min, omega_max, count })
    }

    pub fn frequencies(&self) -> Vec<T> {
        if self.count == 1 {
            return vec![self.omega_min];
        }
        let lo = self.omega_min.ln();
        let hi = self.omega_max.ln();
        let steps = T::from_count(self.count - 1);
        (0..self.count)
            .map(|k| {
                if k == self.count - 1 {
                    self.omega_max
                } else {
                    (lo + (hi - lo) * T::from_count(k) / steps).exp()
                }
            })
            .collect()
    }
}

impl<T: Scalar> Default for FrequencyGrid<T> {
    /// 200 points on `[1e-4, 1e4]` rad/s.
    fn default() -> Self {
        Self { omega_min: T::lit(1e-4), omega_max: T::lit(1e4), count: 200 }
    }
}

/// Sampled transfer function; `None` marks points where `iw E - A` was singular.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse<T: Scalar> {
    pub grid: FrequencyGrid<T>,
    pub points: Vec<(T, Option<DMatrix<Complex<T>>>)>,
}

impl<T: Scalar> FrequencyResponse<T> {
    pub fn gaps(&self) -> usize {
        self.points.iter().filter(|(_, v)| v.is_none()).count()
    }
}

/// Largest singular value of a complex matrix.
pub fn sigma_max<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    // the real embedding [[Re, -Im], [Im, Re]] doubles every singular value
    let (r, c) = m.shape();
    let mut emb = DMatrix::<T>::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i + r, j + c)] = z.re;
            emb[(i, j + c)] = -z.im;
            emb[(i + r, j)] = z.im;
        }
    }
    dense::norm2(&emb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(e: f64, a: f64, b: f64, c: f64, d: f64) -> DescriptorSystem<f64> {
        DescriptorSystem::from_rows(1, 1, 1, &[e], &[a], &[b], &[c], &[d]).unwrap()
    }

    fn re(s: f64) -> Complex<f64> {
        Complex::new(s, 0.0)
    }

    #[test]
    fn eval_first_order_lag() {
        let g = scalar(1.0, -1.0, 1.0, 1.0, 0.0);
        assert!((g.eval_transfer(re(0.0)).unwrap()[(0, 0)] - re(1.0)).norm() < 1e-15);
        assert!((g.eval_transfer(re(1.0)).unwrap()[(0, 0)] - re(0.5)).norm() < 1e-15);
    }

    #[test]
    fn eval_algebraic_system() {
        let g = scalar(0.0, 1.0, 2.0, 3.0, 1.0);
        let v = g.eval_transfer(re(10.0)).unwrap()[(0, 0)];
        assert!((v - re(-5.0)).norm() < 1e-14);
    }

    #[test]
    fn eval_at_pole_is_singular() {
        let g = scalar(1.0, -1.0, 1.0, 1.0, 0.0);
        assert_eq!(g.eval_transfer(re(-1.0)), Err(Error::SingularAtPoint));
    }

    #[test]
    fn sweep_magnitudes() {
        let g = scalar(1.0, -1.0, 1.0, 1.0, 0.0);
        let grid = FrequencyGrid::logspace(1.0, 1.0, 1).unwrap();
        let r = g.frequency_sweep(&grid);
        let v = r.points[0].1.as_ref().unwrap()[(0, 0)].norm();
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-14);

        let grid = FrequencyGrid::logspace(0.1, 10.0, 3).unwrap();
        let r = g.frequency_sweep(&grid);
        let expect = [0.995, 0.707, 0.0995];
        for ((w, v), e) in r.points.iter().zip(expect) {
            let mag = v.as_ref().unwrap()[(0, 0)].norm();
            assert!((mag - e).abs() < 1e-3, "w={w} mag={mag}");
            assert!((mag - 1.0 / (1.0 + w * w).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn sweep_constant() {
        let g = DescriptorSystem::constant(DMatrix::from_element(1, 1, 2.0));
        let r = g.frequency_sweep(&FrequencyGrid::default());
        assert_eq!(r.points.len(), 200);
        assert!(r.points.iter().all(|(_, v)| (v.as_ref().unwrap()[(0, 0)] - re(2.0)).norm() == 0.0));
    }

    #[test]
    fn default_grid_spans_range() {
        let w = FrequencyGrid::<f64>::default().frequencies();
        assert_eq!(w.len(), 200);
        assert!((w[0] - 1e-4).abs() < 1e-18);
        assert_eq!(w[199], 1e4);
        assert!(w.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn error_system_cases() {
        let g = scalar(1.0, -1.0, 1.0, 1.0, 0.0);
        let z = g.error_system(&g).unwrap().eval_transfer(re(1.0)).unwrap();
        assert!(z[(0, 0)].norm() < 1e-15);

        let h = DescriptorSystem::constant(DMatrix::from_element(1, 1, 0.5));
        let v = g.error_system(&h).unwrap().eval_transfer(re(0.0)).unwrap();
        assert!((v[(0, 0)] - re(0.5)).norm() < 1e-15);

        let wide = DescriptorSystem::<f64>::constant(DMatrix::zeros(1, 2));
        assert!(matches!(g.error_system(&wide), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn regularity_probe() {
        let g = DescriptorSystem::<f64>::standard(-DMatrix::identity(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1)).unwrap();
        assert!(g.probe_regular(5, 1).0);

        let z = scalar(0.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(z.probe_regular(5, 1), (false, None));

        let g = DescriptorSystem::<f64>::from_rows(2, 1, 1, &[1.0, 0.0, 0.0, 0.0], &[-1.0, 0.0, 0.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[0.0]).unwrap();
        assert!(g.probe_regular(5, 7).0);
    }

    #[test]
    fn dimension_checks() {
        let r = DescriptorSystem::<f64>::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
