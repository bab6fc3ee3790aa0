//! Dense numerical kernels for the adaptive beamformers: Hermitian
//! eigendecomposition by cyclic Jacobi rotations, Hermitian positive-definite
//! solves by Cholesky factorization, and analytic-signal envelope extraction.
//!
//! The kernels are generic over [`Field`], so the same code path serves real
//! symmetric and complex Hermitian matrices; the orders in this crate stay
//! small (≤ the receive aperture), which is exactly the regime where Jacobi
//! iteration is simple, accurate, and fast enough.

use crate::error::{invalid, numerical, Result};
use crate::scalar::{real, Field, RealScalar};
use num_complex::Complex;
use num_traits::{Float, One, Zero};
use rustfft::{FftNum, FftPlanner};

/// Relative off-diagonal norm at which the Jacobi iteration is converged.
const JACOBI_TOL: f64 = 1e-12;
/// Sweep budget before the eigensolver reports non-convergence.
const JACOBI_MAX_SWEEPS: usize = 30;
/// Relative tolerance for the Hermitian-symmetry input check.
const HERMITIAN_TOL: f64 = 1e-12;

/// Dense Hermitian matrix in row-major full storage.
///
/// Both triangles are kept so kernels can stream rows; constructors enforce
/// `entry[i][j] = conj(entry[j][i])` (within `1e-12` of the magnitude scale)
/// and real diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<F> {
    n: usize,
    a: Vec<F>,
}

impl<F: Field> HermitianMatrix<F> {
    /// Wraps a row-major buffer after checking shape and Hermitian symmetry.
    pub fn from_flat(n: usize, a: Vec<F>) -> Result<Self> {
        if n == 0 || a.len() != n * n {
            return invalid("matrix buffer does not match the stated order");
        }
        if a.iter().any(|v| !v.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        let m = Self { n, a };
        let scale = m.max_abs();
        let tol = real::<F::Real>(HERMITIAN_TOL) * scale;
        for i in 0..n {
            if m.get(i, i).im().abs() > tol {
                return invalid("diagonal entries must be real");
            }
            for j in (i + 1)..n {
                if (m.get(i, j) - m.get(j, i).conj()).abs() > tol {
                    return invalid("matrix is not Hermitian");
                }
            }
        }
        Ok(m)
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("matrix rows must form a square");
        }
        Self::from_flat(n, rows.into_iter().flatten().collect())
    }

    /// Zero matrix of the given order (useful as an accumulator).
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![F::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = F::one();
        }
        m
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.a[i * self.n + j]
    }

    /// Sets `entry[i][j] = v` and mirrors the conjugate; a diagonal write keeps
    /// only the real part.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: F) {
        if i == j {
            self.a[i * self.n + i] = F::from_real(v.re());
        } else {
            self.a[i * self.n + j] = v;
            self.a[j * self.n + i] = v.conj();
        }
    }

    #[inline]
    pub fn as_slice(&self) -> &[F] {
        &self.a
    }

    pub fn trace(&self) -> F::Real {
        (0..self.n)
            .map(|i| self.get(i, i).re())
            .fold(F::Real::zero(), |acc, v| acc + v)
    }

    /// Adds `epsilon` to every diagonal entry.
    pub fn add_scaled_identity(&mut self, epsilon: F::Real) {
        for i in 0..self.n {
            let d = self.a[i * self.n + i];
            self.a[i * self.n + i] = F::from_real(d.re() + epsilon);
        }
    }

    pub fn fro_norm(&self) -> F::Real {
        self.a
            .iter()
            .fold(F::Real::zero(), |acc, v| acc + v.abs_sq())
            .sqrt()
    }

    fn max_abs(&self) -> F::Real {
        self.a
            .iter()
            .fold(F::Real::zero(), |acc, v| acc.max(v.abs_sq()))
            .sqrt()
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending, eigenvectors as
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<F: Field> {
    n: usize,
    /// λ₁ ≥ λ₂ ≥ … (real for Hermitian input).
    pub eigenvalues: Vec<F::Real>,
    /// Column-major eigenvector storage; column `j` pairs with `eigenvalues[j]`.
    vectors: Vec<F>,
}

impl<F: Field> EigenDecomposition<F> {
    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    /// Eigenvector paired with `eigenvalues[j]`.
    #[inline]
    pub fn vector(&self, j: usize) -> &[F] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }

    /// Assembles a decomposition from parts (used by low-rank fast paths).
    pub fn from_parts(n: usize, eigenvalues: Vec<F::Real>, vectors: Vec<F>) -> Self {
        debug_assert_eq!(eigenvalues.len(), n);
        debug_assert_eq!(vectors.len(), n * n);
        Self {
            n,
            eigenvalues,
            vectors,
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Iterates row-cyclic sweeps of 2×2 unitary rotations until the off-diagonal
/// Frobenius norm falls below `1e-12 · ‖m‖`, with a budget of 30 sweeps.
/// Rotations with pivots already far below the convergence threshold are
/// skipped; they cannot move the iteration.
pub fn eig_hermitian<F: Field>(m: &HermitianMatrix<F>) -> Result<EigenDecomposition<F>> {
    let n = m.order();
    let mut a = m.a.clone();
    // Eigenvector accumulator, column-major so rotations touch contiguous runs.
    let mut v = vec![F::zero(); n * n];
    for j in 0..n {
        v[j * n + j] = F::one();
    }
    let tol = real::<F::Real>(JACOBI_TOL) * m.fro_norm();
    let skip = tol / real::<F::Real>(n as f64);
    let skip_sq = skip * skip;

    let mut converged = off_diagonal_norm(&a, n) <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return numerical(format!(
                "eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
            ));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[p * n + q];
                if g.abs_sq() <= skip_sq {
                    continue;
                }
                rotate(&mut a, &mut v, n, p, q, g);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a, n) <= tol;
    }

    // Diagonal holds the eigenvalues; sort descending, carrying the vectors.
    let mut order: Vec<usize> = (0..n).collect();
    let lambda: Vec<F::Real> = (0..n).map(|i| a[i * n + i].re()).collect();
    order.sort_by(|&i, &j| lambda[j].partial_cmp(&lambda[i]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| lambda[i]).collect();
    let mut vectors = vec![F::zero(); n * n];
    for (dst, &src) in order.iter().enumerate() {
        vectors[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
    }
    Ok(EigenDecomposition {
        n,
        eigenvalues,
        vectors,
    })
}

fn off_diagonal_norm<F: Field>(a: &[F], n: usize) -> F::Real {
    let mut s = F::Real::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            s = s + a[i * n + j].abs_sq();
        }
    }
    (s + s).sqrt()
}

/// Applies the unitary 2×2 rotation that annihilates pivot (p, q).
///
/// With g = a[p][q] = |g|·u, α = a[p][p], β = a[q][q], the rotation
/// J = [[c, -s·conj(u)], [s·conj(u̅)… ]] is parameterized by the stable root of
/// t² − 2τt − 1 = 0, τ = (β − α) / (2|g|):
///   rows:    a[p][j] ← c·a[p][j] + s·u·a[q][j]
///            a[q][j] ← c·a[q][j] − s·conj(u)·a[p][j]
///   pivots:  a[p][p] ← c²α + 2cs|g| + s²β,  a[q][q] ← s²α − 2cs|g| + c²β
/// and the eigenvector columns transform the same way. For real input u = ±1
/// and everything reduces to the classical symmetric rotation.
#[inline]
fn rotate<F: Field>(a: &mut [F], v: &mut [F], n: usize, p: usize, q: usize, g: F) {
    let abs_g = g.abs();
    let alpha = a[p * n + p].re();
    let beta = a[q * n + q].re();
    let two = real::<F::Real>(2.0);
    let tau = (beta - alpha) / (two * abs_g);
    let root = (F::Real::one() + tau * tau).sqrt();
    let t = if tau >= F::Real::zero() {
        -F::Real::one() / (tau + root)
    } else {
        F::Real::one() / (root - tau)
    };
    let c = F::Real::one() / (F::Real::one() + t * t).sqrt();
    let s = t * c;
    let u = g.scale(F::Real::one() / abs_g);
    let su = u.scale(s);
    let su_conj = u.conj().scale(s);

    // Rows p and q of the matrix (contiguous), then mirror into the columns.
    let (head, tail) = a.split_at_mut(q * n);
    let rp = &mut head[p * n..p * n + n];
    let rq = &mut tail[..n];
    for (ap, aq) in rp.iter_mut().zip(rq.iter_mut()) {
        let x = *ap;
        let y = *aq;
        *ap = x.scale(c) + su * y;
        *aq = y.scale(c) - su_conj * x;
    }
    let app = c * c * alpha + two * c * s * abs_g + s * s * beta;
    let aqq = s * s * alpha - two * c * s * abs_g + c * c * beta;
    a[p * n + p] = F::from_real(app);
    a[q * n + q] = F::from_real(aqq);
    a[p * n + q] = F::zero();
    a[q * n + p] = F::zero();
    for j in 0..n {
        if j != p && j != q {
            a[j * n + p] = a[p * n + j].conj();
            a[j * n + q] = a[q * n + j].conj();
        }
    }

    // Eigenvector columns p and q (contiguous in column-major storage).
    let (vh, vt) = v.split_at_mut(q * n);
    let vp = &mut vh[p * n..p * n + n];
    let vq = &mut vt[..n];
    for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
        let x = *xp;
        let y = *xq;
        *xp = x.scale(c) + su_conj * y;
        *xq = y.scale(c) - su * x;
    }
}

/// Solves `m · x = b` for Hermitian positive-definite `m` via Cholesky
/// factorization; failure to factorize is the definiteness check.
pub fn solve_hpd<F: Field>(m: &HermitianMatrix<F>, b: &[F]) -> Result<Vec<F>> {
    let n = m.order();
    if b.len() != n {
        return invalid("right-hand side length does not match the matrix order");
    }
    // Lower-triangular factor L with A = L·Lᴴ, real positive diagonal.
    let mut l = vec![F::zero(); n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re();
        for k in 0..j {
            d = d - l[j * n + k].abs_sq();
        }
        if !(d > F::Real::zero()) || !d.is_finite() {
            return numerical(
                "matrix is not positive definite; increase the diagonal loading",
            );
        }
        let djj = d.sqrt();
        l[j * n + j] = F::from_real(djj);
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s = s - l[i * n + k].mul_conj(l[j * n + k]);
            }
            l[i * n + j] = s.scale(F::Real::one() / djj);
        }
    }
    // Forward pass L·y = b.
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s = s - l[i * n + k] * x[k];
        }
        x[i] = s.scale(F::Real::one() / l[i * n + i].re());
    }
    // Backward pass Lᴴ·x = y.
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s = s - l[k * n + i].conj() * x[k];
        }
        x[i] = s.scale(F::Real::one() / l[i * n + i].re());
    }
    Ok(x)
}

/// Magnitude of the analytic signal, built by zeroing the negative-frequency
/// half of the spectrum (zero-padded to a power of two for the transform).
pub fn envelope<T: RealScalar + FftNum>(signal: &[T], _fs: T) -> Result<Vec<T>> {
    let n = signal.len();
    if n < 4 {
        return invalid("envelope needs at least 4 samples");
    }
    let nfft = n.next_power_of_two();
    let mut buf: Vec<Complex<T>> = signal
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(nfft)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nfft).process(&mut buf);
    let two = real::<T>(2.0);
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || k == nfft / 2 {
            // passthrough
        } else if k < nfft / 2 {
            *v = *v * two;
        } else {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    planner.plan_fft_inverse(nfft).process(&mut buf);
    let scale = T::one() / real::<T>(nfft as f64);
    Ok(buf[..n].iter().map(|c| (c * scale).norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C64 = Complex<f64>;

    fn reconstruction_error<F: Field>(
        m: &HermitianMatrix<F>,
        e: &EigenDecomposition<F>,
    ) -> <F as Field>::Real {
        let n = m.order();
        let mut err = F::Real::zero();
        let mut norm = F::Real::zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = F::zero();
                for k in 0..n {
                    s = s + (e.vector(k)[i].mul_conj(e.vector(k)[j])).scale(e.eigenvalues[k]);
                }
                err = err + (s - m.get(i, j)).abs_sq();
                norm = norm + m.get(i, j).abs_sq();
            }
        }
        if norm > F::Real::zero() {
            (err / norm).sqrt()
        } else {
            err.sqrt()
        }
    }

    fn orthonormality_error<F: Field>(e: &EigenDecomposition<F>) -> <F as Field>::Real {
        let n = e.order();
        let mut worst = F::Real::zero();
        for i in 0..n {
            for j in i..n {
                let mut dot = F::zero();
                for k in 0..n {
                    dot = dot + e.vector(i)[k].mul_conj(e.vector(j)[k]);
                }
                let target = if i == j { F::one() } else { F::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, pd: bool) -> HermitianMatrix<C64> {
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    Complex::new(rng.random::<f64>() * 2.0 - 1.0, 0.0)
                } else {
                    Complex::new(
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    )
                };
                m.set_sym(i, j, v);
            }
        }
        if pd {
            // Shift well into positive definiteness: A + (‖A‖ + 1)·I.
            let shift = m.fro_norm() + 1.0;
            m.add_scaled_identity(shift);
        }
        m
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set_sym(i, j, rng.random::<f64>() * 2.0 - 1.0);
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_decomposes_trivially() {
        let m = HermitianMatrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 1.0]);
        assert_abs_diff_eq!(f64::abs(e.vector(0)[0]), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f64::abs(e.vector(1)[1]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn coupled_two_by_two_matches_hand_solution() {
        let m = HermitianMatrix::from_rows(vec![vec![1.1, 1.0], vec![1.0, 1.1]]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 2.1, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 0.1, epsilon = 1e-12);
        // Leading eigenvector is [1, 1]/√2 up to sign.
        let v = e.vector(0);
        assert_abs_diff_eq!(f64::abs(v[0] - v[1]), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f64::abs(v[0]), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn identity_has_degenerate_unit_spectrum() {
        let m = HermitianMatrix::<f64>::identity(3);
        let e = eig_hermitian(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        // Degenerate spectrum: verify via reconstruction, not vector identity.
        assert!(reconstruction_error(&m, &e) <= 1e-12);
    }

    #[test]
    fn complex_hermitian_pair_splits_to_zero_and_two() {
        let m = HermitianMatrix::from_rows(vec![
            vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 0.0, epsilon = 1e-12);
        assert!(reconstruction_error(&m, &e) <= 1e-12);
    }

    #[test]
    fn random_spectra_reconstruct_orthonormally() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(1..=20);
            let m = random_hermitian(&mut rng, n, true);
            let e = eig_hermitian(&m).unwrap();
            assert!(reconstruction_error(&m, &e) <= 1e-10);
            assert!(orthonormality_error(&e) <= 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            assert!(e.eigenvalues.iter().all(|&l| l > 0.0), "PD spectrum");
            let trace_sum: f64 = e.eigenvalues.iter().sum();
            assert_abs_diff_eq!(trace_sum, m.trace(), epsilon = 1e-10 * m.trace().abs());
        }
    }

    #[test]
    fn real_symmetric_path_matches_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.random_range(2..=24);
            let m = random_symmetric(&mut rng, n);
            let e = eig_hermitian(&m).unwrap();
            assert!(reconstruction_error(&m, &e) <= 1e-10);
            assert!(orthonormality_error(&e) <= 1e-10);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let r = HermitianMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert!(r.is_err());
        let imag_diag = HermitianMatrix::from_rows(vec![
            vec![C64::new(1.0, 0.4), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ]);
        assert!(imag_diag.is_err());
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let m = HermitianMatrix::from_flat(3, vec![0.0; 9]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let m = HermitianMatrix::<f64>::identity(2);
        let x = solve_hpd(&m, &[1.0, 1.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn solve_diagonal_matches_analytic_inverse() {
        let m = HermitianMatrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = solve_hpd(&m, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn singular_solve_fails() {
        let m = HermitianMatrix::from_flat(2, vec![0.0; 4]).unwrap();
        assert!(solve_hpd(&m, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn random_hpd_solves_hit_residual_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..15 {
            let n = rng.random_range(1..=66);
            let m = random_hermitian(&mut rng, n, true);
            let b: Vec<C64> = (0..n)
                .map(|_| {
                    Complex::new(
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    )
                })
                .collect();
            let x = solve_hpd(&m, &b).unwrap();
            let mut err = 0.0f64;
            let mut bn = 0.0f64;
            for i in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    s += m.get(i, j) * x[j];
                }
                err += (s - b[i]).norm_sqr();
                bn += b[i].norm_sqr();
            }
            assert!((err / bn).sqrt() <= 1e-10);
        }
    }

    #[test]
    fn envelope_of_zero_is_zero() {
        let e = envelope(&[0.0f64; 64], 1.0).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn envelope_of_unit_tone_is_unit() {
        let n = 256;
        let fs = 16.0e6;
        let f = fs / 16.0;
        let s: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).cos())
            .collect();
        let e = envelope(&s, fs).unwrap();
        for &v in &e[16..n - 16] {
            assert!((v - 1.0).abs() < 0.01, "interior envelope {v}");
        }
        let half: Vec<f64> = s.iter().map(|&v| 0.5 * v).collect();
        let eh = envelope(&half, fs).unwrap();
        for &v in &eh[16..n - 16] {
            assert!((v - 0.5).abs() < 0.005);
        }
    }

    #[test]
    fn envelope_is_positively_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s: Vec<f64> = (0..100).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let c = 7.3;
        let scaled: Vec<f64> = s.iter().map(|&v| c * v).collect();
        let a = envelope(&s, 1.0).unwrap();
        let b = envelope(&scaled, 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(c * x, *y, epsilon = 1e-12 * c.max(1.0));
        }
    }

    #[test]
    fn envelope_rejects_short_input() {
        assert!(envelope(&[1.0f64, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    #[ignore = "manual throughput probe"]
    fn eig_throughput_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &n in &[22usize, 33, 51, 66] {
            let mats: Vec<_> = (0..40).map(|_| random_symmetric(&mut rng, n)).collect();
            let start = std::time::Instant::now();
            let mut acc = 0.0;
            for m in &mats {
                let e = eig_hermitian(m).unwrap();
                acc += e.eigenvalues[0];
            }
            let per = start.elapsed().as_secs_f64() / mats.len() as f64;
            println!("order {n}: {:.3} ms per decomposition (checksum {acc:.3})", per * 1e3);
        }
    }
}
