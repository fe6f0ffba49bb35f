//! Small dense linear-algebra kernels shared by the higher-level modules: a
//! cyclic Jacobi eigensolver for Hermitian matrices and singular values of
//! real matrices.
//!
//! Operator dimensions in this crate stay tiny (products of local Hilbert
//! space dimensions, typically <= 16), so an O(n^3)-per-sweep Jacobi solver
//! is fast enough, converges to machine precision, and is deterministic down
//! to the last bit for identical inputs.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense real matrix.
pub type RMatrix<T> = nalgebra::DMatrix<T>;
/// Dense complex matrix.
pub type CMatrix<T> = nalgebra::DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = nalgebra::DVector<Complex<T>>;

const MAX_SWEEPS: usize = 64;

/// Eigensystem of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Eigenvalues sorted by decreasing magnitude.
    pub values: Vec<T>,
    /// Unit-norm eigenvectors as columns, aligned with `values`. Each vector's
    /// phase is fixed so its largest-magnitude component is real positive.
    pub vectors: CMatrix<T>,
}

/// Full eigensystem of a Hermitian matrix.
pub fn hermitian_eigen<T: Real>(matrix: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let (values, vectors) = jacobi(matrix, true)?;
    Ok(HermitianEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only, sorted by decreasing magnitude. Skips the eigenvector
/// accumulation, roughly halving the work.
pub fn hermitian_eigenvalues<T: Real>(matrix: &CMatrix<T>) -> Result<Vec<T>> {
    Ok(jacobi(matrix, false)?.0)
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn spectral_radius<T: Real>(matrix: &CMatrix<T>) -> Result<T> {
    let values = hermitian_eigenvalues(matrix)?;
    Ok(values.first().map(|v| v.abs()).unwrap_or_else(T::zero))
}

/// Cyclic Jacobi iteration. The input is symmetrized up front, so entries a
/// few ulps away from Hermitian (for example freshly assembled sums of
/// Kronecker products) are handled without fuss.
fn jacobi<T: Real>(
    matrix: &CMatrix<T>,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<CMatrix<T>>)> {
    let n = matrix.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("eigensolver needs a nonempty matrix".into()));
    }
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }

    let half = T::one() / (T::one() + T::one());
    let mut a = CMatrix::<T>::from_fn(n, n, |r, c| {
        (matrix[(r, c)] + matrix[(c, r)].conj()).scale(half)
    });
    let mut v = want_vectors.then(|| CMatrix::<T>::identity(n, n));

    let scale = fro_norm(&a);
    if scale > T::zero() {
        let stop = T::eps() * scale;
        let mut last_off: Option<T> = None;
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let off = off_norm(&a);
            if off <= stop {
                converged = true;
                break;
            }
            // Rounding floor: once sweeps stop shrinking the off-diagonal
            // mass near machine level, more rotations cannot help.
            if off <= stop * T::of(1e3) && last_off.is_some_and(|l| off >= l) {
                converged = true;
                break;
            }
            last_off = Some(off);
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, v.as_mut(), p, q);
                }
            }
        }
        if !converged && off_norm(&a) > stop * T::of(1e3) {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver stalled: off-diagonal norm {:e} vs scale {:e} after {} sweeps",
                off_norm(&a),
                scale,
                MAX_SWEEPS
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| {
        diag[j]
            .abs()
            .partial_cmp(&diag[i].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = CMatrix::<T>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &v.column(src));
        }
        fix_phases(&mut sorted);
        sorted
    });
    Ok((values, vectors))
}

/// Applies the unitary 2x2 rotation that zeroes the (p,q) entry.
#[inline]
fn rotate<T: Real>(a: &mut CMatrix<T>, v: Option<&mut CMatrix<T>>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let m = (apq.re * apq.re + apq.im * apq.im).sqrt();
    if m == T::zero() {
        return;
    }
    let u = apq.unscale(m);
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let two = T::one() + T::one();
    let tau = (app - aqq) / (two * m);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    let su = u.scale(s);
    let su_conj = u.conj().scale(s);

    let n = a.nrows();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp.scale(c) + arq * su_conj;
        let new_rq = arq.scale(c) - arp * su;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp.conj();
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq.conj();
    }
    a[(p, p)] = Complex::new(app + t * m, T::zero());
    a[(q, q)] = Complex::new(aqq - t * m, T::zero());
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());

    if let Some(v) = v {
        for r in 0..n {
            let vrp = v[(r, p)];
            let vrq = v[(r, q)];
            v[(r, p)] = vrp.scale(c) + vrq * su_conj;
            v[(r, q)] = vrq.scale(c) - vrp * su;
        }
    }
}

/// Rotates each column so its largest-magnitude component is real positive.
/// The first index attains the maximum on ties, which keeps the choice
/// deterministic.
fn fix_phases<T: Real>(v: &mut CMatrix<T>) {
    let (n, cols) = (v.nrows(), v.ncols());
    for j in 0..cols {
        let mut best = T::zero();
        let mut best_row = 0;
        for r in 0..n {
            let mag = v[(r, j)].norm_sqr();
            if mag > best {
                best = mag;
                best_row = r;
            }
        }
        let z = v[(best_row, j)];
        let m = z.norm_sqr().sqrt();
        if m > T::zero() {
            let phase = z.conj().unscale(m);
            for r in 0..n {
                let val = v[(r, j)] * phase;
                v[(r, j)] = val;
            }
            v[(best_row, j)].im = T::zero();
        }
    }
}

fn fro_norm<T: Real>(a: &CMatrix<T>) -> T {
    let mut sum = T::zero();
    for x in a.iter() {
        sum += x.norm_sqr();
    }
    sum.sqrt()
}

fn off_norm<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.nrows();
    let mut sum = T::zero();
    for p in 0..n {
        for q in p + 1..n {
            sum += a[(p, q)].norm_sqr() + a[(q, p)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// Singular values of a real matrix, sorted descending.
pub fn real_singular_values<T: Real>(m: &RMatrix<T>) -> Result<Vec<T>> {
    if m.is_empty() {
        return Err(Error::InvalidInput("singular values need a nonempty matrix".into()));
    }
    let svd = nalgebra::linalg::SVD::try_new(m.clone(), false, false, T::eps(), 10_000)
        .ok_or_else(|| Error::Numeric("SVD failed to converge".into()))?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn diagonal_matrix_is_its_own_eigensystem() {
        let a = CMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(-5.0, 0.0),
            c(1.0, 0.0),
        ]));
        let eig = hermitian_eigen(&a).unwrap();
        assert_eq!(eig.values, vec![-5.0, 3.0, 1.0]);
        for j in 0..3 {
            for r in 0..3 {
                let expect = if (j, r) == (0, 1) || (j, r) == (1, 0) || (j, r) == (2, 2) {
                    1.0
                } else {
                    0.0
                };
                assert!((eig.vectors[(r, j)] - c(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_x_and_y_have_unit_spectrum() {
        let sx = CMatrix::<f64>::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let sy = CMatrix::<f64>::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        for m in [&sx, &sy] {
            let eig = hermitian_eigen(m).unwrap();
            let mut vals = eig.values.clone();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((vals[0] + 1.0).abs() < 1e-14);
            assert!((vals[1] - 1.0).abs() < 1e-14);
        }
        // Phase convention: first component real positive for the sx vectors.
        let eig = hermitian_eigen(&sx).unwrap();
        for j in 0..2 {
            assert!(eig.vectors[(0, j)].re > 0.0);
            assert!(eig.vectors[(0, j)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn random_hermitian_reconstruction() {
        // Deterministic pseudo-random Hermitian matrix.
        let n = 8;
        let mut a = CMatrix::<f64>::zeros(n, n);
        for r in 0..n {
            for s in r..n {
                let re = ((r * 7 + s * 3 + 1) as f64).sin();
                let im = if r == s { 0.0 } else { ((r as f64) - 2.0 * (s as f64)).cos() };
                a[(r, s)] = c(re, im);
                a[(s, r)] = c(re, -im);
            }
        }
        let eig = hermitian_eigen(&a).unwrap();
        let scale = fro_norm(&a);

        // Residual per eigenpair.
        for j in 0..n {
            let v = eig.vectors.column(j);
            let av = &a * v;
            let mut resid: f64 = 0.0;
            for r in 0..n {
                resid += (av[r] - v[r].scale(eig.values[j])).norm_sqr();
            }
            assert!(resid.sqrt() <= 1e-13 * scale, "residual {}", resid.sqrt());
        }

        // Orthonormality.
        let gram = eig.vectors.adjoint() * &eig.vectors;
        for r in 0..n {
            for s in 0..n {
                let expect = if r == s { 1.0 } else { 0.0 };
                assert!((gram[(r, s)] - c(expect, 0.0)).norm() < 1e-13);
            }
        }

        // Trace and magnitude ordering.
        let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
        let sum: f64 = eig.values.iter().sum();
        assert!((trace - sum).abs() < 1e-12);
        for w in eig.values.windows(2) {
            assert!(w[0].abs() >= w[1].abs() - 1e-15);
        }
    }

    #[test]
    fn eigenvalues_only_matches_full_solve() {
        let a = CMatrix::<f64>::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.5, 0.25),
                c(0.0, -1.0),
                c(0.5, -0.25),
                c(-2.0, 0.0),
                c(0.75, 0.0),
                c(0.0, 1.0),
                c(0.75, 0.0),
                c(0.5, 0.0),
            ],
        );
        let full = hermitian_eigen(&a).unwrap();
        let vals = hermitian_eigenvalues(&a).unwrap();
        for (x, y) in full.values.iter().zip(vals.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((spectral_radius(&a).unwrap() - vals[0].abs()).abs() < 1e-15);
    }

    #[test]
    fn zero_and_non_square_inputs() {
        let z = CMatrix::<f64>::zeros(4, 4);
        let eig = hermitian_eigen(&z).unwrap();
        assert!(eig.values.iter().all(|v| *v == 0.0));

        let rect = CMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            hermitian_eigen(&rect),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn real_singular_values_known_cases() {
        let w = RMatrix::<f64>::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let s = real_singular_values(&w).unwrap();
        assert!((s[0] - 2.0_f64.sqrt()).abs() < 1e-14);
        assert!((s[1] - 2.0_f64.sqrt()).abs() < 1e-14);

        let rect = RMatrix::<f64>::from_row_slice(1, 3, &[3.0, 0.0, 4.0]);
        let s = real_singular_values(&rect).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn f32_instantiation_works() {
        let a = CMatrix::<f32>::from_row_slice(
            2,
            2,
            &[
                Complex::new(1.0_f32, 0.0),
                Complex::new(0.5, 0.5),
                Complex::new(0.5, -0.5),
                Complex::new(-1.0, 0.0),
            ],
        );
        let eig = hermitian_eigen(&a).unwrap();
        let radius = spectral_radius(&a).unwrap();
        assert!((eig.values[0].abs() - radius).abs() < 1e-6);
    }
}
