//! Quantum-to-classical gaps, bound reports, and zero-gap certificates.
//!
//! For a weight matrix `W` of shape `N_a x N_b` the quantum expectation can
//! reach `sqrt(N_a N_b) ||W||` while deterministic strategies stop at
//! `||W||*`. Two gauges of the distance between them:
//!
//! - the gap `G(W) = sqrt(N_a N_b) ||W|| - ||W||*`, homogeneous in `W`;
//! - the scaled gap `g(W) = sqrt(N_a N_b) - ||W||* / ||W||`, scale-free and
//!   confined to `[0, sqrt(N_a N_b) - 1]`.
//!
//! `G(W) = 0` exactly when sign vectors `d1, d2` exist making every row sum
//! of `D1 W D2` equal `sqrt(N_b/N_a) ||W||` and every column sum equal
//! `sqrt(N_a/N_b) ||W||`; such a pair is a certificate that the Bell
//! inequality of `W` admits no quantum violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::scalar::Real;
use crate::weights::WeightMatrix;

/// Largest `N_a + N_b` for which certificate search is attempted.
pub const CERTIFICATE_CAP: usize = 26;

/// A sign-vector pair certifying a zero gap. Entries are +1 or -1 and the
/// pair is normalized so `d1[0] = +1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignaturePair {
    pub d1: Vec<i8>,
    pub d2: Vec<i8>,
}

/// Gap values for one weight matrix, with a certificate when the scaled gap
/// vanishes within tolerance and the search is feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GapReport<T: Real> {
    pub operator_norm: T,
    pub hv_norm: T,
    pub gap: T,
    pub scaled_gap: T,
    pub certificate: Option<SignaturePair>,
}

/// The two upper bounds on the quantum expectation of a weight matrix,
/// alongside the classical threshold they are compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundReport<T: Real> {
    /// `sqrt(N_a N_b) ||W||`, tight for well-aligned operator choices.
    pub norm_bound: T,
    /// `K_G(max(N_a, N_b)) ||W||*`, from the Grothendieck inequality.
    pub grothendieck_bound: T,
    /// `||W||*`, the largest expectation any hidden-variable model reaches.
    pub bell_threshold: T,
    /// The order at which the Grothendieck constant was taken.
    pub grothendieck_order: usize,
}

/// Entry distribution for random weight sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapDistribution {
    /// Entries uniform on `[-1, 1]`.
    Uniform,
    /// Entries standard normal.
    Normal,
}

impl FromStr for GapDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "normal" => Ok(Self::Normal),
            other => Err(Error::InvalidInput(format!(
                "unknown distribution {other:?}, expected \"uniform\" or \"normal\""
            ))),
        }
    }
}

/// Seeded stream of random weight matrices and their gap reports.
#[derive(Debug, Clone)]
pub struct GapSampler<T: Real> {
    n_a: usize,
    n_b: usize,
    dist: GapDistribution,
    tol: T,
    rng: ChaCha8Rng,
}

/// Best known upper bound on the Grothendieck constant restricted to the
/// given order (the larger of the two matrix dimensions). Orders five and up
/// use the dimension-free bound; all values are indicative, not exact.
pub fn grothendieck_constant<T: Real>(order: usize) -> T {
    let two = T::one() + T::one();
    match order {
        0 | 1 => T::one(),
        2 => two.sqrt(),
        3 => T::of(1.5163),
        4 => T::pi() / two,
        _ => T::of(1.782),
    }
}

/// Computes both quantum bounds and the classical threshold of `w`.
pub fn bounds<T: Real>(w: &WeightMatrix<T>) -> Result<BoundReport<T>> {
    let op = w.operator_norm()?;
    let hv = w.hv_norm()?;
    let order = w.n_a().max(w.n_b());
    Ok(BoundReport {
        norm_bound: w.dim_factor() * op,
        grothendieck_bound: grothendieck_constant::<T>(order) * hv,
        bell_threshold: hv,
        grothendieck_order: order,
    })
}

/// Computes the gap and scaled gap of `w`, attempting a certificate when the
/// scaled gap is below `tol * sqrt(N_a N_b)` and the dimensions are within
/// [`CERTIFICATE_CAP`]. Tiny negative gaps (inside the same slack) clamp to
/// zero; larger norm-order violations surface as numeric errors.
pub fn quantum_gap<T: Real>(w: &WeightMatrix<T>, tol: T) -> Result<GapReport<T>> {
    let (n_a, n_b) = w.dims();
    let op = w.operator_norm()?;
    if op == T::zero() {
        return Ok(GapReport {
            operator_norm: op,
            hv_norm: T::zero(),
            gap: T::zero(),
            scaled_gap: T::zero(),
            certificate: Some(SignaturePair::all_plus(n_a, n_b)),
        });
    }
    let hv = w.hv_norm()?;
    let sqrt_nab = w.dim_factor();
    let slack = tol * sqrt_nab * op;

    let gap_raw = sqrt_nab * op - hv;
    if gap_raw < -slack {
        return Err(Error::Numeric(format!(
            "HV norm {hv} exceeds the dimensional bound {} beyond tolerance",
            sqrt_nab * op
        )));
    }
    let gap = gap_raw.max(T::zero());

    let scaled_raw = sqrt_nab - hv / op;
    let scaled_max = sqrt_nab - T::one();
    if scaled_raw > scaled_max + tol * sqrt_nab {
        return Err(Error::Numeric(format!(
            "operator norm {op} exceeds the HV norm {hv} beyond tolerance"
        )));
    }
    let scaled_gap = scaled_raw.max(T::zero()).min(scaled_max);

    let certificate = if scaled_gap <= tol * sqrt_nab && n_a + n_b <= CERTIFICATE_CAP {
        zero_gap_certificate(w, tol)?
    } else {
        None
    };
    Ok(GapReport {
        operator_norm: op,
        hv_norm: hv,
        gap,
        scaled_gap,
        certificate,
    })
}

/// Searches for a sign-vector pair certifying `G(w) = 0`, returning the
/// lexicographically smallest qualifying pair (ordering +1 before -1, `d1`
/// before `d2`) or `None` when no pair qualifies.
///
/// The smaller side is enumerated; the other side is forced, entry by entry,
/// to the sign of the corresponding weighted sum, so the search space is
/// `2^min(N_a, N_b)` pairs.
pub fn zero_gap_certificate<T: Real>(
    w: &WeightMatrix<T>,
    tol: T,
) -> Result<Option<SignaturePair>> {
    let (n_a, n_b) = w.dims();
    if n_a + n_b > CERTIFICATE_CAP {
        return Err(Error::ResourceLimit(format!(
            "certificate search over {n_a} + {n_b} signs exceeds the cap of {CERTIFICATE_CAP}"
        )));
    }
    let op = w.operator_norm()?;
    if op == T::zero() {
        return Ok(Some(SignaturePair::all_plus(n_a, n_b)));
    }

    let transposed = n_b > n_a;
    let work = if transposed { w.transpose() } else { w.clone() };
    let m = work.as_matrix();
    let (rows, cols) = work.dims();
    let rho_row = T::of(cols as f64 / rows as f64).sqrt() * op;
    let rho_col = T::of(rows as f64 / cols as f64).sqrt() * op;
    let slack = tol * work.dim_factor() * op;

    let mut best: Option<(Vec<u8>, SignaturePair)> = None;
    'candidates: for bits in 0..(1u64 << cols) {
        let d2: Vec<i8> = (0..cols)
            .map(|k| if bits >> k & 1 == 1 { -1 } else { 1 })
            .collect();
        // Row sums of D1 M D2 are d1_j (M d2)_j; hitting the positive
        // target rho_row forces d1_j to the sign of (M d2)_j.
        let mut d1 = vec![1i8; rows];
        for j in 0..rows {
            let mut y = T::zero();
            for k in 0..cols {
                y += m[(j, k)] * T::of(d2[k] as f64);
            }
            if y < T::zero() {
                d1[j] = -1;
            }
            if (y.abs() - rho_row).abs() > slack {
                continue 'candidates;
            }
        }
        for k in 0..cols {
            let mut s = T::zero();
            for j in 0..rows {
                s += T::of(d1[j] as f64) * m[(j, k)];
            }
            s *= T::of(d2[k] as f64);
            if (s - rho_col).abs() > slack {
                continue 'candidates;
            }
        }

        let (mut p1, mut p2) = if transposed { (d2, d1) } else { (d1, d2) };
        if p1[0] < 0 {
            for s in p1.iter_mut().chain(p2.iter_mut()) {
                *s = -*s;
            }
        }
        let key: Vec<u8> = p1
            .iter()
            .chain(p2.iter())
            .map(|&s| if s < 0 { 1 } else { 0 })
            .collect();
        let better = match &best {
            None => true,
            Some((bk, _)) => key < *bk,
        };
        if better {
            best = Some((key, SignaturePair { d1: p1, d2: p2 }));
        }
    }
    Ok(best.map(|(_, pair)| pair))
}

impl SignaturePair {
    /// The trivial all-plus pair.
    pub fn all_plus(n_a: usize, n_b: usize) -> Self {
        Self {
            d1: vec![1; n_a],
            d2: vec![1; n_b],
        }
    }

    /// Checks that this pair actually certifies a zero gap for `w`: row sums
    /// of `D1 W D2` within `tol`-slack of `sqrt(N_b/N_a) ||W||` and column
    /// sums within slack of `sqrt(N_a/N_b) ||W||`.
    pub fn certifies<T: Real>(&self, w: &WeightMatrix<T>, tol: T) -> Result<bool> {
        let (n_a, n_b) = w.dims();
        if self.d1.len() != n_a || self.d2.len() != n_b {
            return Err(Error::DimensionMismatch(format!(
                "certificate lengths ({}, {}) do not match weight dims ({n_a}, {n_b})",
                self.d1.len(),
                self.d2.len()
            )));
        }
        let op = w.operator_norm()?;
        let m = w.as_matrix();
        let rho_row = T::of(n_b as f64 / n_a as f64).sqrt() * op;
        let rho_col = T::of(n_a as f64 / n_b as f64).sqrt() * op;
        let slack = tol * w.dim_factor() * op;
        for j in 0..n_a {
            let mut s = T::zero();
            for k in 0..n_b {
                s += T::of(self.d1[j] as f64) * m[(j, k)] * T::of(self.d2[k] as f64);
            }
            if (s - rho_row).abs() > slack {
                return Ok(false);
            }
        }
        for k in 0..n_b {
            let mut s = T::zero();
            for j in 0..n_a {
                s += T::of(self.d1[j] as f64) * m[(j, k)] * T::of(self.d2[k] as f64);
            }
            if (s - rho_col).abs() > slack {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl<T: Real> GapSampler<T> {
    /// Validates dimensions against the corner-enumeration cap so every
    /// sample's HV norm is computable.
    pub fn new(
        n_a: usize,
        n_b: usize,
        dist: GapDistribution,
        seed: u64,
        tol: T,
    ) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::InvalidInput(
                "sampling dimensions must be positive".into(),
            ));
        }
        if n_a.min(n_b) > crate::weights::DEFAULT_CORNER_CAP {
            return Err(Error::ResourceLimit(format!(
                "smaller sampling dimension {} exceeds the corner cap {}",
                n_a.min(n_b),
                crate::weights::DEFAULT_CORNER_CAP
            )));
        }
        Ok(Self {
            n_a,
            n_b,
            dist,
            tol,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Draws the next random weight matrix (row-major entry order).
    pub fn next_weight(&mut self) -> WeightMatrix<T> {
        let mut entries = Vec::with_capacity(self.n_a * self.n_b);
        for _ in 0..self.n_a * self.n_b {
            let v: f64 = match self.dist {
                GapDistribution::Uniform => self.rng.random_range(-1.0..=1.0),
                GapDistribution::Normal => self.rng.sample(rand_distr::StandardNormal),
            };
            entries.push(T::of(v));
        }
        WeightMatrix::new(RMatrix::from_row_slice(self.n_a, self.n_b, &entries))
            .expect("sampled entries are finite")
    }

    /// Draws a weight matrix and computes its gap report.
    pub fn sample(&mut self) -> Result<GapReport<T>> {
        let w = self.next_weight();
        quantum_gap(&w, self.tol)
    }
}

/// Equal-width bin counts for `values` over `[lo, hi]`; values outside the
/// range land in the end bins.
pub fn histogram_counts<T: Real>(values: &[T], bins: usize, lo: T, hi: T) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidInput(format!(
            "histogram range [{lo}, {hi}] is empty"
        )));
    }
    let width = (hi - lo) / T::of(bins as f64);
    let mut counts = vec![0usize; bins];
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidInput(
                "histogram values must be finite".into(),
            ));
        }
        let idx = if v <= lo {
            0
        } else if v >= hi {
            bins - 1
        } else {
            let i = ((v - lo) / width)
                .floor()
                .to_f64()
                .map(|x| x as usize)
                .unwrap_or(0);
            i.min(bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn chsh_gap_values() {
        let w = WeightMatrix::<f64>::chsh();
        let r = quantum_gap(&w, TOL).unwrap();
        let sqrt2 = 2.0_f64.sqrt();
        assert!((r.gap - (2.0 * sqrt2 - 2.0)).abs() < 1e-12);
        assert!((r.scaled_gap - (2.0 - sqrt2)).abs() < 1e-12);
        assert!(r.certificate.is_none());
    }

    #[test]
    fn magic_square_has_zero_gap_with_all_plus_certificate() {
        let w = WeightMatrix::<f64>::magic_square();
        let r = quantum_gap(&w, TOL).unwrap();
        assert!(r.gap.abs() < 1e-9);
        assert!(r.scaled_gap.abs() < 1e-10);
        let cert = r.certificate.expect("zero gap must produce a certificate");
        assert_eq!(cert, SignaturePair::all_plus(3, 3));
        assert!(cert.certifies(&w, TOL).unwrap());
    }

    #[test]
    fn doubled_chsh_certificate_is_canonical() {
        // The Kronecker square of the CHSH matrix has a zero gap with
        // several certifying pairs; the lex-min rule must settle on
        // d1 = d2 = (1, 1, 1, -1).
        let w0 = WeightMatrix::<f64>::chsh();
        let w = w0.kronecker(&w0);
        assert!((w.operator_norm().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(w.hv_norm().unwrap(), 8.0);
        let cert = zero_gap_certificate(&w, TOL).unwrap().unwrap();
        assert_eq!(cert.d1, vec![1, 1, 1, -1]);
        assert_eq!(cert.d2, vec![1, 1, 1, -1]);
        // A second qualifying pair exists, so the canonical rule is doing
        // real work here.
        let other = SignaturePair {
            d1: vec![1, 1, -1, 1],
            d2: vec![1, -1, 1, 1],
        };
        assert!(other.certifies(&w, TOL).unwrap());
    }

    #[test]
    fn chsh_has_no_certificate() {
        let w = WeightMatrix::<f64>::chsh();
        assert!(zero_gap_certificate(&w, TOL).unwrap().is_none());
    }

    #[test]
    fn rank_one_corner_matrix_recovers_its_signs() {
        let a = [1.0, -1.0, 1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let rows: Vec<Vec<f64>> = a
            .iter()
            .map(|&ai| b.iter().map(|&bk| ai * bk).collect())
            .collect();
        let w = WeightMatrix::from_rows(&rows).unwrap();
        let cert = zero_gap_certificate(&w, TOL).unwrap().unwrap();
        assert_eq!(cert.d1, vec![1, -1, 1]);
        assert_eq!(cert.d2, vec![1, 1, -1, -1]);
    }

    #[test]
    fn identity_certificate_is_all_plus() {
        let w = WeightMatrix::new(RMatrix::<f64>::identity(3, 3)).unwrap();
        let r = quantum_gap(&w, TOL).unwrap();
        assert!(r.gap.abs() < 1e-12);
        assert_eq!(r.certificate.unwrap(), SignaturePair::all_plus(3, 3));
    }

    #[test]
    fn zero_matrix_report_is_trivial() {
        let w = WeightMatrix::new(RMatrix::<f64>::zeros(2, 3)).unwrap();
        let r = quantum_gap(&w, TOL).unwrap();
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.scaled_gap, 0.0);
        assert_eq!(r.certificate.unwrap(), SignaturePair::all_plus(2, 3));
    }

    #[test]
    fn certificate_cap_is_enforced() {
        let w = WeightMatrix::new(RMatrix::<f64>::identity(14, 14)).unwrap();
        assert!(matches!(
            zero_gap_certificate(&w, TOL),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn grothendieck_table() {
        assert_eq!(grothendieck_constant::<f64>(1), 1.0);
        assert!((grothendieck_constant::<f64>(2) - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(grothendieck_constant::<f64>(3), 1.5163);
        assert!((grothendieck_constant::<f64>(4) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(grothendieck_constant::<f64>(5), 1.782);
        assert_eq!(grothendieck_constant::<f64>(9), 1.782);
    }

    #[test]
    fn bound_report_values() {
        let x3 = WeightMatrix::from_rows(&[
            vec![-1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ])
        .unwrap();
        let b = bounds(&x3).unwrap();
        assert!((b.norm_bound - 3.0 * 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((b.grothendieck_bound - 1.5163 * 4.0).abs() < 1e-12);
        assert_eq!(b.bell_threshold, 4.0);
        assert_eq!(b.grothendieck_order, 3);
    }

    #[test]
    fn sampler_is_deterministic_and_in_range() {
        for dist in [GapDistribution::Uniform, GapDistribution::Normal] {
            let mut s1 = GapSampler::<f64>::new(3, 3, dist, 11, TOL).unwrap();
            let mut s2 = GapSampler::<f64>::new(3, 3, dist, 11, TOL).unwrap();
            for _ in 0..50 {
                let a = s1.sample().unwrap();
                let b = s2.sample().unwrap();
                assert_eq!(a.scaled_gap, b.scaled_gap);
                assert!(a.scaled_gap >= 0.0 && a.scaled_gap <= 2.0);
                assert!(a.gap >= 0.0);
            }
        }
        let mut s3 = GapSampler::<f64>::new(3, 3, GapDistribution::Uniform, 12, TOL).unwrap();
        let mut s1 = GapSampler::<f64>::new(3, 3, GapDistribution::Uniform, 11, TOL).unwrap();
        assert_ne!(s1.sample().unwrap(), s3.sample().unwrap());
    }

    #[test]
    fn sampler_validates_dimensions() {
        assert!(GapSampler::<f64>::new(0, 3, GapDistribution::Uniform, 1, TOL).is_err());
        assert!(GapSampler::<f64>::new(30, 30, GapDistribution::Uniform, 1, TOL).is_err());
        assert!(GapSampler::<f64>::new(30, 4, GapDistribution::Uniform, 1, TOL).is_ok());
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(
            "uniform".parse::<GapDistribution>().unwrap(),
            GapDistribution::Uniform
        );
        assert_eq!(
            "normal".parse::<GapDistribution>().unwrap(),
            GapDistribution::Normal
        );
        assert!("cauchy".parse::<GapDistribution>().is_err());
    }

    #[test]
    fn histogram_bins_and_edges() {
        let vals = [0.0, 0.1, 0.5, 0.95, 1.0, -0.2, 1.3];
        let h = histogram_counts(&vals, 4, 0.0, 1.0).unwrap();
        assert_eq!(h, vec![3, 0, 1, 3]);
        assert_eq!(h.iter().sum::<usize>(), vals.len());
        assert!(histogram_counts(&vals, 0, 0.0, 1.0).is_err());
        assert!(histogram_counts(&vals, 4, 1.0, 1.0).is_err());
    }
}
