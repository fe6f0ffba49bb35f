//! Weight matrices and the norms that control their Bell inequalities.
//!
//! A weight matrix `W` couples `N_a` observables on one side of a bipartite
//! experiment with `N_b` on the other through the bilinear form `(a, W b)`.
//! Three norms of `W` matter here:
//!
//! - the operator norm `||W||` (largest singular value);
//! - the HV norm `||W||*`, the maximum of `|(a, W b)|` over sign vectors,
//!   which is the local-hidden-variable threshold of the Bell inequality;
//! - the box norm `||W||_{A,B}`, the same maximum taken over arbitrary
//!   per-coordinate intervals, for observables with non-unit spectral ranges.
//!
//! The HV and box norms are computed by exact corner enumeration over the
//! smaller of the two sides (the bilinear form is symmetric under transpose),
//! walking corners in Gray-code order with incremental updates. The winning
//! corner is re-evaluated from scratch so the returned value is a plain dot
//! product, free of accumulated increments.

mod bell;
mod gap;

pub use bell::{bell_quantum_bound, BellMatrix, SignedPermutation};
pub use gap::{
    bounds, grothendieck_constant, histogram_counts, quantum_gap, zero_gap_certificate,
    BoundReport, GapDistribution, GapReport, GapSampler, SignaturePair,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix};
use crate::scalar::Real;

/// Largest side over which corner enumeration is attempted (2^(cap-1) corners).
pub const DEFAULT_CORNER_CAP: usize = 24;

/// Real `N_a x N_b` weight matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeightMatrix<T: Real> {
    m: RMatrix<T>,
}

/// A pair of sign vectors attaining the HV norm, with the attained value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CornerMaximizer<T: Real> {
    pub value: T,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

/// Per-coordinate closed intervals `[lo_i, hi_i]`, one per observable of a
/// side. These model the spectral ranges available to deterministic
/// hidden-variable strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralBox<T: Real> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> SpectralBox<T> {
    /// Validates `lo_i <= hi_i` with finite bounds.
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds need matching nonzero lengths, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(hi.iter()).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "box bound {i} is not finite"
                )));
            }
            if l > h {
                return Err(Error::InvalidInput(format!(
                    "box bound {i} has lo {l} > hi {h}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The unit box `[-1, 1]^n` of dichotomic unit-bounded observables.
    pub fn unit(n: usize) -> Self {
        Self {
            lo: vec![-T::one(); n],
            hi: vec![T::one(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    /// Whether every coordinate of `point` lies inside its interval,
    /// with `tol` slack on both ends.
    pub fn contains(&self, point: &[T], tol: T) -> bool {
        point.len() == self.len()
            && point
                .iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .all(|(x, (l, h))| *x >= *l - tol && *x <= *h + tol)
    }

    fn is_unit(&self) -> bool {
        self.lo.iter().all(|l| *l == -T::one()) && self.hi.iter().all(|h| *h == T::one())
    }
}

impl<T: Real> WeightMatrix<T> {
    /// Validates finiteness and non-emptiness.
    pub fn new(m: RMatrix<T>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidInput("weight matrix must be nonempty".into()));
        }
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if !m[(r, c)].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "weight entry ({r},{c}) is not finite"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    /// Builds from row slices; all rows must have equal nonzero length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInput("weight matrix must be nonempty".into()));
        }
        let ncols = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has length {}, expected {ncols}",
                rows[bad].len()
            )));
        }
        let m = RMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]);
        Self::new(m)
    }

    /// The 2x2 CHSH weight matrix `[[1, 1], [1, -1]]`.
    pub fn chsh() -> Self {
        let one = T::one();
        Self {
            m: RMatrix::from_row_slice(2, 2, &[one, one, one, -one]),
        }
    }

    /// The 3x3 magic-square weight matrix `[[8,3,4],[1,5,9],[6,7,2]]`.
    pub fn magic_square() -> Self {
        let vals: Vec<T> = [8.0, 3.0, 4.0, 1.0, 5.0, 9.0, 6.0, 7.0, 2.0]
            .iter()
            .map(|&x| T::of(x))
            .collect();
        Self {
            m: RMatrix::from_row_slice(3, 3, &vals),
        }
    }

    /// Number of observables on the `a` side (rows).
    pub fn n_a(&self) -> usize {
        self.m.nrows()
    }

    /// Number of observables on the `b` side (columns).
    pub fn n_b(&self) -> usize {
        self.m.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m.nrows(), self.m.ncols())
    }

    pub fn as_matrix(&self) -> &RMatrix<T> {
        &self.m
    }

    pub fn entry(&self, j: usize, k: usize) -> T {
        self.m[(j, k)]
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    /// Entrywise scaling by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            m: self.m.clone() * factor,
        }
    }

    /// Kronecker product of two weight matrices.
    pub fn kronecker(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    /// `sqrt(N_a * N_b)` as a scalar.
    pub fn dim_factor(&self) -> T {
        T::of((self.n_a() * self.n_b()) as f64).sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<T> {
        Ok(self.singular_values()?[0])
    }

    /// Singular values, sorted descending.
    pub fn singular_values(&self) -> Result<Vec<T>> {
        linalg::real_singular_values(&self.m)
    }

    /// Frobenius norm `sqrt(sum W_jk^2)`.
    pub fn schmidt_norm(&self) -> T {
        let mut sum = T::zero();
        for x in self.m.iter() {
            sum += *x * *x;
        }
        sum.sqrt()
    }

    /// HV norm `||W||*`: the maximum of `|(a, W b)|` over sign vectors, i.e.
    /// the local-hidden-variable threshold of the Bell inequality of `W`.
    pub fn hv_norm(&self) -> Result<T> {
        Ok(self.hv_maximizer_with_cap(DEFAULT_CORNER_CAP)?.value)
    }

    /// `hv_norm` with an explicit enumeration cap.
    pub fn hv_norm_with_cap(&self, cap: usize) -> Result<T> {
        Ok(self.hv_maximizer_with_cap(cap)?.value)
    }

    /// HV norm together with a maximizing sign-vector pair. Among corners of
    /// equal value the first in enumeration order wins, so the result is
    /// deterministic.
    pub fn hv_maximizer(&self) -> Result<CornerMaximizer<T>> {
        self.hv_maximizer_with_cap(DEFAULT_CORNER_CAP)
    }

    pub fn hv_maximizer_with_cap(&self, cap: usize) -> Result<CornerMaximizer<T>> {
        let transposed = self.m.ncols() > self.m.nrows();
        let work = if transposed {
            self.m.transpose()
        } else {
            self.m.clone()
        };
        let (value, a, b) = sign_corner_max(&work, cap)?;
        let (a, b) = if transposed { (b, a) } else { (a, b) };
        // Evaluate the winning corner in the original orientation so the
        // reported value is bit-identical to a model expectation over the
        // same corner (summation grouping matters at the last ulp).
        let value = if transposed {
            bilinear_form(&self.m, &a, &b)
        } else {
            value
        };
        Ok(CornerMaximizer { value, a, b })
    }

    /// Box norm `||W||_{A,B}`: maximum of `|(a, W b)|` with each coordinate
    /// confined to its interval. Reduces to `hv_norm` on unit boxes.
    pub fn hv_box_norm(&self, a_box: &SpectralBox<T>, b_box: &SpectralBox<T>) -> Result<T> {
        self.hv_box_norm_with_cap(a_box, b_box, DEFAULT_CORNER_CAP)
    }

    pub fn hv_box_norm_with_cap(
        &self,
        a_box: &SpectralBox<T>,
        b_box: &SpectralBox<T>,
    cap: usize,
    ) -> Result<T> {
        if a_box.len() != self.n_a() || b_box.len() != self.n_b() {
            return Err(Error::DimensionMismatch(format!(
                "box lengths ({}, {}) do not match weight dims ({}, {})",
                a_box.len(),
                b_box.len(),
                self.n_a(),
                self.n_b()
            )));
        }
        // The sign-corner path is both faster (symmetry halving) and shares
        // its arithmetic with `hv_norm`, keeping the two exactly equal.
        if a_box.is_unit() && b_box.is_unit() {
            return self.hv_norm_with_cap(cap);
        }
        let transposed = self.m.ncols() > self.m.nrows();
        if transposed {
            box_corner_max(&self.m.transpose(), b_box, a_box, cap)
        } else {
            box_corner_max(&self.m, a_box, b_box, cap)
        }
    }
}

/// `sum_j a_j * (W b)_j` with a fixed accumulation order. Shared by the norm
/// search and by hidden-variable model evaluation so that a maximizing
/// strategy reproduces the norm bit for bit.
pub(crate) fn bilinear_form<T: Real>(w: &RMatrix<T>, a: &[T], b: &[T]) -> T {
    let mut total = T::zero();
    for j in 0..w.nrows() {
        let mut row = T::zero();
        for k in 0..w.ncols() {
            row += w[(j, k)] * b[k];
        }
        total += a[j] * row;
    }
    total
}

fn check_cap(side: usize, cap: usize) -> Result<()> {
    if side > cap {
        return Err(Error::ResourceLimit(format!(
            "corner enumeration over {side} observables exceeds the cap of {cap} \
             (the smaller side is enumerated; reduce the matrix or raise the cap)"
        )));
    }
    Ok(())
}

/// Max of `|(a, W b)|` over sign vectors, enumerating `b` corners of `w`'s
/// column side. Callers arrange for that side to be the smaller one. The
/// `b -> -b` symmetry fixes the last coordinate to +1, halving the walk.
fn sign_corner_max<T: Real>(w: &RMatrix<T>, cap: usize) -> Result<(T, Vec<T>, Vec<T>)> {
    let (rows, cols) = (w.nrows(), w.ncols());
    check_cap(cols, cap)?;

    let two = T::one() + T::one();
    let mut y: Vec<T> = (0..rows)
        .map(|j| {
            let mut s = T::zero();
            for k in 0..cols {
                s += w[(j, k)];
            }
            s
        })
        .collect();
    let abs_sum = |y: &[T]| {
        let mut s = T::zero();
        for v in y {
            s += v.abs();
        }
        s
    };

    let mut best_score = abs_sum(&y);
    let mut best_bits: u64 = 0;
    let mut bits: u64 = 0;
    let steps: u64 = 1u64 << (cols - 1);
    for g in 1..steps {
        let flip = g.trailing_zeros() as usize;
        bits ^= 1 << flip;
        let delta = if bits >> flip & 1 == 1 { -two } else { two };
        for (j, yj) in y.iter_mut().enumerate() {
            *yj += delta * w[(j, flip)];
        }
        let score = abs_sum(&y);
        if score > best_score {
            best_score = score;
            best_bits = bits;
        }
    }

    // Re-evaluate the winning corner from scratch.
    let b: Vec<T> = (0..cols)
        .map(|k| {
            if k + 1 < cols && best_bits >> k & 1 == 1 {
                -T::one()
            } else {
                T::one()
            }
        })
        .collect();
    let mut a = vec![T::one(); rows];
    for j in 0..rows {
        let mut s = T::zero();
        for k in 0..cols {
            s += w[(j, k)] * b[k];
        }
        if s < T::zero() {
            a[j] = -T::one();
        }
    }
    let value = bilinear_form(w, &a, &b);
    Ok((value, a, b))
}

/// Max of `|(a, W b)|` over box corners, enumerating `b` corners.
fn box_corner_max<T: Real>(
    w: &RMatrix<T>,
    a_box: &SpectralBox<T>,
    b_box: &SpectralBox<T>,
    cap: usize,
) -> Result<T> {
    let (rows, cols) = (w.nrows(), w.ncols());
    check_cap(cols, cap)?;

    // bit 0 = lo, bit 1 = hi; start at all-lo.
    let mut y: Vec<T> = (0..rows)
        .map(|j| {
            let mut s = T::zero();
            for k in 0..cols {
                s += w[(j, k)] * b_box.lo[k];
            }
            s
        })
        .collect();
    let score_of = |y: &[T]| {
        let mut hi_sum = T::zero();
        let mut lo_sum = T::zero();
        for (j, yj) in y.iter().enumerate() {
            let p = a_box.lo[j] * *yj;
            let q = a_box.hi[j] * *yj;
            hi_sum += p.max(q);
            lo_sum += p.min(q);
        }
        hi_sum.max(-lo_sum)
    };

    let mut best_score = score_of(&y);
    let mut best_bits: u64 = 0;
    let mut bits: u64 = 0;
    let steps: u64 = 1u64 << cols;
    for g in 1..steps {
        let flip = g.trailing_zeros() as usize;
        bits ^= 1 << flip;
        let to_hi = bits >> flip & 1 == 1;
        let delta = if to_hi {
            b_box.hi[flip] - b_box.lo[flip]
        } else {
            b_box.lo[flip] - b_box.hi[flip]
        };
        for (j, yj) in y.iter_mut().enumerate() {
            *yj += delta * w[(j, flip)];
        }
        let score = score_of(&y);
        if score > best_score {
            best_score = score;
            best_bits = bits;
        }
    }

    // Re-evaluate the winning corner from scratch.
    let b: Vec<T> = (0..cols)
        .map(|k| {
            if best_bits >> k & 1 == 1 {
                b_box.hi[k]
            } else {
                b_box.lo[k]
            }
        })
        .collect();
    let y: Vec<T> = (0..rows)
        .map(|j| {
            let mut s = T::zero();
            for k in 0..cols {
                s += w[(j, k)] * b[k];
            }
            s
        })
        .collect();
    let mut hi_sum = T::zero();
    let mut lo_sum = T::zero();
    for (j, yj) in y.iter().enumerate() {
        let p = a_box.lo[j] * *yj;
        let q = a_box.hi[j] * *yj;
        hi_sum += p.max(q);
        lo_sum += p.min(q);
    }
    Ok(hi_sum.max(-lo_sum))
}
