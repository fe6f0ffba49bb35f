//! The Bell matrix class: square sign matrices with exactly two nonzero
//! entries (each +1 or -1) in every row and column, an irreducible support,
//! and an odd number of minus entries.
//!
//! Irreducibility here means the bipartite support graph (rows on one shore,
//! columns on the other, one edge per nonzero entry) is a single cycle of
//! length `2N`. Every row and column has degree two, so the support graph is
//! always a disjoint union of cycles; requiring one cycle rules out matrices
//! that split into independent sub-experiments. This is strictly stronger
//! than strong connectivity of the row digraph (rows adjacent when their
//! supports share a column): a matrix whose support splits into two cycles
//! can still have a strongly connected digraph, yet its norm exceeds the
//! single-cycle law. The single-cycle form is what the norm identities below
//! rely on.
//!
//! For every member `X` of the class,
//! `||X|| = 2 cos(pi / 2N)` and `||X||* = 2(N - 1)`,
//! and `X` reduces to the canonical tridiagonal representative by signed
//! row and column permutations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{BellMatrixError, Error, Result};
use crate::linalg::RMatrix;
use crate::scalar::Real;
use crate::weights::WeightMatrix;

/// A validated member of the Bell matrix class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BellMatrix<T: Real> {
    weight: WeightMatrix<T>,
    minus_count: usize,
}

/// A signed permutation: entry `i` of the source goes to slot `perm[i]` of
/// the destination, multiplied by `signs[i]`. As a matrix this is
/// `P = sum_i signs[i] e_{perm[i]} e_i^T`; rows transform as `X -> P X` and
/// columns as `X -> X P^T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<i8>,
}

/// Largest expectation a quantum state can give a Bell matrix of size `n`:
/// `2 n cos(pi / 2n)`.
pub fn bell_quantum_bound<T: Real>(n: usize) -> T {
    let nn = T::of(n as f64);
    let two = T::one() + T::one();
    two * nn * (T::pi() / (two * nn)).cos()
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = perm.len();
        if n == 0 || signs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} and sign length {} must match and be nonzero",
                n,
                signs.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!(
                    "not a permutation of 0..{n}"
                )));
            }
            seen[p] = true;
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("signs must be +1 or -1".into()));
        }
        Ok(Self { perm, signs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let signs = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect();
        Self { perm, signs }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn inverse(&self) -> Self {
        let n = self.len();
        let mut perm = vec![0usize; n];
        let mut signs = vec![1i8; n];
        for i in 0..n {
            perm[self.perm[i]] = i;
            signs[self.perm[i]] = self.signs[i];
        }
        Self { perm, signs }
    }

    /// `P X`: row `i` of `x` lands in row `perm[i]` with sign `signs[i]`.
    pub fn apply_rows<T: Real>(&self, x: &RMatrix<T>) -> Result<RMatrix<T>> {
        if x.nrows() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} cannot act on {} rows",
                self.len(),
                x.nrows()
            )));
        }
        let mut out = RMatrix::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            let s = T::of(self.signs[i] as f64);
            for c in 0..x.ncols() {
                out[(self.perm[i], c)] = s * x[(i, c)];
            }
        }
        Ok(out)
    }

    /// `X P^T`: column `k` of `x` lands in column `perm[k]` with sign
    /// `signs[k]`.
    pub fn apply_cols<T: Real>(&self, x: &RMatrix<T>) -> Result<RMatrix<T>> {
        if x.ncols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} cannot act on {} columns",
                self.len(),
                x.ncols()
            )));
        }
        let mut out = RMatrix::zeros(x.nrows(), x.ncols());
        for k in 0..x.ncols() {
            let s = T::of(self.signs[k] as f64);
            for r in 0..x.nrows() {
                out[(r, self.perm[k])] = s * x[(r, k)];
            }
        }
        Ok(out)
    }

    /// The matrix `P` with `P X` permuting rows.
    pub fn to_row_matrix<T: Real>(&self) -> RMatrix<T> {
        let n = self.len();
        let mut p = RMatrix::zeros(n, n);
        for i in 0..n {
            p[(self.perm[i], i)] = T::of(self.signs[i] as f64);
        }
        p
    }

    /// The matrix `Q = P^T` with `X Q` permuting columns.
    pub fn to_col_matrix<T: Real>(&self) -> RMatrix<T> {
        self.to_row_matrix::<T>().transpose()
    }
}

impl<T: Real> BellMatrix<T> {
    /// Validates class membership, reporting the first violated condition.
    pub fn new(weight: WeightMatrix<T>) -> Result<Self> {
        let m = weight.as_matrix();
        if m.nrows() != m.ncols() {
            return Err(BellMatrixError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            }
            .into());
        }
        let n = m.nrows();

        let mut minus_count = 0usize;
        for r in 0..n {
            for c in 0..n {
                let x = m[(r, c)];
                if x == -T::one() {
                    minus_count += 1;
                } else if x != T::zero() && x != T::one() {
                    return Err(BellMatrixError::BadEntry {
                        row: r,
                        col: c,
                        value: format!("{x}"),
                    }
                    .into());
                }
            }
        }

        let (row_supp, col_supp) = support(m)?;
        let components = count_cycles(&row_supp, &col_supp);
        if components != 1 {
            return Err(BellMatrixError::Reducible { components }.into());
        }

        if minus_count.is_multiple_of(2) {
            return Err(BellMatrixError::EvenMinusCount { count: minus_count }.into());
        }

        Ok(Self {
            weight,
            minus_count,
        })
    }

    /// Side length `N`.
    pub fn size(&self) -> usize {
        self.weight.n_a()
    }

    /// Number of `-1` entries (always odd).
    pub fn minus_count(&self) -> usize {
        self.minus_count
    }

    pub fn weight(&self) -> &WeightMatrix<T> {
        &self.weight
    }

    pub fn into_weight(self) -> WeightMatrix<T> {
        self.weight
    }

    /// The canonical representative: tridiagonal, with `-1` in the top-left
    /// corner, `+1` elsewhere on the support.
    ///
    /// Row 0 holds `(-1, 1)`, middle row `j` holds `+1` at columns `j - 1`
    /// and `j + 1`, and the last row holds `(1, 1)` in its final two columns.
    pub fn canonical(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "no Bell matrix of size {n} exists, need n >= 2"
            )));
        }
        let one = T::one();
        let mut m = RMatrix::zeros(n, n);
        m[(0, 0)] = -one;
        m[(0, 1)] = one;
        for j in 1..n - 1 {
            m[(j, j - 1)] = one;
            m[(j, j + 1)] = one;
        }
        m[(n - 1, n - 2)] = one;
        m[(n - 1, n - 1)] = one;
        Self::new(WeightMatrix::new(m)?)
    }

    /// A random class member: the canonical representative hit with random
    /// signed row and column permutations (which preserve membership).
    pub fn generate_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let z = Self::canonical(n)?;
        let p_rows = SignedPermutation::random(n, rng);
        let p_cols = SignedPermutation::random(n, rng);
        let m = p_cols.apply_cols(&p_rows.apply_rows(z.weight.as_matrix())?)?;
        Self::new(WeightMatrix::new(m)?)
    }

    /// `generate_with` driven by a seeded stream; same seed, same matrix.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::generate_with(n, &mut rng)
    }

    /// Signed permutations `(p_rows, p_cols)` carrying this matrix onto the
    /// canonical representative:
    /// `p_cols.apply_cols(p_rows.apply_rows(X)) == canonical(N)`.
    ///
    /// The support cycles of both matrices are walked from row 0 and matched
    /// position by position; signs then propagate around the cycle. The sign
    /// closure is always consistent because row and column flips preserve the
    /// product of the entries along the cycle, which equals `-1` for every
    /// class member (odd minus count).
    pub fn reduce(&self) -> Result<(SignedPermutation, SignedPermutation)> {
        let n = self.size();
        let x = self.weight.as_matrix();
        let z_bell = Self::canonical(n)?;
        let z = z_bell.weight.as_matrix();

        let (x_rows_supp, x_cols_supp) = support(x)?;
        let (z_rows_supp, z_cols_supp) = support(z)?;
        let (x_rows, x_cols) = cycle_walk(&x_rows_supp, &x_cols_supp, 0);
        let (z_rows, z_cols) = cycle_walk(&z_rows_supp, &z_cols_supp, 0);

        let mut row_perm = vec![0usize; n];
        let mut col_perm = vec![0usize; n];
        for i in 0..n {
            row_perm[x_rows[i]] = z_rows[i];
            col_perm[x_cols[i]] = z_cols[i];
        }

        // Support now matches; propagate signs along the canonical cycle.
        // y[(j, k)] is the unsigned permuted entry at canonical position.
        let entry_at = |zj: usize, zk: usize| -> T {
            let i = z_rows.iter().position(|&r| r == zj).unwrap();
            let k = z_cols.iter().position(|&c| c == zk).unwrap();
            x[(x_rows[i], x_cols[k])]
        };
        let mut d_rows = vec![T::zero(); n];
        let mut d_cols = vec![T::zero(); n];
        d_rows[z_rows[0]] = T::one();
        for i in 0..n {
            let zj = z_rows[i];
            let zk = z_cols[i];
            // Edge (zj, zk): fix the column sign from the row sign.
            d_cols[zk] = z[(zj, zk)] / (d_rows[zj] * entry_at(zj, zk));
            // Edge (zj', zk) to the next row on the cycle.
            if i + 1 < n {
                let zj2 = z_rows[i + 1];
                d_rows[zj2] = z[(zj2, zk)] / (d_cols[zk] * entry_at(zj2, zk));
            }
        }
        // Closing edge of the cycle: from the last column back to row 0.
        let zj0 = z_rows[0];
        let zk_last = z_cols[n - 1];
        if d_rows[zj0] * entry_at(zj0, zk_last) * d_cols[zk_last] != z[(zj0, zk_last)] {
            return Err(Error::Numeric(
                "sign closure failed on the support cycle".into(),
            ));
        }

        let row_signs: Vec<i8> = (0..n)
            .map(|i| if d_rows[row_perm[i]] < T::zero() { -1 } else { 1 })
            .collect();
        let col_signs: Vec<i8> = (0..n)
            .map(|k| if d_cols[col_perm[k]] < T::zero() { -1 } else { 1 })
            .collect();
        let p_rows = SignedPermutation::new(row_perm, row_signs)?;
        let p_cols = SignedPermutation::new(col_perm, col_signs)?;

        let check = p_cols.apply_cols(&p_rows.apply_rows(x)?)?;
        if check != *z {
            return Err(Error::Numeric(
                "reduction verification failed: permuted matrix is not canonical".into(),
            ));
        }
        Ok((p_rows, p_cols))
    }
}

impl<T: Real> Deref for BellMatrix<T> {
    type Target = WeightMatrix<T>;

    fn deref(&self) -> &WeightMatrix<T> {
        &self.weight
    }
}

/// The two nonzero positions of every line (row or column) of a pattern.
type LineSupport = Vec<(usize, usize)>;

/// Per-row and per-column nonzero positions, each required to have exactly
/// two.
fn support<T: Real>(m: &RMatrix<T>) -> Result<(LineSupport, LineSupport)> {
    let n = m.nrows();
    let mut row_supp = Vec::with_capacity(n);
    for r in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&c| m[(r, c)] != T::zero()).collect();
        if nz.len() != 2 {
            return Err(BellMatrixError::RowSupport {
                index: r,
                count: nz.len(),
            }
            .into());
        }
        row_supp.push((nz[0], nz[1]));
    }
    let mut col_supp = Vec::with_capacity(n);
    for c in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&r| m[(r, c)] != T::zero()).collect();
        if nz.len() != 2 {
            return Err(BellMatrixError::ColSupport {
                index: c,
                count: nz.len(),
            }
            .into());
        }
        col_supp.push((nz[0], nz[1]));
    }
    Ok((row_supp, col_supp))
}

/// Walks the support cycle through `start_row`, alternating rows and
/// columns. Returns the visited rows and columns in order; both lists have
/// the component's cycle length over two.
fn cycle_walk(
    row_supp: &[(usize, usize)],
    col_supp: &[(usize, usize)],
    start_row: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut rows = vec![start_row];
    let mut cols = vec![row_supp[start_row].0];
    let mut cur_row = start_row;
    let mut cur_col = cols[0];
    loop {
        let (r1, r2) = col_supp[cur_col];
        let next_row = if r1 == cur_row { r2 } else { r1 };
        if next_row == start_row {
            break;
        }
        rows.push(next_row);
        let (c1, c2) = row_supp[next_row];
        let next_col = if c1 == cur_col { c2 } else { c1 };
        cols.push(next_col);
        cur_row = next_row;
        cur_col = next_col;
    }
    (rows, cols)
}

/// Number of disjoint cycles making up the support graph.
fn count_cycles(row_supp: &[(usize, usize)], col_supp: &[(usize, usize)]) -> usize {
    let n = row_supp.len();
    let mut visited = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        components += 1;
        let (rows, _) = cycle_walk(row_supp, col_supp, start);
        for r in rows {
            visited[r] = true;
        }
    }
    components
}
