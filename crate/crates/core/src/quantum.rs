//! Finite-dimensional operator algebra for bipartite Bell experiments:
//! operator and configuration types, Bell-operator assembly and spectra,
//! correlation matrices and their geometry, entanglement entropy, and
//! side-locality diagnostics.
//!
//! A configuration holds `N_a` Hermitian observables acting on a Hilbert
//! space of dimension `n_a` and `N_b` acting on dimension `n_b`, each with
//! operator norm at most one. A weight matrix `W` turns the configuration
//! into the Bell operator `S = sum_jk W_jk (A_j x B_k)` on the joint space;
//! its norm is the quantum value the configuration gives the Bell expression
//! of `W`, and its eigenstates carry the correlation matrices
//! `C_jk = <psi| A_j x B_k |psi>` that the analysis functions dissect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, RMatrix};
use crate::scalar::{Real, C};
use crate::weights::{BellMatrix, WeightMatrix};

/// A complex Hermitian matrix of dimension at least two.
///
/// The stored matrix is the Hermitian average `(M + M^H) / 2` of the input,
/// so downstream algebra can rely on exact symmetry; inputs further than the
/// Hermiticity tolerance from their adjoint are rejected instead of
/// silently averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HermitianOperator<T: Real> {
    m: CMatrix<T>,
}

/// Observables for both sides of a bipartite experiment: `N_a >= 2` on a
/// side of dimension `n_a >= 2` and `N_b >= 2` on dimension `n_b >= 2`,
/// every operator norm-bounded by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EprConfiguration<T: Real> {
    alice: Vec<HermitianOperator<T>>,
    bob: Vec<HermitianOperator<T>>,
}

/// Full eigensystem of a Bell operator, sorted by `|eigenvalue|` descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralData<T: Real> {
    /// Eigenvalues with `|lambda_1| >= |lambda_2| >= ...`.
    pub eigenvalues: Vec<T>,
    /// Unit eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: CMatrix<T>,
    /// Indices whose `|eigenvalue|` ties the maximum within the tolerance
    /// given at decomposition time.
    pub max_index_set: Vec<usize>,
}

/// Norms, geometry, and extremality of one correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CorrelationReport<T: Real> {
    pub matrix: RMatrix<T>,
    /// Singular values, descending.
    pub singular_values: Vec<T>,
    /// Sum of singular values.
    pub trace_norm: T,
    /// Euclidean length `sqrt(sum mu_i^2)`.
    pub schmidt_norm: T,
    /// Largest singular value.
    pub op_norm: T,
    /// Singular values above the rank threshold.
    pub schmidt_rank: usize,
    /// `tr(W^T C)`, the expectation the weight matrix assigns to `C`.
    pub bell_expectation: T,
    /// Signed cosine between the supplied expectation and the norm product.
    pub cos_theta: T,
    /// Opening angle in degrees, in `[0, 180]`.
    pub opening_angle_deg: T,
    /// Whether the trace norm attains `sqrt(N_a N_b)` within tolerance
    /// (unit norm-means assumed; rescale `C` otherwise).
    pub is_extreme: bool,
    /// Entanglement entropy of the underlying state, when the report was
    /// built from one; correlation data alone does not determine it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub entropy: Option<T>,
}

/// Pairwise commutator summary of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LocalityReport<T: Real> {
    /// Every pair of `A` operators commutes within tolerance.
    pub alice_commuting: bool,
    /// Every pair of `B` operators commutes within tolerance.
    pub bob_commuting: bool,
    /// Largest commutator norm seen on either side.
    pub max_commutator_norm: T,
}

impl<T: Real> HermitianOperator<T> {
    /// Validates squareness, finiteness, dimension, and Hermiticity, then
    /// stores the exactly Hermitian average.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "operator dimension must be at least 2, got {n}"
            )));
        }
        let mut scale = T::one();
        for x in m.iter() {
            if !x.re.is_finite() || !x.im.is_finite() {
                return Err(Error::InvalidInput("operator entries must be finite".into()));
            }
            scale = scale.max(x.re.abs()).max(x.im.abs());
        }
        let tol = T::hermiticity_tol() * scale;
        for r in 0..n {
            for c in 0..=r {
                let d = m[(r, c)] - m[(c, r)].conj();
                if d.re.abs() > tol || d.im.abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "entry ({r},{c}) deviates from Hermiticity by ({}, {})",
                        d.re, d.im
                    )));
                }
            }
        }
        let half = T::of(0.5);
        let sym = CMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()).scale(half));
        Ok(Self { m: sym })
    }

    /// The identity on `n` dimensions.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n))
    }

    /// Pauli `sigma_x`.
    pub fn pauli_x() -> Self {
        let z = C::new(T::zero(), T::zero());
        let one = C::new(T::one(), T::zero());
        Self {
            m: CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        }
    }

    /// Pauli `sigma_y`.
    pub fn pauli_y() -> Self {
        let z = C::new(T::zero(), T::zero());
        let i = C::new(T::zero(), T::one());
        Self {
            m: CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        }
    }

    /// Pauli `sigma_z`.
    pub fn pauli_z() -> Self {
        let z = C::new(T::zero(), T::zero());
        let one = C::new(T::one(), T::zero());
        Self {
            m: CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    /// Operator norm: the largest `|eigenvalue|`.
    pub fn norm(&self) -> Result<T> {
        linalg::spectral_radius(&self.m)
    }

    /// Whether the norm stays within the unit bound plus slack.
    pub fn is_unit_bounded(&self) -> Result<bool> {
        Ok(self.norm()? <= T::one() + T::unit_norm_slack())
    }
}

impl<T: Real> EprConfiguration<T> {
    /// Validates operator counts, shared dimensions per side, and the unit
    /// norm bound on every operator.
    pub fn new(alice: Vec<HermitianOperator<T>>, bob: Vec<HermitianOperator<T>>) -> Result<Self> {
        for (side, ops) in [("a", &alice), ("b", &bob)] {
            if ops.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "side {side} needs at least 2 observables, got {}",
                    ops.len()
                )));
            }
            let dim = ops[0].dim();
            for (idx, op) in ops.iter().enumerate() {
                if op.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "side {side} operator {idx} has dim {}, expected {dim}",
                        op.dim()
                    )));
                }
                if !op.is_unit_bounded()? {
                    return Err(Error::InvalidInput(format!(
                        "side {side} operator {idx} exceeds the unit norm bound"
                    )));
                }
            }
        }
        Ok(Self { alice, bob })
    }

    /// Constructor for callers that guarantee the invariants structurally
    /// (the genome decoder projects every operator into the unit ball), so
    /// the per-operator eigensolves of `new` can be skipped on hot paths.
    pub(crate) fn new_unchecked(
        alice: Vec<HermitianOperator<T>>,
        bob: Vec<HermitianOperator<T>>,
    ) -> Self {
        debug_assert!(alice.len() >= 2 && bob.len() >= 2);
        Self { alice, bob }
    }

    /// Observable count on the `a` side.
    pub fn n_a(&self) -> usize {
        self.alice.len()
    }

    /// Observable count on the `b` side.
    pub fn n_b(&self) -> usize {
        self.bob.len()
    }

    /// Hilbert dimension of the `a` side.
    pub fn dim_a(&self) -> usize {
        self.alice[0].dim()
    }

    /// Hilbert dimension of the `b` side.
    pub fn dim_b(&self) -> usize {
        self.bob[0].dim()
    }

    /// Dimension of the joint space.
    pub fn joint_dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    pub fn alice(&self) -> &[HermitianOperator<T>] {
        &self.alice
    }

    pub fn bob(&self) -> &[HermitianOperator<T>] {
        &self.bob
    }
}

/// Assembles the Bell operator `sum_jk W_jk (A_j x B_k)` on the joint space.
pub fn assemble_bell_operator<T: Real>(
    w: &WeightMatrix<T>,
    cfg: &EprConfiguration<T>,
) -> Result<HermitianOperator<T>> {
    if w.dims() != (cfg.n_a(), cfg.n_b()) {
        return Err(Error::DimensionMismatch(format!(
            "weight dims {:?} do not match configuration counts ({}, {})",
            w.dims(),
            cfg.n_a(),
            cfg.n_b()
        )));
    }
    let (da, db) = (cfg.dim_a(), cfg.dim_b());
    let mut s = CMatrix::zeros(da * db, da * db);
    for j in 0..cfg.n_a() {
        // Group as A_j x (sum_k W_jk B_k) to keep one Kronecker per row.
        let mut inner = CMatrix::zeros(db, db);
        let mut nonzero = false;
        for k in 0..cfg.n_b() {
            let wjk = w.entry(j, k);
            if wjk != T::zero() {
                inner += cfg.bob[k].matrix() * C::new(wjk, T::zero());
                nonzero = true;
            }
        }
        if nonzero {
            s += cfg.alice[j].matrix().kronecker(&inner);
        }
    }
    HermitianOperator::new(s)
}

/// Operator norm of a Bell operator: its largest `|eigenvalue|`.
pub fn bell_operator_norm<T: Real>(s: &HermitianOperator<T>) -> Result<T> {
    linalg::spectral_radius(s.matrix())
}

/// Full verified eigensystem of `s`. `tol` is the relative window for the
/// maximum-magnitude index set: index `t` is included when
/// `|lambda_t| >= |lambda_1| (1 - tol)`.
pub fn spectral_decomposition<T: Real>(
    s: &HermitianOperator<T>,
    tol: T,
) -> Result<SpectralData<T>> {
    let eig = linalg::hermitian_eigen(s.matrix())?;
    let n = eig.values.len();
    let top = eig.values[0].abs();

    for t in 0..n {
        let v = eig.vectors.column(t);
        let mut norm2 = T::zero();
        let mut resid2 = T::zero();
        for r in 0..n {
            let mut sv = C::new(T::zero(), T::zero());
            for c in 0..n {
                sv += s.matrix()[(r, c)] * v[c];
            }
            let d = sv - v[r].scale(eig.values[t]);
            resid2 += d.norm_sqr();
            norm2 += v[r].norm_sqr();
        }
        if (norm2.sqrt() - T::one()).abs() > T::of(1e-10).max(T::eps() * T::of(100.0)) {
            return Err(Error::Numeric(format!(
                "eigenvector {t} is not unit length"
            )));
        }
        let allowed = T::eigen_residual_tol() * top.max(T::eps());
        if resid2.sqrt() > allowed {
            return Err(Error::Numeric(format!(
                "eigenpair {t} residual {} exceeds {} (operator norm {})",
                resid2.sqrt(),
                allowed,
                top
            )));
        }
    }

    let max_index_set = if top == T::zero() {
        (0..n).collect()
    } else {
        (0..n)
            .filter(|&t| eig.values[t].abs() >= top * (T::one() - tol))
            .collect()
    };
    Ok(SpectralData {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        max_index_set,
    })
}

impl<T: Real> SpectralData<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector `t` as an owned column.
    pub fn eigenvector(&self, t: usize) -> CVector<T> {
        self.eigenvectors.column(t).into_owned()
    }

    /// Sum of the eigenvalues.
    pub fn trace(&self) -> T {
        let mut s = T::zero();
        for &v in &self.eigenvalues {
            s += v;
        }
        s
    }

    /// How far the spectrum is from perfect `+/-` pairing: after sorting by
    /// value, the largest `|lambda_i + lambda_(n-1-i)|`. Zero means every
    /// eigenvalue is matched by its negative (the middle one of an odd
    /// spectrum must then be zero).
    pub fn pairing_deviation(&self) -> T {
        let mut asc = self.eigenvalues.clone();
        asc.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
        let n = asc.len();
        let mut worst = T::zero();
        for i in 0..n.div_ceil(2) {
            worst = worst.max((asc[i] + asc[n - 1 - i]).abs());
        }
        worst
    }
}

/// Correlation matrix `C_jk = <psi| A_j x B_k |psi>` of a unit state.
///
/// The state is reshaped into its `n_a x n_b` coefficient matrix `J` with
/// `psi[mu * n_b + nu] = J[mu][nu]`, after which each entry is the overlap
/// of `J^H A_j J` with `B_k`; entries must come out real within the
/// imaginary-residual tolerance.
pub fn correlation_matrix<T: Real>(
    cfg: &EprConfiguration<T>,
    psi: &CVector<T>,
) -> Result<RMatrix<T>> {
    let (da, db) = (cfg.dim_a(), cfg.dim_b());
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "state length {} does not match joint dimension {}",
            psi.len(),
            da * db
        )));
    }
    let mut norm2 = T::zero();
    for x in psi.iter() {
        norm2 += x.norm_sqr();
    }
    if (norm2.sqrt() - T::one()).abs() > T::unit_norm_slack() {
        return Err(Error::InvalidInput(format!(
            "state norm {} is not 1 within tolerance",
            norm2.sqrt()
        )));
    }

    let j_mat = CMatrix::from_fn(da, db, |mu, nu| psi[mu * db + nu]);
    let jh = j_mat.adjoint();
    let mut c = RMatrix::zeros(cfg.n_a(), cfg.n_b());
    for j in 0..cfg.n_a() {
        let p = &jh * cfg.alice[j].matrix() * &j_mat;
        for k in 0..cfg.n_b() {
            let b = cfg.bob[k].matrix();
            let mut v = C::new(T::zero(), T::zero());
            for row in 0..db {
                for col in 0..db {
                    v += p[(row, col)] * b[(row, col)];
                }
            }
            if v.im.abs() > T::imag_residual_tol() * T::one().max(v.re.abs()) {
                return Err(Error::Numeric(format!(
                    "correlation ({j},{k}) has imaginary residual {}",
                    v.im
                )));
            }
            c[(j, k)] = v.re;
        }
    }
    Ok(c)
}

/// Dissects a correlation matrix against a weight matrix: singular values,
/// the three norms, Schmidt rank, the Bell expectation `tr(W^T C)`, the
/// opening angle implied by the supplied signed expectation `s_norm`, and
/// the extremality flag (`trace_norm >= sqrt(N_a N_b)(1 - tol)`, unit
/// norm-means assumed).
///
/// `s_norm` that overshoots the norm product beyond the consistency slack
/// signals a mismatched pair of inputs and comes back as a numeric error.
pub fn analyze_correlation<T: Real>(
    c: &RMatrix<T>,
    w: &WeightMatrix<T>,
    s_norm: T,
    tol: T,
) -> Result<CorrelationReport<T>> {
    let (n_a, n_b) = w.dims();
    if c.nrows() != n_a || c.ncols() != n_b {
        return Err(Error::DimensionMismatch(format!(
            "correlation dims ({}, {}) do not match weight dims ({n_a}, {n_b})",
            c.nrows(),
            c.ncols()
        )));
    }

    let singular_values = linalg::real_singular_values(c)?;
    let mut trace_norm = T::zero();
    let mut schmidt_sq = T::zero();
    for &mu in &singular_values {
        trace_norm += mu;
        schmidt_sq += mu * mu;
    }
    let schmidt_norm = schmidt_sq.sqrt();
    let op_norm = singular_values[0];
    let schmidt_rank = singular_values
        .iter()
        .filter(|&&mu| mu > T::rank_tol() * op_norm)
        .count();

    let mut bell_expectation = T::zero();
    for j in 0..n_a {
        for k in 0..n_b {
            bell_expectation += w.entry(j, k) * c[(j, k)];
        }
    }

    let denom = w.schmidt_norm() * schmidt_norm;
    let cos_theta = if denom == T::zero() {
        if s_norm != T::zero() {
            return Err(Error::Numeric(
                "nonzero expectation against a zero norm product".into(),
            ));
        }
        T::zero()
    } else {
        let raw = s_norm / denom;
        if raw.abs() > T::one() + T::angle_consistency_slack() {
            return Err(Error::Numeric(format!(
                "|cos theta| = {} exceeds 1: expectation inconsistent with the norms",
                raw.abs()
            )));
        }
        raw.clamp(-T::one(), T::one())
    };
    let opening_angle_deg = cos_theta.acos() * T::of(180.0) / T::pi();

    let sqrt_nab = w.dim_factor();
    let is_extreme = trace_norm >= sqrt_nab * (T::one() - tol);

    Ok(CorrelationReport {
        matrix: c.clone(),
        singular_values,
        trace_norm,
        schmidt_norm,
        op_norm,
        schmidt_rank,
        bell_expectation,
        cos_theta,
        opening_angle_deg,
        is_extreme,
        entropy: None,
    })
}

/// `min over sign of ||C -+ k(N) X||` in operator norm, with
/// `k(N) = sqrt(N)/2`. The constant is only established for sizes two and
/// three; other sizes are unsupported.
pub fn rigidity_deviation<T: Real>(c: &RMatrix<T>, x: &BellMatrix<T>) -> Result<T> {
    let n = x.size();
    if n != 2 && n != 3 {
        return Err(Error::Unsupported(format!(
            "rigidity constant is only known for sizes 2 and 3, got {n}"
        )));
    }
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "correlation dims ({}, {}) do not match the {n}x{n} weight",
            c.nrows(),
            c.ncols()
        )));
    }
    let k = T::of(n as f64).sqrt() / (T::one() + T::one());
    let scaled = x.weight().as_matrix() * k;
    let minus = linalg::real_singular_values(&(c - &scaled))?[0];
    let plus = linalg::real_singular_values(&(c + &scaled))?[0];
    Ok(minus.min(plus))
}

/// Entanglement entropy of a unit state on an `n_a x n_b` product space, in
/// nats: `-sum p ln p` over the squared Schmidt coefficients.
pub fn entanglement_entropy<T: Real>(psi: &CVector<T>, n_a: usize, n_b: usize) -> Result<T> {
    if n_a == 0 || n_b == 0 || psi.len() != n_a * n_b {
        return Err(Error::DimensionMismatch(format!(
            "state length {} does not match {n_a} x {n_b}",
            psi.len()
        )));
    }
    let mut norm2 = T::zero();
    for x in psi.iter() {
        norm2 += x.norm_sqr();
    }
    if (norm2.sqrt() - T::one()).abs() > T::unit_norm_slack() {
        return Err(Error::InvalidInput(format!(
            "state norm {} is not 1 within tolerance",
            norm2.sqrt()
        )));
    }

    let j_mat = CMatrix::from_fn(n_a, n_b, |mu, nu| psi[mu * n_b + nu]);
    // Gram matrix on the smaller side; its eigenvalues are the squared
    // Schmidt coefficients.
    let gram = if n_a <= n_b {
        &j_mat * j_mat.adjoint()
    } else {
        j_mat.adjoint() * &j_mat
    };
    let probs = linalg::hermitian_eigenvalues(&gram)?;
    let mut entropy = T::zero();
    for &p in &probs {
        if p > T::zero() {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy.max(T::zero()))
}

/// Root-mean-square operator norms `(M_a, M_b)` of the two sides.
pub fn norm_means<T: Real>(cfg: &EprConfiguration<T>) -> Result<(T, T)> {
    let rms = |ops: &[HermitianOperator<T>]| -> Result<T> {
        let mut sum = T::zero();
        for op in ops {
            let n = op.norm()?;
            sum += n * n;
        }
        Ok((sum / T::of(ops.len() as f64)).sqrt())
    };
    Ok((rms(&cfg.alice)?, rms(&cfg.bob)?))
}

/// Largest `||A^2 - I||` over all operators of the configuration: a soft
/// diagnostic of how close the observables are to dichotomic (square-one)
/// form. Meaningful mainly on two-dimensional sides; reported, never
/// asserted.
pub fn square_identity_deviation<T: Real>(cfg: &EprConfiguration<T>) -> Result<T> {
    let mut worst = T::zero();
    for op in cfg.alice.iter().chain(cfg.bob.iter()) {
        let n = op.dim();
        let sq = op.matrix() * op.matrix() - CMatrix::identity(n, n);
        worst = worst.max(linalg::spectral_radius(&sq)?);
    }
    Ok(worst)
}

/// Evaluates all pairwise commutators within each side and reports whether
/// each side is a commuting family at tolerance `tol`.
pub fn quantum_locality_check<T: Real>(
    cfg: &EprConfiguration<T>,
    tol: T,
) -> Result<LocalityReport<T>> {
    let mut max_norm = T::zero();
    let mut side_ok = [true, true];
    for (which, ops) in [&cfg.alice, &cfg.bob].into_iter().enumerate() {
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                let comm = ops[i].matrix() * ops[j].matrix() - ops[j].matrix() * ops[i].matrix();
                // i [X, Y] is Hermitian for Hermitian X, Y and shares the
                // commutator's norm.
                let herm = comm * C::new(T::zero(), T::one());
                let norm = linalg::spectral_radius(&herm)?;
                max_norm = max_norm.max(norm);
                if norm > tol {
                    side_ok[which] = false;
                }
            }
        }
    }
    Ok(LocalityReport {
        alice_commuting: side_ok[0],
        bob_commuting: side_ok[1],
        max_commutator_norm: max_norm,
    })
}
