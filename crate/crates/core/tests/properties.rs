//! Property tests for the norm algebra, the gap functions, the operator
//! layer, and the hidden-variable layer. Each test states an invariant the
//! library promises for all inputs and lets proptest hunt for violations;
//! oracles are computed independently inside the test (brute force where
//! feasible) rather than by calling the code under test twice.

use bellgap::ga::{self, GaConfig, SearchConstraint, SearchSpace};
use bellgap::hvmodel::{self, HvModel, HvStrategy};
use bellgap::quantum::{
    assemble_bell_operator, bell_operator_norm, correlation_matrix, entanglement_entropy,
    EprConfiguration, HermitianOperator,
};
use bellgap::weights::{
    bounds, quantum_gap, zero_gap_certificate, BellMatrix, SignedPermutation, SpectralBox,
    WeightMatrix,
};
use bellgap::C;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type CMat = DMatrix<C<f64>>;
type CVec = DVector<C<f64>>;

// ---------------------------------------------------------------------------
// strategies

/// Random weight matrix with entries in [-1, 1] and at least one entry
/// bounded away from zero, so norms are nonzero and relative slacks make
/// sense.
fn weight_strategy(max_side: usize) -> impl Strategy<Value = WeightMatrix<f64>> {
    (2..=max_side, 2..=max_side)
        .prop_flat_map(|(n_a, n_b)| {
            proptest::collection::vec(
                proptest::collection::vec(-1.0f64..1.0, n_b),
                n_a,
            )
        })
        .prop_filter_map("needs one sizable entry", |rows| {
            let big = rows
                .iter()
                .flatten()
                .any(|x| x.abs() > 0.1);
            if big {
                WeightMatrix::from_rows(&rows).ok()
            } else {
                None
            }
        })
}

/// Random complex Hermitian matrix with operator norm exactly one,
/// normalized against a brute-force power-iteration norm so the scaling
/// does not depend on the library under test.
fn unit_hermitian(dim: usize, entries: &[f64]) -> HermitianOperator<f64> {
    let mut m = CMat::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        m[(i, i)] = C::new(entries[k], 0.0);
        k += 1;
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let z = C::new(entries[k], entries[k + 1]);
            k += 2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    // The Frobenius norm upper-bounds the operator norm, so dividing by it
    // keeps the operator strictly inside the unit ball without relying on
    // the library's eigensolver.
    let norm = m.norm().max(1.0);
    HermitianOperator::new(m / C::new(norm, 0.0)).expect("hermitian by construction")
}

/// Entry budget for one Hermitian matrix of the given dimension.
fn hermitian_len(dim: usize) -> usize {
    dim + dim * (dim - 1)
}

/// Random unit state of the given length.
fn unit_state(len: usize, entries: &[f64]) -> CVec {
    let mut v = CVec::zeros(len);
    for i in 0..len {
        v[i] = C::new(entries[2 * i], entries[2 * i + 1]);
    }
    let norm = v.norm();
    v / C::new(norm, 0.0)
}

// ---------------------------------------------------------------------------
// norm chain and gap laws

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The operator norm never exceeds the HV norm, which never exceeds
    /// the dimensional bound; the scaled gap lives in its stated range.
    #[test]
    fn norm_chain_holds(w in weight_strategy(5)) {
        let op = w.operator_norm().unwrap();
        let hv = w.hv_norm().unwrap();
        let factor = w.dim_factor();
        let slack = 1e-10 * (1.0 + op.abs());
        prop_assert!(op <= hv + slack, "op {op} > hv {hv}");
        prop_assert!(hv <= factor * op + slack, "hv {hv} > bound {}", factor * op);

        let gap = quantum_gap(&w, 1e-9).unwrap();
        prop_assert!(gap.gap >= -slack);
        prop_assert!(gap.scaled_gap >= -1e-10);
        prop_assert!(gap.scaled_gap <= factor - 1.0 + 1e-10);
    }

    /// The HV norm equals the brute-force maximum over every pair of sign
    /// vectors, not just the corners the enumeration visits.
    #[test]
    fn hv_norm_matches_corner_brute_force(w in weight_strategy(4)) {
        let (n_a, n_b) = w.dims();
        let mut best = f64::NEG_INFINITY;
        for a_bits in 0..1u32 << n_a {
            for b_bits in 0..1u32 << n_b {
                let mut value = 0.0;
                for j in 0..n_a {
                    for k in 0..n_b {
                        let a = if a_bits >> j & 1 == 1 { 1.0 } else { -1.0 };
                        let b = if b_bits >> k & 1 == 1 { 1.0 } else { -1.0 };
                        value += w.entry(j, k) * a * b;
                    }
                }
                best = best.max(value);
            }
        }
        let hv = w.hv_norm().unwrap();
        prop_assert!((hv - best).abs() <= 1e-12 * (1.0 + best.abs()),
            "hv {hv} vs brute force {best}");
    }

    /// Scaling the weight scales the absolute gap by |lambda| and leaves
    /// the scaled gap unchanged.
    #[test]
    fn gap_is_homogeneous(w in weight_strategy(4), lambda in prop_oneof![-4.0f64..-0.05, 0.05f64..4.0]) {
        let base = quantum_gap(&w, 1e-9).unwrap();
        let scaled_w = WeightMatrix::from_rows(
            &(0..w.n_a())
                .map(|j| (0..w.n_b()).map(|k| lambda * w.entry(j, k)).collect())
                .collect::<Vec<Vec<f64>>>(),
        )
        .unwrap();
        let scaled = quantum_gap(&scaled_w, 1e-9).unwrap();
        let slack = 1e-9 * (1.0 + base.gap.abs()) * lambda.abs().max(1.0);
        prop_assert!((scaled.gap - lambda.abs() * base.gap).abs() <= slack,
            "G({lambda} W) = {} vs |lambda| G(W) = {}", scaled.gap, lambda.abs() * base.gap);
        prop_assert!((scaled.scaled_gap - base.scaled_gap).abs() <= 1e-9,
            "g changed under scaling: {} vs {}", scaled.scaled_gap, base.scaled_gap);
    }
}

// ---------------------------------------------------------------------------
// Bell-matrix class laws

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every generated class member has row and column sums in {-2, 0, 2},
    /// operator norm 2cos(pi/2N), and HV norm exactly 2(N-1).
    #[test]
    fn generated_bell_matrices_obey_the_norm_laws(n in 2usize..=8, seed in 0u64..10_000) {
        let x = BellMatrix::<f64>::generate(n, seed).unwrap();
        for j in 0..n {
            let row: f64 = (0..n).map(|k| x.weight().entry(j, k)).sum();
            let col: f64 = (0..n).map(|k| x.weight().entry(k, j)).sum();
            prop_assert!([-2.0, 0.0, 2.0].contains(&row), "row sum {row}");
            prop_assert!([-2.0, 0.0, 2.0].contains(&col), "col sum {col}");
        }
        let want = 2.0 * (std::f64::consts::PI / (2.0 * n as f64)).cos();
        prop_assert!((x.operator_norm().unwrap() - want).abs() <= 1e-12);
        prop_assert_eq!(x.hv_norm().unwrap(), 2.0 * (n as f64 - 1.0));
    }

    /// Signed permutations preserve both norms and the odd minus-count
    /// parity, so the class is closed under them.
    #[test]
    fn signed_permutations_preserve_norms_and_parity(
        n in 2usize..=6,
        seed in 0u64..5_000,
        perm_seed in 0u64..5_000,
    ) {
        let x = BellMatrix::<f64>::generate(n, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        let p_rows = SignedPermutation::random(n, &mut rng);
        let p_cols = SignedPermutation::random(n, &mut rng);
        let carried = p_cols
            .apply_cols(&p_rows.apply_rows(x.weight().as_matrix()).unwrap())
            .unwrap();
        let y = WeightMatrix::new(carried).unwrap();

        let slack = 1e-10;
        prop_assert!((y.operator_norm().unwrap() - x.operator_norm().unwrap()).abs() <= slack);
        prop_assert!((y.hv_norm().unwrap() - x.hv_norm().unwrap()).abs() <= slack);

        let minus = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .filter(|&(j, k)| y.entry(j, k) < 0.0)
            .count();
        prop_assert_eq!(minus % 2, 1, "parity broken: {} minus entries", minus);
        prop_assert!(BellMatrix::new(y).is_ok(), "class not closed");
    }

    /// Reduction returns signed permutations that actually carry the
    /// matrix onto the canonical form.
    #[test]
    fn reduction_lands_on_the_canonical_form(n in 2usize..=8, seed in 0u64..10_000) {
        let x = BellMatrix::<f64>::generate(n, seed).unwrap();
        let (p_rows, p_cols) = x.reduce().unwrap();
        let carried = p_cols
            .apply_cols(&p_rows.apply_rows(x.weight().as_matrix()).unwrap())
            .unwrap();
        let canonical = BellMatrix::<f64>::canonical(n).unwrap();
        for j in 0..n {
            for k in 0..n {
                prop_assert_eq!(carried[(j, k)], canonical.weight().entry(j, k));
            }
        }
    }
}

/// Certificates exist exactly for zero-gap matrices, checked on the full
/// families of 2x2 and 3x3 sign matrices (16 + 512 cases, no sampling).
#[test]
fn certificate_exists_iff_zero_gap_on_sign_families() {
    for n in [2usize, 3] {
        for mask in 0u32..1 << (n * n) {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| if mask >> (j * n + k) & 1 == 1 { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect();
            let w = WeightMatrix::from_rows(&rows).unwrap();
            let bound = w.dim_factor() * w.operator_norm().unwrap();
            let hv = w.hv_norm().unwrap();
            let zero_gap = (bound - hv).abs() <= 1e-9 * bound;
            let cert = zero_gap_certificate(&w, 1e-9).unwrap();
            assert_eq!(
                cert.is_some(),
                zero_gap,
                "n={n} mask={mask:#b}: gap {} but certificate {:?}",
                bound - hv,
                cert
            );
            if let Some(pair) = cert {
                assert!(pair.certifies(&w, 1e-9).unwrap());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// operator-layer laws

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Assembled Bell operators respect both analytic ceilings: the
    /// dimensional norm bound and the Grothendieck bound.
    #[test]
    fn bell_operator_norm_respects_both_bounds(
        w in weight_strategy(3),
        raw in proptest::collection::vec(-1.0f64..1.0, 6 * 6),
    ) {
        let len = hermitian_len(2);
        let alice: Vec<_> = (0..w.n_a())
            .map(|j| unit_hermitian(2, &raw[j * len..(j + 1) * len]))
            .collect();
        let bob: Vec<_> = (0..w.n_b())
            .map(|k| unit_hermitian(2, &raw[(w.n_a() + k) * len..(w.n_a() + k + 1) * len]))
            .collect();
        let cfg = EprConfiguration::new(alice, bob).unwrap();
        let s = assemble_bell_operator(&w, &cfg).unwrap();
        let norm = bell_operator_norm(&s).unwrap();
        let b = bounds(&w).unwrap();
        let ceiling = b.norm_bound.min(b.grothendieck_bound);
        prop_assert!(norm <= ceiling + 1e-6, "norm {norm} > ceiling {ceiling}");
    }

    /// The correlation matrix reproduces the operator expectation:
    /// tr(W^T C(psi)) equals <psi|S psi> for every state and weight.
    #[test]
    fn correlation_reproduces_the_operator_expectation(
        w in weight_strategy(3),
        raw in proptest::collection::vec(-1.0f64..1.0, 6 * 6),
        state_raw in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let len = hermitian_len(2);
        let alice: Vec<_> = (0..w.n_a())
            .map(|j| unit_hermitian(2, &raw[j * len..(j + 1) * len]))
            .collect();
        let bob: Vec<_> = (0..w.n_b())
            .map(|k| unit_hermitian(2, &raw[(w.n_a() + k) * len..(w.n_a() + k + 1) * len]))
            .collect();
        let cfg = EprConfiguration::new(alice, bob).unwrap();
        let psi = unit_state(4, &state_raw);
        prop_assume!(psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()));

        let c = correlation_matrix(&cfg, &psi).unwrap();
        let mut lhs = 0.0;
        for j in 0..w.n_a() {
            for k in 0..w.n_b() {
                lhs += w.entry(j, k) * c[(j, k)];
            }
        }
        let s = assemble_bell_operator(&w, &cfg).unwrap();
        let rhs = (psi.adjoint() * s.matrix() * &psi)[(0, 0)].re;
        prop_assert!((lhs - rhs).abs() <= 1e-9, "tr(W^T C) = {lhs} vs <S> = {rhs}");
    }

    /// Entanglement entropy is side-symmetric: reshaping the state the
    /// other way (swapping the subsystems) gives the same value.
    #[test]
    fn entropy_is_side_symmetric(
        dim_a in 2usize..=4,
        dim_b in 2usize..=4,
        raw in proptest::collection::vec(-1.0f64..1.0, 32),
    ) {
        let psi = unit_state(dim_a * dim_b, &raw[..2 * dim_a * dim_b]);
        prop_assume!(psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let mut swapped = CVec::zeros(dim_a * dim_b);
        for mu in 0..dim_a {
            for nu in 0..dim_b {
                swapped[nu * dim_a + mu] = psi[mu * dim_b + nu];
            }
        }
        let sa = entanglement_entropy(&psi, dim_a, dim_b).unwrap();
        let sb = entanglement_entropy(&swapped, dim_b, dim_a).unwrap();
        prop_assert!((sa - sb).abs() <= 1e-10, "S_a = {sa} vs S_b = {sb}");
    }

    /// Commuting observables stay classical: when every operator on each
    /// side is diagonal, the Bell-operator norm cannot beat the box norm
    /// of the diagonal ranges.
    #[test]
    fn commuting_configurations_respect_the_box_norm(
        w in weight_strategy(3),
        raw in proptest::collection::vec(-1.0f64..1.0, 12),
    ) {
        let diag_op = |d0: f64, d1: f64| {
            let mut m = CMat::zeros(2, 2);
            m[(0, 0)] = C::new(d0, 0.0);
            m[(1, 1)] = C::new(d1, 0.0);
            HermitianOperator::new(m).unwrap()
        };
        let alice: Vec<_> = (0..w.n_a())
            .map(|j| diag_op(raw[2 * j], raw[2 * j + 1]))
            .collect();
        let bob: Vec<_> = (0..w.n_b())
            .map(|k| diag_op(raw[6 + 2 * k], raw[6 + 2 * k + 1]))
            .collect();
        let a_box = SpectralBox::new(
            (0..w.n_a()).map(|j| raw[2 * j].min(raw[2 * j + 1])).collect(),
            (0..w.n_a()).map(|j| raw[2 * j].max(raw[2 * j + 1])).collect(),
        )
        .unwrap();
        let b_box = SpectralBox::new(
            (0..w.n_b()).map(|k| raw[6 + 2 * k].min(raw[6 + 2 * k + 1])).collect(),
            (0..w.n_b()).map(|k| raw[6 + 2 * k].max(raw[6 + 2 * k + 1])).collect(),
        )
        .unwrap();

        let cfg = EprConfiguration::new(alice, bob).unwrap();
        let s = assemble_bell_operator(&w, &cfg).unwrap();
        let norm = bell_operator_norm(&s).unwrap();
        let box_norm = w.hv_box_norm(&a_box, &b_box).unwrap();
        prop_assert!(norm <= box_norm + 1e-8, "norm {norm} > box norm {box_norm}");
    }
}

// ---------------------------------------------------------------------------
// hidden-variable laws

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// No hidden-variable model beats the box norm of its own box pair.
    #[test]
    fn hv_expectations_never_exceed_the_box_norm(
        w in weight_strategy(4),
        raw in proptest::collection::vec(0.0f64..1.0, 16),
        model_raw in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let (n_a, n_b) = w.dims();
        let a_box = SpectralBox::new(
            (0..n_a).map(|j| -raw[j]).collect(),
            (0..n_a).map(|j| raw[8 + j]).collect(),
        )
        .unwrap();
        let b_box = SpectralBox::new(
            (0..n_b).map(|k| -raw[4 + k]).collect(),
            (0..n_b).map(|k| raw[12 + k]).collect(),
        )
        .unwrap();
        let a_values: Vec<f64> = (0..n_a)
            .map(|j| -raw[j] + model_raw[j] * (raw[8 + j] + raw[j]))
            .collect();
        let b_values: Vec<f64> = (0..n_b)
            .map(|k| -raw[4 + k] + model_raw[4 + k] * (raw[12 + k] + raw[4 + k]))
            .collect();
        let strategy = HvStrategy::new(a_values, b_values, &a_box, &b_box).unwrap();
        let model = HvModel::new(vec![strategy], vec![1.0]).unwrap();
        let e = hvmodel::hv_expectation(&w, &model).unwrap();
        let box_norm = w.hv_box_norm(&a_box, &b_box).unwrap();
        prop_assert!(e.abs() <= box_norm + 1e-12, "|{e}| > box norm {box_norm}");
    }

    /// The deterministic corner strategy meets the HV norm bit for bit.
    #[test]
    fn maximizing_corner_attains_the_hv_norm(w in weight_strategy(5)) {
        let corner = hvmodel::maximizing_model(&w).unwrap();
        let value = hvmodel::hv_expectation(&w, &corner).unwrap();
        prop_assert_eq!(value, w.hv_norm().unwrap());
    }
}

// ---------------------------------------------------------------------------
// search determinism

/// Same seed, same result: the whole search pipeline is a pure function
/// of its config, down to the last bit of the trace.
#[test]
fn evolve_is_a_pure_function_of_the_config() {
    let w = WeightMatrix::<f64>::chsh();
    let space = SearchSpace::new(2, 2, 2, 2).unwrap();
    for seed in [3u64, 11] {
        let config = GaConfig {
            seed,
            population: 24,
            generations: 30,
            stall_generations: 30,
            polish_iterations: 50,
            ..GaConfig::default()
        };
        let a = ga::evolve(&w, &space, &config, &SearchConstraint::None).unwrap();
        let b = ga::evolve(&w, &space, &config, &SearchConstraint::None).unwrap();
        assert_eq!(a.best_fitness.to_bits(), b.best_fitness.to_bits());
        assert_eq!(a.fitness_trace.len(), b.fitness_trace.len());
        for (x, y) in a.fitness_trace.iter().zip(&b.fitness_trace) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let sa = serde_json::to_string(&a.best_config).unwrap();
        let sb = serde_json::to_string(&b.best_config).unwrap();
        assert_eq!(sa, sb);
    }
}
