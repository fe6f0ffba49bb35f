//! Finite hidden-variable models: probability mixtures of deterministic
//! value assignments drawn from spectral boxes, their Bell expectations and
//! correlation matrices, and classification of expectation values against
//! the local and quantum ceilings.
//!
//! A mixture of finitely many deterministic strategies is fully general
//! here: the Bell expectation is bilinear in the assigned values, so the
//! extreme points of the model polytope are box corners and any
//! continuous-measure average is matched by a finite convex combination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::scalar::Real;
use crate::weights::{self, SpectralBox, WeightMatrix};

/// Slack allowed when checking that mixture weights sum to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One deterministic assignment of outcome values, componentwise inside
/// the spectral boxes it was validated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HvStrategy<T: Real> {
    a_values: Vec<T>,
    b_values: Vec<T>,
}

/// A finite mixture of strategies under a normalized probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HvModel<T: Real> {
    strategies: Vec<HvStrategy<T>>,
    weights: Vec<T>,
}

/// Where an expectation value sits relative to the local and quantum
/// ceilings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Within the reach of local models.
    Local,
    /// Above the box norm: no local model can produce it.
    BellViolating,
    /// Within tolerance of the dimensional quantum bound.
    AtQuantumBound,
}

impl<T: Real> HvStrategy<T> {
    /// Validates componentwise membership in the given boxes.
    pub fn new(
        a_values: Vec<T>,
        b_values: Vec<T>,
        a_box: &SpectralBox<T>,
        b_box: &SpectralBox<T>,
    ) -> Result<Self> {
        for (name, values, bounds) in
            [("a", &a_values, a_box), ("b", &b_values, b_box)]
        {
            if values.len() != bounds.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{name}-side strategy has {} values for a box of dimension {}",
                    values.len(),
                    bounds.len()
                )));
            }
            if !bounds.contains(values, T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "{name}-side strategy leaves its spectral box"
                )));
            }
        }
        Ok(Self { a_values, b_values })
    }

    pub fn a_values(&self) -> &[T] {
        &self.a_values
    }

    pub fn b_values(&self) -> &[T] {
        &self.b_values
    }
}

impl<T: Real> HvModel<T> {
    /// Validates a nonempty strategy list with consistent dimensions and a
    /// nonnegative weight vector summing to one within `1e-12`.
    pub fn new(strategies: Vec<HvStrategy<T>>, weights: Vec<T>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::InvalidInput(
                "a hidden-variable model needs at least one strategy".into(),
            ));
        }
        if strategies.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} strategies but {} weights",
                strategies.len(),
                weights.len()
            )));
        }
        let (na, nb) = (strategies[0].a_values.len(), strategies[0].b_values.len());
        for (i, s) in strategies.iter().enumerate() {
            if s.a_values.len() != na || s.b_values.len() != nb {
                return Err(Error::DimensionMismatch(format!(
                    "strategy {i} has dimensions ({}, {}), expected ({na}, {nb})",
                    s.a_values.len(),
                    s.b_values.len()
                )));
            }
        }
        let mut sum = T::zero();
        for (i, p) in weights.iter().enumerate() {
            if !p.is_finite() || *p < T::zero() {
                return Err(Error::InvalidInput(format!(
                    "mixture weight {i} = {p} is not a probability"
                )));
            }
            sum += *p;
        }
        if (sum - T::one()).abs() > T::of(WEIGHT_SUM_TOL) {
            return Err(Error::InvalidInput(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            strategies,
            weights,
        })
    }

    /// Single strategy taken with probability one.
    pub fn deterministic(strategy: HvStrategy<T>) -> Self {
        Self {
            strategies: vec![strategy],
            weights: vec![T::one()],
        }
    }

    pub fn strategies(&self) -> &[HvStrategy<T>] {
        &self.strategies
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dims(&self) -> (usize, usize) {
        (
            self.strategies[0].a_values.len(),
            self.strategies[0].b_values.len(),
        )
    }
}

/// Mean Bell expression value of a model:
/// `sum_s weight(s) * (a(s), W b(s))`.
///
/// Shares its bilinear-form evaluation with the corner enumeration in
/// `weights`, so a model sitting on the maximizing corner reproduces the
/// HV norm bit for bit.
pub fn hv_expectation<T: Real>(w: &WeightMatrix<T>, model: &HvModel<T>) -> Result<T> {
    if model.dims() != w.dims() {
        return Err(Error::DimensionMismatch(format!(
            "model dimensions {:?} do not match the weight matrix {:?}",
            model.dims(),
            w.dims()
        )));
    }
    let mut total = T::zero();
    for (s, p) in model.strategies.iter().zip(model.weights.iter()) {
        total += *p * weights::bilinear_form(w.as_matrix(), &s.a_values, &s.b_values);
    }
    Ok(total)
}

/// Mean correlation matrix of a model:
/// `c_jk = sum_s weight(s) * a_j(s) * b_k(s)`.
pub fn hv_correlation<T: Real>(model: &HvModel<T>) -> RMatrix<T> {
    let (na, nb) = model.dims();
    let mut c = RMatrix::zeros(na, nb);
    for (s, p) in model.strategies.iter().zip(model.weights.iter()) {
        for j in 0..na {
            for k in 0..nb {
                c[(j, k)] += *p * s.a_values[j] * s.b_values[k];
            }
        }
    }
    c
}

/// Deterministic stream of random models inside the given boxes. Each model
/// mixes one to four strategies; every value is a box end with probability
/// one half and uniform in its interval otherwise, and the mixture weights
/// are a uniform sample of the probability simplex.
pub fn random_hv_models<T: Real>(
    a_box: &SpectralBox<T>,
    b_box: &SpectralBox<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<HvModel<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_values = |bounds: &SpectralBox<T>, rng: &mut ChaCha8Rng| -> Vec<T> {
        (0..bounds.len())
            .map(|i| {
                let lo = bounds.lo()[i];
                let hi = bounds.hi()[i];
                if rng.random_bool(0.5) {
                    if rng.random_bool(0.5) {
                        hi
                    } else {
                        lo
                    }
                } else {
                    let u = T::of(rng.random_range(0.0..=1.0));
                    lo + (hi - lo) * u
                }
            })
            .collect()
    };
    let mut models = Vec::with_capacity(count);
    for _ in 0..count {
        let k = rng.random_range(1..=4usize);
        let mut strategies = Vec::with_capacity(k);
        for _ in 0..k {
            let a_values = draw_values(a_box, &mut rng);
            let b_values = draw_values(b_box, &mut rng);
            strategies.push(HvStrategy::new(a_values, b_values, a_box, b_box)?);
        }
        // Normalized standard exponentials sample the simplex uniformly.
        let mut weights: Vec<T> = (0..k)
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                T::of(e)
            })
            .collect();
        let sum: T = weights.iter().copied().sum();
        for p in &mut weights {
            *p /= sum;
        }
        models.push(HvModel::new(strategies, weights)?);
    }
    Ok(models)
}

/// Places an expectation value relative to the box norm and the dimensional
/// quantum bound `sqrt(N_a N_b) ||W||`, with `tol` slack on both
/// comparisons. Values within `tol` of the quantum bound report
/// `AtQuantumBound`; otherwise anything above the box norm is
/// `BellViolating`.
pub fn classify<T: Real>(
    value: T,
    w: &WeightMatrix<T>,
    a_box: &SpectralBox<T>,
    b_box: &SpectralBox<T>,
    tol: T,
) -> Result<Classification> {
    let magnitude = value.abs();
    let local_ceiling = w.hv_box_norm(a_box, b_box)?;
    let quantum_ceiling = w.dim_factor() * w.operator_norm()?;
    if (magnitude - quantum_ceiling).abs() <= tol {
        Ok(Classification::AtQuantumBound)
    } else if magnitude > local_ceiling + tol {
        Ok(Classification::BellViolating)
    } else {
        Ok(Classification::Local)
    }
}

/// The deterministic single-corner model attaining the HV norm exactly.
pub fn maximizing_model<T: Real>(w: &WeightMatrix<T>) -> Result<HvModel<T>> {
    let (na, nb) = w.dims();
    let m = w.hv_maximizer()?;
    let corner = HvStrategy::new(m.a, m.b, &SpectralBox::unit(na), &SpectralBox::unit(nb))?;
    Ok(HvModel::deterministic(corner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightMatrix;

    fn unit_boxes(na: usize, nb: usize) -> (SpectralBox<f64>, SpectralBox<f64>) {
        (SpectralBox::unit(na), SpectralBox::unit(nb))
    }

    fn all_plus(na: usize, nb: usize) -> HvModel<f64> {
        let (ab, bb) = unit_boxes(na, nb);
        HvModel::deterministic(
            HvStrategy::new(vec![1.0; na], vec![1.0; nb], &ab, &bb).unwrap(),
        )
    }

    #[test]
    fn validation_rejects_bad_models() {
        let (ab, bb) = unit_boxes(2, 2);
        assert!(HvStrategy::new(vec![1.0, 2.0], vec![1.0, 1.0], &ab, &bb).is_err());
        assert!(HvStrategy::new(vec![1.0], vec![1.0, 1.0], &ab, &bb).is_err());
        let s = HvStrategy::new(vec![1.0, -1.0], vec![0.5, 1.0], &ab, &bb).unwrap();
        assert!(HvModel::<f64>::new(vec![], vec![]).is_err());
        assert!(HvModel::new(vec![s.clone()], vec![0.9]).is_err());
        assert!(HvModel::new(vec![s.clone()], vec![-1.0]).is_err());
        assert!(HvModel::new(vec![s.clone(), s.clone()], vec![1.0]).is_err());
        assert!(HvModel::new(vec![s.clone(), s], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn expectation_reference_values() {
        let w = WeightMatrix::<f64>::chsh();
        // All-plus strategy sums the matrix entries: 1 + 1 + 1 - 1 = 2.
        assert_eq!(hv_expectation(&w, &all_plus(2, 2)).unwrap(), 2.0);

        // Flipping one side negates the bilinear form, so a uniform
        // mixture of a corner and its one-side flip cancels exactly.
        let (ab, bb) = unit_boxes(2, 2);
        let plus = HvStrategy::new(vec![1.0, 1.0], vec![1.0, 1.0], &ab, &bb).unwrap();
        let flipped =
            HvStrategy::new(vec![-1.0, -1.0], vec![1.0, 1.0], &ab, &bb).unwrap();
        let mix = HvModel::new(vec![plus, flipped], vec![0.5, 0.5]).unwrap();
        assert_eq!(hv_expectation(&w, &mix).unwrap(), 0.0);

        let tall = WeightMatrix::<f64>::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(hv_expectation(&tall, &all_plus(2, 2)).is_err());
    }

    #[test]
    fn correlation_reference_values() {
        let model = all_plus(3, 3);
        let c = hv_correlation(&model);
        assert!(c.iter().all(|&x| x == 1.0));

        let (ab, bb) = unit_boxes(2, 2);
        let s1 = HvStrategy::new(vec![1.0, -1.0], vec![1.0, 1.0], &ab, &bb).unwrap();
        let s2 = HvStrategy::new(vec![1.0, 1.0], vec![-1.0, 1.0], &ab, &bb).unwrap();
        let mix = HvModel::new(vec![s1, s2], vec![0.25, 0.75]).unwrap();
        let c = hv_correlation(&mix);
        assert!((c[(0, 0)] - (-0.5)).abs() < 1e-15);
        assert!((c[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((c[(1, 0)] - (-1.0)).abs() < 1e-15);
        assert!((c[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_models_respect_the_box_norm() {
        let w = WeightMatrix::<f64>::chsh();
        let (ab, bb) = unit_boxes(2, 2);
        let ceiling = w.hv_box_norm(&ab, &bb).unwrap();
        let models = random_hv_models(&ab, &bb, 500, 11).unwrap();
        assert_eq!(models.len(), 500);
        for m in &models {
            let v = hv_expectation(&w, m).unwrap();
            assert!(v.abs() <= ceiling + 1e-10, "expectation {v} exceeds {ceiling}");
        }
        assert!(random_hv_models::<f64>(&ab, &bb, 0, 11).unwrap().is_empty());
    }

    #[test]
    fn random_models_are_deterministic_per_seed() {
        let (ab, bb) = unit_boxes(3, 2);
        let a = random_hv_models::<f64>(&ab, &bb, 40, 5).unwrap();
        let b = random_hv_models::<f64>(&ab, &bb, 40, 5).unwrap();
        assert_eq!(a, b);
        let c = random_hv_models::<f64>(&ab, &bb, 40, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn corner_model_attains_the_hv_norm_exactly() {
        for w in [
            WeightMatrix::<f64>::chsh(),
            WeightMatrix::<f64>::magic_square(),
            WeightMatrix::from_rows(&[
                vec![0.4, -1.3, 0.7],
                vec![2.2, 0.1, -0.6],
            ])
            .unwrap(),
        ] {
            let model = maximizing_model(&w).unwrap();
            let v = hv_expectation(&w, &model).unwrap();
            assert_eq!(v.abs(), w.hv_norm().unwrap());
        }
    }

    #[test]
    fn classification_thresholds() {
        let w = WeightMatrix::<f64>::chsh();
        let (ab, bb) = unit_boxes(2, 2);
        let tol = 1e-6;
        let class = |v: f64| classify(v, &w, &ab, &bb, tol).unwrap();
        assert_eq!(class(1.0), Classification::Local);
        assert_eq!(class(2.0), Classification::Local);
        assert_eq!(class(-2.5), Classification::BellViolating);
        assert_eq!(class(2.0 * 2.0_f64.sqrt()), Classification::AtQuantumBound);
        assert_eq!(
            class(2.0 * 2.0_f64.sqrt() - 1e-8),
            Classification::AtQuantumBound
        );
    }

    #[test]
    fn asymmetric_boxes_shift_the_thresholds() {
        let w = WeightMatrix::<f64>::chsh();
        let ab = SpectralBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let bb = SpectralBox::unit(2);
        // Box norm doubles to 4, so 3.5 is local here but violating on
        // unit boxes.
        assert_eq!(
            classify(3.5, &w, &ab, &bb, 1e-6).unwrap(),
            Classification::Local
        );
        let s = HvStrategy::new(vec![2.0, -2.0], vec![1.0, 1.0], &ab, &bb).unwrap();
        assert_eq!(
            hv_expectation(&w, &HvModel::deterministic(s)).unwrap(),
            4.0
        );
    }
}
