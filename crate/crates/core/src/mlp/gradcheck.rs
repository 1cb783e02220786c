//! Central finite-difference check of [`MlpModel::backward`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::loss::softmax_cross_entropy;
use super::matrix::Matrix;
use super::model::{Gradients, MlpModel, Mode, ModelConfig, HIDDEN};
use super::MlpError;
use crate::geometry::{FeatureVector, GEO_FEATURES};
use crate::relation::NUM_RELATIONS;
use crate::Scalar;

/// Denominator floor of the relative error.
pub const RELATIVE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Scalars compared.
    pub checked: usize,
    /// Scalars whose ±step perturbation flipped a ReLU, where a central
    /// difference does not estimate the derivative.
    pub skipped_kinks: usize,
    /// Parameter tensor and flat index of the worst scalar.
    pub worst: Option<(String, usize)>,
}

fn train_logits<T: Scalar>(model: &MlpModel<T>, x: &Matrix<T>) -> Result<(Matrix<T>, Vec<bool>), MlpError> {
    let (logits, cache) = model.forward_matrix(x.clone(), Mode::Train)?;
    Ok((logits, cache.relu_mask()))
}

/// `loss(plus) − loss(minus)` for mean cross-entropy, formed from logit
/// differences. Subtracting two rounded loss values of order 1 loses about
/// 1e-16 absolute, which swamps gradients near 1e-7 at a 1e-5 step.
fn loss_difference<T: Scalar>(plus: &Matrix<T>, minus: &Matrix<T>, labels: &[usize]) -> T {
    let mut total = T::zero();
    for (r, &y) in labels.iter().enumerate() {
        let (a, b) = (plus.row(r), minus.row(r));
        let m = b.iter().copied().fold(T::neg_infinity(), T::max);
        let mut base = T::zero();
        let mut delta = T::zero();
        for (&ak, &bk) in a.iter().zip(b) {
            let e = (bk - m).exp();
            base = base + e;
            delta = delta + e * (ak - bk).exp_m1();
        }
        total = total + (delta / base).ln_1p() - (a[y] - b[y]);
    }
    total / T::from_usize_lossy(labels.len())
}

/// Checks the analytic gradient of the train-mode mean cross-entropy at
/// every trainable scalar.
pub fn gradient_check<T: Scalar>(
    model: &MlpModel<T>,
    batch: &[FeatureVector<T>],
    labels: &[usize],
    step: f64,
) -> Result<GradCheckReport, MlpError> {
    let x = model.batch_matrix(batch)?;
    let (logits, cache) = model.forward_matrix(x, Mode::Train)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, labels);
    let analytic = model.backward(&cache, &dlogits);
    gradient_check_against(model, batch, labels, step, &analytic)
}

/// Compares the supplied gradients with central differences. Returns the
/// largest `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check_against<T: Scalar>(
    model: &MlpModel<T>,
    batch: &[FeatureVector<T>],
    labels: &[usize],
    step: f64,
    analytic: &Gradients<T>,
) -> Result<GradCheckReport, MlpError> {
    if batch.len() < 2 {
        return Err(MlpError::BatchTooSmall(batch.len()));
    }
    let x = model.batch_matrix(batch)?;
    let (_, base_mask) = train_logits(model, &x)?;
    let h = T::lit(step);
    let mut probe = model.clone();
    let mut report = GradCheckReport { max_relative_error: 0.0, checked: 0, skipped_kinks: 0, worst: None };

    for (t, name) in MlpModel::<T>::PARAM_NAMES.iter().enumerate() {
        let len = model.params()[t].len();
        for i in 0..len {
            let original = model.params()[t][i];
            probe.params_mut()[t][i] = original + h;
            let (plus, mask_plus) = train_logits(&probe, &x)?;
            probe.params_mut()[t][i] = original - h;
            let (minus, mask_minus) = train_logits(&probe, &x)?;
            probe.params_mut()[t][i] = original;

            if mask_plus != base_mask || mask_minus != base_mask {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (loss_difference(&plus, &minus, labels) / (h + h)).to_f64_lossy();
            let a = analytic.tensors[t][i].to_f64_lossy();
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            let err = (a - numeric).abs() / denom;
            report.checked += 1;
            if err > report.max_relative_error || err.is_nan() {
                report.max_relative_error = err;
                report.worst = Some((name.to_string(), i));
            }
        }
    }
    Ok(report)
}

/// Random model and batch for gradient checking: fan-in initialized
/// weights, perturbed batch-norm affine parameters, 12 geometry-sized
/// inputs and uniform labels.
pub fn random_case(seed: u64) -> (MlpModel<f64>, Vec<FeatureVector<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::init(ModelConfig::new(GEO_FEATURES), &mut rng).expect("valid in_dim");
    for bn in [&mut model.bn1, &mut model.bn2] {
        for c in 0..bn.gamma.len() {
            bn.gamma[c] = rng.gen_range(0.5..1.5);
            bn.beta[c] = rng.gen_range(-0.5..0.5);
        }
    }
    // `init` zeroes the output layer; a check there would leave most
    // gradients identically zero.
    let bound = 1.0 / (HIDDEN[1] as f64).sqrt();
    for w in model.layer3.weight.iter_mut().chain(model.layer3.bias.iter_mut()) {
        *w = rng.gen_range(-bound..bound);
    }
    let batch = (0..12)
        .map(|_| {
            let v = (0..GEO_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect();
            FeatureVector::new(v).expect("finite features")
        })
        .collect();
    let labels = (0..12).map(|_| rng.gen_range(0..NUM_RELATIONS)).collect();
    (model, batch, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_difference_matches_direct_subtraction() {
        let a = Matrix::from_rows(&[[0.3, -1.2, 2.0, 0.0, 0.5, -0.4, 1.1, 0.9, -2.0], [1.0; 9]]);
        let b = Matrix::from_rows(&[[0.1, -1.0, 2.5, 0.2, 0.4, -0.4, 1.0, 0.7, -1.5], [0.0; 9]]);
        let labels = [2, 4];
        let direct: f64 = softmax_cross_entropy(&a, &labels).0 - softmax_cross_entropy(&b, &labels).0;
        assert!((loss_difference(&a, &b, &labels) - direct).abs() < 1e-14);
    }

    #[test]
    fn correct_backward_passes() {
        for seed in 0..3 {
            let (m, b, l) = random_case(seed);
            let r = gradient_check(&m, &b, &l, 1e-5).unwrap();
            assert!(r.max_relative_error < 1e-4, "seed {seed}: {r:?}");
            assert!(r.checked >= 200);
        }
    }

    #[test]
    fn flipped_weight_gradient_is_caught() {
        let (m, b, l) = random_case(1);
        let (logits, cache) = m.forward(&b, Mode::Train).unwrap();
        let (_, d) = softmax_cross_entropy(&logits, &l);
        let mut g = m.backward(&cache, &d);
        for v in g.get_mut("layer2.weight").unwrap() {
            *v = -*v;
        }
        let r = gradient_check_against(&m, &b, &l, 1e-5, &g).unwrap();
        assert!(r.max_relative_error > 1e-1);
        assert_eq!(r.worst.unwrap().0, "layer2.weight");
    }

    #[test]
    fn zero_gradient_point() {
        // Zero output layer: logits are constant, every gradient is exactly 0.
        let (mut m, b, l) = random_case(2);
        m.layer3.weight.iter_mut().for_each(|w| *w = 0.0);
        m.layer3.bias.iter_mut().for_each(|w| *w = 0.0);
        let r = gradient_check(&m, &b, &l, 1e-5).unwrap();
        // Only the output layer receives gradient; the rest sit under the floor.
        let (logits, cache) = m.forward(&b, Mode::Train).unwrap();
        let (_, d) = softmax_cross_entropy(&logits, &l);
        let g = m.backward(&cache, &d);
        assert!(g.get("layer1.weight").unwrap().iter().all(|&v| v == 0.0));
        assert!(r.max_relative_error < 1e-4);
    }
}
