//! The relation classifier: two `dense → batch-norm → ReLU` blocks followed
//! by a dense output layer producing one logit per relation class.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::MlpError;
use crate::geometry::{FeatureVector, BASE_FEATURES, GEO_FEATURES};
use crate::relation::NUM_RELATIONS;
use crate::Scalar;

/// Widths of the two hidden blocks.
pub const HIDDEN: [usize; 2] = [16, 32];

/// Number of trainable tensors, in [`MlpModel::PARAM_NAMES`] order.
pub const NUM_PARAM_TENSORS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Normalize with batch statistics.
    Train,
    /// Normalize with running statistics.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_dim: usize,
    pub epsilon: f64,
    pub momentum: f64,
}

impl ModelConfig {
    pub fn new(in_dim: usize) -> Self {
        Self { in_dim, epsilon: 1e-5, momentum: 0.1 }
    }
}

/// Fully connected layer; `weight` is `out_dim × in_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    /// Uniform in `±1/√in_dim` for weights and bias.
    fn init<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut draw = |n| (0..n).map(|_| T::lit(rng.gen_range(-bound..bound))).collect();
        let weight = draw(in_dim * out_dim);
        let bias = draw(out_dim);
        Self { in_dim, out_dim, weight, bias }
    }

    fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut z = x.mul_transposed(&self.weight, self.out_dim);
        for r in 0..z.rows() {
            for (v, &b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v = *v + b;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: vec![T::one(); width],
            beta: vec![T::zero(); width],
            running_mean: vec![T::zero(); width],
            running_var: vec![T::one(); width],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T = f64> {
    pub config: ModelConfig,
    pub layer1: Dense<T>,
    pub bn1: BatchNorm<T>,
    pub layer2: Dense<T>,
    pub bn2: BatchNorm<T>,
    pub layer3: Dense<T>,
}

/// Intermediates of one hidden block.
#[derive(Debug, Clone)]
pub struct BlockCache<T> {
    input: Matrix<T>,
    xhat: Matrix<T>,
    inv_std: Vec<T>,
    pre_relu: Matrix<T>,
    /// Batch mean of the dense output (bias included); train mode only.
    batch_mean: Vec<T>,
    /// Biased batch variance; train mode only.
    batch_var: Vec<T>,
}

impl<T: Scalar> BlockCache<T> {
    /// Normalized dense output, before the batch-norm scale and shift.
    pub fn xhat(&self) -> &Matrix<T> {
        &self.xhat
    }

    pub fn pre_relu(&self) -> &Matrix<T> {
        &self.pre_relu
    }
}

/// Everything [`MlpModel::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub mode: Mode,
    pub blocks: [BlockCache<T>; 2],
    output_input: Matrix<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Sign pattern of every ReLU input, used to detect kinks.
    pub fn relu_mask(&self) -> Vec<bool> {
        self.blocks
            .iter()
            .flat_map(|b| b.pre_relu.as_slice().iter().map(|&v| v > T::zero()))
            .collect()
    }
}

/// Gradients for every trainable tensor, in [`MlpModel::PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &MlpModel<T>) -> Self {
        Self { tensors: model.params().iter().map(|p| vec![T::zero(); p.len()]).collect() }
    }

    pub fn get(&self, name: &str) -> Option<&[T]> {
        let i = MlpModel::<T>::PARAM_NAMES.iter().position(|n| *n == name)?;
        Some(&self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Vec<T>> {
        let i = MlpModel::<T>::PARAM_NAMES.iter().position(|n| *n == name)?;
        Some(&mut self.tensors[i])
    }
}

impl<T: Scalar> MlpModel<T> {
    pub const PARAM_NAMES: [&'static str; NUM_PARAM_TENSORS] = [
        "layer1.weight",
        "layer1.bias",
        "bn1.gamma",
        "bn1.beta",
        "layer2.weight",
        "layer2.bias",
        "bn2.gamma",
        "bn2.beta",
        "layer3.weight",
        "layer3.bias",
    ];

    fn check_in_dim(in_dim: usize) -> Result<(), MlpError> {
        if in_dim == BASE_FEATURES || in_dim == GEO_FEATURES {
            Ok(())
        } else {
            Err(MlpError::Config(format!("in_dim must be 8 or 11, got {in_dim}")))
        }
    }

    /// All weights and biases zero, γ = 1, β = 0, running stats (0, 1).
    pub fn zeros(config: ModelConfig) -> Result<Self, MlpError> {
        Self::check_in_dim(config.in_dim)?;
        Ok(Self {
            config,
            layer1: Dense::zeros(config.in_dim, HIDDEN[0]),
            bn1: BatchNorm::new(HIDDEN[0]),
            layer2: Dense::zeros(HIDDEN[0], HIDDEN[1]),
            bn2: BatchNorm::new(HIDDEN[1]),
            layer3: Dense::zeros(HIDDEN[1], NUM_RELATIONS),
        })
    }

    /// Fan-in scaled uniform initialization for the hidden layers. The
    /// output layer starts at zero so the initial prediction is uniform.
    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, MlpError> {
        Self::check_in_dim(config.in_dim)?;
        Ok(Self {
            config,
            layer1: Dense::init(config.in_dim, HIDDEN[0], rng),
            bn1: BatchNorm::new(HIDDEN[0]),
            layer2: Dense::init(HIDDEN[0], HIDDEN[1], rng),
            bn2: BatchNorm::new(HIDDEN[1]),
            layer3: Dense::zeros(HIDDEN[1], NUM_RELATIONS),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.config.in_dim
    }

    pub fn params(&self) -> [&[T]; NUM_PARAM_TENSORS] {
        [
            &self.layer1.weight,
            &self.layer1.bias,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.layer2.weight,
            &self.layer2.bias,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.layer3.weight,
            &self.layer3.bias,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Vec<T>; NUM_PARAM_TENSORS] {
        [
            &mut self.layer1.weight,
            &mut self.layer1.bias,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.layer2.weight,
            &mut self.layer2.bias,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.layer3.weight,
            &mut self.layer3.bias,
        ]
    }

    pub fn num_trainable(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Stacks feature vectors into a batch, checking their width.
    pub fn batch_matrix(&self, batch: &[FeatureVector<T>]) -> Result<Matrix<T>, MlpError> {
        for f in batch {
            if f.len() != self.in_dim() {
                return Err(MlpError::Dimension { expected: self.in_dim(), actual: f.len() });
            }
        }
        let rows: Vec<&[T]> = batch.iter().map(|f| f.as_slice()).collect();
        let mut m = Matrix::from_rows(&rows);
        if batch.is_empty() {
            m = Matrix::zeros(0, self.in_dim());
        }
        Ok(m)
    }

    pub fn forward(
        &self,
        batch: &[FeatureVector<T>],
        mode: Mode,
    ) -> Result<(Matrix<T>, ForwardCache<T>), MlpError> {
        let x = self.batch_matrix(batch)?;
        self.forward_matrix(x, mode)
    }

    /// Forward pass over a pre-assembled `n × in_dim` batch. Does not touch
    /// the running statistics; see [`MlpModel::update_running_stats`].
    pub fn forward_matrix(&self, x: Matrix<T>, mode: Mode) -> Result<(Matrix<T>, ForwardCache<T>), MlpError> {
        if x.cols() != self.in_dim() {
            return Err(MlpError::Dimension { expected: self.in_dim(), actual: x.cols() });
        }
        if mode == Mode::Train && x.rows() < 2 {
            return Err(MlpError::BatchTooSmall(x.rows()));
        }
        let eps = T::lit(self.config.epsilon);
        let block1 = hidden_block(&self.layer1, &self.bn1, x, mode, eps);
        let a1 = relu(&block1.pre_relu);
        let block2 = hidden_block(&self.layer2, &self.bn2, a1, mode, eps);
        let a2 = relu(&block2.pre_relu);
        let logits = self.layer3.forward(&a2);
        Ok((logits, ForwardCache { mode, blocks: [block1, block2], output_input: a2 }))
    }

    /// Momentum update of the running statistics from a train-mode pass.
    /// The running variance uses the unbiased batch variance.
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        if cache.mode != Mode::Train {
            return;
        }
        let m = T::lit(self.config.momentum);
        let keep = T::one() - m;
        let n = cache.blocks[0].input.rows();
        let unbias = T::from_usize_lossy(n) / T::from_usize_lossy(n - 1);
        for (bn, block) in [&mut self.bn1, &mut self.bn2].into_iter().zip(&cache.blocks) {
            for c in 0..bn.gamma.len() {
                bn.running_mean[c] = keep * bn.running_mean[c] + m * block.batch_mean[c];
                bn.running_var[c] = keep * bn.running_var[c] + m * block.batch_var[c] * unbias;
            }
        }
    }

    /// Reverse-mode gradients of the loss given `dlogits = ∂L/∂logits`.
    pub fn backward(&self, cache: &ForwardCache<T>, dlogits: &Matrix<T>) -> Gradients<T> {
        let n = dlogits.rows();
        let dw3 = dlogits.transpose_mul(&cache.output_input);
        let db3 = dlogits.column_sums();
        let da2 = dlogits.mul(&self.layer3.weight, self.layer3.in_dim);

        let (dw2, db2, dg2, dbeta2, da1) =
            block_backward(&self.layer2, &self.bn2, &cache.blocks[1], da2, cache.mode, n, true);
        let (dw1, db1, dg1, dbeta1, _) =
            block_backward(&self.layer1, &self.bn1, &cache.blocks[0], da1.expect("requested"), cache.mode, n, false);

        Gradients { tensors: vec![dw1, db1, dg1, dbeta1, dw2, db2, dg2, dbeta2, dw3, db3] }
    }
}

fn relu<T: Scalar>(z: &Matrix<T>) -> Matrix<T> {
    let data = z.as_slice().iter().map(|&v| v.max(T::zero())).collect();
    Matrix::from_vec(z.rows(), z.cols(), data)
}

fn hidden_block<T: Scalar>(
    dense: &Dense<T>,
    bn: &BatchNorm<T>,
    input: Matrix<T>,
    mode: Mode,
    eps: T,
) -> BlockCache<T> {
    let width = dense.out_dim;
    let n = input.rows();
    let (xhat, inv_std, batch_mean, batch_var) = match mode {
        Mode::Train => {
            // The bias shifts every row equally and is removed by the mean,
            // so it is left out of the normalized path and only feeds the
            // running mean.
            let z = input.mul_transposed(&dense.weight, width);
            let nf = T::from_usize_lossy(n);
            let mean: Vec<T> = z.column_sums().into_iter().map(|s| s / nf).collect();
            let mut centered = z;
            for r in 0..n {
                for (v, &mu) in centered.row_mut(r).iter_mut().zip(&mean) {
                    *v = *v - mu;
                }
            }
            let mut var = vec![T::zero(); width];
            for r in 0..n {
                for (s, &v) in var.iter_mut().zip(centered.row(r)) {
                    *s = *s + v * v;
                }
            }
            for v in var.iter_mut() {
                *v = *v / nf;
            }
            let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
            for r in 0..n {
                for (v, &s) in centered.row_mut(r).iter_mut().zip(&inv_std) {
                    *v = *v * s;
                }
            }
            let batch_mean = mean.iter().zip(&dense.bias).map(|(&m, &b)| m + b).collect();
            (centered, inv_std, batch_mean, var)
        }
        Mode::Eval => {
            let mut z = dense.forward(&input);
            let inv_std: Vec<T> = bn.running_var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
            for r in 0..n {
                for c in 0..width {
                    let v = z.get(r, c);
                    z.set(r, c, (v - bn.running_mean[c]) * inv_std[c]);
                }
            }
            (z, inv_std, Vec::new(), Vec::new())
        }
    };
    let mut pre_relu = xhat.clone();
    for r in 0..n {
        for (c, v) in pre_relu.row_mut(r).iter_mut().enumerate() {
            *v = bn.gamma[c] * *v + bn.beta[c];
        }
    }
    BlockCache { input, xhat, inv_std, pre_relu, batch_mean, batch_var }
}

type BlockGrads<T> = (Vec<T>, Vec<T>, Vec<T>, Vec<T>, Option<Matrix<T>>);

fn block_backward<T: Scalar>(
    dense: &Dense<T>,
    bn: &BatchNorm<T>,
    cache: &BlockCache<T>,
    mut dout: Matrix<T>,
    mode: Mode,
    n: usize,
    want_input_grad: bool,
) -> BlockGrads<T> {
    let width = dense.out_dim;
    // through ReLU
    for r in 0..n {
        for c in 0..width {
            if cache.pre_relu.get(r, c) <= T::zero() {
                dout.set(r, c, T::zero());
            }
        }
    }
    let dy = dout;
    let mut dgamma = vec![T::zero(); width];
    let dbeta = dy.column_sums();
    for r in 0..n {
        for c in 0..width {
            dgamma[c] = dgamma[c] + dy.get(r, c) * cache.xhat.get(r, c);
        }
    }
    let mut dz = Matrix::zeros(n, width);
    match mode {
        Mode::Train => {
            // dz = inv_std / n · (n·dx̂ − Σdx̂ − x̂·Σ(dx̂·x̂)), with dx̂ = dy·γ
            let nf = T::from_usize_lossy(n);
            let mut sum_dxhat = vec![T::zero(); width];
            let mut sum_dxhat_xhat = vec![T::zero(); width];
            for r in 0..n {
                for c in 0..width {
                    let d = dy.get(r, c) * bn.gamma[c];
                    sum_dxhat[c] = sum_dxhat[c] + d;
                    sum_dxhat_xhat[c] = sum_dxhat_xhat[c] + d * cache.xhat.get(r, c);
                }
            }
            for r in 0..n {
                for c in 0..width {
                    let d = dy.get(r, c) * bn.gamma[c];
                    let v = cache.inv_std[c] / nf
                        * (nf * d - sum_dxhat[c] - cache.xhat.get(r, c) * sum_dxhat_xhat[c]);
                    dz.set(r, c, v);
                }
            }
        }
        Mode::Eval => {
            for r in 0..n {
                for c in 0..width {
                    dz.set(r, c, dy.get(r, c) * bn.gamma[c] * cache.inv_std[c]);
                }
            }
        }
    }
    let dw = dz.transpose_mul(&cache.input);
    let db = dz.column_sums();
    let dinput = want_input_grad.then(|| dz.mul(&dense.weight, dense.in_dim));
    (dw, db, dgamma, dbeta, dinput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::softmax_cross_entropy;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<FeatureVector<f64>> {
        (0..n)
            .map(|_| FeatureVector::new((0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap())
            .collect()
    }

    /// Straight-loop forward pass used as an independent oracle.
    fn oracle_eval_forward(m: &MlpModel<f64>, x: &[f64]) -> Vec<f64> {
        fn dense(d: &Dense<f64>, x: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; d.out_dim];
            for o in 0..d.out_dim {
                let mut acc = d.bias[o];
                for i in 0..d.in_dim {
                    acc += d.weight[o * d.in_dim + i] * x[i];
                }
                out[o] = acc;
            }
            out
        }
        fn norm_relu(bn: &BatchNorm<f64>, z: &[f64], eps: f64) -> Vec<f64> {
            let mut out = vec![0.0; z.len()];
            for c in 0..z.len() {
                let v = bn.gamma[c] * (z[c] - bn.running_mean[c]) / (bn.running_var[c] + eps).sqrt() + bn.beta[c];
                out[c] = if v > 0.0 { v } else { 0.0 };
            }
            out
        }
        let eps = m.config.epsilon;
        let h1 = norm_relu(&m.bn1, &dense(&m.layer1, x), eps);
        let h2 = norm_relu(&m.bn2, &dense(&m.layer2, &h1), eps);
        dense(&m.layer3, &h2)
    }

    fn randomized_model(seed: u64) -> MlpModel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = MlpModel::init(ModelConfig::new(11), &mut rng).unwrap();
        for bn in [&mut m.bn1, &mut m.bn2] {
            for c in 0..bn.gamma.len() {
                bn.gamma[c] = rng.gen_range(0.5..1.5);
                bn.beta[c] = rng.gen_range(-0.5..0.5);
                bn.running_mean[c] = rng.gen_range(-0.5..0.5);
                bn.running_var[c] = rng.gen_range(0.2..2.0);
            }
        }
        m
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let m = MlpModel::<f64>::zeros(ModelConfig::new(8)).unwrap();
        let batch = vec![FeatureVector::new(vec![0.3; 8]).unwrap()];
        let (logits, _) = m.forward(&batch, Mode::Eval).unwrap();
        assert!(logits.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_inputs_normalize_to_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = MlpModel::<f64>::init(ModelConfig::new(8), &mut rng).unwrap();
        m.bn1.beta = (0..16).map(|i| i as f64 * 0.1 - 0.8).collect();
        let f = FeatureVector::new(vec![0.2, 0.4, 0.1, 0.3, 0.5, 0.5, 0.2, 0.2]).unwrap();
        let (_, cache) = m.forward(&[f.clone(), f], Mode::Train).unwrap();
        for r in 0..2 {
            for c in 0..16 {
                assert!((cache.blocks[0].pre_relu().get(r, c) - m.bn1.beta[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_forward_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..5 {
            let m = randomized_model(seed);
            let batch = random_batch(&mut rng, 1, 11);
            let (logits, _) = m.forward(&batch, Mode::Eval).unwrap();
            let oracle = oracle_eval_forward(&m, batch[0].as_slice());
            for (a, b) in logits.row(0).iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_and_small_batch() {
        let m = MlpModel::<f64>::zeros(ModelConfig::new(11)).unwrap();
        let f8 = FeatureVector::new(vec![0.1; 8]).unwrap();
        assert!(matches!(
            m.forward(&[f8], Mode::Eval),
            Err(MlpError::Dimension { expected: 11, actual: 8 })
        ));
        let f11 = FeatureVector::new(vec![0.1; 11]).unwrap();
        assert!(matches!(m.forward(&[f11], Mode::Train), Err(MlpError::BatchTooSmall(1))));
        assert!(MlpModel::<f64>::zeros(ModelConfig::new(5)).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let m = randomized_model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (logits, cache) = m.forward(&random_batch(&mut rng, 6, 11), Mode::Train).unwrap();
        let g = m.backward(&cache, &Matrix::zeros(logits.rows(), 9));
        assert!(g.tensors.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn output_weight_gradient_is_outer_product() {
        let m = randomized_model(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = random_batch(&mut rng, 1, 11);
        let (_, cache) = m.forward(&batch, Mode::Eval).unwrap();
        let mut delta = Matrix::zeros(1, 9);
        for k in 0..9 {
            delta.set(0, k, (k as f64 - 4.0) * 0.1);
        }
        let g = m.backward(&cache, &delta);
        let dw3 = g.get("layer3.weight").unwrap();
        let h = cache.output_input.row(0);
        for k in 0..9 {
            for j in 0..32 {
                assert_eq!(dw3[k * 32 + j], delta.get(0, k) * h[j]);
            }
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = MlpModel::<f64>::init(ModelConfig::new(8), &mut rng).unwrap();
        let batch = random_batch(&mut rng, 4, 8);
        let (_, cache) = m.forward(&batch, Mode::Train).unwrap();
        let mean = cache.blocks[0].batch_mean.clone();
        let var = cache.blocks[0].batch_var.clone();
        m.update_running_stats(&cache);
        for c in 0..16 {
            assert!((m.bn1.running_mean[c] - 0.1 * mean[c]).abs() < 1e-15);
            assert!((m.bn1.running_var[c] - (0.9 + 0.1 * var[c] * 4.0 / 3.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_decreases_along_negative_gradient() {
        let m = randomized_model(12);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let batch = random_batch(&mut rng, 8, 11);
        let labels: Vec<usize> = (0..8).map(|i| i % 9).collect();
        let (logits, cache) = m.forward(&batch, Mode::Train).unwrap();
        let (loss, dl) = softmax_cross_entropy(&logits, &labels);
        let g = m.backward(&cache, &dl);
        let mut stepped = m.clone();
        for (p, d) in stepped.params_mut().into_iter().zip(&g.tensors) {
            for (v, &gv) in p.iter_mut().zip(d) {
                *v -= 1e-3 * gv;
            }
        }
        let (logits2, _) = stepped.forward(&batch, Mode::Train).unwrap();
        assert!(softmax_cross_entropy(&logits2, &labels).0 < loss);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn train_mode_batch_norm_normalizes(seed in any::<u64>(), n in 2usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = MlpModel::<f64>::init(ModelConfig::new(11), &mut rng).unwrap();
            let batch = random_batch(&mut rng, n, 11);
            let (_, cache) = m.forward(&batch, Mode::Train).unwrap();
            for block in &cache.blocks {
                let xhat = &block.xhat;
                for c in 0..xhat.cols() {
                    let col: Vec<f64> = (0..n).map(|r| xhat.get(r, c)).collect();
                    let mean = col.iter().sum::<f64>() / n as f64;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                    let raw_var = block.batch_var[c];
                    prop_assert!(mean.abs() < 1e-6);
                    // x̂ variance is σ²/(σ²+ε); it is 1 up to ε unless the
                    // column is (near) constant.
                    let expect = raw_var / (raw_var + m.config.epsilon);
                    prop_assert!((var - expect).abs() < 1e-9);
                    if raw_var > 1.0 {
                        prop_assert!((var - 1.0).abs() < 1e-5);
                    }
                }
            }
        }
    }
}
