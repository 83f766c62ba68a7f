//! Deep belief network: a stack of RBMs under a softmax output layer.
//!
//! Training happens in two phases. [`Dbn::pretrain`] fits each RBM greedily on
//! the mean-field hidden activations of the layer below; [`Dbn::finetune`] then
//! runs mini-batch gradient descent on the cross-entropy of the softmax output,
//! backpropagating through every layer. The sigmoid hidden units of the
//! discriminative network reuse the RBM weights and hidden biases; visible
//! biases only matter for pre-training.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{axpy, Matrix};
use crate::rbm::{CdConfig, Rbm};
use crate::rng::RngStream;
use crate::{Error, Result};

// stream tags for the sub-streams a DBN draws from
const INIT_STREAM: u64 = 0x1D;
const PRETRAIN_STREAM: u64 = 0x2E;
const FINETUNE_STREAM: u64 = 0x3F;

/// Smallest and largest hidden width drawn by [`random_layer_sizes`].
pub const HIDDEN_WIDTH_RANGE: (usize, usize) = (5, 50);

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DbnConfig {
    /// Hidden layer widths, bottom to top.
    pub layer_sizes: Vec<usize>,
    pub n_classes: usize,
    pub pretrain: CdConfig,
    /// Per-sample step size, applied to the summed batch gradient like
    /// [`CdConfig::learning_rate`].
    pub finetune_lr: f64,
    pub finetune_epochs: usize,
    /// Fine-tuning mini-batch size; clamped to the number of rows.
    pub finetune_batch_size: usize,
    pub seed: u64,
}

impl DbnConfig {
    /// Two hidden layers of width 25 with the default learning schedule
    /// (pre-training 100 epochs, fine-tuning 300 epochs, both at rate 0.01).
    pub fn new(n_classes: usize, seed: u64) -> Self {
        DbnConfig {
            layer_sizes: vec![25, 25],
            n_classes,
            pretrain: CdConfig::default(),
            finetune_lr: 0.01,
            finetune_epochs: 300,
            finetune_batch_size: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() {
            return Err(Error::param("a DBN needs at least one hidden layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::param("hidden layers must have at least one unit"));
        }
        if self.n_classes < 2 {
            return Err(Error::param("a classifier needs at least two classes"));
        }
        if !(self.finetune_lr >= 0.0 && self.finetune_lr.is_finite()) {
            return Err(Error::param("finetune_lr must be finite and >= 0"));
        }
        if self.finetune_batch_size == 0 {
            return Err(Error::param("finetune_batch_size must be >= 1"));
        }
        self.pretrain.validate()
    }
}

/// Draws `n_layers` widths uniformly from [`HIDDEN_WIDTH_RANGE`].
pub fn random_layer_sizes(n_layers: usize, rng: &mut RngStream) -> Vec<usize> {
    let (lo, hi) = HIDDEN_WIDTH_RANGE;
    (0..n_layers).map(|_| lo + rng.below(hi - lo + 1)).collect()
}

/// Per-epoch training losses from [`Dbn::finetune`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FinetuneReport {
    /// Mean cross-entropy on the full training set after each epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dbn {
    layers: Vec<Rbm>,
    /// `top hidden width × n_classes`.
    softmax_weights: Matrix,
    softmax_bias: Vec<f64>,
}

/// Softmax-layer gradients of the mean cross-entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dbn {
    /// A freshly initialized, untrained network for inputs of width `n_inputs`.
    pub fn new(n_inputs: usize, cfg: &DbnConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = RngStream::new(cfg.seed, INIT_STREAM);
        let mut layers = Vec::with_capacity(cfg.layer_sizes.len());
        let mut width = n_inputs;
        for &h in &cfg.layer_sizes {
            layers.push(Rbm::new(width, h, &mut rng)?);
            width = h;
        }
        let mut softmax_weights = Matrix::zeros(width, cfg.n_classes);
        for w in softmax_weights.values_mut() {
            *w = rng.sample_normal(0.0, 0.01)?;
        }
        Ok(Dbn {
            layers,
            softmax_weights,
            softmax_bias: vec![0.0; cfg.n_classes],
        })
    }

    pub fn from_parts(layers: Vec<Rbm>, softmax_weights: Matrix, softmax_bias: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("a DBN needs at least one hidden layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].n_hidden() != pair[1].n_visible() {
                return Err(Error::shape("Dbn::from_parts", pair[0].n_hidden(), pair[1].n_visible()));
            }
        }
        let top = layers[layers.len() - 1].n_hidden();
        if softmax_weights.rows() != top {
            return Err(Error::shape("Dbn::from_parts", top, softmax_weights.rows()));
        }
        if softmax_weights.cols() != softmax_bias.len() || softmax_bias.len() < 2 {
            return Err(Error::shape(
                "Dbn::from_parts",
                softmax_weights.cols(),
                softmax_bias.len(),
            ));
        }
        if softmax_bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("softmax bias must be finite"));
        }
        Ok(Dbn {
            layers,
            softmax_weights,
            softmax_bias,
        })
    }

    /// Builds a network and runs greedy layer-wise pre-training on `x`.
    /// The softmax layer is left at its initial values.
    pub fn pretrain(cfg: &DbnConfig, x: &Matrix) -> Result<Self> {
        let mut dbn = Dbn::new(x.cols(), cfg)?;
        dbn.pretrain_layers(x, &cfg.pretrain, cfg.seed, |_, _| {})?;
        Ok(dbn)
    }

    /// Greedy bottom-up CD training. `observe(layer, input)` sees the exact
    /// training input handed to each layer.
    pub fn pretrain_layers(
        &mut self,
        x: &Matrix,
        cd: &CdConfig,
        seed: u64,
        mut observe: impl FnMut(usize, &Matrix),
    ) -> Result<()> {
        if x.rows() == 0 {
            return Err(Error::param("cannot pre-train on empty data"));
        }
        if x.cols() != self.n_inputs() {
            return Err(Error::shape("Dbn::pretrain", self.n_inputs(), x.cols()));
        }
        let base = RngStream::new(seed, PRETRAIN_STREAM);
        let mut input = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            observe(i, &input);
            let mut rng = base.derive(i as u64);
            layer.cd_train(&input, cd, &mut rng)?;
            input = layer.hidden_given_visible(&input)?;
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Rbm] {
        &self.layers
    }

    pub fn softmax_weights(&self) -> &Matrix {
        &self.softmax_weights
    }

    pub fn softmax_bias(&self) -> &[f64] {
        &self.softmax_bias
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_visible()
    }

    pub fn n_classes(&self) -> usize {
        self.softmax_bias.len()
    }

    /// Sigmoid activations of every hidden layer; `acts[0]` is the input.
    fn forward(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        if x.cols() != self.n_inputs() {
            return Err(Error::shape("Dbn::forward", self.n_inputs(), x.cols()));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = layer.hidden_given_visible(&acts[acts.len() - 1])?;
            acts.push(next);
        }
        Ok(acts)
    }

    /// Top-layer representation fed to the softmax layer.
    pub fn top_features(&self, x: &Matrix) -> Result<Matrix> {
        let mut acts = self.forward(x)?;
        Ok(acts.pop().expect("at least one layer"))
    }

    fn logits(&self, top: &Matrix) -> Result<Matrix> {
        let mut z = top.matmul(&self.softmax_weights)?;
        z.add_row_vector(&self.softmax_bias)?;
        Ok(z)
    }

    /// Class posteriors, one row per sample; each row sums to one.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let top = self.top_features(x)?;
        let mut z = self.logits(&top)?;
        for r in 0..z.rows() {
            softmax_inplace(&mut z.values_mut()[r * self.n_classes()..(r + 1) * self.n_classes()]);
        }
        Ok(z)
    }

    /// Most probable class per row, ties to the lowest index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(x)?))
    }

    /// Mean cross-entropy of the softmax output against `labels`.
    pub fn loss(&self, x: &Matrix, labels: &[usize]) -> Result<f64> {
        self.check_labels(x, labels)?;
        if labels.is_empty() {
            return Ok(0.0);
        }
        let z = self.logits(&self.top_features(x)?)?;
        let total: f64 = z
            .iter_rows()
            .zip(labels)
            .map(|(row, &y)| log_sum_exp(row) - row[y])
            .sum();
        Ok(total / labels.len() as f64)
    }

    /// Analytic gradient of [`Dbn::loss`] with respect to the softmax layer.
    pub fn softmax_gradient(&self, x: &Matrix, labels: &[usize]) -> Result<SoftmaxGradient> {
        self.check_labels(x, labels)?;
        let top = self.top_features(x)?;
        let delta = self.output_delta(&top, labels)?;
        Ok(SoftmaxGradient {
            weights: top.t_matmul(&delta)?,
            bias: delta.col_sums(),
        })
    }

    /// `(softmax(z) - onehot(y)) / n`, the gradient of the mean loss w.r.t. logits.
    fn output_delta(&self, top: &Matrix, labels: &[usize]) -> Result<Matrix> {
        let k = self.n_classes();
        let mut delta = self.logits(top)?;
        let inv_n = 1.0 / labels.len().max(1) as f64;
        for (r, &y) in labels.iter().enumerate() {
            let row = &mut delta.values_mut()[r * k..(r + 1) * k];
            softmax_inplace(row);
            row[y] -= 1.0;
            for v in row.iter_mut() {
                *v *= inv_n;
            }
        }
        Ok(delta)
    }

    fn check_labels(&self, x: &Matrix, labels: &[usize]) -> Result<()> {
        if x.rows() != labels.len() {
            return Err(Error::shape("labels", x.rows(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.n_classes()) {
            return Err(Error::Data(alloc::format!(
                "label {bad} out of range for {} classes",
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// Supervised mini-batch gradient descent on the cross-entropy, through
    /// every layer, for `cfg.finetune_epochs` epochs.
    pub fn finetune(&mut self, x: &Matrix, labels: &[usize], cfg: &DbnConfig) -> Result<FinetuneReport> {
        cfg.validate()?;
        self.check_labels(x, labels)?;
        if cfg.n_classes != self.n_classes() {
            return Err(Error::shape("Dbn::finetune", self.n_classes(), cfg.n_classes));
        }
        if x.cols() != self.n_inputs() {
            return Err(Error::shape("Dbn::finetune", self.n_inputs(), x.cols()));
        }
        if x.rows() == 0 {
            return Err(Error::param("cannot fine-tune on empty data"));
        }
        let mut rng = RngStream::new(cfg.seed, FINETUNE_STREAM);
        let n = x.rows();
        let batch_size = cfg.finetune_batch_size.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut report = FinetuneReport::default();
        let mut batch_labels = Vec::with_capacity(batch_size);
        for _ in 0..cfg.finetune_epochs {
            rng.shuffle(&mut order);
            for chunk in order.chunks(batch_size) {
                let xb = x.select_rows(chunk);
                batch_labels.clear();
                batch_labels.extend(chunk.iter().map(|&i| labels[i]));
                let step = cfg.finetune_lr * chunk.len() as f64;
                self.backprop_step(&xb, &batch_labels, step)?;
            }
            report.epoch_losses.push(self.loss(x, labels)?);
        }
        Ok(report)
    }

    fn backprop_step(&mut self, x: &Matrix, labels: &[usize], lr: f64) -> Result<()> {
        let acts = self.forward(x)?;
        let top = &acts[acts.len() - 1];
        let mut delta = self.output_delta(top, labels)?;

        let grad_w = top.t_matmul(&delta)?;
        let grad_b = delta.col_sums();
        // propagate before touching the softmax weights
        let mut upstream = delta.matmul_t(&self.softmax_weights)?;
        self.softmax_weights.scaled_add(-lr, &grad_w)?;
        axpy(&mut self.softmax_bias, -lr, &grad_b);

        for l in (0..self.layers.len()).rev() {
            let out = &acts[l + 1];
            delta = upstream;
            for (d, &a) in delta.values_mut().iter_mut().zip(out.values()) {
                *d *= a * (1.0 - a);
            }
            let input = &acts[l];
            let grad_w = input.t_matmul(&delta)?;
            if l > 0 {
                upstream = delta.matmul_t(&self.layers[l].weights)?;
            } else {
                upstream = Matrix::zeros(0, 0);
            }
            let layer = &mut self.layers[l];
            layer.weights.scaled_add(-lr, &grad_w)?;
            axpy(&mut layer.hidden_bias, -lr, &delta.col_sums());
        }
        Ok(())
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(row.iter().map(|&z| libm::exp(z - max)).sum::<f64>())
}

/// In-place softmax with max subtraction.
pub fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in row.iter_mut() {
        *z = libm::exp(*z - max);
        sum += *z;
    }
    for z in row.iter_mut() {
        *z /= sum;
    }
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.iter_rows().map(argmax).collect()
}

/// Index of the largest entry; ties go to the lowest index. Empty → 0.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}
