//! Bernoulli restricted Boltzmann machine trained with contrastive divergence.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{axpy, sigmoid, Matrix};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Contrastive-divergence training settings.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdConfig {
    /// Per-sample step size: each update adds the batch gradient summed over
    /// its rows, so a batch of 10 moves as far as 10 single-sample steps.
    pub learning_rate: f64,
    pub epochs: usize,
    /// Mini-batch size; clamped to the number of rows at training time.
    pub batch_size: usize,
    /// Gibbs steps in the negative phase (the `k` of CD-k).
    pub gibbs_steps: usize,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 10,
            gibbs_steps: 1,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        // a zero rate is accepted: it is the null update
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate must be finite and >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be >= 1"));
        }
        if self.gibbs_steps == 0 {
            return Err(Error::param("gibbs_steps must be >= 1"));
        }
        Ok(())
    }
}

/// One visible layer and one hidden layer with symmetric weights.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rbm {
    /// `n_visible × n_hidden`.
    pub(crate) weights: Matrix,
    pub(crate) visible_bias: Vec<f64>,
    pub(crate) hidden_bias: Vec<f64>,
}

impl Rbm {
    /// Weights drawn from `N(0, 0.01²)`, biases zero.
    pub fn new(n_visible: usize, n_hidden: usize, rng: &mut RngStream) -> Result<Self> {
        if n_visible == 0 || n_hidden == 0 {
            return Err(Error::param("RBM layers must have at least one unit"));
        }
        let mut weights = Matrix::zeros(n_visible, n_hidden);
        for w in weights.values_mut() {
            *w = rng.sample_normal(0.0, 0.01)?;
        }
        Ok(Rbm {
            weights,
            visible_bias: vec![0.0; n_visible],
            hidden_bias: vec![0.0; n_hidden],
        })
    }

    pub fn from_parts(weights: Matrix, visible_bias: Vec<f64>, hidden_bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != visible_bias.len() {
            return Err(Error::shape("Rbm::from_parts", weights.rows(), visible_bias.len()));
        }
        if weights.cols() != hidden_bias.len() {
            return Err(Error::shape("Rbm::from_parts", weights.cols(), hidden_bias.len()));
        }
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::param("RBM layers must have at least one unit"));
        }
        if visible_bias.iter().chain(&hidden_bias).any(|b| !b.is_finite()) {
            return Err(Error::param("RBM biases must be finite"));
        }
        Ok(Rbm {
            weights,
            visible_bias,
            hidden_bias,
        })
    }

    pub fn n_visible(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    /// `P(h_j = 1 | v)` for every row of `v`.
    pub fn hidden_given_visible(&self, v: &Matrix) -> Result<Matrix> {
        if v.cols() != self.n_visible() {
            return Err(Error::shape("hidden_given_visible", self.n_visible(), v.cols()));
        }
        let mut h = v.matmul(&self.weights)?;
        h.add_row_vector(&self.hidden_bias)?;
        h.map_inplace(sigmoid);
        Ok(h)
    }

    /// `P(v_i = 1 | h)` for every row of `h`.
    pub fn visible_given_hidden(&self, h: &Matrix) -> Result<Matrix> {
        if h.cols() != self.n_hidden() {
            return Err(Error::shape("visible_given_hidden", self.n_hidden(), h.cols()));
        }
        let mut v = h.matmul_t(&self.weights)?;
        v.add_row_vector(&self.visible_bias)?;
        v.map_inplace(sigmoid);
        Ok(v)
    }

    /// Mean squared error between `data` and its mean-field reconstruction
    /// `P(v | P(h | data))`.
    pub fn reconstruction_error(&self, data: &Matrix) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let h = self.hidden_given_visible(data)?;
        let recon = self.visible_given_hidden(&h)?;
        let sq: f64 = data
            .values()
            .iter()
            .zip(recon.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sq / data.values().len() as f64)
    }

    /// Trains in place with CD-k for `cfg.epochs` passes over `data`.
    ///
    /// Rows are visited in a fresh shuffled order each epoch. Positive-phase
    /// hidden states are sampled; reconstructions and negative-phase statistics
    /// use mean-field probabilities.
    pub fn cd_train(&mut self, data: &Matrix, cfg: &CdConfig, rng: &mut RngStream) -> Result<()> {
        cfg.validate()?;
        if data.rows() == 0 {
            return Err(Error::param("cannot train an RBM on empty data"));
        }
        if data.cols() != self.n_visible() {
            return Err(Error::shape("cd_train", self.n_visible(), data.cols()));
        }
        if data.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("RBM inputs must lie in [0, 1]".into()));
        }

        let n = data.rows();
        let batch_size = cfg.batch_size.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.epochs {
            rng.shuffle(&mut order);
            for chunk in order.chunks(batch_size) {
                let batch = data.select_rows(chunk);
                self.cd_step(&batch, cfg, rng)?;
            }
        }
        Ok(())
    }

    fn cd_step(&mut self, v0: &Matrix, cfg: &CdConfig, rng: &mut RngStream) -> Result<()> {
        let h0 = self.hidden_given_visible(v0)?;
        let mut h_state = h0.clone();
        let mut vk = v0.clone();
        let mut hk = h0.clone();
        for _ in 0..cfg.gibbs_steps {
            for p in h_state.values_mut() {
                *p = if rng.bernoulli(*p) { 1.0 } else { 0.0 };
            }
            vk = self.visible_given_hidden(&h_state)?;
            hk = self.hidden_given_visible(&vk)?;
            h_state = hk.clone();
        }

        let scale = cfg.learning_rate;
        let positive = v0.t_matmul(&h0)?;
        let negative = vk.t_matmul(&hk)?;
        self.weights.scaled_add(scale, &positive)?;
        self.weights.scaled_add(-scale, &negative)?;

        axpy(&mut self.visible_bias, scale, &v0.col_sums());
        axpy(&mut self.visible_bias, -scale, &vk.col_sums());
        axpy(&mut self.hidden_bias, scale, &h0.col_sums());
        axpy(&mut self.hidden_bias, -scale, &hk.col_sums());
        Ok(())
    }
}

/// The 30 distinct 4×4 bars-and-stripes patterns, flattened row-major.
///
/// Each pattern is either a set of full horizontal rows or a set of full
/// vertical columns; the all-off and all-on images appear under both
/// orientations but are listed once.
pub fn bars_and_stripes_4x4() -> Matrix {
    let mut patterns: Vec<[f64; 16]> = Vec::new();
    for mask in 0u32..16 {
        let mut horizontal = [0.0; 16];
        let mut vertical = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                if mask & (1 << r) != 0 {
                    horizontal[r * 4 + c] = 1.0;
                }
                if mask & (1 << c) != 0 {
                    vertical[r * 4 + c] = 1.0;
                }
            }
        }
        patterns.push(horizontal);
        if mask != 0 && mask != 15 {
            patterns.push(vertical);
        }
    }
    Matrix::from_rows(&patterns).expect("static patterns")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_rbm(nv: usize, nh: usize, seed: u64) -> Rbm {
        let mut rng = RngStream::new(seed, 0);
        let weights = Matrix::from_fn(nv, nh, |_, _| rng.sample_uniform(-1.0, 1.0).unwrap());
        let vb = (0..nv).map(|_| rng.sample_uniform(-1.0, 1.0).unwrap()).collect();
        let hb = (0..nh).map(|_| rng.sample_uniform(-1.0, 1.0).unwrap()).collect();
        Rbm::from_parts(weights, vb, hb).unwrap()
    }

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + libm::exp(-x))
    }

    #[test]
    fn zero_parameters_give_half() {
        let rbm = Rbm::from_parts(Matrix::zeros(3, 2), vec![0.0; 3], vec![0.0; 2]).unwrap();
        let v = Matrix::from_rows(&[[1.0, 0.0, 0.3], [0.2, 0.9, 1.0]]).unwrap();
        assert!(rbm.hidden_given_visible(&v).unwrap().values().iter().all(|&p| p == 0.5));
        let h = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!(rbm.visible_given_hidden(&h).unwrap().values().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn bias_cancels_weight() {
        let rbm = Rbm::from_parts(Matrix::from_rows(&[[2.0]]).unwrap(), vec![-2.0], vec![-2.0]).unwrap();
        let one = Matrix::from_rows(&[[1.0]]).unwrap();
        assert_eq!(rbm.hidden_given_visible(&one).unwrap().get(0, 0), 0.5);
        assert_eq!(rbm.visible_given_hidden(&one).unwrap().get(0, 0), 0.5);
    }

    #[test]
    fn conditionals_match_loop_oracle() {
        let rbm = random_rbm(3, 4, 1);
        let mut rng = RngStream::new(2, 0);
        let v = Matrix::from_fn(5, 3, |_, _| rng.next_unit());
        let h = rbm.hidden_given_visible(&v).unwrap();
        for n in 0..5 {
            for j in 0..4 {
                let mut a = rbm.hidden_bias[j];
                for i in 0..3 {
                    a += v.get(n, i) * rbm.weights.get(i, j);
                }
                assert!((h.get(n, j) - logistic(a)).abs() < 1e-12);
            }
        }
        let hs = Matrix::from_fn(5, 4, |_, _| rng.next_unit());
        let vv = rbm.visible_given_hidden(&hs).unwrap();
        for n in 0..5 {
            for i in 0..3 {
                let mut a = rbm.visible_bias[i];
                for j in 0..4 {
                    a += hs.get(n, j) * rbm.weights.get(i, j);
                }
                assert!((vv.get(n, i) - logistic(a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let rbm = random_rbm(3, 4, 1);
        assert!(rbm.hidden_given_visible(&Matrix::zeros(1, 4)).is_err());
        assert!(rbm.visible_given_hidden(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = RngStream::new(3, 0);
        let rbm = Rbm::new(16, 8, &mut rng).unwrap();
        let mut trained = rbm.clone();
        let cfg = CdConfig {
            learning_rate: 0.0,
            epochs: 5,
            ..CdConfig::default()
        };
        trained.cd_train(&bars_and_stripes_4x4(), &cfg, &mut rng).unwrap();
        assert_eq!(trained, rbm);
    }

    #[test]
    fn empty_data_rejected() {
        let mut rng = RngStream::new(3, 0);
        let mut rbm = Rbm::new(2, 2, &mut rng).unwrap();
        let err = rbm.cd_train(&Matrix::zeros(0, 2), &CdConfig::default(), &mut rng);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn training_lowers_reconstruction_error() {
        let data = bars_and_stripes_4x4();
        assert_eq!(data.rows(), 30);
        let mut rng = RngStream::new(4, 0);
        let mut rbm = Rbm::new(16, 16, &mut rng).unwrap();
        let before = rbm.reconstruction_error(&data).unwrap();
        let cfg = CdConfig {
            learning_rate: 0.1,
            ..CdConfig::default()
        };
        rbm.cd_train(&data, &cfg, &mut rng).unwrap();
        let after = rbm.reconstruction_error(&data).unwrap();
        assert!(after < before, "{after} >= {before}");
        assert!(rbm.weights.all_finite());
    }

    #[test]
    fn training_is_deterministic() {
        let data = bars_and_stripes_4x4();
        let run = || {
            let mut rng = RngStream::new(5, 1);
            let mut rbm = Rbm::new(16, 6, &mut rng).unwrap();
            rbm.cd_train(
                &data,
                &CdConfig {
                    epochs: 10,
                    ..CdConfig::default()
                },
                &mut rng,
            )
            .unwrap();
            rbm
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reconstruction_error_hand_case() {
        // W = [[1, -1], [0, 2]], b_v = [0, -1], b_h = [0.5, 0]; data 2x2.
        let rbm = Rbm::from_parts(
            Matrix::from_rows(&[[1.0, -1.0], [0.0, 2.0]]).unwrap(),
            vec![0.0, -1.0],
            vec![0.5, 0.0],
        )
        .unwrap();
        let data = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = logistic;
        // row 0: a_h = (1.5, -1), row 1: a_h = (0.5, 2)
        let h = [[s(1.5), s(-1.0)], [s(0.5), s(2.0)]];
        let mut sq = 0.0;
        for (n, row) in h.iter().enumerate() {
            let v0 = s(row[0] - row[1]);
            let v1 = s(2.0 * row[1] - 1.0);
            sq += (data.get(n, 0) - v0).powi(2) + (data.get(n, 1) - v1).powi(2);
        }
        let expected = sq / 4.0;
        assert!((rbm.reconstruction_error(&data).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_error_is_zero_for_perfect_reconstruction() {
        let rbm = Rbm::from_parts(Matrix::zeros(2, 1), vec![0.0, 0.0], vec![0.0]).unwrap();
        let data = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert_eq!(rbm.reconstruction_error(&data).unwrap(), 0.0);
    }
}
