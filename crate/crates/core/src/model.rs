//! Tiny classifier used to produce saliency and to score augmentations.
//!
//! The network is a two-layer perceptron: flattened image, one tanh hidden
//! layer, softmax output. Backpropagation is written out by hand because the
//! pipeline needs the gradient with respect to the *input* as well as the
//! parameters, and the training loop blends two parameter gradients (one from
//! the saliency pass, one from the augmented sample) in a single update.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::ToyDataset;
use crate::error::{Result, SageError};
use crate::mixer;
use crate::rng::SeededRng;
use crate::saliency;
use crate::types::{one_hot, ImageTensor, SageConfig, SoftLabel, CHANNELS};

/// Variance of the Gaussian corruption used in robustness reports.
pub const GAUSSIAN_NOISE_VARIANCE: f32 = 0.01;
/// Step size of the sign-gradient attack used in robustness reports.
pub const FGSM_EPSILON: f32 = 8.0 / 255.0;
/// Step size of the normalized-gradient attack used in robustness reports.
pub const FGM_EPSILON: f32 = 0.5;

/// Two-layer perceptron over flattened square RGB images.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    side: usize,
    hidden: usize,
    classes: usize,
    w1: Array2<f32>,
    b1: Array1<f32>,
    w2: Array2<f32>,
    b2: Array1<f32>,
}

/// Gradient of the loss with respect to every parameter of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub w1: Array2<f32>,
    pub b1: Array1<f32>,
    pub w2: Array2<f32>,
    pub b2: Array1<f32>,
}

impl ParamGradient {
    pub fn zeros(model: &ClassifierState) -> Self {
        Self {
            w1: Array2::zeros(model.w1.dim()),
            b1: Array1::zeros(model.b1.dim()),
            w2: Array2::zeros(model.w2.dim()),
            b2: Array1::zeros(model.b2.dim()),
        }
    }

    pub fn add(&mut self, other: &ParamGradient) {
        self.w1 += &other.w1;
        self.b1 += &other.b1;
        self.w2 += &other.w2;
        self.b2 += &other.b2;
    }

    pub fn scale(&mut self, factor: f32) {
        self.w1 *= factor;
        self.b1 *= factor;
        self.w2 *= factor;
        self.b2 *= factor;
    }

    fn same_shape(&self, other: &ParamGradient) -> bool {
        self.w1.dim() == other.w1.dim()
            && self.b1.dim() == other.b1.dim()
            && self.w2.dim() == other.w2.dim()
            && self.b2.dim() == other.b2.dim()
    }
}

/// Loss value plus every gradient of one forward/backward pass.
#[derive(Debug, Clone)]
pub struct LossGrads {
    pub loss: f32,
    /// Gradient with respect to the flattened input, same layout as
    /// [`ImageTensor::as_slice`].
    pub input_grad: Vec<f32>,
    pub params: ParamGradient,
}

impl ClassifierState {
    /// Fresh model with Gaussian weights of standard deviation
    /// `1 / sqrt(fan_in)` and zero biases.
    pub fn init(side: usize, hidden: usize, classes: usize, rng: &mut SeededRng) -> Result<Self> {
        check_dims(side, hidden, classes)?;
        let input = side * side * CHANNELS;
        let dist1 = Normal::new(0.0f32, 1.0 / (input as f32).sqrt())
            .map_err(|e| SageError::InvalidArgument(e.to_string()))?;
        let dist2 = Normal::new(0.0f32, 1.0 / (hidden as f32).sqrt())
            .map_err(|e| SageError::InvalidArgument(e.to_string()))?;
        let w1 = Array2::from_shape_fn((hidden, input), |_| dist1.sample(rng));
        let w2 = Array2::from_shape_fn((classes, hidden), |_| dist2.sample(rng));
        Ok(Self {
            side,
            hidden,
            classes,
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(classes),
        })
    }

    /// Rebuilds a model from raw parameters, validating shapes and finiteness.
    pub fn from_parts(
        side: usize,
        hidden: usize,
        classes: usize,
        w1: Array2<f32>,
        b1: Array1<f32>,
        w2: Array2<f32>,
        b2: Array1<f32>,
    ) -> Result<Self> {
        check_dims(side, hidden, classes)?;
        let input = side * side * CHANNELS;
        if w1.dim() != (hidden, input)
            || b1.len() != hidden
            || w2.dim() != (classes, hidden)
            || b2.len() != classes
        {
            return Err(SageError::InvalidArgument(
                "parameter shapes do not match the declared dimensions".into(),
            ));
        }
        let finite = w1.iter().all(|v| v.is_finite())
            && b1.iter().all(|v| v.is_finite())
            && w2.iter().all(|v| v.is_finite())
            && b2.iter().all(|v| v.is_finite());
        if !finite {
            return Err(SageError::InvalidArgument(
                "parameters must be finite".into(),
            ));
        }
        Ok(Self {
            side,
            hidden,
            classes,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.side * self.side * CHANNELS
    }

    pub fn w1(&self) -> ArrayView2<'_, f32> {
        self.w1.view()
    }

    pub fn b1(&self) -> ArrayView1<'_, f32> {
        self.b1.view()
    }

    pub fn w2(&self) -> ArrayView2<'_, f32> {
        self.w2.view()
    }

    pub fn b2(&self) -> ArrayView1<'_, f32> {
        self.b2.view()
    }

    fn check_input(&self, image: &ImageTensor) -> Result<()> {
        if image.side() != self.side {
            return Err(SageError::DimensionMismatch {
                context: "model input side",
                left: self.side,
                right: image.side(),
            });
        }
        Ok(())
    }

    fn hidden_activations(&self, x: ArrayView1<f32>) -> Array1<f32> {
        let mut h = self.w1.dot(&x);
        h += &self.b1;
        h.mapv_inplace(f32::tanh);
        h
    }

    /// Class probabilities for one image.
    pub fn forward(&self, image: &ImageTensor) -> Result<Vec<f32>> {
        self.check_input(image)?;
        let h = self.hidden_activations(ArrayView1::from(image.as_slice()));
        let mut z = self.w2.dot(&h);
        z += &self.b2;
        Ok(softmax(z.as_slice().expect("logits are contiguous")))
    }

    /// Cross-entropy loss against a soft label, with gradients for every
    /// parameter and for the input.
    pub fn loss_and_grads(&self, image: &ImageTensor, label: &SoftLabel) -> Result<LossGrads> {
        self.check_input(image)?;
        if label.classes() != self.classes {
            return Err(SageError::DimensionMismatch {
                context: "label classes",
                left: self.classes,
                right: label.classes(),
            });
        }
        let x = ArrayView1::from(image.as_slice());
        let y = ArrayView1::from(label.as_slice());

        let h = self.hidden_activations(x);
        let mut z = self.w2.dot(&h);
        z += &self.b2;

        // Cross entropy in log-sum-exp form: lse(z) - y . z never takes a log
        // of zero even for saturated logits.
        let zmax = z.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b));
        let sum_exp: f64 = z.iter().map(|&v| ((v - zmax) as f64).exp()).sum();
        let lse = zmax as f64 + sum_exp.ln();
        let y_dot_z: f64 = z
            .iter()
            .zip(y.iter())
            .map(|(&zi, &yi)| zi as f64 * yi as f64)
            .sum();
        let loss = (lse - y_dot_z) as f32;

        let probs = Array1::from(softmax(z.as_slice().expect("logits are contiguous")));
        let delta_o = &probs - &y;
        let gw2 = outer(delta_o.view(), h.view());
        let gb2 = delta_o.clone();
        let back = self.w2.t().dot(&delta_o);
        let delta_h = &back * &h.mapv(|v| 1.0 - v * v);
        let gw1 = outer(delta_h.view(), x);
        let gb1 = delta_h.clone();
        let input_grad = self.w1.t().dot(&delta_h).to_vec();

        Ok(LossGrads {
            loss,
            input_grad,
            params: ParamGradient {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            },
        })
    }

    /// One gradient step along `eta * saliency_grad + (1 - eta) * aug_grad`.
    pub fn combined_update(
        &mut self,
        saliency_grad: &ParamGradient,
        aug_grad: &ParamGradient,
        eta: f32,
        learning_rate: f32,
    ) -> Result<()> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(SageError::InvalidArgument(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        if !learning_rate.is_finite() || learning_rate < 0.0 {
            return Err(SageError::InvalidArgument(format!(
                "learning rate must be finite and >= 0, got {learning_rate}"
            )));
        }
        let template = ParamGradient::zeros(self);
        if !template.same_shape(saliency_grad) || !template.same_shape(aug_grad) {
            return Err(SageError::InvalidArgument(
                "gradient shapes do not match the model".into(),
            ));
        }
        let step = |p: &mut f32, gs: f32, ga: f32| {
            *p -= learning_rate * (eta * gs + (1.0 - eta) * ga);
        };
        azip_params(&mut self.w1, &saliency_grad.w1, &aug_grad.w1, step);
        azip_vec(&mut self.b1, &saliency_grad.b1, &aug_grad.b1, step);
        azip_params(&mut self.w2, &saliency_grad.w2, &aug_grad.w2, step);
        azip_vec(&mut self.b2, &saliency_grad.b2, &aug_grad.b2, step);
        Ok(())
    }
}

fn check_dims(side: usize, hidden: usize, classes: usize) -> Result<()> {
    if side < crate::types::MIN_SIDE {
        return Err(SageError::InvalidArgument(format!(
            "side {side} is below the minimum of {}",
            crate::types::MIN_SIDE
        )));
    }
    if hidden == 0 {
        return Err(SageError::InvalidArgument("hidden size must be > 0".into()));
    }
    if classes < 2 {
        return Err(SageError::InvalidArgument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    Ok(())
}

fn softmax(z: &[f32]) -> Vec<f32> {
    let zmax = z.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = z.iter().map(|&v| ((v - zmax) as f64).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| (e / total) as f32).collect()
}

fn outer(a: ArrayView1<f32>, b: ArrayView1<f32>) -> Array2<f32> {
    let col = a.insert_axis(Axis(1));
    let row = b.insert_axis(Axis(0));
    col.dot(&row)
}

fn azip_params(
    p: &mut Array2<f32>,
    gs: &Array2<f32>,
    ga: &Array2<f32>,
    f: impl Fn(&mut f32, f32, f32),
) {
    ndarray::Zip::from(p).and(gs).and(ga).for_each(|p, &s, &a| f(p, s, a));
}

fn azip_vec(
    p: &mut Array1<f32>,
    gs: &Array1<f32>,
    ga: &Array1<f32>,
    f: impl Fn(&mut f32, f32, f32),
) {
    ndarray::Zip::from(p).and(gs).and(ga).for_each(|p, &s, &a| f(p, s, a));
}

/// Fraction of samples whose predicted class matches the dataset label.
pub fn evaluate(model: &ClassifierState, set: &ToyDataset) -> Result<f32> {
    if set.len() == 0 {
        return Err(SageError::InvalidArgument("empty dataset".into()));
    }
    let mut correct = 0usize;
    for i in 0..set.len() {
        let probs = model.forward(set.image(i))?;
        if argmax(&probs) == set.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f32 / set.len() as f32)
}

fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Adds Gaussian noise of the given variance, clamping back to `[0, 1]`.
pub fn perturb_gaussian(
    image: &ImageTensor,
    variance: f32,
    rng: &mut SeededRng,
) -> Result<ImageTensor> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(SageError::InvalidArgument(format!(
            "variance must be finite and >= 0, got {variance}"
        )));
    }
    let dist = Normal::new(0.0f32, variance.sqrt())
        .map_err(|e| SageError::InvalidArgument(e.to_string()))?;
    let data = image
        .as_slice()
        .iter()
        .map(|&v| (v + dist.sample(rng)).clamp(0.0, 1.0))
        .collect();
    Ok(ImageTensor::from_vec_unchecked(image.side(), data))
}

/// Fast gradient sign attack: steps `epsilon` along the sign of the input
/// gradient, with `sign(0) = 0`, then clamps to `[0, 1]`.
pub fn perturb_fgsm(
    model: &ClassifierState,
    image: &ImageTensor,
    label: &SoftLabel,
    epsilon: f32,
) -> Result<ImageTensor> {
    check_epsilon(epsilon)?;
    let grads = model.loss_and_grads(image, label)?;
    let data = image
        .as_slice()
        .iter()
        .zip(grads.input_grad.iter())
        .map(|(&v, &g)| {
            let sign = if g > 0.0 {
                1.0
            } else if g < 0.0 {
                -1.0
            } else {
                0.0
            };
            (v + epsilon * sign).clamp(0.0, 1.0)
        })
        .collect();
    Ok(ImageTensor::from_vec_unchecked(image.side(), data))
}

/// Fast gradient attack: steps `epsilon` along the l2-normalized input
/// gradient, then clamps to `[0, 1]`. A gradient with norm below `1e-12`
/// leaves the image unchanged.
pub fn perturb_fgm(
    model: &ClassifierState,
    image: &ImageTensor,
    label: &SoftLabel,
    epsilon: f32,
) -> Result<ImageTensor> {
    check_epsilon(epsilon)?;
    let grads = model.loss_and_grads(image, label)?;
    let norm: f64 = grads
        .input_grad
        .iter()
        .map(|&g| (g as f64) * (g as f64))
        .sum::<f64>()
        .sqrt();
    if norm < 1e-12 {
        return Ok(image.clone());
    }
    let scale = epsilon as f64 / norm;
    let data = image
        .as_slice()
        .iter()
        .zip(grads.input_grad.iter())
        .map(|(&v, &g)| (v + (scale * g as f64) as f32).clamp(0.0, 1.0))
        .collect();
    Ok(ImageTensor::from_vec_unchecked(image.side(), data))
}

fn check_epsilon(epsilon: f32) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(SageError::InvalidArgument(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// Accuracy under each corruption plus the mean over the three corruptions.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RobustnessReport {
    pub clean: f64,
    pub gaussian: f64,
    pub fgsm: f64,
    pub fgm: f64,
    /// Arithmetic mean of `gaussian`, `fgsm`, and `fgm` only.
    pub mean: f64,
}

/// Evaluates accuracy on the clean set and under the three corruptions.
///
/// Gaussian noise for sample `i` is drawn from stream `i` of `seed`, so the
/// report is independent of evaluation order.
pub fn eval_robustness(
    model: &ClassifierState,
    set: &ToyDataset,
    noise_variance: f32,
    fgsm_epsilon: f32,
    fgm_epsilon: f32,
    seed: u64,
) -> Result<RobustnessReport> {
    if set.len() == 0 {
        return Err(SageError::InvalidArgument("empty dataset".into()));
    }
    let n = set.len();
    let mut hits = [0usize; 4];
    for i in 0..n {
        let image = set.image(i);
        let truth = set.label(i);
        let label = one_hot(truth, model.classes())?;
        let mut rng = SeededRng::split(seed, i as u64);
        let variants = [
            image.clone(),
            perturb_gaussian(image, noise_variance, &mut rng)?,
            perturb_fgsm(model, image, &label, fgsm_epsilon)?,
            perturb_fgm(model, image, &label, fgm_epsilon)?,
        ];
        for (slot, variant) in variants.iter().enumerate() {
            if argmax(&model.forward(variant)?) == truth {
                hits[slot] += 1;
            }
        }
    }
    let frac = |h: usize| h as f64 / n as f64;
    let (gaussian, fgsm, fgm) = (frac(hits[1]), frac(hits[2]), frac(hits[3]));
    Ok(RobustnessReport {
        clean: frac(hits[0]),
        gaussian,
        fgsm,
        fgm,
        mean: (gaussian + fgsm + fgm) / 3.0,
    })
}

/// Which augmentation the training loop applies to each sample pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augmenter {
    /// Plain supervised training on unmodified samples.
    None,
    /// Convex image and label blend with a shared uniform coefficient.
    InputMixup,
    /// Rectangular patch paste with area-proportional labels.
    CutMix,
    /// Saliency-guided mixing with rearrangement search.
    Sage,
}

/// Knobs of the training loop.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    /// Augmentation hyperparameters; the `seed` field is ignored here because
    /// [`train`] takes its seed explicitly.
    pub sage: SageConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            batch_size: 32,
            learning_rate: 0.1,
            sage: SageConfig::default(),
        }
    }
}

/// Loss and accuracy recorded after each epoch.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f32,
    pub test_acc: f32,
}

const AUG_STREAM_BASE: u64 = 1 << 32;

/// Trains a fresh classifier for `epochs` epochs and reports per-epoch stats.
///
/// All randomness derives from `seed`: stream 0 initializes the model, stream
/// `1 + e` shuffles epoch `e`, and stream `AUG_STREAM_BASE + e * n + k` drives
/// the augmentation of the `k`-th sample of epoch `e`. Two runs with the same
/// inputs therefore produce identical models and stats.
pub fn train(
    train_set: &ToyDataset,
    test_set: &ToyDataset,
    augmenter: Augmenter,
    cfg: &TrainConfig,
    epochs: usize,
    seed: u64,
) -> Result<(ClassifierState, Vec<EpochStats>)> {
    if train_set.len() == 0 || test_set.len() == 0 {
        return Err(SageError::InvalidArgument("empty dataset".into()));
    }
    if train_set.side() != test_set.side() || train_set.classes() != test_set.classes() {
        return Err(SageError::DimensionMismatch {
            context: "train/test dataset shape",
            left: train_set.side(),
            right: test_set.side(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(SageError::InvalidArgument("batch size must be > 0".into()));
    }
    cfg.sage.validate()?;

    let n = train_set.len();
    let classes = train_set.classes();
    let mut init_rng = SeededRng::split(seed, 0);
    let mut model = ClassifierState::init(train_set.side(), cfg.hidden, classes, &mut init_rng)?;
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let mut epoch_rng = SeededRng::split(seed, 1 + epoch as u64);
        let order = permutation(n, &mut epoch_rng);
        let partners = permutation(n, &mut epoch_rng);
        let mut loss_sum = 0.0f64;

        for (chunk_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut ga = ParamGradient::zeros(&model);
            let mut gs = ParamGradient::zeros(&model);
            let mut uses_saliency = false;

            for (slot, &i) in batch.iter().enumerate() {
                let position = chunk_idx * cfg.batch_size + slot;
                let stream = AUG_STREAM_BASE + (epoch as u64) * (n as u64) + position as u64;
                let mut sample_rng = SeededRng::split(seed, stream);
                let partner = partners[position];

                let x0 = train_set.image(i);
                let y0 = one_hot(train_set.label(i), classes)?;
                let x1 = train_set.image(partner);
                let y1 = one_hot(train_set.label(partner), classes)?;

                let lg = match augmenter {
                    Augmenter::None => model.loss_and_grads(x0, &y0)?,
                    Augmenter::InputMixup => {
                        let lambda: f32 = sample_rng.random();
                        let aug = mixer::input_mixup(x0, &y0, x1, &y1, lambda)?;
                        model.loss_and_grads(&aug.image, &aug.label)?
                    }
                    Augmenter::CutMix => {
                        let lambda: f32 = sample_rng.random();
                        let aug = mixer::cutmix(x0, &y0, x1, &y1, lambda, &mut sample_rng)?;
                        model.loss_and_grads(&aug.image, &aug.label)?
                    }
                    Augmenter::Sage => {
                        let (s0, g0) = saliency::compute_saliency(&model, x0, &y0)?;
                        let (s1, g1) = saliency::compute_saliency(&model, x1, &y1)?;
                        let mut pair_grad = g0;
                        pair_grad.add(&g1);
                        pair_grad.scale(0.5);
                        gs.add(&pair_grad);
                        uses_saliency = true;
                        let aug = mixer::sage_augment(
                            x0,
                            &y0,
                            x1,
                            &y1,
                            (&s0, &s1),
                            &cfg.sage,
                            &mut sample_rng,
                        )?;
                        model.loss_and_grads(&aug.image, &aug.label)?
                    }
                };
                loss_sum += lg.loss as f64;
                ga.add(&lg.params);
            }

            let inv = 1.0 / batch.len() as f32;
            ga.scale(inv);
            if uses_saliency {
                gs.scale(inv);
                model.combined_update(&gs, &ga, cfg.sage.eta, cfg.learning_rate)?;
            } else {
                model.combined_update(&ga, &ga, 1.0, cfg.learning_rate)?;
            }
        }

        history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: (loss_sum / n as f64) as f32,
            test_acc: evaluate(&model, test_set)?,
        });
    }

    Ok((model, history))
}

fn permutation(n: usize, rng: &mut SeededRng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    indices
}
