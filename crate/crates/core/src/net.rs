//! Autoencoder over binary solution vectors.
//!
//! Encoder: hidden blocks `y = LeakyReLU(W x + b) [+ skip] -> dropout`,
//! followed by a linear latent layer `h = W x + b`. Decoder: a single
//! layer `v = sigmoid(Wᵀ h + a)`. Gradients are computed by hand.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};

const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub encoder_widths: Vec<usize>,
    #[serde(with = "decimal::real")]
    pub leaky_slope: f64,
    #[serde(with = "decimal::real")]
    pub dropout: f64,
    pub epochs: usize,
    #[serde(with = "decimal::real")]
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(with = "decimal::real_vec")]
    pub adam_betas: Vec<f64>,
    #[serde(with = "decimal::real")]
    pub adam_eps: f64,
    pub seed: u64,
    pub skip_connections: bool,
}

impl Default for NetConfig {
    /// Input width 0 marks "take it from the data".
    fn default() -> Self {
        NetConfig::new(0)
    }
}

impl NetConfig {
    /// Defaults for a given input width.
    pub fn new(input_dim: usize) -> Self {
        NetConfig {
            input_dim,
            latent_dim: 20,
            encoder_widths: vec![180, 120, 40],
            leaky_slope: 0.01,
            dropout: 0.2,
            epochs: 500,
            learning_rate: 2e-4,
            batch_size: 64,
            adam_betas: vec![0.9, 0.999],
            adam_eps: 1e-8,
            seed: 0,
            skip_connections: true,
        }
    }

    /// Settings for the three-vertex cube: no dropout and a larger step,
    /// since the data set is a single minibatch.
    pub fn toy() -> Self {
        NetConfig {
            latent_dim: 2,
            epochs: 2000,
            dropout: 0.0,
            learning_rate: 1e-3,
            ..NetConfig::new(3)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.latent_dim == 0 || self.latent_dim >= self.input_dim {
            return bad(format!(
                "latent_dim must satisfy 0 < d < p (d = {}, p = {})",
                self.latent_dim, self.input_dim
            ));
        }
        if self.encoder_widths.is_empty() || self.encoder_widths.contains(&0) {
            return bad("encoder_widths must be nonempty and positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0) || !(self.adam_eps > 0.0) {
            return bad("learning_rate and adam_eps must be positive".into());
        }
        if self.adam_betas.len() != 2 || self.adam_betas.iter().any(|b| !(0.0..1.0).contains(b)) {
            return bad("adam_betas must be two values in [0, 1)".into());
        }
        if !self.leaky_slope.is_finite() {
            return bad("leaky_slope must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBlock {
    /// out × in
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    /// Learned skip projection (out × in), present when widths differ.
    pub skip: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ae4bvParams {
    pub leaky_slope: f64,
    pub dropout: f64,
    pub skip_connections: bool,
    /// Hidden blocks, then the linear latent layer.
    pub encoder: Vec<EncoderBlock>,
    /// d × p
    pub decoder_w: Array2<f64>,
    pub decoder_a: Array1<f64>,
}

impl Ae4bvParams {
    pub fn input_dim(&self) -> usize {
        self.decoder_w.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.decoder_w.nrows()
    }

    fn num_hidden(&self) -> usize {
        self.encoder.len() - 1
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        Ae4bvParams {
            leaky_slope: self.leaky_slope,
            dropout: self.dropout,
            skip_connections: self.skip_connections,
            encoder: self
                .encoder
                .iter()
                .map(|b| EncoderBlock {
                    weight: z2(&b.weight),
                    bias: Array1::zeros(b.bias.len()),
                    skip: b.skip.as_ref().map(z2),
                })
                .collect(),
            decoder_w: z2(&self.decoder_w),
            decoder_a: Array1::zeros(self.decoder_a.len()),
        }
    }

    /// Every trainable tensor as a flat slice, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.encoder {
            out.push(b.weight.as_slice_mut().expect("standard layout"));
            out.push(b.bias.as_slice_mut().expect("standard layout"));
            if let Some(s) = &mut b.skip {
                out.push(s.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.decoder_w.as_slice_mut().expect("standard layout"));
        out.push(self.decoder_a.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.clone().tensors_mut().iter().map(|t| t.len()).sum()
    }

    fn check(&self) -> Result<()> {
        let mismatch = |what: &'static str, expected: usize, got: usize| {
            Err(Error::DimensionMismatch { what, expected, got })
        };
        if self.encoder.is_empty() {
            return Err(Error::InvalidModel("encoder has no layers".into()));
        }
        let mut width = self.input_dim();
        for b in &self.encoder {
            if b.weight.ncols() != width {
                return mismatch("encoder layer input", width, b.weight.ncols());
            }
            if b.bias.len() != b.weight.nrows() {
                return mismatch("encoder bias", b.weight.nrows(), b.bias.len());
            }
            if let Some(s) = &b.skip {
                if s.raw_dim() != b.weight.raw_dim() {
                    return mismatch("skip projection", b.weight.len(), s.len());
                }
            }
            width = b.weight.nrows();
        }
        if width != self.latent_dim() {
            return mismatch("latent width", self.latent_dim(), width);
        }
        if self.decoder_a.len() != self.input_dim() {
            return mismatch("decoder bias", self.input_dim(), self.decoder_a.len());
        }
        Ok(())
    }
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(cfg: &NetConfig) -> Result<Ae4bvParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut encoder = Vec::new();
    let mut width = cfg.input_dim;
    for &out in &cfg.encoder_widths {
        let weight = glorot(&mut rng, out, width);
        let skip = (cfg.skip_connections && out != width).then(|| glorot(&mut rng, out, width));
        encoder.push(EncoderBlock {
            weight,
            bias: Array1::zeros(out),
            skip,
        });
        width = out;
    }
    encoder.push(EncoderBlock {
        weight: glorot(&mut rng, cfg.latent_dim, width),
        bias: Array1::zeros(cfg.latent_dim),
        skip: None,
    });
    Ok(Ae4bvParams {
        leaky_slope: cfg.leaky_slope,
        dropout: cfg.dropout,
        skip_connections: cfg.skip_connections,
        encoder,
        decoder_w: glorot(&mut rng, cfg.latent_dim, cfg.input_dim),
        decoder_a: Array1::zeros(cfg.input_dim),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct BlockCache {
    input: Array2<f64>,
    pre: Array2<f64>,
    /// Inverted-dropout multipliers; `None` when dropout is off.
    mask: Option<Array2<f64>>,
}

struct Cache {
    blocks: Vec<BlockCache>,
    latent_input: Array2<f64>,
    h: Array2<f64>,
    v: Array2<f64>,
}

fn forward_cached(params: &Ae4bvParams, x: &Array2<f64>, mode: Mode, rng: &mut impl Rng) -> Cache {
    let slope = params.leaky_slope;
    let mut cur = x.clone();
    let mut blocks = Vec::with_capacity(params.num_hidden());
    for b in &params.encoder[..params.num_hidden()] {
        let pre = cur.dot(&b.weight.t()) + &b.bias;
        let mut y = pre.mapv(|z| if z > 0.0 { z } else { slope * z });
        if params.skip_connections {
            match &b.skip {
                Some(s) => y += &cur.dot(&s.t()),
                None if b.weight.nrows() == b.weight.ncols() => y += &cur,
                None => {}
            }
        }
        let mask = (mode == Mode::Train && params.dropout > 0.0).then(|| {
            let keep = 1.0 - params.dropout;
            Array2::from_shape_fn(y.raw_dim(), |_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
        });
        if let Some(m) = &mask {
            y *= m;
        }
        blocks.push(BlockCache {
            input: cur,
            pre,
            mask,
        });
        cur = y;
    }
    let latent = params.encoder.last().expect("checked nonempty");
    let h = cur.dot(&latent.weight.t()) + &latent.bias;
    let v = (h.dot(&params.decoder_w) + &params.decoder_a).mapv(sigmoid);
    Cache {
        blocks,
        latent_input: cur,
        h,
        v,
    }
}

fn as_batch(samples: &[&[u8]], p: usize) -> Result<Array2<f64>> {
    let mut x = Array2::zeros((samples.len(), p));
    for (k, s) in samples.iter().enumerate() {
        if s.len() != p {
            return Err(Error::DimensionMismatch {
                what: "binary vector",
                expected: p,
                got: s.len(),
            });
        }
        for (j, &b) in s.iter().enumerate() {
            x[[k, j]] = f64::from(b);
        }
    }
    Ok(x)
}

/// Encode and reconstruct one vector: `(h, v)`.
pub fn forward(
    params: &Ae4bvParams,
    u: &[u8],
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check()?;
    let x = as_batch(&[u], params.input_dim())?;
    let c = forward_cached(params, &x, mode, rng);
    Ok((c.h.row(0).to_vec(), c.v.row(0).to_vec()))
}

/// Decoder alone: `sigmoid(Wᵀ h + a)`.
pub fn decode(params: &Ae4bvParams, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != params.latent_dim() {
        return Err(Error::DimensionMismatch {
            what: "latent vector",
            expected: params.latent_dim(),
            got: h.len(),
        });
    }
    let h = Array1::from(h.to_vec());
    Ok((h.dot(&params.decoder_w) + &params.decoder_a)
        .mapv(sigmoid)
        .to_vec())
}

/// 0 where `v <= 1/2`, else 1.
pub fn binarize(v: &[f64]) -> Vec<u8> {
    v.iter().map(|&x| u8::from(x > 0.5)).collect()
}

/// Binary cross entropy summed over coordinates.
pub fn ce_loss(u: &[u8], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&t, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if t == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

/// Mean per-sample loss over `samples` and its gradient.
pub fn loss_and_gradient(
    params: &Ae4bvParams,
    samples: &[&[u8]],
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(f64, Ae4bvParams)> {
    params.check()?;
    let x = as_batch(samples, params.input_dim())?;
    let c = forward_cached(params, &x, mode, rng);
    let n = samples.len() as f64;
    let loss = samples
        .iter()
        .zip(c.v.outer_iter())
        .map(|(u, v)| ce_loss(u, v.as_slice().expect("standard layout")))
        .sum::<f64>()
        / n;

    let mut grad = params.zeros_like();
    // d loss / d logits
    let dl = (&c.v - &x) / n;
    grad.decoder_w = c.h.t().dot(&dl);
    grad.decoder_a = dl.sum_axis(Axis(0));
    let dh = dl.dot(&params.decoder_w.t());

    let nh = params.num_hidden();
    let latent = &params.encoder[nh];
    grad.encoder[nh].weight = dh.t().dot(&c.latent_input);
    grad.encoder[nh].bias = dh.sum_axis(Axis(0));
    let mut dcur = dh.dot(&latent.weight);

    let slope = params.leaky_slope;
    for k in (0..nh).rev() {
        let b = &params.encoder[k];
        let bc = &c.blocks[k];
        let dy = match &bc.mask {
            Some(m) => &dcur * m,
            None => dcur,
        };
        let dz = &dy * &bc.pre.mapv(|z| if z > 0.0 { 1.0 } else { slope });
        grad.encoder[k].weight = dz.t().dot(&bc.input);
        grad.encoder[k].bias = dz.sum_axis(Axis(0));
        let mut dx = dz.dot(&b.weight);
        if params.skip_connections {
            match &b.skip {
                Some(s) => {
                    grad.encoder[k].skip = Some(dy.t().dot(&bc.input));
                    dx += &dy.dot(s);
                }
                None if b.weight.nrows() == b.weight.ncols() => dx += &dy,
                None => {}
            }
        }
        dcur = dx;
    }
    Ok((loss, grad))
}

/// One stored solution vector with optional provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(with = "bit_string")]
    pub bits: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_ref: Option<String>,
    #[serde(default, with = "optional_real", skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

mod bit_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let text: String = bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        s.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(serde::de::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect()
    }
}

mod optional_real {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::decimal::{format_real, parse_real};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&format_real(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_real(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryDataset {
    pub samples: Vec<Sample>,
}

impl BinaryDataset {
    pub fn from_bits(rows: Vec<Vec<u8>>) -> Self {
        BinaryDataset {
            samples: rows
                .into_iter()
                .map(|bits| Sample {
                    bits,
                    theta_ref: None,
                    objective: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Common vector length; errors on ragged or non-binary data.
    pub fn dim(&self) -> Result<usize> {
        let Some(first) = self.samples.first() else {
            return Err(Error::InvalidConfig("dataset is empty".into()));
        };
        let p = first.bits.len();
        for s in &self.samples {
            if s.bits.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "dataset sample",
                    expected: p,
                    got: s.bits.len(),
                });
            }
            if s.bits.iter().any(|&b| b > 1) {
                return Err(Error::InvalidConfig("dataset holds a non-binary entry".into()));
            }
        }
        Ok(p)
    }

    pub fn bits(&self) -> Vec<&[u8]> {
        self.samples.iter().map(|s| s.bits.as_slice()).collect()
    }
}

struct Adam {
    b1: f64,
    b2: f64,
    eps: f64,
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(cfg: &NetConfig, params: &mut Ae4bvParams) -> Self {
        let shapes: Vec<usize> = params.tensors_mut().iter().map(|t| t.len()).collect();
        Adam {
            b1: cfg.adam_betas[0],
            b2: cfg.adam_betas[1],
            eps: cfg.adam_eps,
            lr: cfg.learning_rate,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn update(&mut self, params: &mut Ae4bvParams, grad: &mut Ae4bvParams) {
        self.step += 1;
        let c1 = 1.0 - self.b1.powi(self.step);
        let c2 = 1.0 - self.b2.powi(self.step);
        for (k, (p, g)) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors_mut())
            .enumerate()
        {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.b1 * m[i] + (1.0 - self.b1) * g[i];
                v[i] = self.b2 * v[i] + (1.0 - self.b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

/// Minibatch Adam on the mean cross entropy. Returns the parameters and
/// the mean training loss of every epoch.
pub fn train(data: &BinaryDataset, cfg: &NetConfig) -> Result<(Ae4bvParams, Vec<f64>)> {
    cfg.validate()?;
    let p = data.dim()?;
    if p != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            what: "dataset width vs input_dim",
            expected: cfg.input_dim,
            got: p,
        });
    }
    let mut params = init_params(cfg)?;
    let mut adam = Adam::new(cfg, &mut params);
    // a separate stream so initialization does not depend on data order
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let bits = data.bits();
    let mut order: Vec<usize> = (0..bits.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[u8]> = chunk.iter().map(|&i| bits[i]).collect();
            let (loss, mut grad) = loss_and_gradient(&params, &batch, Mode::Train, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            total += loss * batch.len() as f64;
            adam.update(&mut params, &mut grad);
        }
        let mean = total / bits.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        history.push(mean);
    }
    Ok((params, history))
}

/// Deterministic reconstruction `binarize(forward(u))`.
pub fn reconstruct(params: &Ae4bvParams, u: &[u8]) -> Result<Vec<u8>> {
    // the rng is unused in infer mode
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, v) = forward(params, u, Mode::Infer, &mut rng)?;
    Ok(binarize(&v))
}

/// Latent code of `u` in infer mode.
pub fn encode(params: &Ae4bvParams, u: &[u8]) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(forward(params, u, Mode::Infer, &mut rng)?.0)
}

/// Mean fraction of wrongly reconstructed bits.
pub fn hamming_loss(params: &Ae4bvParams, data: &BinaryDataset) -> Result<f64> {
    let p = data.dim()?;
    if p != params.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset width vs network input",
            expected: params.input_dim(),
            got: p,
        });
    }
    let mut wrong = 0usize;
    for s in &data.samples {
        let r = reconstruct(params, &s.bits)?;
        wrong += r.iter().zip(&s.bits).filter(|(a, b)| a != b).count();
    }
    Ok(wrong as f64 / (data.len() * p) as f64)
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    #[serde(with = "decimal::real_matrix")]
    weight: Vec<Vec<f64>>,
    #[serde(with = "decimal::real_vec")]
    bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skip: Option<MatrixDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct MatrixDoc(#[serde(with = "decimal::real_matrix")] Vec<Vec<f64>>);

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    #[serde(with = "decimal::real")]
    leaky_slope: f64,
    #[serde(with = "decimal::real")]
    dropout: f64,
    skip_connections: bool,
    encoder: Vec<BlockDoc>,
    #[serde(with = "decimal::real_matrix")]
    decoder_w: Vec<Vec<f64>>,
    #[serde(with = "decimal::real_vec")]
    decoder_a: Vec<f64>,
}

pub(crate) fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn from_rows(rows: Vec<Vec<f64>>) -> std::result::Result<Array2<f64>, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err("ragged matrix".into());
    }
    Array2::from_shape_vec((r, c), rows.into_iter().flatten().collect()).map_err(|e| e.to_string())
}

impl Serialize for Ae4bvParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsDoc {
            leaky_slope: self.leaky_slope,
            dropout: self.dropout,
            skip_connections: self.skip_connections,
            encoder: self
                .encoder
                .iter()
                .map(|b| BlockDoc {
                    weight: to_rows(&b.weight),
                    bias: b.bias.to_vec(),
                    skip: b.skip.as_ref().map(|m| MatrixDoc(to_rows(m))),
                })
                .collect(),
            decoder_w: to_rows(&self.decoder_w),
            decoder_a: self.decoder_a.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ae4bvParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ParamsDoc::deserialize(d)?;
        let mut encoder = Vec::new();
        for b in doc.encoder {
            encoder.push(EncoderBlock {
                weight: from_rows(b.weight).map_err(D::Error::custom)?,
                bias: Array1::from(b.bias),
                skip: b
                    .skip
                    .map(|m| from_rows(m.0))
                    .transpose()
                    .map_err(D::Error::custom)?,
            });
        }
        let params = Ae4bvParams {
            leaky_slope: doc.leaky_slope,
            dropout: doc.dropout,
            skip_connections: doc.skip_connections,
            encoder,
            decoder_w: from_rows(doc.decoder_w).map_err(D::Error::custom)?,
            decoder_a: Array1::from(doc.decoder_a),
        };
        params.check().map_err(D::Error::custom)?;
        Ok(params)
    }
}
