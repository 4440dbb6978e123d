//! Tanh MLPs with explicit flat parameter vectors.
//!
//! Parameters live in one contiguous `Vec<f64>` (layer-major: weights
//! row-major, then biases) so optimizers treat every network in a model as
//! slices of a single vector. Forward passes are recorded on a [`Tape`] and
//! are generic over the propagated scalar kind: linear layers act
//! channel-wise on values and derivative slots alike, only the activation
//! needs a chain rule, so [`Dual`] and [`Jet2`] share one implementation.

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::autodiff::{Dual, Jet2, Tape, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("invalid MLP spec: {0}")]
    BadSpec(String),
    #[error("forward expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, spec wants {expected}")]
    BadParameterCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

/// Layer widths (input, hidden..., output) plus the activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn tanh(layer_widths: Vec<usize>) -> Self {
        MlpSpec { layer_widths, activation: Activation::Tanh }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.layer_widths.len() < 2 {
            return Err(NetError::BadSpec("need at least input and output widths".into()));
        }
        if self.layer_widths.iter().any(|&w| w == 0) {
            return Err(NetError::BadSpec("zero-width layer".into()));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Offset of layer `l`'s (weights, biases) block in the flat vector.
    fn layer_offsets(&self, l: usize) -> (usize, usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.layer_widths[k] * self.layer_widths[k + 1] + self.layer_widths[k + 1];
        }
        let w_len = self.layer_widths[l] * self.layer_widths[l + 1];
        let b_len = self.layer_widths[l + 1];
        (off, w_len, b_len)
    }
}

/// Flat parameter vector tied to a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub flat: Vec<f64>,
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases, reproducible from the seed.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self, NetError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flat = Vec::with_capacity(spec.param_count());
        for w in spec.layer_widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for _ in 0..fan_in * fan_out {
                flat.push(dist.sample(&mut rng));
            }
            flat.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Ok(MlpParams { spec, flat })
    }

    pub fn from_flat(spec: MlpSpec, flat: Vec<f64>) -> Result<Self, NetError> {
        spec.validate()?;
        if flat.len() != spec.param_count() {
            return Err(NetError::BadParameterCount { expected: spec.param_count(), got: flat.len() });
        }
        Ok(MlpParams { spec, flat })
    }

    /// Row-major weights and biases of layer `l` as slices of the flat vector.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (off, w_len, b_len) = self.spec.layer_offsets(l);
        (&self.flat[off..off + w_len], &self.flat[off + w_len..off + w_len + b_len])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (off, w_len, b_len) = self.spec.layer_offsets(l);
        let (w, rest) = self.flat[off..off + w_len + b_len].split_at_mut(w_len);
        (w, rest)
    }
}

/// Checkpoint payload; serde_json prints f64 in shortest round-trip form,
/// so save → load reproduces parameters bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: MlpSpec,
    pub seed: u64,
    pub params: Vec<f64>,
}

pub fn save_checkpoint(path: &Path, params: &MlpParams, seed: u64) -> std::io::Result<()> {
    let ck = Checkpoint { spec: params.spec.clone(), seed, params: params.flat.clone() };
    let text = serde_json::to_string_pretty(&ck).expect("checkpoint serialization");
    std::fs::write(path, text)
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpParams, u64), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    let params = MlpParams::from_flat(ck.spec, ck.params)?;
    Ok((params, ck.seed))
}

/// Scalar kinds an MLP can propagate. Linear layers combine channels
/// independently; `activate` applies tanh with the kind's own chain rule.
pub trait Propagate<'t>: Clone {
    fn channel_count(&self) -> usize;
    fn channel(&self, c: usize) -> Var<'t>;
    fn from_channels(channels: &[Var<'t>]) -> Self;
    fn activate(&self) -> Self;
}

impl<'t> Propagate<'t> for Dual<'t> {
    fn channel_count(&self) -> usize {
        1 + self.n_dirs()
    }

    fn channel(&self, c: usize) -> Var<'t> {
        if c == 0 {
            self.val
        } else {
            self.tangent(c - 1)
        }
    }

    fn from_channels(channels: &[Var<'t>]) -> Self {
        Dual::from_parts(channels[0], channels[1..].iter().copied().collect())
    }

    fn activate(&self) -> Self {
        self.tanh()
    }
}

impl<'t> Propagate<'t> for Jet2<'t> {
    fn channel_count(&self) -> usize {
        2 + self.n_dirs()
    }

    fn channel(&self, c: usize) -> Var<'t> {
        let n = self.n_dirs();
        if c == 0 {
            self.val
        } else if c <= n {
            self.tangent(c - 1)
        } else {
            self.d2
        }
    }

    fn from_channels(channels: &[Var<'t>]) -> Self {
        let n = channels.len() - 2;
        Jet2::from_slots(channels[0], &channels[1..=n], channels[n + 1])
    }

    fn activate(&self) -> Self {
        self.tanh()
    }
}

/// A network's parameters bound onto a tape as leaves.
pub struct TapeNet<'t> {
    spec: MlpSpec,
    vars: Vec<Var<'t>>,
    tape: &'t Tape,
}

impl<'t> TapeNet<'t> {
    /// Binds parameters as trainable leaves (registered for the gradient) or
    /// as plain constants for evaluation-only passes.
    pub fn bind(tape: &'t Tape, params: &MlpParams, trainable: bool) -> TapeNet<'t> {
        let vars = if trainable {
            params.flat.iter().map(|&v| tape.param(v)).collect()
        } else {
            params.flat.iter().map(|&v| tape.constant(v)).collect()
        };
        TapeNet { spec: params.spec.clone(), vars, tape }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn forward<S: Propagate<'t>>(&self, inputs: &[S]) -> Result<Vec<S>, NetError> {
        if inputs.len() != self.spec.input_width() {
            return Err(NetError::DimensionMismatch {
                expected: self.spec.input_width(),
                got: inputs.len(),
            });
        }
        let n_layers = self.spec.n_layers();
        let n_ch = inputs[0].channel_count();
        let mut act: Vec<S> = inputs.to_vec();
        let mut ch_buf: Vec<Vec<Var<'t>>> = vec![Vec::new(); n_ch];
        for l in 0..n_layers {
            let (off, w_len, b_len) = self.spec.layer_offsets(l);
            let w = &self.vars[off..off + w_len];
            let b = &self.vars[off + w_len..off + w_len + b_len];
            let w_in = self.spec.layer_widths[l];
            let w_out = self.spec.layer_widths[l + 1];
            for (c, buf) in ch_buf.iter_mut().enumerate() {
                buf.clear();
                buf.extend(act.iter().map(|a| a.channel(c)));
            }
            let mut next: Vec<S> = Vec::with_capacity(w_out);
            let last = l + 1 == n_layers;
            for j in 0..w_out {
                let row = &w[j * w_in..(j + 1) * w_in];
                let mut channels: SmallVec<[Var<'t>; 8]> = SmallVec::with_capacity(n_ch);
                channels.push(self.tape.dot(row, &ch_buf[0], Some(b[j])));
                for buf in ch_buf.iter().skip(1) {
                    channels.push(self.tape.dot(row, buf, None));
                }
                let pre = S::from_channels(&channels);
                next.push(if last { pre } else { pre.activate() });
            }
            act = next;
        }
        Ok(act)
    }
}
