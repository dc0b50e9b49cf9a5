use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};

use super::adjacency::NormalizedAdjacency;
use super::init::init_xavier;
use crate::error::{Error, Result};
use crate::seed;
use crate::ssl::SslTask;

pub const DEFAULT_HIDDEN: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub class_count: usize,
    pub hidden: usize,
    /// Sorted, without duplicates.
    pub tasks: Vec<SslTask>,
    pub bias: bool,
    /// Classification head applied to the last trunk layer without a
    /// further propagation step (`H2 W_c` instead of `A_norm H2 W_c`).
    pub affine_classifier: bool,
}

impl ModelConfig {
    pub fn new(input_dim: usize, class_count: usize, tasks: &[SslTask]) -> Self {
        let mut tasks = tasks.to_vec();
        tasks.sort();
        tasks.dedup();
        ModelConfig {
            input_dim,
            class_count,
            hidden: DEFAULT_HIDDEN,
            tasks,
            bias: false,
            affine_classifier: false,
        }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_affine_classifier(mut self, affine: bool) -> Self {
        self.affine_classifier = affine;
        self
    }
}

/// One graph convolution: `A_norm X W (+ b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Option<Array1<f64>>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: self.bias.as_ref().map(|b| Array1::zeros(b.len())),
        }
    }

    /// `agg` is the already aggregated input `A_norm X`.
    fn apply(&self, agg: &Array2<f64>) -> Array2<f64> {
        let mut out = agg.dot(&self.weight);
        if let Some(b) = &self.bias {
            out += b;
        }
        out
    }
}

/// Trunk, classifier and SSL heads. Used both for parameters and for
/// their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub trunk: [Layer; 2],
    pub classifier: Layer,
    pub heads: BTreeMap<SslTask, Layer>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            trunk: [self.trunk[0].zeros_like(), self.trunk[1].zeros_like()],
            classifier: self.classifier.zeros_like(),
            heads: self
                .heads
                .iter()
                .map(|(t, l)| (*t, l.zeros_like()))
                .collect(),
        }
    }

    fn layers(&self) -> Vec<(String, &Layer)> {
        let mut out = vec![
            ("trunk0".to_string(), &self.trunk[0]),
            ("trunk1".to_string(), &self.trunk[1]),
            ("classifier".to_string(), &self.classifier),
        ];
        for (t, l) in &self.heads {
            out.push((format!("head_{}", t.name()), l));
        }
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut Layer> {
        let [t0, t1] = &mut self.trunk;
        let mut out = vec![t0, t1, &mut self.classifier];
        out.extend(self.heads.values_mut());
        out
    }

    /// Every tensor as a flat row-major slice, in canonical order: for each
    /// layer (trunk0, trunk1, classifier, heads by task) weight then bias.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (name, layer) in self.layers() {
            out.push((
                format!("{name}.weight"),
                layer.weight.as_slice().expect("standard layout"),
            ));
            if let Some(b) = &layer.bias {
                out.push((format!("{name}.bias"), b.as_slice().expect("contiguous")));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in self.layers_mut() {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            if let Some(b) = &mut layer.bias {
                out.push(b.as_slice_mut().expect("contiguous"));
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Classify,
    Ssl(SslTask),
}

/// Intermediate values of one trunk pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct TrunkCache {
    agg0: Array2<f64>,
    pre1: Array2<f64>,
    pub h1: Array2<f64>,
    agg1: Array2<f64>,
    pre2: Array2<f64>,
    pub h2: Array2<f64>,
    agg2: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub config: ModelConfig,
    pub params: ParamSet,
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

fn layer(fan_in: usize, fan_out: usize, bias: bool, rng: &mut impl rand::Rng) -> Layer {
    Layer {
        weight: init_xavier(fan_in, fan_out, rng),
        bias: bias.then(|| Array1::zeros(fan_out)),
    }
}

impl GcnModel {
    /// Xavier-initialized model. The trunk and classifier draw from one
    /// stream and every SSL head from its own, so the task set does not
    /// change the trunk initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        if config.input_dim == 0 || config.class_count < 2 || config.hidden == 0 {
            return Err(Error::InvalidConfig(format!(
                "model needs input_dim >= 1, class_count >= 2, hidden >= 1; got {config:?}"
            )));
        }
        let (d, h, c) = (config.input_dim, config.hidden, config.class_count);
        let mut rng = seed::stream(seed, 0);
        let trunk = [
            layer(d, h, config.bias, &mut rng),
            layer(h, h, config.bias, &mut rng),
        ];
        let classifier = layer(h, c, config.bias, &mut rng);
        let heads = config
            .tasks
            .iter()
            .map(|&t| {
                let mut rng = seed::stream(seed, 1 + t.index() as u64);
                (t, layer(h, t.output_dim(d), config.bias, &mut rng))
            })
            .collect();
        Ok(GcnModel {
            config,
            params: ParamSet {
                trunk,
                classifier,
                heads,
            },
        })
    }

    fn check_input(&self, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<()> {
        if adj.size() != x.nrows() || x.ncols() != self.config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "adjacency {}x{}, features {:?}, model input dim {}",
                adj.size(),
                adj.size(),
                x.dim(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    pub fn trunk_forward(&self, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<TrunkCache> {
        self.check_input(adj, x)?;
        let a = adj.matrix();
        let agg0 = a.dot(x);
        let pre1 = self.params.trunk[0].apply(&agg0);
        let h1 = relu(&pre1);
        let agg1 = a.dot(&h1);
        let pre2 = self.params.trunk[1].apply(&agg1);
        let h2 = relu(&pre2);
        let agg2 = a.dot(&h2);
        Ok(TrunkCache {
            agg0,
            pre1,
            h1,
            agg1,
            pre2,
            h2,
            agg2,
        })
    }

    fn head_layer(&self, head: Head) -> Result<&Layer> {
        match head {
            Head::Classify => Ok(&self.params.classifier),
            Head::Ssl(t) => self
                .params
                .heads
                .get(&t)
                .ok_or_else(|| Error::ShapeMismatch(format!("model has no {} head", t.name()))),
        }
    }

    fn propagates(&self, head: Head) -> bool {
        !(head == Head::Classify && self.config.affine_classifier)
    }

    pub fn head_forward(&self, cache: &TrunkCache, head: Head) -> Result<Array2<f64>> {
        let input = if self.propagates(head) {
            &cache.agg2
        } else {
            &cache.h2
        };
        Ok(self.head_layer(head)?.apply(input))
    }

    /// Logits (`n x C`), reconstructions (`n x D`) or shuffle logits (`n x 1`).
    pub fn forward(
        &self,
        adj: &NormalizedAdjacency,
        x: &Array2<f64>,
        head: Head,
    ) -> Result<Array2<f64>> {
        let cache = self.trunk_forward(adj, x)?;
        self.head_forward(&cache, head)
    }

    /// Accumulates into `grads` the gradient of a scalar whose derivative
    /// with respect to the head output is `d_out`.
    pub fn backward(
        &self,
        adj: &NormalizedAdjacency,
        cache: &TrunkCache,
        head: Head,
        d_out: &Array2<f64>,
        grads: &mut ParamSet,
    ) -> Result<()> {
        let head_layer = self.head_layer(head)?;
        if d_out.dim() != (cache.agg2.nrows(), head_layer.weight.ncols()) {
            return Err(Error::ShapeMismatch(format!(
                "output gradient {:?} for head output {:?}",
                d_out.dim(),
                (cache.agg2.nrows(), head_layer.weight.ncols())
            )));
        }
        let a_t = adj.matrix().t();
        let head_grad = match head {
            Head::Classify => &mut grads.classifier,
            Head::Ssl(t) => grads.heads.get_mut(&t).expect("gradient set matches model"),
        };
        let d_input = d_out.dot(&head_layer.weight.t());
        let d_h2 = if self.propagates(head) {
            accumulate(head_grad, &cache.agg2, d_out);
            a_t.dot(&d_input)
        } else {
            accumulate(head_grad, &cache.h2, d_out);
            d_input
        };
        let d_pre2 = relu_grad(&d_h2, &cache.pre2);
        accumulate(&mut grads.trunk[1], &cache.agg1, &d_pre2);

        let d_h1 = a_t.dot(&d_pre2.dot(&self.params.trunk[1].weight.t()));
        let d_pre1 = relu_grad(&d_h1, &cache.pre1);
        accumulate(&mut grads.trunk[0], &cache.agg0, &d_pre1);
        Ok(())
    }
}

fn relu_grad(upstream: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut out = upstream.clone();
    out.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

fn accumulate(grad: &mut Layer, input: &Array2<f64>, d_out: &Array2<f64>) {
    grad.weight += &input.t().dot(d_out);
    if let Some(b) = &mut grad.bias {
        *b += &d_out.sum_axis(Axis(0));
    }
}
