//! Binary checkpoint: model parameters, optimizer state and the optional
//! input standardization.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      "GSSL"
//! version    u32
//! input_dim  u32
//! classes    u32
//! hidden     u32
//! task_mask  u32   bit 0 denoise, bit 1 completion, bit 2 shuffle
//! flags      u32   bit 0 biases, bit 1 standardization present,
//!                  bit 2 affine classification head
//! parameters f64*  every tensor row-major, canonical order
//! adam       u64 step, f64 lr, beta1, beta2, epsilon,
//!            f64* first moments, f64* second moments
//! standardization (if flagged): f64 * input_dim means, f64 * input_dim stds
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array1;

use super::adam::AdamState;
use super::model::{GcnModel, ModelConfig};
use crate::dataset::Standardizer;
use crate::error::{Error, Result};
use crate::ssl::SslTask;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GSSL";
pub const CHECKPOINT_VERSION: u32 = 1;

const FLAG_BIAS: u32 = 1;
const FLAG_STANDARDIZER: u32 = 2;
const FLAG_AFFINE_CLASSIFIER: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: GcnModel,
    pub adam: AdamState,
    pub standardizer: Option<Standardizer>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Parse(format!(
                "checkpoint truncated at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn fill(&mut self, out: &mut [f64]) -> Result<()> {
        for v in out {
            *v = self.f64()?;
        }
        Ok(())
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = &self.model.config;
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        let mask = cfg.tasks.iter().fold(0u32, |m, t| m | t.bit());
        let mut flags = 0;
        if cfg.bias {
            flags |= FLAG_BIAS;
        }
        if self.standardizer.is_some() {
            flags |= FLAG_STANDARDIZER;
        }
        if cfg.affine_classifier {
            flags |= FLAG_AFFINE_CLASSIFIER;
        }
        for v in [
            CHECKPOINT_VERSION,
            cfg.input_dim as u32,
            cfg.class_count as u32,
            cfg.hidden as u32,
            mask,
            flags,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for (_, t) in self.model.params.tensors() {
            put_f64s(&mut out, t);
        }
        out.extend_from_slice(&self.adam.step.to_le_bytes());
        put_f64s(
            &mut out,
            &[
                self.adam.learning_rate,
                self.adam.beta1,
                self.adam.beta2,
                self.adam.epsilon,
            ],
        );
        for m in self
            .adam
            .first_moment
            .iter()
            .chain(&self.adam.second_moment)
        {
            put_f64s(&mut out, m);
        }
        if let Some(s) = &self.standardizer {
            put_f64s(&mut out, s.mean.as_slice().expect("contiguous"));
            put_f64s(&mut out, s.std.as_slice().expect("contiguous"));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::UnknownMagic(magic));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let input_dim = r.u32()? as usize;
        let class_count = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let mask = r.u32()?;
        let flags = r.u32()?;
        let tasks: Vec<SslTask> = SslTask::ALL
            .into_iter()
            .filter(|t| mask & t.bit() != 0)
            .collect();
        let config = ModelConfig::new(input_dim, class_count, &tasks)
            .with_hidden(hidden)
            .with_bias(flags & FLAG_BIAS != 0)
            .with_affine_classifier(flags & FLAG_AFFINE_CLASSIFIER != 0);
        let mut model = GcnModel::new(config, 0)?;
        for t in model.params.tensors_mut() {
            r.fill(t)?;
        }
        let mut adam = AdamState::new(&model.params);
        adam.step = r.u64()?;
        adam.learning_rate = r.f64()?;
        adam.beta1 = r.f64()?;
        adam.beta2 = r.f64()?;
        adam.epsilon = r.f64()?;
        for m in adam
            .first_moment
            .iter_mut()
            .chain(adam.second_moment.iter_mut())
        {
            r.fill(m)?;
        }
        let standardizer = if flags & FLAG_STANDARDIZER != 0 {
            let mut mean = Array1::zeros(input_dim);
            let mut std = Array1::zeros(input_dim);
            r.fill(mean.as_slice_mut().expect("contiguous"))?;
            r.fill(std.as_slice_mut().expect("contiguous"))?;
            Some(Standardizer { mean, std })
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(Error::Parse(format!(
                "{} trailing bytes in checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            model,
            adam,
            standardizer,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
