//! Self-describing binary model file.
//!
//! Layout: magic `LEOIDSM\0`, `u32` format version, `u32` header length, a
//! JSON header, `u32` tensor count, then per tensor: `u32` name length, name,
//! `u32` rank, `u64` dims, little-endian `f64` payload.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::Model;
use super::params::{AdamState, ModelParams};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::features::NormalizationParams;

pub const MAGIC: &[u8; 8] = b"LEOIDSM\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    feature_columns: Vec<String>,
    normalization: Option<NormalizationParams>,
    adam_step: Option<u64>,
}

/// A model plus what is needed to feed it raw dataset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    /// Dataset columns the model consumes, in input order.
    pub feature_columns: Vec<String>,
    pub normalization: Option<NormalizationParams>,
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_tensor<W: Write>(w: &mut W, name: &str, t: &Tensor) -> Result<()> {
    put_u32(w, name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    put_u32(w, t.shape.len() as u32)?;
    for &d in &t.shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &x in &t.data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<(String, Tensor)> {
    let n = get_u32(r)? as usize;
    if n > 4096 {
        return Err(Error::Data(format!("tensor name length {n} is implausible")));
    }
    let mut name = vec![0; n];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| Error::Data("tensor name is not UTF-8".into()))?;
    let rank = get_u32(r)? as usize;
    if rank > 8 {
        return Err(Error::Data(format!("tensor `{name}` has rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(get_u64(r)? as usize);
    }
    let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
    let len = len.filter(|&l| l <= 1 << 28).ok_or_else(|| Error::Data(format!("tensor `{name}` is too large")))?;
    let mut bytes = vec![0; len * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((name, Tensor::from_vec(&shape, data)?))
}

impl ModelFile {
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let params = &self.model.params;
        let header = Header {
            config: self.model.config.clone(),
            feature_columns: self.feature_columns.clone(),
            normalization: self.normalization.clone(),
            adam_step: params.adam.as_ref().map(|a| a.step),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        put_u32(&mut w, FORMAT_VERSION)?;
        put_u32(&mut w, json.len() as u32)?;
        w.write_all(&json)?;
        let extra = params.adam.as_ref().map_or(0, |a| a.m.len() + a.v.len());
        put_u32(&mut w, (params.tensors.len() + extra) as u32)?;
        for (name, t) in params.names.iter().zip(&params.tensors) {
            write_tensor(&mut w, name, t)?;
        }
        if let Some(adam) = &params.adam {
            for (name, t) in params.names.iter().zip(&adam.m) {
                write_tensor(&mut w, &format!("adam.m.{name}"), t)?;
            }
            for (name, t) in params.names.iter().zip(&adam.v) {
                write_tensor(&mut w, &format!("adam.v.{name}"), t)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut magic = [0; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Schema("not a model file (bad magic)".into()));
        }
        let version = get_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Schema(format!("model format version {version} is not supported")));
        }
        let len = get_u32(&mut r)? as usize;
        let mut json = vec![0; len];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        header.config.validate()?;
        let count = get_u32(&mut r)? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            tensors.push(read_tensor(&mut r)?);
        }
        let n_params = tensors.iter().filter(|(n, _)| !n.starts_with("adam.")).count();
        let mut it = tensors.into_iter();
        let (names, params): (Vec<_>, Vec<_>) = it.by_ref().take(n_params).unzip();
        let adam = match header.adam_step {
            Some(step) => {
                let m: Vec<Tensor> = it.by_ref().take(n_params).map(|(_, t)| t).collect();
                let v: Vec<Tensor> = it.by_ref().take(n_params).map(|(_, t)| t).collect();
                if m.len() != n_params || v.len() != n_params {
                    return Err(Error::Data("model file has incomplete optimizer state".into()));
                }
                Some(AdamState { step, m, v })
            }
            None => None,
        };
        let model = Model::from_parts(header.config, ModelParams { names, tensors: params, adam })?;
        if header.feature_columns.len() != model.config.input_size {
            return Err(Error::dimension("model feature columns", model.config.input_size, header.feature_columns.len()));
        }
        Ok(ModelFile { model, feature_columns: header.feature_columns, normalization: header.normalization })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Picks and normalizes this model's inputs from a full dataset row.
    pub fn prepare_row(&self, dataset_columns: &[&str], features: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.feature_columns.len());
        for c in &self.feature_columns {
            let j = dataset_columns
                .iter()
                .position(|d| d == c)
                .ok_or_else(|| Error::Schema(format!("dataset has no column `{c}` required by the model")))?;
            out.push(features[j]);
        }
        if let Some(norm) = &self.normalization {
            norm.apply_row(&mut out);
        }
        Ok(out)
    }
}
