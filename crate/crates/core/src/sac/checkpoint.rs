//! Binary checkpoint format.
//!
//! Layout (little endian): magic `GRCKPT`, `u16` version, `u32` header length
//! followed by a UTF-8 `key=value` header (one pair per line), `u32` tensor
//! count, then per tensor: `u16` name length, name, `u8` element width in
//! bytes (4 or 8), `u8` rank, `u64` per dimension, raw data in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::nn::{Linear, Mlp, Scalar};

const MAGIC: &[u8; 6] = b"GRCKPT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn width(&self) -> u8 {
        match self {
            TensorData::F32(_) => 4,
            TensorData::F64(_) => 8,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    fn from_scalars<F: Scalar>(values: impl Iterator<Item = F>) -> Self {
        if std::mem::size_of::<F>() == 4 {
            TensorData::F32(values.map(|x| x.to_f64_lossy() as f32).collect())
        } else {
            TensorData::F64(values.map(|x| x.to_f64_lossy()).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: TensorData,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    header: Vec<(String, String)>,
    tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn header(&self) -> &[(String, String)] {
        &self.header
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Adds or replaces a header entry.
    pub fn push_header(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.header.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.header.push((key.to_string(), value)),
        }
    }

    pub fn header_get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn header_parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .header_get(key)
            .ok_or_else(|| Error::Checkpoint(format!("header has no `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::Checkpoint(format!("bad header value {key}={raw}")))
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn push_tensor(&mut self, tensor: Tensor) {
        self.tensors.push(tensor);
    }

    pub fn push_scalar(&mut self, name: &str, value: f64) {
        self.tensors.push(Tensor {
            name: name.to_string(),
            dims: vec![],
            data: TensorData::F64(vec![value]),
        });
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        let t = self.require(name)?;
        match t.data.to_f64().as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Checkpoint(format!("`{name}` is not a scalar"))),
        }
    }

    /// Stores layer `i` as `{prefix}.{i}.weight` (shape inputs x outputs)
    /// and `{prefix}.{i}.bias`.
    pub fn push_mlp<F: Scalar>(&mut self, prefix: &str, net: &Mlp<F>) {
        for (i, layer) in net.layers().iter().enumerate() {
            let (rows, cols) = layer.weight.dim();
            self.tensors.push(Tensor {
                name: format!("{prefix}.{i}.weight"),
                dims: vec![rows as u64, cols as u64],
                data: TensorData::from_scalars(layer.weight.iter().copied()),
            });
            self.tensors.push(Tensor {
                name: format!("{prefix}.{i}.bias"),
                dims: vec![layer.bias.len() as u64],
                data: TensorData::from_scalars(layer.bias.iter().copied()),
            });
        }
    }

    pub fn mlp<F: Scalar>(&self, prefix: &str) -> Result<Mlp<F>> {
        let mut layers = Vec::new();
        while let Some(w) = self.tensor(&format!("{prefix}.{}.weight", layers.len())) {
            let b = self.require(&format!("{prefix}.{}.bias", layers.len()))?;
            let [rows, cols] = w.dims[..] else {
                return Err(Error::Checkpoint(format!("`{}` is not a matrix", w.name)));
            };
            if b.dims != [cols] {
                return Err(Error::Checkpoint(format!(
                    "`{}` does not match its weight",
                    b.name
                )));
            }
            let weight = Array2::from_shape_vec(
                (rows as usize, cols as usize),
                w.data.to_f64().into_iter().map(F::of).collect(),
            )
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
            let bias = Array1::from_iter(b.data.to_f64().into_iter().map(F::of));
            if let Some(prev) = layers.last().map(|l: &Linear<F>| l.outputs()) {
                if prev != rows as usize {
                    return Err(Error::Checkpoint(format!("`{prefix}` layers do not chain")));
                }
            }
            layers.push(Linear { weight, bias });
        }
        if layers.is_empty() {
            return Err(Error::Checkpoint(format!("no `{prefix}` network")));
        }
        Ok(Mlp::from_layers(layers))
    }

    fn require(&self, name: &str) -> Result<&Tensor> {
        self.tensor(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let mut header = String::new();
        for (k, v) in &self.header {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Checkpoint(format!(
                    "header entry `{k}` cannot be encoded"
                )));
            }
            header.push_str(k);
            header.push('=');
            header.push_str(v);
            header.push('\n');
        }
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            let expected: u64 = t.dims.iter().product();
            if expected != t.data.len() as u64 {
                return Err(Error::Checkpoint(format!(
                    "`{}` shape does not match data",
                    t.name
                )));
            }
            w.write_all(&(t.name.len() as u16).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&[t.data.width(), t.dims.len() as u8])?;
            for d in &t.dims {
                w.write_all(&d.to_le_bytes())?;
            }
            match &t.data {
                TensorData::F32(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                TensorData::F64(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header_len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut raw = vec![0u8; header_len];
        r.read_exact(&mut raw)?;
        let text =
            String::from_utf8(raw).map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
        let mut ckpt = Checkpoint::default();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("bad header line `{line}`")))?;
            ckpt.header.push((k.to_string(), v.to_string()));
        }
        let count = u32::from_le_bytes(read_array(&mut r)?);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(read_array(&mut r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let [width, rank] = read_array(&mut r)?;
            let dims = (0..rank)
                .map(|_| read_array(&mut r).map(u64::from_le_bytes))
                .collect::<std::io::Result<Vec<_>>>()?;
            let n = dims.iter().product::<u64>() as usize;
            let data = match width {
                4 => TensorData::F32(
                    (0..n)
                        .map(|_| read_array(&mut r).map(f32::from_le_bytes))
                        .collect::<std::io::Result<_>>()?,
                ),
                8 => TensorData::F64(
                    (0..n)
                        .map(|_| read_array(&mut r).map(f64::from_le_bytes))
                        .collect::<std::io::Result<_>>()?,
                ),
                w => return Err(Error::Checkpoint(format!("unknown element width {w}"))),
            };
            ckpt.tensors.push(Tensor { name, dims, data });
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}
