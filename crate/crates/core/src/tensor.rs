//! SLPT: a minimal n-dimensional `f64` tensor container.
//!
//! `"SLPT" u32 version=1, u32 rank, u32 dims[rank]`, then the values as
//! little-endian `f64` in row-major order.

use byteorder::{LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Dtype, Reader, FORMAT_VERSION};
use crate::spa::SpaResult;

pub const TENSOR_MAGIC: [u8; 4] = *b"SLPT";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::shape("tensor size overflows"))?;
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Tensor {
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        match self.shape[..] {
            [r, c] => Matrix::from_vec(r, c, self.data.clone()),
            _ => Err(Error::shape(format!("expected a rank-2 tensor, got {:?}", self.shape))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.shape.len() + 8 * self.data.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
        out.write_u32::<LittleEndian>(self.shape.len() as u32).unwrap();
        for &d in &self.shape {
            out.write_u32::<LittleEndian>(d as u32).unwrap();
        }
        for &v in &self.data {
            out.write_f64::<LittleEndian>(v).unwrap();
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(TENSOR_MAGIC)?;
        r.version()?;
        let shape = r.shape()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::shape("tensor size overflows"))?;
        let data = r.values(Dtype::F64, n)?;
        r.finish()?;
        Ok(Tensor { shape, data })
    }
}

/// The tensors of an SPA result, keyed by file stem: `V`, `U`, `S`, `H`,
/// `activities` and `neurons`.
pub fn spa_tensors(spa: &SpaResult) -> Vec<(&'static str, Tensor)> {
    vec![
        ("V", Tensor::from_matrix(&spa.v)),
        ("U", Tensor::from_matrix(&spa.u)),
        ("S", Tensor::vector(spa.s.clone())),
        ("H", Tensor::from_matrix(&spa.h)),
        ("activities", Tensor::vector(spa.activities.clone())),
        (
            "neurons",
            Tensor::vector(spa.neurons.iter().map(|&n| n as f64).collect()),
        ),
    ]
}
