//! `ALTH` container: magic, u32 version, u32 tensor count, then per tensor a
//! length-prefixed name, u32 rank, u32 dims and an f32 little-endian payload.
//! Optional tagged sections (4-byte tag, u32 length, bytes) may follow.

use std::path::Path;

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

use super::tensor::{Module, Scalar, Tensor};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor<f32>)>,
    pub sections: Vec<([u8; 4], Vec<u8>)>,
}

impl Checkpoint {
    pub fn from_module<T: Scalar, M: Module<T>>(model: &M) -> Self {
        let tensors = model.params().iter().map(|p| (p.name.clone(), p.value.cast())).collect();
        Self { tensors, sections: Vec::new() }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn section(&self, tag: &[u8; 4]) -> Option<&[u8]> {
        self.sections.iter().find(|(t, _)| t == tag).map(|(_, b)| b.as_slice())
    }

    /// Overwrites every parameter of `model` from the tensor of the same name.
    pub fn apply_to<T: Scalar, M: Module<T>>(&self, model: &mut M) -> Result<()> {
        for p in model.params_mut() {
            let t = self
                .get(&p.name)
                .ok_or_else(|| Error::Data(format!("checkpoint has no tensor {}", p.name)))?;
            if t.shape() != p.value.shape() {
                return Err(Error::Shape(format!("{}: checkpoint {:?} vs model {:?}", p.name, t.shape(), p.value.shape())));
            }
            p.value = t.cast();
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(b"ALTH");
        w.u32(VERSION);
        w.len(self.tensors.len());
        for (name, t) in &self.tensors {
            w.str(name);
            w.len(t.shape().len());
            t.shape().iter().for_each(|&d| w.len(d));
            w.f32s(t.data());
        }
        for (tag, body) in &self.sections {
            w.bytes(tag);
            w.len(body.len());
            w.bytes(body);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(b"ALTH")?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {version}")));
        }
        let count = r.len()?;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.str()?;
            let rank = r.len()?;
            let shape: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
            let n = shape.iter().product();
            let data = r.f32s(n)?;
            tensors.push((name, Tensor::from_vec(&shape, data)?));
        }
        let mut sections = Vec::new();
        while !r.is_empty() {
            let tag: [u8; 4] = r.take(4)?.try_into().expect("four bytes");
            let len = r.len()?;
            sections.push((tag, r.take(len)?.to_vec()));
        }
        Ok(Self { tensors, sections })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = crate::seed::rng_from_seed(2);
        let lin = Linear::<f32>::new("head", 5, 2, &mut rng);
        let mut ck = Checkpoint::from_module(&lin);
        ck.sections.push((*b"TREE", vec![1, 2, 3]));
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);

        let mut other = Linear::<f32>::new("head", 5, 2, &mut rng);
        assert_ne!(other, lin);
        back.apply_to(&mut other).unwrap();
        assert_eq!(other, lin);
        assert!(Checkpoint::from_bytes(&bytes[..10]).is_err());
    }
}
