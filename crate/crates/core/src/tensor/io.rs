//! SMT1 little-endian tensor files: magic, u32 rank, u64 extents, f64 payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Result, Tensor, TensorError};

const MAGIC: &[u8; 4] = b"SMT1";

impl Tensor {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.shape.len() as u32).to_le_bytes())?;
        for &extent in &self.shape {
            w.write_all(&(extent as u64).to_le_bytes())?;
        }
        for &v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(TensorError::BadMagic);
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let rank = u32::from_le_bytes(word) as usize;
        let mut shape = Vec::with_capacity(rank);
        let mut quad = [0u8; 8];
        for _ in 0..rank {
            r.read_exact(&mut quad)?;
            shape.push(u64::from_le_bytes(quad) as usize);
        }
        if shape.contains(&0) {
            return Err(TensorError::ZeroExtent(shape));
        }
        let n = shape.iter().product::<usize>();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut quad)?;
            data.push(f64::from_le_bytes(quad));
        }
        Tensor::new(shape, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
