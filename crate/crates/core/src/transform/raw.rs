use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Result, Scalogram, TransformError};

pub const RAW_MAGIC: &[u8; 4] = b"CWTS";
pub const RAW_VERSION: u32 = 1;

/// A `channel × scale × time` float32 block, serialized as:
///
/// ```text
/// "CWTS" | u32 version=1 | u32 n_scales | u32 n_times | u32 n_channels |
/// f32 × (n_channels·n_scales·n_times), row-major (channel, scale, time)
/// ```
///
/// All integers and floats are little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub n_channels: usize,
    pub n_scales: usize,
    pub n_times: usize,
    pub data: Vec<f32>,
}

impl RawTensor {
    pub fn new(n_channels: usize, n_scales: usize, n_times: usize, data: Vec<f32>) -> Result<Self> {
        let expected = n_channels * n_scales * n_times;
        if data.len() != expected {
            return Err(TransformError::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            n_channels,
            n_scales,
            n_times,
            data,
        })
    }

    /// Stacks scalograms of equal shape as channels.
    pub fn from_scalograms(channels: &[Scalogram]) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| TransformError::RawFormat("no channels".into()))?;
        let (h, w) = (first.n_scales(), first.n_times());
        let mut data = Vec::with_capacity(channels.len() * h * w);
        for sc in channels {
            if (sc.n_scales(), sc.n_times()) != (h, w) {
                return Err(TransformError::RawFormat(format!(
                    "channel shape {}x{} differs from {h}x{w}",
                    sc.n_scales(),
                    sc.n_times()
                )));
            }
            data.extend(sc.coefficients().iter().map(|&v| v as f32));
        }
        Self::new(channels.len(), h, w, data)
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.n_scales * self.n_times;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(RAW_MAGIC)?;
        for v in [RAW_VERSION, dim(self.n_scales)?, dim(self.n_times)?, dim(self.n_channels)?] {
            out.write_all(&v.to_le_bytes())?;
        }
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 20];
        input
            .read_exact(&mut header)
            .map_err(|_| TransformError::RawFormat("truncated header".into()))?;
        if &header[..4] != RAW_MAGIC {
            return Err(TransformError::RawFormat("bad magic (expected CWTS)".into()));
        }
        let field = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = field(0);
        if version != RAW_VERSION {
            return Err(TransformError::RawFormat(format!("unsupported version {version}")));
        }
        let (n_scales, n_times, n_channels) = (field(1) as usize, field(2) as usize, field(3) as usize);
        let count = n_scales
            .checked_mul(n_times)
            .and_then(|v| v.checked_mul(n_channels))
            .ok_or_else(|| TransformError::RawFormat("dimensions overflow".into()))?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != count * 4 {
            return Err(TransformError::RawFormat(format!(
                "expected {} payload bytes, found {}",
                count * 4,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(n_channels, n_scales, n_times, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(fs::File::open(path)?)
    }
}

fn dim(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| TransformError::RawFormat(format!("dimension {v} exceeds u32")))
}
