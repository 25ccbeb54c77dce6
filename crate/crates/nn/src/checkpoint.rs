//! `SHNN` checkpoint format (little-endian):
//!
//! ```text
//! "SHNN" | u32 version=1 | u32 len | architecture string (UTF-8, len bytes) |
//! per parameter tensor: u64 count | f32 × count
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{NnError, Result};
use crate::network::Network;
use crate::spec::Architecture;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SHNN";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &Network<f32>, mut out: W) -> Result<()> {
    let arch = net.architecture().to_string();
    let mut buf = Vec::with_capacity(16 + arch.len() + net.param_count() * 4);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(arch.len() as u32).to_le_bytes());
    buf.extend_from_slice(arch.as_bytes());
    for p in net.params() {
        buf.extend_from_slice(&(p.len() as u64).to_le_bytes());
        for v in p {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Network<f32>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic (expected SHNN)".into()));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    let arch_str = std::str::from_utf8(cur.take(len)?)
        .map_err(|_| NnError::Checkpoint("architecture is not UTF-8".into()))?;
    let arch: Architecture = arch_str.parse()?;
    let mut net = Network::<f32>::new(arch, 0)?;
    for p in net.params_mut() {
        let count = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        if count != p.len() as u64 {
            return Err(NnError::Checkpoint(format!(
                "tensor has {count} values, architecture needs {}",
                p.len()
            )));
        }
        let raw = cur.take(p.len() * 4)?;
        for (d, c) in p.iter_mut().zip(raw.chunks_exact(4)) {
            *d = f32::from_le_bytes(c.try_into().unwrap());
        }
    }
    if cur.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(net)
}

pub fn save_checkpoint(net: &Network<f32>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(net, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network<f32>> {
    read_checkpoint(fs::File::open(path)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| NnError::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network<f32> {
        let arch: Architecture = "in(2,6,6) conv(3,3,3,1) relu res[conv(3,3,3,1,1)] pool(2,2) dense(4) softmax"
            .parse()
            .unwrap();
        Network::new(arch, 17).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let n = net();
        let mut buf = Vec::new();
        write_checkpoint(&n, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SHNN");
        let back = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back.architecture(), n.architecture());
        let bits = |n: &Network<f32>| {
            n.params()
                .iter()
                .flat_map(|p| p.iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back), bits(&n));
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_checkpoint(&net(), &mut buf).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_checkpoint(&extra[..]).is_err());
        let mut magic = buf.clone();
        magic[1] = b'X';
        assert!(read_checkpoint(&magic[..]).is_err());
        let mut version = buf.clone();
        version[4] = 9;
        assert!(read_checkpoint(&version[..]).is_err());
    }
}
