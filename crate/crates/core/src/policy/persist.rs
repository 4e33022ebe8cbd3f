//! Versioned binary policy files.
//!
//! Layout (little endian):
//!
//! ```text
//! magic    8 bytes  "STPOLICY"
//! version  u32
//! input    u32
//! layers   u32, then one u32 per hidden layer
//! shared   u8
//! count    u64 parameter count
//! params   count × f64
//! check    u64 FNV-1a over everything above
//! ```

use std::fs;
use std::path::Path;

use super::net::{PolicyDims, PolicyParams};
use super::PolicyError;

const MAGIC: &[u8; 8] = b"STPOLICY";
pub const FORMAT_VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn encode_policy(params: &PolicyParams) -> Vec<u8> {
    let dims = params.dims();
    let mut out = Vec::with_capacity(40 + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.input as u32).to_le_bytes());
    out.extend_from_slice(&(dims.hidden.len() as u32).to_le_bytes());
    for &h in &dims.hidden {
        out.extend_from_slice(&(h as u32).to_le_bytes());
    }
    out.push(dims.shared_trunk as u8);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params.as_slice() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let check = fnv1a(&out);
    out.extend_from_slice(&check.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PolicyError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            PolicyError::Format(format!("file truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, PolicyError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PolicyError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_policy(bytes: &[u8]) -> Result<PolicyParams, PolicyError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(PolicyError::Format("not a policy file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(PolicyError::Version { found: version, expected: FORMAT_VERSION });
    }
    let input = r.u32()? as usize;
    let layers = r.u32()? as usize;
    if layers > 64 {
        return Err(PolicyError::Format(format!("implausible layer count {layers}")));
    }
    let hidden = (0..layers).map(|_| r.u32().map(|h| h as usize)).collect::<Result<Vec<_>, _>>()?;
    let shared = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(PolicyError::Format(format!("bad trunk flag {b}"))),
    };
    let count = r.u64()? as usize;
    let raw = r.take(count.checked_mul(8).ok_or_else(|| PolicyError::Format("parameter count overflow".into()))?)?;
    let params: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let body_end = r.pos;
    let check = r.u64()?;
    if r.pos != bytes.len() {
        return Err(PolicyError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if check != fnv1a(&bytes[..body_end]) {
        return Err(PolicyError::Format("checksum mismatch".into()));
    }
    PolicyParams::from_flat(PolicyDims::new(input, hidden, shared), params)
}

pub fn save_policy(params: &PolicyParams, path: &Path) -> Result<(), PolicyError> {
    fs::write(path, encode_policy(params)).map_err(|e| PolicyError::Io(format!("{}: {e}", path.display())))
}

pub fn load_policy(path: &Path) -> Result<PolicyParams, PolicyError> {
    let bytes = fs::read(path).map_err(|e| PolicyError::Io(format!("{}: {e}", path.display())))?;
    decode_policy(&bytes)
}

/// Loads a policy and checks that it accepts states of `input_dim` reals.
pub fn load_policy_for(path: &Path, input_dim: usize) -> Result<PolicyParams, PolicyError> {
    let p = load_policy(path)?;
    if p.input_dim() != input_dim {
        return Err(PolicyError::DimensionMismatch { found: p.input_dim(), expected: input_dim });
    }
    Ok(p)
}
