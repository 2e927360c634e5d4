//! Parameter checkpoints.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "MGRPOPRM"
//! policy   u32
//! version  u64
//! dim      u32
//! weights  dim × f64
//! ```

use std::fs;
use std::path::Path;

use super::PolicyParams;
use crate::error::{Error, Result};
use crate::game::PolicyId;

pub const MAGIC: &[u8; 8] = b"MGRPOPRM";
const HEADER: usize = 8 + 4 + 8 + 4;

pub fn encode(params: &PolicyParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * params.dim());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(params.policy_id.0 as u32).to_le_bytes());
    out.extend_from_slice(&params.version.to_le_bytes());
    out.extend_from_slice(&(params.dim() as u32).to_le_bytes());
    for w in &params.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<PolicyParams> {
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let policy = u32_at(8) as usize;
    let version = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let dim = u32_at(20) as usize;
    let body = &bytes[HEADER..];
    if body.len() != dim * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {dim} weights, found {} bytes",
            body.len()
        )));
    }
    let weights: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Checkpoint("non-finite weight".into()));
    }
    Ok(PolicyParams {
        policy_id: PolicyId(policy),
        version,
        weights,
    })
}

pub fn save(params: &PolicyParams, path: &Path) -> Result<()> {
    fs::write(path, encode(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PolicyParams> {
    decode(&fs::read(path)?)
}

/// Line-oriented export for diffing: a header line then one weight per line.
pub fn to_text(params: &PolicyParams) -> String {
    let mut out = format!(
        "policy {} version {} dim {}\n",
        params.policy_id.0,
        params.version,
        params.dim()
    );
    for (i, w) in params.weights.iter().enumerate() {
        out.push_str(&format!("{i} {w:e}\n"));
    }
    out
}
