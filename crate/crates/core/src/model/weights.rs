use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::ParamSet;

use super::config::HanConfig;
use super::han::HanModel;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"HANW";
pub const WEIGHTS_VERSION: u32 = 1;

/// Serializes a model.
///
/// Layout: magic `HANW`, version (u32 LE), config text length (u32 LE), the
/// config as `key=value` text, then every parameter block as f64 LE in
/// declaration order.
pub fn encode_weights(model: &HanModel) -> Vec<u8> {
    let cfg = model.config.to_text();
    let mut out = Vec::with_capacity(12 + cfg.len() + 8 * model.param_count());
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(cfg.as_bytes());
    for (_, block) in model.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated { offset: self.pos, expected: n - (self.bytes.len() - self.pos) });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<HanModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != WEIGHTS_MAGIC {
        return Err(Error::WeightFormat("bad magic, not a HANW file".into()));
    }
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::WeightFormat(format!("unsupported format version {version} (expected {WEIGHTS_VERSION})")));
    }
    let cfg_len = r.u32()? as usize;
    let cfg_text =
        std::str::from_utf8(r.take(cfg_len)?).map_err(|_| Error::WeightFormat("config section is not UTF-8".into()))?;
    let config = HanConfig::from_text(cfg_text, "weights config")?;
    let mut model = HanModel::zeros(&config)?;
    let need = 8 * model.param_count();
    let payload = r.take(need)?;
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for block in model.blocks_mut() {
        for v in block.iter_mut() {
            *v = values.next().expect("payload sized from the config");
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::WeightFormat(format!(
            "{} trailing bytes after the last parameter block",
            bytes.len() - r.pos
        )));
    }
    Ok(model)
}

pub fn save_weights(model: &HanModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_weights(model)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<HanModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

/// Loads a model and checks that its architecture matches `expected`.
pub fn load_weights_expecting(path: &Path, expected: &HanConfig) -> Result<HanModel> {
    let model = load_weights(path)?;
    let diffs = model.config.structural_differences(expected);
    if !diffs.is_empty() {
        return Err(Error::ConfigMismatch(format!("{} differs in {}", path.display(), diffs.join(", "))));
    }
    Ok(model)
}
