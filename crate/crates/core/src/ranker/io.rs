//! Binary model container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content                                        |
//! |-------|------------------------------------------------|
//! | 4     | magic `GRNK`                                   |
//! | 4     | format version, `u32`                          |
//! | 4     | config length `n`, `u32`                       |
//! | n     | [`RankerConfig`] as UTF-8 JSON                 |
//! | 8·p   | parameters as `f64` in declaration order       |

use std::path::Path;

use super::{RankerConfig, RankerModel};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GRNK";
pub const FORMAT_VERSION: u32 = 1;

impl RankerModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let config = serde_json::to_vec(&self.config).expect("config serializes");
        let params = self.parameters();
        let mut out = Vec::with_capacity(12 + config.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(&config);
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = |range: std::ops::Range<usize>| {
            bytes
                .get(range)
                .ok_or_else(|| Error::format(None, "model file is truncated"))
        };
        if header(0..4)? != MAGIC {
            return Err(Error::format(None, "bad magic bytes, not a model file"));
        }
        let version = u32::from_le_bytes(header(4..8)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::format(
                None,
                format!("unsupported model format version {version} (expected {FORMAT_VERSION})"),
            ));
        }
        let config_len = u32::from_le_bytes(header(8..12)?.try_into().unwrap()) as usize;
        let config_bytes = header(12..12 + config_len)?;
        let config: RankerConfig = serde_json::from_slice(config_bytes)
            .map_err(|e| Error::format(None, format!("invalid config: {e}")))?;
        let mut model = RankerModel::zeros(config)
            .map_err(|e| Error::format(None, format!("invalid config: {e}")))?;

        let body = &bytes[12 + config_len..];
        let expected = model.parameter_count() * 8;
        if body.len() != expected {
            return Err(Error::format(
                None,
                format!(
                    "expected {expected} parameter bytes, found {}{}",
                    body.len(),
                    if body.len() < expected {
                        " (truncated)"
                    } else {
                        ""
                    }
                ),
            ));
        }
        let params: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        model.set_parameters(&params)?;
        Ok(model)
    }
}

pub fn save_model(model: &RankerModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RankerModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RankerModel::from_bytes(&bytes)
}
