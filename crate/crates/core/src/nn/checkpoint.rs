use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::nn::{Mlp, MlpConfig, Param, ParameterStore};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub values: Vec<Vec<f64>>,
}

/// JSON checkpoint of a network. Floats are written in shortest round-trip
/// form, so loading reproduces every parameter bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub config: MlpConfig,
    pub params: Vec<NamedArray>,
    #[serde(default)]
    pub feature_scaler: Option<Standardizer>,
    #[serde(default)]
    pub target_scaler: Option<Standardizer>,
    pub seed: u64,
    pub step: u64,
}

impl MlpCheckpoint {
    pub fn from_net(net: &Mlp, seed: u64, feature_scaler: Option<Standardizer>, target_scaler: Option<Standardizer>) -> Self {
        Self {
            config: net.config().clone(),
            params: net
                .params()
                .params
                .iter()
                .map(|p| NamedArray {
                    name: p.name.clone(),
                    values: p.value.to_rows(),
                })
                .collect(),
            feature_scaler,
            target_scaler,
            seed,
            step: net.params().step,
        }
    }

    pub fn to_net(&self) -> Result<Mlp> {
        let mut params = Vec::with_capacity(self.params.len());
        for a in &self.params {
            let value = Matrix::from_rows(&a.values)?;
            let grad = Matrix::zeros(value.rows(), value.cols());
            params.push(Param {
                name: a.name.clone(),
                value,
                grad,
            });
        }
        Mlp::from_parts(
            self.config.clone(),
            ParameterStore {
                params,
                step: self.step,
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Hash of a network's configuration and parameters alone, independent of
/// the seed and scalers stored next to them.
pub fn network_hash(net: &Mlp) -> String {
    MlpCheckpoint::from_net(net, 0, None, None)
        .hash()
        .expect("in-memory networks always serialize")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
