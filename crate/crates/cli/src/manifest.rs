//! Run manifest embedded in every report: tool version, resolved
//! parameters, and a content digest of the model file. Equal manifests
//! mean byte-identical outputs.

use std::collections::BTreeMap;

use serde_json::json;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub subcommand: String,
    pub model_path: Option<String>,
    pub model_digest: Option<String>,
    pub params: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(subcommand: &str, params: BTreeMap<String, String>) -> Manifest {
        Manifest { subcommand: subcommand.to_string(), model_path: None, model_digest: None, params }
    }

    pub fn with_model(mut self, path: &str, contents: &[u8]) -> Manifest {
        self.model_path = Some(path.to_string());
        self.model_digest = Some(format!("fnv1a64:{:016x}", fnv1a64(contents)));
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "tool": "ruinlab",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "model_path": self.model_path,
            "model_digest": self.model_digest,
            "params": self.params,
        })
    }

    /// Compact one-line form for CSV / text headers.
    pub fn comment_line(&self) -> String {
        format!("# manifest: {}", self.to_json())
    }
}
