//! Output files stamped with provenance, and readers for the hand-off between stages.
//!
//! CSV files open with `#` comment lines, JSON files wrap their payload as
//! `{"provenance": .., "data": ..}` and SVG files carry an XML comment. Nothing
//! time-dependent is written, so identical runs produce identical bytes.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shipperf::{Error, Result};

pub const TOOL_VERSION: &str = concat!("shipperf ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<(String, u64)>,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            tool: TOOL_VERSION.into(),
            command: command.into(),
            config_sha256: config_sha256.into(),
            seeds: ["synth", "ann_init", "mc_dropout"].iter().map(|s| (s.to_string(), seed)).collect(),
        }
    }

    fn lines(&self) -> Vec<String> {
        let mut v = vec![
            self.tool.clone(),
            format!("command: {}", self.command),
            format!("config_sha256: {}", self.config_sha256),
        ];
        v.extend(self.seeds.iter().map(|(k, s)| format!("seed.{k}: {s}")));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T: Serialize> {
    provenance: &'a Provenance,
    data: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    data: T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the files of one stage into its directory and remembers their hashes.
pub struct StageWriter {
    pub dir: PathBuf,
    pub provenance: Provenance,
    pub written: Vec<ManifestEntry>,
}

impl StageWriter {
    pub fn create(dir: PathBuf, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// A CSV whose body comes from `body`, behind the provenance comment block.
    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        for line in self.provenance.lines() {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        body(&mut buf)?;
        self.put(name, buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let env = EnvelopeOut {
            provenance: &self.provenance,
            data,
        };
        let mut buf = serde_json::to_vec_pretty(&env)?;
        buf.push(b'\n');
        self.put(name, buf)
    }

    /// An SVG document; the provenance goes in a comment after the XML prolog.
    pub fn svg(&mut self, name: &str, document: &str) -> Result<()> {
        let comment = self.provenance.lines().join("; ").replace("--", "- -");
        let body = match document.strip_prefix(crate::svg::PROLOG) {
            Some(rest) => format!("{}<!-- {comment} -->\n{rest}", crate::svg::PROLOG),
            None => format!("<!-- {comment} -->\n{document}"),
        };
        self.put(name, body.into_bytes())
    }
}

/// Reads a JSON payload written by [`StageWriter::json`], or a bare document
/// for hand-written inputs.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let wrapped = value.as_object().is_some_and(|o| o.contains_key("provenance") && o.contains_key("data"));
    if wrapped {
        Ok(serde_json::from_value::<EnvelopeIn<T>>(value)?.data)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

/// Like [`read_json`], for a file an earlier stage should have produced.
pub fn read_stage_json<T: DeserializeOwned>(dir: &Path, name: &str, producer: &str) -> Result<T> {
    let path = dir.join(name);
    if !path.is_file() {
        let why = std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("not found; run `shipperf {producer}` first"),
        );
        return Err(Error::io(&path, why));
    }
    read_json(&path)
}
