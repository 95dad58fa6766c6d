//! Versioned binary checkpoints.
//!
//! ```text
//! magic     "HXM1"
//! kind      u32 length + UTF-8     (e.g. "mlp", "bilstm-mlp", "centroids")
//! metadata  u32 length + UTF-8     (JSON, owner-defined)
//! tensors   u32 count, then per tensor:
//!             name u32 length + UTF-8, rows u32, cols u32, rows*cols f64 LE
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::lstm::{BiLstmEncoder, LstmCell};
use super::mlp::MlpModel;
use super::param::{Param, Parameterized};
use super::seqclf::BiLstmMlp;
use super::{NnError, Result};
use crate::binio;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HXM1";
const MAX_STRING: usize = 1 << 24;
const MAX_TENSOR: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub metadata: String,
    pub tensors: Vec<Param>,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>, metadata: impl Into<String>, tensors: Vec<Param>) -> Self {
        Self {
            kind: kind.into(),
            metadata: metadata.into(),
            tensors,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        binio::write_str(&mut w, &self.kind)?;
        binio::write_str(&mut w, &self.metadata)?;
        binio::write_u32(&mut w, self.tensors.len() as u32)?;
        for t in &self.tensors {
            binio::write_str(&mut w, &t.name)?;
            binio::write_u32(&mut w, t.rows as u32)?;
            binio::write_u32(&mut w, t.cols as u32)?;
            for &v in &t.value {
                binio::write_f64(&mut w, v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let magic: [u8; 4] = binio::read_array(&mut r)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint(format!("bad magic {magic:?}")));
        }
        let kind = binio::read_str(&mut r, MAX_STRING)?;
        let metadata = binio::read_str(&mut r, MAX_STRING)?;
        let count = binio::read_u32(&mut r)? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = binio::read_str(&mut r, MAX_STRING)?;
            let rows = binio::read_u32(&mut r)? as usize;
            let cols = binio::read_u32(&mut r)? as usize;
            let len = rows
                .checked_mul(cols)
                .filter(|&n| n <= MAX_TENSOR)
                .ok_or_else(|| {
                    NnError::Checkpoint(format!("tensor {name} too large ({rows}x{cols})"))
                })?;
            let value = (0..len)
                .map(|_| binio::read_f64(&mut r))
                .collect::<std::io::Result<_>>()?;
            tensors.push(Param {
                name,
                rows,
                cols,
                value,
            });
        }
        Ok(Self {
            kind,
            metadata,
            tensors,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Short content hash used as a model version stamp.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        hex::encode(&digest[..8])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(fs::File::open(path)?))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(NnError::Checkpoint(format!(
                "expected a {kind:?} checkpoint, found {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

impl MlpModel {
    pub const CHECKPOINT_KIND: &'static str = "mlp";

    pub fn to_checkpoint(&self, metadata: impl Into<String>) -> Checkpoint {
        Checkpoint::new(
            Self::CHECKPOINT_KIND,
            metadata,
            self.params().into_iter().cloned().collect(),
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind(Self::CHECKPOINT_KIND)?;
        Self::from_params(ckpt.tensors.clone())
    }
}

impl BiLstmMlp {
    pub const CHECKPOINT_KIND: &'static str = "bilstm-mlp";

    pub fn to_checkpoint(&self, metadata: impl Into<String>) -> Checkpoint {
        Checkpoint::new(
            Self::CHECKPOINT_KIND,
            metadata,
            self.params().into_iter().cloned().collect(),
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind(Self::CHECKPOINT_KIND)?;
        let t = &ckpt.tensors;
        if t.len() < 7 {
            return Err(NnError::Checkpoint(format!(
                "bilstm-mlp needs at least 7 tensors, got {}",
                t.len()
            )));
        }
        let forward = LstmCell::from_params(t[0].clone(), t[1].clone())?;
        let backward = LstmCell::from_params(t[2].clone(), t[3].clone())?;
        let encoder = BiLstmEncoder::from_cells(forward, backward)?;
        let mlp = MlpModel::from_params(t[4..t.len() - 1].to_vec())?;
        let unk = t[t.len() - 1].clone();
        Self::from_parts(encoder, mlp, unk)
    }
}
