//! Target-token embedding sets and the `HXE1` binary format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic       4 bytes  "HXE1"
//! provider    u32 length + UTF-8   (model id, layer, ...)
//! dim         u32
//! masked      u8 (0 or 1)
//! count       u64
//! records     count times:
//!   sentence_id  u32 length + UTF-8
//!   piece_count  u16
//!   values       piece_count * dim f32
//! ```
//!
//! Only the homograph's own word pieces are stored. Piece alignment is done by
//! whatever produced the file; this module checks structure only.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio;

pub const MAGIC_PREFIX: &[u8; 3] = b"HXE";
pub const FORMAT_VERSION: u8 = b'1';
const MAX_STRING: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not an HXE file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported HXE version {0:?}")]
    Version(char),
    #[error("corrupt embedding file at record {ordinal}: {message}")]
    Corruption { ordinal: u64, message: String },
    #[error("corrupt embedding header: {0}")]
    Header(String),
    #[error("invalid embedding record {sentence_id:?}: {message}")]
    InvalidRecord {
        sentence_id: String,
        message: String,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;

/// How a multi-piece target is reduced to one vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationStrategy {
    #[default]
    First,
    Sum,
    Average,
}

impl AggregationStrategy {
    pub const ALL: [AggregationStrategy; 3] = [Self::First, Self::Sum, Self::Average];

    pub fn name(self) -> &'static str {
        match self {
            Self::First => "first",
            Self::Sum => "sum",
            Self::Average => "average",
        }
    }
}

impl std::str::FromStr for AggregationStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "first" => Ok(Self::First),
            "sum" => Ok(Self::Sum),
            "average" | "avg" | "mean" => Ok(Self::Average),
            other => Err(format!("unknown aggregation {other:?} (first|sum|average)")),
        }
    }
}

/// Word-piece vectors of one sentence's target token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    sentence_id: String,
    pieces: Vec<Vec<f32>>,
    masked: bool,
}

impl EmbeddingRecord {
    pub fn new(
        sentence_id: impl Into<String>,
        pieces: Vec<Vec<f32>>,
        masked: bool,
    ) -> Result<Self> {
        let sentence_id = sentence_id.into();
        let invalid = |message: String| EmbedError::InvalidRecord {
            sentence_id: sentence_id.clone(),
            message,
        };
        let Some(first) = pieces.first() else {
            return Err(invalid("record has no pieces".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("zero-dimensional piece".into()));
        }
        if let Some(p) = pieces.iter().find(|p| p.len() != dim) {
            return Err(invalid(format!(
                "pieces disagree on dimension ({dim} vs {})",
                p.len()
            )));
        }
        if masked && pieces.len() != 1 {
            return Err(invalid(format!(
                "masked record has {} pieces, expected 1",
                pieces.len()
            )));
        }
        if pieces.len() > u16::MAX as usize {
            return Err(invalid(format!(
                "{} pieces exceed the u16 limit",
                pieces.len()
            )));
        }
        Ok(Self {
            sentence_id,
            pieces,
            masked,
        })
    }

    pub fn sentence_id(&self) -> &str {
        &self.sentence_id
    }

    pub fn pieces(&self) -> &[Vec<f32>] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].len()
    }

    pub fn masked(&self) -> bool {
        self.masked
    }

    /// Reduces the pieces to one vector, widened to f64.
    pub fn aggregate(&self, strategy: AggregationStrategy) -> Vec<f64> {
        aggregate_pieces(self, strategy)
    }
}

/// First takes `pieces[0]`; Sum and Average reduce elementwise. A single-piece
/// record comes back unchanged under every strategy.
pub fn aggregate_pieces(record: &EmbeddingRecord, strategy: AggregationStrategy) -> Vec<f64> {
    let pieces = record.pieces();
    let widen = |p: &[f32]| p.iter().map(|&v| f64::from(v)).collect::<Vec<_>>();
    if pieces.len() == 1 || strategy == AggregationStrategy::First {
        return widen(&pieces[0]);
    }
    let mut acc = vec![0.0; record.dim()];
    for piece in pieces {
        for (a, &v) in acc.iter_mut().zip(piece) {
            *a += f64::from(v);
        }
    }
    if strategy == AggregationStrategy::Average {
        let n = pieces.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    acc
}

/// Provider-stamped collection of target-token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    provider: String,
    dim: usize,
    masked: bool,
    records: BTreeMap<String, EmbeddingRecord>,
    /// File order, kept so a read-write cycle reproduces the bytes.
    order: Vec<String>,
}

impl EmbeddingSet {
    pub fn new(provider: impl Into<String>, dim: usize, masked: bool) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(EmbedError::Header(format!("invalid dimension {dim}")));
        }
        Ok(Self {
            provider: provider.into(),
            dim,
            masked,
            records: BTreeMap::new(),
            order: Vec::new(),
        })
    }

    pub fn insert(&mut self, record: EmbeddingRecord) -> Result<()> {
        if record.dim() != self.dim {
            return Err(EmbedError::Dimension {
                expected: self.dim,
                found: record.dim(),
            });
        }
        if record.masked() != self.masked {
            return Err(EmbedError::InvalidRecord {
                sentence_id: record.sentence_id.clone(),
                message: format!(
                    "masked={} in a set with masked={}",
                    record.masked(),
                    self.masked
                ),
            });
        }
        if self.records.contains_key(record.sentence_id()) {
            return Err(EmbedError::InvalidRecord {
                sentence_id: record.sentence_id.clone(),
                message: "duplicate sentence id".into(),
            });
        }
        self.order.push(record.sentence_id.clone());
        self.records.insert(record.sentence_id.clone(), record);
        Ok(())
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn masked(&self) -> bool {
        self.masked
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn get(&self, sentence_id: &str) -> Option<&EmbeddingRecord> {
        self.records.get(sentence_id)
    }

    /// Records in file order.
    pub fn records(&self) -> impl Iterator<Item = &EmbeddingRecord> + '_ {
        self.order.iter().map(move |id| &self.records[id])
    }

    /// Most common piece count; ties go to the smaller count.
    pub fn modal_piece_count(&self) -> Option<usize> {
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        for r in self.records.values() {
            *hist.entry(r.piece_count()).or_default() += 1;
        }
        hist.into_iter()
            .fold(None, |best: Option<(usize, usize)>, (pc, n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((pc, n)),
            })
            .map(|(pc, _)| pc)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC_PREFIX)?;
        binio::write_u8(&mut w, FORMAT_VERSION)?;
        binio::write_str(&mut w, &self.provider)?;
        binio::write_u32(&mut w, self.dim as u32)?;
        binio::write_u8(&mut w, u8::from(self.masked))?;
        binio::write_u64(&mut w, self.order.len() as u64)?;
        for record in self.records() {
            binio::write_str(&mut w, record.sentence_id())?;
            binio::write_u16(&mut w, record.piece_count() as u16)?;
            for piece in record.pieces() {
                for &v in piece {
                    binio::write_f32(&mut w, v)?;
                }
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let header_err = |e: io::Error| EmbedError::Header(e.to_string());
        let magic: [u8; 4] = binio::read_array(&mut r).map_err(header_err)?;
        if &magic[..3] != MAGIC_PREFIX {
            return Err(EmbedError::BadMagic(magic));
        }
        if magic[3] != FORMAT_VERSION {
            return Err(EmbedError::Version(magic[3] as char));
        }
        let provider = binio::read_str(&mut r, MAX_STRING).map_err(header_err)?;
        let dim = binio::read_u32(&mut r).map_err(header_err)? as usize;
        let masked = match binio::read_u8(&mut r).map_err(header_err)? {
            0 => false,
            1 => true,
            other => {
                return Err(EmbedError::Header(format!(
                    "masked flag must be 0 or 1, got {other}"
                )))
            }
        };
        let count = binio::read_u64(&mut r).map_err(header_err)?;
        let mut set = Self::new(provider, dim, masked)?;
        for ordinal in 0..count {
            let corrupt = |e: io::Error| EmbedError::Corruption {
                ordinal,
                message: e.to_string(),
            };
            let sentence_id = binio::read_str(&mut r, MAX_STRING).map_err(corrupt)?;
            let piece_count = binio::read_u16(&mut r).map_err(corrupt)? as usize;
            let mut pieces = Vec::with_capacity(piece_count);
            for _ in 0..piece_count {
                let mut piece = Vec::with_capacity(dim);
                for _ in 0..dim {
                    piece.push(binio::read_f32(&mut r).map_err(corrupt)?);
                }
                pieces.push(piece);
            }
            let record = EmbeddingRecord::new(sentence_id, pieces, masked).map_err(|e| {
                EmbedError::Corruption {
                    ordinal,
                    message: e.to_string(),
                }
            })?;
            set.insert(record).map_err(|e| EmbedError::Corruption {
                ordinal,
                message: e.to_string(),
            })?;
        }
        let mut probe = [0u8; 1];
        match r.read(&mut probe) {
            Ok(0) => Ok(set),
            Ok(_) => Err(EmbedError::Corruption {
                ordinal: count,
                message: "trailing bytes after the declared record count".into(),
            }),
            Err(e) => Err(EmbedError::Corruption {
                ordinal: count,
                message: e.to_string(),
            }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

pub fn write_embedding_set(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    set.write_to(BufWriter::new(file)).map_err(io_err)
}

pub fn read_embedding_set(path: &Path) -> Result<EmbeddingSet> {
    let file = fs::File::open(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingSet::read_from(BufReader::new(file))
}

/// Summary shown by `embed-describe`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingSummary {
    pub provider: String,
    pub dim: usize,
    pub masked: bool,
    pub count: usize,
    /// piece count -> number of records
    pub piece_histogram: BTreeMap<usize, usize>,
}

impl EmbeddingSet {
    pub fn summary(&self) -> EmbeddingSummary {
        let mut piece_histogram = BTreeMap::new();
        for r in self.records.values() {
            *piece_histogram.entry(r.piece_count()).or_default() += 1;
        }
        EmbeddingSummary {
            provider: self.provider.clone(),
            dim: self.dim,
            masked: self.masked,
            count: self.len(),
            piece_histogram,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, pieces: &[&[f32]]) -> EmbeddingRecord {
        EmbeddingRecord::new(id, pieces.iter().map(|p| p.to_vec()).collect(), false).unwrap()
    }

    #[test]
    fn aggregation_examples() {
        let r = rec("a", &[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(r.aggregate(AggregationStrategy::Average), vec![2.0, 3.0]);
        assert_eq!(r.aggregate(AggregationStrategy::Sum), vec![4.0, 6.0]);
        assert_eq!(r.aggregate(AggregationStrategy::First), vec![1.0, 2.0]);
        let single = rec("b", &[&[5.0, 5.0]]);
        for s in AggregationStrategy::ALL {
            assert_eq!(single.aggregate(s), vec![5.0, 5.0]);
        }
    }

    #[test]
    fn record_invariants() {
        assert!(EmbeddingRecord::new("x", vec![], false).is_err());
        assert!(EmbeddingRecord::new("x", vec![vec![1.0], vec![1.0, 2.0]], false).is_err());
        assert!(EmbeddingRecord::new("x", vec![vec![1.0], vec![2.0]], true).is_err());
        assert!(EmbeddingRecord::new("x", vec![vec![1.0]], true).is_ok());
    }

    #[test]
    fn set_rejects_mixed_records() {
        let mut set = EmbeddingSet::new("m", 2, false).unwrap();
        set.insert(rec("a", &[&[1.0, 2.0]])).unwrap();
        assert!(matches!(
            set.insert(rec("b", &[&[1.0]])),
            Err(EmbedError::Dimension { .. })
        ));
        assert!(set.insert(rec("a", &[&[1.0, 2.0]])).is_err());
        let masked = EmbeddingRecord::new("c", vec![vec![0.0, 0.0]], true).unwrap();
        assert!(set.insert(masked).is_err());
    }

    #[test]
    fn empty_set_roundtrip() {
        let set = EmbeddingSet::new("empty", 768, true).unwrap();
        let bytes = set.to_bytes();
        assert_eq!(bytes.len(), 4 + 4 + 5 + 4 + 1 + 8);
        let back = EmbeddingSet::read_from(&bytes[..]).unwrap();
        assert_eq!(back, set);
        assert!(back.is_empty());
    }

    #[test]
    fn truncation_names_the_record() {
        let mut set = EmbeddingSet::new("p", 3, false).unwrap();
        for i in 0..3 {
            set.insert(rec(&format!("s{i}"), &[&[i as f32, 1.0, 2.0]]))
                .unwrap();
        }
        let bytes = set.to_bytes();
        let cut = &bytes[..bytes.len() - 5];
        match EmbeddingSet::read_from(cut) {
            Err(EmbedError::Corruption { ordinal, .. }) => assert_eq!(ordinal, 2),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn version_and_magic_errors() {
        let mut bytes = EmbeddingSet::new("p", 2, false).unwrap().to_bytes();
        bytes[3] = b'9';
        assert!(matches!(
            EmbeddingSet::read_from(&bytes[..]),
            Err(EmbedError::Version('9'))
        ));
        bytes[0] = b'Z';
        assert!(matches!(
            EmbeddingSet::read_from(&bytes[..]),
            Err(EmbedError::BadMagic(_))
        ));
    }

    #[test]
    fn modal_piece_count_prefers_smaller_on_tie() {
        let mut set = EmbeddingSet::new("p", 1, false).unwrap();
        set.insert(rec("a", &[&[1.0], &[2.0]])).unwrap();
        set.insert(rec("b", &[&[1.0]])).unwrap();
        assert_eq!(set.modal_piece_count(), Some(1));
        set.insert(rec("c", &[&[1.0], &[2.0]])).unwrap();
        assert_eq!(set.modal_piece_count(), Some(2));
    }
}
