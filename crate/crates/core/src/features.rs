//! `OFSFEAT1` frozen-feature files and id-aligned feature concatenation.
//!
//! Layout, little-endian, no padding and no footer:
//!
//! ```text
//! magic         8 bytes  "OFSFEAT1"
//! name_len      u32
//! model_name    name_len bytes, UTF-8
//! dim           u32
//! record_count  u64
//! record_count x { example_id u64, dim x f32 }
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::binio;
use crate::types::ExampleId;

pub const MAGIC: &[u8; 8] = b"OFSFEAT1";

const MAX_NAME_LEN: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected \"OFSFEAT1\"")]
    BadMagic { found: [u8; 8] },
    #[error("file truncated inside the header")]
    TruncatedHeader,
    #[error("file truncated inside record {record}")]
    TruncatedFile { record: u64 },
    #[error("trailing bytes after the last record")]
    TrailingBytes,
    #[error("record {record} holds a non-finite value")]
    NonFiniteValue { record: u64 },
    #[error("feature dimension must be positive")]
    ZeroDim,
    #[error("model name is not valid UTF-8 or too long")]
    BadName,
    #[error("vector length {found} does not match dim {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate example id {0}")]
    DuplicateId(ExampleId),
    #[error("no feature sets to align")]
    NoSets,
    #[error("feature sets share no example ids")]
    EmptyIntersection,
}

/// Per-example vectors produced by one encoder. Values are 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    model_name: String,
    dim: usize,
    ids: Vec<ExampleId>,
    values: Vec<f32>,
    index: HashMap<ExampleId, usize>,
}

impl FeatureSet {
    pub fn new(model_name: impl Into<String>, dim: usize) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDim);
        }
        let model_name = model_name.into();
        if model_name.len() > MAX_NAME_LEN {
            return Err(FeatureError::BadName);
        }
        Ok(FeatureSet {
            model_name,
            dim,
            ids: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn push(&mut self, id: ExampleId, vector: &[f32]) -> Result<(), FeatureError> {
        if vector.len() != self.dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFiniteValue {
                record: self.ids.len() as u64,
            });
        }
        if self.index.contains_key(&id) {
            return Err(FeatureError::DuplicateId(id));
        }
        self.index.insert(id, self.ids.len());
        self.ids.push(id);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    /// Rounds each value to the nearest 32-bit float (ties to even).
    pub fn push_f64(&mut self, id: ExampleId, vector: &[f64]) -> Result<(), FeatureError> {
        let narrowed: Vec<f32> = vector.iter().map(|&v| v as f32).collect();
        self.push(id, &narrowed)
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids in record order.
    pub fn ids(&self) -> &[ExampleId] {
        &self.ids
    }

    pub fn get(&self, id: ExampleId) -> Option<&[f32]> {
        self.index.get(&id).map(|&row| self.row(row))
    }

    fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ExampleId, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, self.row(i)))
    }

    /// Exact encoded size in bytes.
    pub fn encoded_len(&self) -> usize {
        8 + 4 + self.model_name.len() + 4 + 8 + self.len() * (8 + 4 * self.dim)
    }
}

pub fn write_to<W: Write>(mut w: W, set: &FeatureSet) -> io::Result<()> {
    w.write_all(MAGIC)?;
    binio::write_str(&mut w, &set.model_name)?;
    let dim = u32::try_from(set.dim)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dim exceeds u32"))?;
    binio::write_u32(&mut w, dim)?;
    binio::write_u64(&mut w, set.len() as u64)?;
    for (id, vector) in set.iter() {
        binio::write_u64(&mut w, id)?;
        for v in vector {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_features(path: &Path, set: &FeatureSet) -> Result<(), FeatureError> {
    write_to(BufWriter::new(File::create(path)?), set)?;
    Ok(())
}

fn header_err(e: io::Error) -> FeatureError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        FeatureError::TruncatedHeader
    } else {
        FeatureError::Io(e)
    }
}

pub fn read_from<R: Read>(mut r: R) -> Result<FeatureSet, FeatureError> {
    let magic: [u8; 8] = binio::read_array(&mut r).map_err(header_err)?;
    if &magic != MAGIC {
        return Err(FeatureError::BadMagic { found: magic });
    }
    let name = match binio::read_string(&mut r, MAX_NAME_LEN) {
        Ok(name) => name,
        Err(e) if e.kind() == io::ErrorKind::InvalidData => return Err(FeatureError::BadName),
        Err(e) => return Err(header_err(e)),
    };
    let dim = binio::read_u32(&mut r).map_err(header_err)? as usize;
    let count = binio::read_u64(&mut r).map_err(header_err)?;
    let mut set = FeatureSet::new(name, dim)?;

    // A corrupt count must not trigger a huge allocation up front.
    let reserve = (count as usize).min(1 << 16);
    set.ids.reserve(reserve);
    set.values.reserve(reserve.saturating_mul(dim).min(1 << 24));

    let mut record = vec![0u8; 8 + 4 * dim];
    let mut vector = vec![0f32; dim];
    for ordinal in 0..count {
        r.read_exact(&mut record).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                FeatureError::TruncatedFile { record: ordinal }
            } else {
                FeatureError::Io(e)
            }
        })?;
        let id = u64::from_le_bytes(record[..8].try_into().expect("8-byte id"));
        for (v, bytes) in vector.iter_mut().zip(record[8..].chunks_exact(4)) {
            *v = f32::from_le_bytes(bytes.try_into().expect("4-byte value"));
        }
        set.push(id, &vector).map_err(|e| match e {
            FeatureError::NonFiniteValue { .. } => FeatureError::NonFiniteValue { record: ordinal },
            other => other,
        })?;
    }
    if !binio::at_eof(&mut r)? {
        return Err(FeatureError::TrailingBytes);
    }
    Ok(set)
}

pub fn read_features(path: &Path) -> Result<FeatureSet, FeatureError> {
    read_from(BufReader::new(File::open(path)?))
}

/// Feature sets joined on their shared example ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFeatures {
    pub model_names: Vec<String>,
    pub dims: Vec<usize>,
    /// Sorted ascending.
    pub ids: Vec<ExampleId>,
    /// Row-major, `ids.len() x dim_total`.
    pub matrix: Vec<f64>,
    /// Ids present in some but not all inputs.
    pub dropped: usize,
}

impl AlignedFeatures {
    pub fn dim_total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim_total();
        &self.matrix[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = (ExampleId, &[f64])> {
        let d = self.dim_total();
        self.ids.iter().copied().zip(self.matrix.chunks_exact(d))
    }
}

/// Concatenates, per shared id, each set's vector in the given set order.
pub fn align_concat(sets: &[FeatureSet]) -> Result<AlignedFeatures, FeatureError> {
    let (first, rest) = sets.split_first().ok_or(FeatureError::NoSets)?;
    let mut shared: BTreeSet<ExampleId> = first.ids.iter().copied().collect();
    let mut union = shared.clone();
    for set in rest {
        shared.retain(|id| set.index.contains_key(id));
        union.extend(set.ids.iter().copied());
    }
    if shared.is_empty() {
        return Err(FeatureError::EmptyIntersection);
    }
    let dropped = union.len() - shared.len();
    if dropped > 0 {
        log::warn!("align_concat: {dropped} example ids missing from at least one feature set were dropped");
    }

    let dims: Vec<usize> = sets.iter().map(FeatureSet::dim).collect();
    let mut matrix = Vec::with_capacity(shared.len() * dims.iter().sum::<usize>());
    for &id in &shared {
        for set in sets {
            let v = set.get(id).expect("id is in every set");
            matrix.extend(v.iter().map(|&x| f64::from(x)));
        }
    }
    Ok(AlignedFeatures {
        model_names: sets.iter().map(|s| s.model_name.clone()).collect(),
        dims,
        ids: shared.into_iter().collect(),
        matrix,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(name: &str, dim: usize, ids: &[u64]) -> FeatureSet {
        let mut s = FeatureSet::new(name, dim).unwrap();
        for &id in ids {
            let v: Vec<f32> = (0..dim).map(|j| id as f32 + j as f32 / 10.0).collect();
            s.push(id, &v).unwrap();
        }
        s
    }

    fn encode(s: &FeatureSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_to(&mut buf, s).unwrap();
        buf
    }

    #[test]
    fn encoded_size_follows_layout() {
        let s = set("xlnet-base", 768, &[1, 2]);
        // 8 magic + 4 name_len + 10 name + 4 dim + 8 count + 2 * (8 id + 768 * 4)
        let expected = 8 + 4 + 10 + 4 + 8 + 2 * (8 + 768 * 4);
        assert_eq!(expected, 6194);
        assert_eq!(encode(&s).len(), expected);
        assert_eq!(s.encoded_len(), expected);
    }

    #[test]
    fn empty_set_round_trips() {
        let s = set("bert-large", 1024, &[]);
        let back = read_from(encode(&s).as_slice()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back, s);
    }

    #[test]
    fn header_bytes_are_little_endian() {
        let bytes = encode(&set("m", 3, &[0x0102]));
        assert_eq!(&bytes[..8], b"OFSFEAT1");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(bytes[12], b'm');
        assert_eq!(&bytes[13..17], &[3, 0, 0, 0]);
        assert_eq!(&bytes[17..25], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[25..33], &[2, 1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn corrupt_files_raise_declared_errors() {
        let good = encode(&set("m", 4, &[1, 2, 3]));

        let mut bad_magic = good.clone();
        bad_magic[..8].copy_from_slice(b"XXXXXXXX");
        assert!(matches!(
            read_from(bad_magic.as_slice()),
            Err(FeatureError::BadMagic { .. })
        ));

        // Header is 8 + 4 + 1 + 4 + 8 = 25 bytes; each record 8 + 16 = 24.
        let cut = 25 + 24 + 10;
        assert!(matches!(
            read_from(&good[..cut]),
            Err(FeatureError::TruncatedFile { record: 1 })
        ));
        assert!(matches!(
            read_from(&good[..20]),
            Err(FeatureError::TruncatedHeader)
        ));

        let mut nan = good.clone();
        let off = 25 + 2 * 24 + 8 + 4;
        nan[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_from(nan.as_slice()),
            Err(FeatureError::NonFiniteValue { record: 2 })
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(
            read_from(trailing.as_slice()),
            Err(FeatureError::TrailingBytes)
        ));

        let mut zero_dim = good;
        zero_dim[13..17].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            read_from(zero_dim.as_slice()),
            Err(FeatureError::ZeroDim)
        ));
    }

    #[test]
    fn push_validates() {
        let mut s = FeatureSet::new("m", 2).unwrap();
        assert!(matches!(
            s.push(1, &[1.0]),
            Err(FeatureError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            s.push(1, &[f32::INFINITY, 0.0]),
            Err(FeatureError::NonFiniteValue { .. })
        ));
        s.push(1, &[0.0, 1.0]).unwrap();
        assert!(matches!(
            s.push(1, &[0.0, 1.0]),
            Err(FeatureError::DuplicateId(1))
        ));
        assert!(matches!(
            FeatureSet::new("m", 0),
            Err(FeatureError::ZeroDim)
        ));
    }

    #[test]
    fn alignment_keeps_the_intersection() {
        let a = set("a", 2, &[1, 2, 3]);
        let b = set("b", 3, &[4, 3, 2]);
        let al = align_concat(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(al.ids, vec![2, 3]);
        assert_eq!(al.dropped, 2);
        assert_eq!(al.dim_total(), 5);
        let expected: Vec<f64> = a
            .get(2)
            .unwrap()
            .iter()
            .chain(b.get(2).unwrap())
            .map(|&x| f64::from(x))
            .collect();
        assert_eq!(al.row(0), expected.as_slice());

        let single = align_concat(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.ids, a.ids());
        assert_eq!(single.dropped, 0);

        assert!(matches!(align_concat(&[]), Err(FeatureError::NoSets)));
        assert!(matches!(
            align_concat(&[set("a", 1, &[1]), set("b", 1, &[2])]),
            Err(FeatureError::EmptyIntersection)
        ));
    }

    #[test]
    fn two_768_dim_sets_concatenate_to_1536() {
        let ids: Vec<u64> = (0..100).collect();
        let al = align_concat(&[set("bert", 768, &ids), set("xlnet", 768, &ids)]).unwrap();
        assert_eq!((al.dim_total(), al.len()), (1536, 100));
    }
}
