// SPDX-License-Identifier: Apache-2.0

//! Binary dataset file (`QECDS1`).
//!
//! Layout, little-endian:
//!
//! ```text
//! magic   "QECDS1"
//! u16     distance
//! u16     rounds
//! u8      basis (0 = X, 1 = Z)
//! u32     shot count
//! u64     run seed
//! u32     metadata length, then that many bytes of JSON {noise, injections}
//! per shot, each section bit-packed LSB-first and padded to a byte:
//!         ancilla bits (rounds x (d^2 - 1), round-major)
//!         data bits (d^2)
//!         truth bits (bit 0 = truth_x_flip, bit 1 = truth_z_flip)
//! ```
//!
//! Shot seeds are not stored; shot `i` has seed `shot_seed(run_seed, i)`.
//! The defect companion file (`QECDF1`) shares the header.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{shot_seed, InjectionSpec, NoiseParams, ShotRecord};
use crate::code_model::{Basis, Pauli};

pub const DATASET_MAGIC: &[u8; 6] = b"QECDS1";
pub const DEFECT_MAGIC: &[u8; 6] = b"QECDF1";
/// Byte offset of the shot-count field.
const SHOT_COUNT_OFFSET: u64 = 6 + 2 + 2 + 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: String, expected: String },
    #[error("invalid header: {0}")]
    Header(String),
    #[error("shot {index} has shape ({rounds} rounds, {ancillas} ancilla bits, {data} data bits), file expects {expected}")]
    Shape {
        index: u64,
        rounds: usize,
        ancillas: usize,
        data: usize,
        expected: String,
    },
    #[error("shot {index} seed {found} does not match the derived seed {expected}")]
    SeedMismatch { index: u64, found: u64, expected: u64 },
    #[error("refusing to export an empty record list")]
    Empty,
    #[error("metadata: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub noise: NoiseParams,
    #[serde(default)]
    pub injections: Vec<InjectionSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub shots: u64,
    pub seed: u64,
    pub meta: DatasetMeta,
}

impl DatasetHeader {
    pub fn num_ancillas(&self) -> usize {
        self.distance * self.distance - 1
    }

    pub fn num_data(&self) -> usize {
        self.distance * self.distance
    }

    /// Payload bytes per shot in the `QECDS1` format.
    pub fn shot_bytes(&self) -> usize {
        packed_len(self.rounds * self.num_ancillas()) + packed_len(self.num_data()) + 1
    }
}

pub fn packed_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

pub fn pack_bits(bits: &[bool], out: &mut Vec<u8>) {
    for chunk in bits.chunks(8) {
        out.push(chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i)));
    }
}

pub fn unpack_bits(bytes: &[u8], count: usize) -> Vec<bool> {
    (0..count).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

pub fn write_header<W: Write>(w: &mut W, magic: &[u8; 6], header: &DatasetHeader) -> Result<(), DatasetError> {
    let too_big = |what: &str| DatasetError::Header(format!("{what} does not fit in the header field"));
    w.write_all(magic)?;
    w.write_all(&u16::try_from(header.distance).map_err(|_| too_big("distance"))?.to_le_bytes())?;
    w.write_all(&u16::try_from(header.rounds).map_err(|_| too_big("rounds"))?.to_le_bytes())?;
    w.write_all(&[header.basis.tag()])?;
    w.write_all(&u32::try_from(header.shots).map_err(|_| too_big("shot count"))?.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    let meta = serde_json::to_vec(&header.meta)?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(&meta)?;
    Ok(())
}

pub fn read_header<R: Read>(r: &mut R, magic: &[u8; 6]) -> Result<DatasetHeader, DatasetError> {
    let mut m = [0u8; 6];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(DatasetError::BadMagic {
            found: String::from_utf8_lossy(&m).into_owned(),
            expected: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let mut b2 = [0u8; 2];
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b2)?;
    let distance = u16::from_le_bytes(b2) as usize;
    r.read_exact(&mut b2)?;
    let rounds = u16::from_le_bytes(b2) as usize;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let basis = Pauli::from_tag(tag[0]).ok_or_else(|| DatasetError::Header(format!("basis tag {}", tag[0])))?;
    r.read_exact(&mut b4)?;
    let shots = u32::from_le_bytes(b4) as u64;
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    let mut meta = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut meta)?;
    let meta = serde_json::from_slice(&meta)?;
    if distance < 3 || distance.is_multiple_of(2) || rounds == 0 {
        return Err(DatasetError::Header(format!("distance {distance}, rounds {rounds}")));
    }
    Ok(DatasetHeader {
        distance,
        rounds,
        basis,
        shots,
        seed,
        meta,
    })
}

/// Streaming writer; the shot count is patched in on [`DatasetWriter::finish`].
pub struct DatasetWriter<W: Write + Seek> {
    inner: W,
    header: DatasetHeader,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write + Seek> DatasetWriter<W> {
    pub fn new(mut inner: W, header: DatasetHeader) -> Result<Self, DatasetError> {
        write_header(&mut inner, DATASET_MAGIC, &DatasetHeader { shots: 0, ..header.clone() })?;
        Ok(DatasetWriter {
            inner,
            header,
            written: 0,
            buf: Vec::new(),
        })
    }

    pub fn push(&mut self, record: &ShotRecord) -> Result<(), DatasetError> {
        let h = &self.header;
        let index = self.written;
        if record.rounds != h.rounds
            || record.ancilla_bits.len() != h.rounds * h.num_ancillas()
            || record.data_bits.len() != h.num_data()
            || record.basis != h.basis
        {
            return Err(DatasetError::Shape {
                index,
                rounds: record.rounds,
                ancillas: record.ancilla_bits.len(),
                data: record.data_bits.len(),
                expected: format!("d={} rounds={} basis={}", h.distance, h.rounds, h.basis),
            });
        }
        let expected = shot_seed(h.seed, index);
        if record.seed != expected {
            return Err(DatasetError::SeedMismatch {
                index,
                found: record.seed,
                expected,
            });
        }
        self.buf.clear();
        pack_bits(&record.ancilla_bits, &mut self.buf);
        pack_bits(&record.data_bits, &mut self.buf);
        self.buf.push(record.truth_x_flip as u8 | (record.truth_z_flip as u8) << 1);
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, DatasetError> {
        let count = u32::try_from(self.written).map_err(|_| DatasetError::Header("too many shots".into()))?;
        self.inner.seek(SeekFrom::Start(SHOT_COUNT_OFFSET))?;
        self.inner.write_all(&count.to_le_bytes())?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Writes `records` to `path`. The header's distance, rounds and basis are
/// taken from the records; `seed` must be the run seed they were sampled with.
pub fn export_dataset(
    records: &[ShotRecord],
    path: impl AsRef<Path>,
    distance: usize,
    seed: u64,
    meta: DatasetMeta,
) -> Result<(), DatasetError> {
    let first = records.first().ok_or(DatasetError::Empty)?;
    let header = DatasetHeader {
        distance,
        rounds: first.rounds,
        basis: first.basis,
        shots: records.len() as u64,
        seed,
        meta,
    };
    let mut w = DatasetWriter::new(BufWriter::new(File::create(path)?), header)?;
    for r in records {
        w.push(r)?;
    }
    w.finish()?.into_inner().map_err(|e| e.into_error())?;
    Ok(())
}

/// Streaming reader over a `QECDS1` file.
pub struct DatasetReader<R: Read> {
    inner: R,
    header: DatasetHeader,
    next: u64,
    buf: Vec<u8>,
}

impl<R: Read> DatasetReader<R> {
    pub fn new(mut inner: R) -> Result<Self, DatasetError> {
        let header = read_header(&mut inner, DATASET_MAGIC)?;
        let buf = vec![0u8; header.shot_bytes()];
        Ok(DatasetReader {
            inner,
            header,
            next: 0,
            buf,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<ShotRecord, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.header.shots {
            return None;
        }
        if let Err(e) = self.inner.read_exact(&mut self.buf) {
            self.next = self.header.shots;
            return Some(Err(e.into()));
        }
        let h = &self.header;
        let na = h.rounds * h.num_ancillas();
        let a_len = packed_len(na);
        let d_len = packed_len(h.num_data());
        let truth = self.buf[a_len + d_len];
        let record = ShotRecord {
            rounds: h.rounds,
            ancilla_bits: unpack_bits(&self.buf[..a_len], na),
            data_bits: unpack_bits(&self.buf[a_len..a_len + d_len], h.num_data()),
            truth_x_flip: truth & 1 == 1,
            truth_z_flip: truth & 2 == 2,
            basis: h.basis,
            seed: shot_seed(h.seed, self.next),
        };
        self.next += 1;
        Some(Ok(record))
    }
}

pub fn open_dataset(path: impl AsRef<Path>) -> Result<DatasetReader<BufReader<File>>, DatasetError> {
    DatasetReader::new(BufReader::new(File::open(path)?))
}

pub fn import_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, Vec<ShotRecord>), DatasetError> {
    let reader = open_dataset(path)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((header, records))
}
