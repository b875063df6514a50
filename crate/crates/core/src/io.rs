//! Binary tensor files for likelihood batches and alignments.
//!
//! Layout (all integers little-endian), frozen at version 1:
//!
//! | offset | size | field                                    |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `b"MASTENS\0"`                     |
//! | 8      | 4    | version `u32` = 1                        |
//! | 12     | 1    | dtype `u8`: 0 = float32, 1 = uint8       |
//! | 13     | 1    | ndims `u8` = 3                           |
//! | 14     | 24   | dims `[u64; 3]` = (B, T, S)              |
//! | 38     | 1    | lengths_present `u8` (0 or 1)            |
//! | 39     | ...  | row-major payload, `B*T*S` elements      |
//! | ...    | 8*B  | if lengths_present: B pairs `(u32, u32)` |
//!
//! Without a lengths block every item uses the full `(T, S)` extent.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::alignment::AlignmentMatrix;
use crate::batch::{LikelihoodBatch, ValidLengths};
use crate::error::MasError;

pub const MAGIC: [u8; 8] = *b"MASTENS\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 39;
pub const DTYPE_F32: u8 = 0;
pub const DTYPE_U8: u8 = 1;

/// Default payload budget for [`read_tensor`]: 4 GiB.
pub const DEFAULT_BYTE_BUDGET: u64 = 4 << 30;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 8]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u8),
    #[error("expected 3 dimensions, header says {0}")]
    UnsupportedRank(u8),
    #[error("invalid lengths flag {0}")]
    BadLengthsFlag(u8),
    #[error("file ends before the {0} is complete")]
    TruncatedFile(&'static str),
    #[error("dims {dims:?} need more than the {budget} byte budget")]
    DimensionOverflow { dims: [u64; 3], budget: u64 },
    #[error("unexpected bytes after the tensor")]
    TrailingData,
    #[error(transparent)]
    Invalid(#[from] MasError),
}

/// Contents of a tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Likelihood(LikelihoodBatch<f32>),
    Alignment(AlignmentMatrix),
}

impl From<LikelihoodBatch<f32>> for Tensor {
    fn from(b: LikelihoodBatch<f32>) -> Self {
        Tensor::Likelihood(b)
    }
}

impl From<AlignmentMatrix> for Tensor {
    fn from(m: AlignmentMatrix) -> Self {
        Tensor::Alignment(m)
    }
}

/// Parsed fixed-size header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorFileHeader {
    pub dtype: u8,
    pub dims: [u64; 3],
    pub lengths_present: bool,
}

impl TensorFileHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..8].copy_from_slice(&MAGIC);
        h[8..12].copy_from_slice(&VERSION.to_le_bytes());
        h[12] = self.dtype;
        h[13] = 3;
        for (k, d) in self.dims.iter().enumerate() {
            h[14 + 8 * k..22 + 8 * k].copy_from_slice(&d.to_le_bytes());
        }
        h[38] = self.lengths_present as u8;
        h
    }

    pub fn parse(h: &[u8; HEADER_LEN]) -> Result<Self, IoError> {
        let magic: [u8; 8] = h[..8].try_into().unwrap();
        if magic != MAGIC {
            return Err(IoError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(h[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(IoError::UnsupportedVersion(version));
        }
        let dtype = h[12];
        if dtype != DTYPE_F32 && dtype != DTYPE_U8 {
            return Err(IoError::UnsupportedDtype(dtype));
        }
        if h[13] != 3 {
            return Err(IoError::UnsupportedRank(h[13]));
        }
        let mut dims = [0u64; 3];
        for (k, d) in dims.iter_mut().enumerate() {
            *d = u64::from_le_bytes(h[14 + 8 * k..22 + 8 * k].try_into().unwrap());
        }
        let lengths_present = match h[38] {
            0 => false,
            1 => true,
            other => return Err(IoError::BadLengthsFlag(other)),
        };
        Ok(Self {
            dtype,
            dims,
            lengths_present,
        })
    }

    pub fn element_size(&self) -> u64 {
        if self.dtype == DTYPE_F32 {
            4
        } else {
            1
        }
    }

    /// Payload size in bytes, if it fits in `budget`.
    pub fn payload_len(&self, budget: u64) -> Result<u64, IoError> {
        let overflow = IoError::DimensionOverflow {
            dims: self.dims,
            budget,
        };
        let bytes = self.dims[0]
            .checked_mul(self.dims[1])
            .and_then(|n| n.checked_mul(self.dims[2]))
            .and_then(|n| n.checked_mul(self.element_size()));
        match bytes {
            Some(n) if n <= budget && usize::try_from(n).is_ok() => Ok(n),
            _ => Err(overflow),
        }
    }
}

/// Serializes a tensor; output bytes depend only on the tensor.
pub fn encode<W: Write>(tensor: &Tensor, mut w: W) -> Result<(), IoError> {
    let (dtype, shape, lengths) = match tensor {
        Tensor::Likelihood(b) => (DTYPE_F32, b.shape(), b.valid_lengths()),
        Tensor::Alignment(m) => (DTYPE_U8, m.shape(), m.valid_lengths()),
    };
    let header = TensorFileHeader {
        dtype,
        dims: shape.map(|d| d as u64),
        lengths_present: true,
    };
    w.write_all(&header.to_bytes())?;
    match tensor {
        Tensor::Likelihood(b) => {
            let mut bytes = Vec::with_capacity(b.values().len() * 4);
            for v in b.values() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&bytes)?;
        }
        Tensor::Alignment(m) => w.write_all(m.values())?,
    }
    for l in lengths {
        let text = u32::try_from(l.text)
            .map_err(|_| MasError::ShapeMismatch("length above u32".into()))?;
        let speech = u32::try_from(l.speech)
            .map_err(|_| MasError::ShapeMismatch("length above u32".into()))?;
        w.write_all(&text.to_le_bytes())?;
        w.write_all(&speech.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_block<R: Read>(r: &mut R, len: u64, what: &'static str) -> Result<Vec<u8>, IoError> {
    let mut buf = Vec::new();
    r.take(len).read_to_end(&mut buf)?;
    if (buf.len() as u64) < len {
        return Err(IoError::TruncatedFile(what));
    }
    Ok(buf)
}

/// Parses a tensor, validating the header before reading the payload.
pub fn decode<R: Read>(mut r: R, byte_budget: u64) -> Result<Tensor, IoError> {
    let raw = read_block(&mut r, HEADER_LEN as u64, "header")?;
    let header = TensorFileHeader::parse(raw.as_slice().try_into().unwrap())?;
    let payload_len = header.payload_len(byte_budget)?;
    if header.dims.contains(&0) {
        return Err(MasError::ShapeMismatch(format!("zero dimension in {:?}", header.dims)).into());
    }
    let [b, t, s] = header.dims.map(|d| d as usize);
    let payload = read_block(&mut r, payload_len, "payload")?;
    let lengths = if header.lengths_present {
        let raw = read_block(&mut r, 8 * b as u64, "lengths block")?;
        raw.chunks_exact(8)
            .map(|c| {
                ValidLengths::new(
                    u32::from_le_bytes(c[..4].try_into().unwrap()) as usize,
                    u32::from_le_bytes(c[4..].try_into().unwrap()) as usize,
                )
            })
            .collect()
    } else {
        vec![ValidLengths::new(t, s); b]
    };
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(IoError::TrailingData);
    }
    Ok(match header.dtype {
        DTYPE_F32 => {
            let values = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Tensor::Likelihood(LikelihoodBatch::new(b, t, s, values, lengths)?)
        }
        _ => Tensor::Alignment(AlignmentMatrix::new(b, t, s, payload, lengths)?),
    })
}

/// Writes `tensor` to `path`.
pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<(), IoError> {
    let file = File::create(path)?;
    encode(tensor, BufWriter::new(file))
}

/// Reads a tensor file with the default byte budget.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor, IoError> {
    read_tensor_with_budget(path, DEFAULT_BYTE_BUDGET)
}

pub fn read_tensor_with_budget(
    path: impl AsRef<Path>,
    byte_budget: u64,
) -> Result<Tensor, IoError> {
    let file = File::open(path)?;
    decode(BufReader::new(file), byte_budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{matrix_from_path, PathVector};

    fn sample() -> LikelihoodBatch<f32> {
        LikelihoodBatch::from_rows(&[[1.0f32, -2.5, 3.25], [0.0, f32::MIN_POSITIVE, -0.0]]).unwrap()
    }

    fn bytes_of(t: &Tensor) -> Vec<u8> {
        let mut out = Vec::new();
        encode(t, &mut out).unwrap();
        out
    }

    #[test]
    fn float_round_trip_is_bit_exact() {
        let t = Tensor::from(sample());
        let bytes = bytes_of(&t);
        assert_eq!(bytes.len(), HEADER_LEN + 6 * 4 + 8);
        let back = decode(bytes.as_slice(), DEFAULT_BYTE_BUDGET).unwrap();
        let Tensor::Likelihood(b) = &back else {
            panic!("wrong dtype")
        };
        let bits =
            |b: &LikelihoodBatch<f32>| b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(b), bits(&sample()));
        assert_eq!(bytes_of(&back), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = bytes_of(&Tensor::from(sample()));
        assert_eq!(&bytes[..8], b"MASTENS\0");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(bytes[12], DTYPE_F32);
        assert_eq!(bytes[13], 3);
        assert_eq!(&bytes[14..22], &1u64.to_le_bytes());
        assert_eq!(&bytes[22..30], &2u64.to_le_bytes());
        assert_eq!(&bytes[30..38], &3u64.to_le_bytes());
        assert_eq!(bytes[38], 1);
        assert_eq!(&bytes[39..43], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[bytes.len() - 8..], &[2, 0, 0, 0, 3, 0, 0, 0]);
    }

    #[test]
    fn alignment_uses_u8_dtype() {
        let p = PathVector::from_one_based(&[1, 2, 2], 2).unwrap();
        let t = Tensor::from(matrix_from_path(&p, 2, 3).unwrap());
        let bytes = bytes_of(&t);
        assert_eq!(bytes[12], DTYPE_U8);
        assert_eq!(&bytes[39..45], &[1, 0, 0, 0, 1, 1]);
        assert_eq!(decode(bytes.as_slice(), DEFAULT_BYTE_BUDGET).unwrap(), t);
    }

    #[test]
    fn missing_lengths_block_means_full_extent() {
        let mut bytes = bytes_of(&Tensor::from(sample()));
        bytes.truncate(bytes.len() - 8);
        bytes[38] = 0;
        let Tensor::Likelihood(b) = decode(bytes.as_slice(), DEFAULT_BYTE_BUDGET).unwrap() else {
            panic!()
        };
        assert_eq!(b.valid_lengths(), &[ValidLengths::new(2, 3)]);
    }

    #[test]
    fn malformed_headers() {
        let good = bytes_of(&Tensor::from(sample()));
        let decode_err = |bytes: &[u8]| decode(bytes, DEFAULT_BYTE_BUDGET).unwrap_err();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_err(&bad), IoError::BadMagic(_)));

        let mut bad = good.clone();
        bad[8] = 2;
        assert!(matches!(decode_err(&bad), IoError::UnsupportedVersion(2)));

        let mut bad = good.clone();
        bad[12] = 7;
        assert!(matches!(decode_err(&bad), IoError::UnsupportedDtype(7)));

        let mut bad = good.clone();
        bad[13] = 2;
        assert!(matches!(decode_err(&bad), IoError::UnsupportedRank(2)));

        assert!(matches!(
            decode_err(&good[..20]),
            IoError::TruncatedFile("header")
        ));
        assert!(matches!(
            decode_err(&good[..50]),
            IoError::TruncatedFile("payload")
        ));
        assert!(matches!(
            decode_err(&good[..good.len() - 3]),
            IoError::TruncatedFile("lengths block")
        ));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(decode_err(&bad), IoError::TrailingData));

        let mut huge = good[..HEADER_LEN].to_vec();
        huge[14..22].copy_from_slice(&1_000u64.to_le_bytes());
        huge[22..30].copy_from_slice(&1_000u64.to_le_bytes());
        huge[30..38].copy_from_slice(&1_000_000u64.to_le_bytes());
        assert!(matches!(
            decode_err(&huge),
            IoError::DimensionOverflow { .. }
        ));

        let mut wrap = good[..HEADER_LEN].to_vec();
        wrap[14..38].copy_from_slice(&[0xff; 24]);
        assert!(matches!(
            decode_err(&wrap),
            IoError::DimensionOverflow { .. }
        ));
    }

    #[test]
    fn invalid_contents_surface_validation_errors() {
        let mut bytes = bytes_of(&Tensor::from(sample()));
        // rewrite item 0's lengths as (2, 1)
        let n = bytes.len();
        bytes[n - 8] = 2;
        bytes[n - 4] = 1;
        match decode(bytes.as_slice(), DEFAULT_BYTE_BUDGET).unwrap_err() {
            IoError::Invalid(MasError::InfeasibleLengths { item: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unwritable_destination_is_an_io_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.mas");
        let err = write_tensor(&path, &Tensor::from(sample())).unwrap_err();
        assert!(matches!(err, IoError::IoFailure(_)));
    }
}
