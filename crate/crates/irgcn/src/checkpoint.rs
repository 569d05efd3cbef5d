//! Binary snapshot of a trained model: a magic tag, a format version,
//! the run configuration echoed as text, the training seed and epoch
//! count, and every parameter block by name with its exact bits.
//!
//! The format is deliberately simple and fully deterministic: the same
//! checkpoint serializes to the same bytes every time, and a load
//! followed by a save reproduces the input byte for byte. All integers
//! are little-endian; parameter entries are row-major 64-bit floats
//! whose bit patterns survive the round trip unchanged (including
//! negative zero and subnormals).
//!
//! Layout:
//!
//! ```text
//! "IRGC"                      4 bytes magic
//! format version              u32
//! training seed               u64
//! trained epochs              u32
//! config text length          u32, then that many UTF-8 bytes
//! parameter count             u32
//! repeated per parameter:
//!   name length               u32, then that many UTF-8 bytes
//!   rows, cols                u32 each
//!   entries                   rows·cols f64, row-major
//! ```

use std::path::Path;

use crate::model::Param;
use crate::tensor::Tensor;
use crate::{Error, Result, CHECKPOINT_FORMAT_VERSION};

/// File signature at offset zero.
pub const MAGIC: [u8; 4] = *b"IRGC";

/// A loaded or about-to-be-saved model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Run configuration echoed verbatim (flat `key = value` lines), so
    /// a later run can rebuild the same model shape without the
    /// original config file.
    pub config_text: String,
    /// Seed the parameters were trained under.
    pub seed: u64,
    /// Number of optimizer epochs applied.
    pub epochs: u32,
    /// Named parameter blocks in model construction order.
    pub params: Vec<Param>,
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u32::try_from(s.len())
        .map_err(|_| Error::Checkpoint(format!("string of {} bytes exceeds the format limit", s.len())))?;
    push_u32(out, len);
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

/// Strict little-endian reader over a byte slice; every read checks the
/// remaining length so truncated files fail with a message instead of a
/// panic.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Checkpoint(format!(
                "truncated while reading {what}: needed {n} bytes at offset {}, have {}",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::Checkpoint(format!("{what} is not valid UTF-8")))
    }
}

impl Checkpoint {
    /// Serialize to the documented byte layout. Deterministic: equal
    /// checkpoints produce equal bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        push_u32(&mut out, CHECKPOINT_FORMAT_VERSION);
        out.extend_from_slice(&self.seed.to_le_bytes());
        push_u32(&mut out, self.epochs);
        push_str(&mut out, &self.config_text)?;
        let n = u32::try_from(self.params.len())
            .map_err(|_| Error::Checkpoint("too many parameter blocks".into()))?;
        push_u32(&mut out, n);
        for p in &self.params {
            push_str(&mut out, &p.name)?;
            let rows = u32::try_from(p.value.rows())
                .map_err(|_| Error::Checkpoint(format!("parameter '{}' has too many rows", p.name)))?;
            let cols = u32::try_from(p.value.cols())
                .map_err(|_| Error::Checkpoint(format!("parameter '{}' has too many columns", p.name)))?;
            push_u32(&mut out, rows);
            push_u32(&mut out, cols);
            for &v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parse bytes produced by [`Checkpoint::to_bytes`]. Rejects wrong
    /// magic, wrong format version, truncation, and trailing garbage.
    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Checkpoint(format!(
                "bad magic {magic:?}; expected {MAGIC:?} — not a checkpoint file"
            )));
        }
        let version = r.u32("format version")?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version} is not supported (this build reads version {CHECKPOINT_FORMAT_VERSION})"
            )));
        }
        let seed = r.u64("seed")?;
        let epochs = r.u32("epoch count")?;
        let config_text = r.string("config text")?;
        let n = r.u32("parameter count")? as usize;
        let mut params = Vec::with_capacity(n);
        for i in 0..n {
            let name = r.string(&format!("name of parameter {i}"))?;
            let rows = r.u32(&format!("rows of '{name}'"))? as usize;
            let cols = r.u32(&format!("cols of '{name}'"))? as usize;
            let count = rows.checked_mul(cols).ok_or_else(|| {
                Error::Checkpoint(format!("parameter '{name}' shape {rows}x{cols} overflows"))
            })?;
            let raw = r.take(count * 8, &format!("entries of '{name}'"))?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params.push(Param {
                name,
                value: Tensor::from_vec(rows, cols, data)?,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after the last parameter block",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint { config_text, seed, epochs, params })
    }

    /// Write the serialized checkpoint to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Read and parse a checkpoint from `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            config_text: "mode = inductive\nscorer = distmult\n".to_string(),
            seed: 0xDEAD_BEEF_0BAD_CAFE,
            epochs: 200,
            params: vec![
                Param {
                    name: "embed.drug".to_string(),
                    // Bit-pattern stress: negative zero, a subnormal, and
                    // extreme magnitudes must all survive unchanged.
                    value: Tensor::from_vec(
                        2,
                        3,
                        vec![-0.0, 4.9e-324, 1.0 / 3.0, f64::MAX, f64::MIN_POSITIVE, -1.5e-300],
                    )
                    .unwrap(),
                },
                Param {
                    name: "rel.table".to_string(),
                    value: Tensor::from_vec(1, 4, vec![0.25, -0.5, 3.0, 7.125]).unwrap(),
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.config_text, ck.config_text);
        assert_eq!(back.seed, ck.seed);
        assert_eq!(back.epochs, ck.epochs);
        assert_eq!(back.params.len(), ck.params.len());
        for (a, b) in back.params.iter().zip(&ck.params) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value.shape(), b.value.shape());
            for (x, y) in a.value.data().iter().zip(b.value.data()) {
                assert_eq!(x.to_bits(), y.to_bits(), "entry bits must survive");
            }
        }
    }

    #[test]
    fn save_load_save_produces_identical_bytes() {
        let ck = sample();
        let first = ck.to_bytes().unwrap();
        let second = Checkpoint::from_bytes(&first).unwrap().to_bytes().unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[0] = b'X';
        let err = Checkpoint::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
        let err = Checkpoint::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 99"), "{err}");
    }

    #[test]
    fn truncation_and_trailing_garbage_are_rejected() {
        let bytes = sample().to_bytes().unwrap();
        for cut in [3, 7, 11, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                Checkpoint::from_bytes(&bytes[..cut]).is_err(),
                "cut at {cut} must fail"
            );
        }
        let mut extended = bytes.clone();
        extended.push(0);
        let err = Checkpoint::from_bytes(&extended).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn file_round_trip_works() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert!(Checkpoint::load(dir.path().join("missing.ckpt")).is_err());
    }
}
