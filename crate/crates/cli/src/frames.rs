//! "UQST" binary frame files.
//!
//! Little-endian layout:
//!
//! | field        | type                         |
//! |--------------|------------------------------|
//! | magic        | `b"UQST"`                    |
//! | version      | u16                          |
//! | n_frames     | u32                          |
//! | width        | u32                          |
//! | height       | u32                          |
//! | kind         | u8 (0 signal, 1 vacuum, 2 dark) |
//! | master_seed  | u64                          |
//! | config       | u32 length + UTF-8 text      |
//! | frames       | per frame: u32 shot index, then `width * height` u16 counts, row-major |
//! | crc          | u32 CRC-32 of every preceding byte |

use std::fs;
use std::path::Path;

use thiserror::Error;
use uqst_core::sim::{Frame, FrameKind, FrameSet};

use crate::config::{parse_document, serialize_document, ConfigDocument, ConfigError, RunSettings};

pub const MAGIC: &[u8; 4] = b"UQST";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4 + 1 + 8;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("not a UQST frame file (magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported frame format version {found} (expected {VERSION})")]
    Version { found: u16 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Crc { stored: u32, computed: u32 },
    #[error("file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("{0} trailing bytes after the checksum")]
    Trailing(usize),
    #[error("unknown frame kind code {0}")]
    Kind(u8),
    #[error("embedded configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("embedded configuration is not UTF-8")]
    Utf8,
    #[error("inconsistent file: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A frame set together with the run settings it was produced under.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub set: FrameSet,
    pub run: RunSettings,
    /// Canonical configuration text as stored in the file.
    pub config_text: String,
}

pub fn encode(set: &FrameSet, run: &RunSettings) -> Result<Vec<u8>, FrameError> {
    let doc = ConfigDocument {
        detector: set.detector.clone(),
        scenario: set.scenario.clone(),
        run: run.clone(),
    };
    let config = serialize_document(&doc);
    let (width, height) = (set.detector.n_pixels_x, set.detector.n_rows);
    if let Some(f) = set.frames.iter().find(|f| f.n_cols != width || f.n_rows != height) {
        return Err(FrameError::Inconsistent(format!(
            "frame {} is {}x{}, header says {width}x{height}",
            f.shot_index, f.n_cols, f.n_rows
        )));
    }
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| FrameError::Inconsistent(format!("{what} {v} exceeds u32")))
    };

    let frame_len = 4 + 2 * width * height;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + config.len() + set.frames.len() * frame_len + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(set.frames.len(), "frame count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(width, "width")?.to_le_bytes());
    out.extend_from_slice(&to_u32(height, "height")?.to_le_bytes());
    out.push(set.kind.code());
    out.extend_from_slice(&set.master_seed.to_le_bytes());
    out.extend_from_slice(&to_u32(config.len(), "config length")?.to_le_bytes());
    out.extend_from_slice(config.as_bytes());
    for f in &set.frames {
        out.extend_from_slice(&f.shot_index.to_le_bytes());
        for c in &f.counts {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(FrameError::Truncated {
            needed: self.pos.saturating_add(n),
            found: self.buf.len(),
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FrameFile, FrameError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic: [u8; 4] = cur.take(4)?.try_into().expect("4 bytes");
    if &magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(FrameError::Version { found: version });
    }
    let n_frames = cur.u32()? as usize;
    let width = cur.u32()? as usize;
    let height = cur.u32()? as usize;
    let kind_code = cur.u8()?;
    let master_seed = cur.u64()?;
    let config_len = cur.u32()? as usize;
    let config_bytes = cur.take(config_len)?;

    let frame_len = width
        .checked_mul(height)
        .and_then(|a| a.checked_mul(2))
        .and_then(|a| a.checked_add(4));
    let payload = frame_len.and_then(|l| l.checked_mul(n_frames));
    let Some(expected_total) = payload.and_then(|p| p.checked_add(cur.pos + 4)) else {
        return Err(FrameError::Inconsistent("frame dimensions overflow".into()));
    };
    if bytes.len() < expected_total {
        return Err(FrameError::Truncated {
            needed: expected_total,
            found: bytes.len(),
        });
    }
    let stored = u32::from_le_bytes(
        bytes[expected_total - 4..expected_total]
            .try_into()
            .expect("4 bytes"),
    );
    let computed = crc32fast::hash(&bytes[..expected_total - 4]);
    if stored != computed {
        return Err(FrameError::Crc { stored, computed });
    }
    if bytes.len() > expected_total {
        return Err(FrameError::Trailing(bytes.len() - expected_total));
    }

    let kind = FrameKind::from_code(kind_code).ok_or(FrameError::Kind(kind_code))?;
    let config_text = std::str::from_utf8(config_bytes).map_err(|_| FrameError::Utf8)?.to_string();
    let doc = parse_document(&config_text)?;
    if doc.detector.n_pixels_x != width || doc.detector.n_rows != height {
        return Err(FrameError::Inconsistent(format!(
            "header is {width}x{height} but the embedded detector is {}x{}",
            doc.detector.n_pixels_x, doc.detector.n_rows
        )));
    }
    if (kind == FrameKind::Dark) != doc.scenario.is_none() {
        return Err(FrameError::Inconsistent(
            "dark sets carry no scenario; other kinds require one".into(),
        ));
    }

    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let shot_index = cur.u32()?;
        let raw = cur.take(2 * width * height)?;
        let counts: Vec<u16> = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        let clamp = doc.detector.clamp_level();
        let saturated = counts.iter().filter(|&&c| c as u32 >= clamp).count();
        frames.push(Frame {
            counts,
            n_rows: height,
            n_cols: width,
            shot_index,
            kind,
            saturated,
        });
    }
    let set = FrameSet {
        frames,
        detector: doc.detector,
        scenario: doc.scenario,
        kind,
        master_seed,
    };
    set.validate()
        .map_err(|e| FrameError::Inconsistent(e.to_string()))?;
    Ok(FrameFile {
        set,
        run: doc.run,
        config_text,
    })
}

pub fn write_frameset(path: &Path, set: &FrameSet, run: &RunSettings) -> Result<(), FrameError> {
    fs::write(path, encode(set, run)?)?;
    Ok(())
}

pub fn read_frameset(path: &Path) -> Result<FrameFile, FrameError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;
    use uqst_core::sim::DetectorConfig;
    use uqst_core::tomo::Roi;

    fn tiny_set() -> (FrameSet, RunSettings) {
        let detector = DetectorConfig::ideal(2, 2, 1e-5);
        let frame = Frame {
            counts: vec![1, 2, 3, 4],
            n_rows: 2,
            n_cols: 2,
            shot_index: 0,
            kind: FrameKind::Dark,
            saturated: 0,
        };
        let run = RunSettings {
            shots: 1,
            vacuum_shots: 1,
            roi: Roi::full(&detector),
            mode_range: (0, 0),
            seed: 9,
            output_dir: PathBuf::from("out"),
            hist_bins: 30,
            kde_grid: 128,
        };
        let set = FrameSet {
            frames: vec![frame],
            detector,
            scenario: None,
            kind: FrameKind::Dark,
            master_seed: 9,
        };
        (set, run)
    }

    #[test]
    fn payload_layout_of_a_2x2_frame() {
        let (set, run) = tiny_set();
        let bytes = encode(&set, &run).unwrap();
        let n = bytes.len();
        // ... shot index, four counts, CRC.
        assert_eq!(&bytes[n - 16..n - 12], &[0, 0, 0, 0]);
        assert_eq!(&bytes[n - 12..n - 4], &[1, 0, 2, 0, 3, 0, 4, 0]);
        assert_eq!(&bytes[..4], b"UQST");
        assert_eq!(bytes[18], 2);
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let (set, run) = tiny_set();
        let bytes = encode(&set, &run).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back.set, set);
        assert_eq!(encode(&back.set, &back.run).unwrap(), bytes);
    }

    #[test]
    fn corruption_is_classified() {
        let (set, run) = tiny_set();
        let bytes = encode(&set, &run).unwrap();
        let n = bytes.len();

        let mut flipped = bytes.clone();
        flipped[n - 8] ^= 0x01;
        assert!(matches!(decode(&flipped), Err(FrameError::Crc { .. })));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode(&magic), Err(FrameError::BadMagic(_))));

        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(decode(&version), Err(FrameError::Version { found: 9 })));

        assert!(matches!(decode(&bytes[..n - 3]), Err(FrameError::Truncated { .. })));
        assert!(matches!(decode(&bytes[..10]), Err(FrameError::Truncated { .. })));
    }
}
