//! Fixed-length window packing for causal-LM pre-training.
//!
//! Documents are tokenized, joined into one stream with an EOS token after
//! each document, and cut into windows of `L` tokens starting every `G`
//! tokens. A trailing partial window is dropped.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ConfigError, RecordError};
use crate::model::CleanDocument;
use crate::tokenizer::{TokenId, Tokenizer};

pub const DEFAULT_WINDOW_LEN: usize = 1024;
pub const DEFAULT_WINDOW_GAP: usize = 512;

/// Sorts documents by id, then applies a seeded shuffle when `seed` is given.
pub fn order_documents(docs: &mut [CleanDocument], seed: Option<u64>) {
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(seed) = seed {
        docs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
}

/// Token stream plus the documents that failed to tokenize.
#[derive(Debug, Default)]
pub struct TokenStream {
    pub tokens: Vec<TokenId>,
    pub documents: usize,
    pub skipped: Vec<RecordError>,
}

/// `tok(d1) ++ [eos] ++ tok(d2) ++ [eos] ++ ...` in the given order.
/// Tokenization runs in parallel; the merge follows document index.
pub fn build_token_stream<T: Tokenizer + ?Sized>(docs: &[CleanDocument], tokenizer: &T) -> TokenStream {
    let pieces: Vec<Result<Vec<TokenId>, RecordError>> = docs
        .par_iter()
        .map(|d| {
            tokenizer
                .tokenize(&d.clean_text)
                .map_err(|e| RecordError::new(&d.id, e.to_string()))
        })
        .collect();
    let total: usize = pieces.iter().flatten().map(|p| p.len() + 1).sum();
    let mut out = TokenStream {
        tokens: Vec::with_capacity(total),
        ..Default::default()
    };
    let eos = tokenizer.eos_id();
    for piece in pieces {
        match piece {
            Ok(tokens) => {
                out.tokens.extend_from_slice(&tokens);
                out.tokens.push(eos);
                out.documents += 1;
            }
            Err(e) => out.skipped.push(e),
        }
    }
    out
}

/// A window of exactly `L` tokens taken from the packed stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedWindow {
    pub start_offset: u64,
    pub tokens: Vec<TokenId>,
}

pub fn check_window_params(len: usize, gap: usize) -> Result<(), ConfigError> {
    if len == 0 {
        return Err(ConfigError::invalid("pack.window_len", "must be at least 1"));
    }
    if gap == 0 || gap > len {
        return Err(ConfigError::invalid("pack.window_gap", "must be in 1..=window_len"));
    }
    Ok(())
}

/// `0` when `n < len`, else `floor((n - len) / gap) + 1`.
pub fn window_count(n: usize, len: usize, gap: usize) -> usize {
    if n < len {
        0
    } else {
        (n - len) / gap + 1
    }
}

/// Borrowing iterator over `(start_offset, window)` pairs.
pub fn windows(
    stream: &[TokenId],
    len: usize,
    gap: usize,
) -> Result<impl ExactSizeIterator<Item = (usize, &[TokenId])> + '_, ConfigError> {
    check_window_params(len, gap)?;
    let count = window_count(stream.len(), len, gap);
    Ok((0..count).map(move |i| {
        let start = i * gap;
        (start, &stream[start..start + len])
    }))
}

pub fn window_stream(stream: &[TokenId], len: usize, gap: usize) -> Result<Vec<PackedWindow>, ConfigError> {
    Ok(windows(stream, len, gap)?
        .map(|(start, w)| PackedWindow {
            start_offset: start as u64,
            tokens: w.to_vec(),
        })
        .collect())
}

pub const WINDOW_FILE_MAGIC: [u8; 4] = *b"FCFW";
pub const WINDOW_FILE_VERSION: u32 = 1;
const MAX_NAME_LEN: usize = 256;

/// Header of a window file. All integers are little-endian:
///
/// ```text
/// magic "FCFW" | version u32 | window_len u32 | window_gap u32 | eos_id u32
/// | count u64 | name_len u32 | name bytes (UTF-8)
/// ```
///
/// followed by `count` records of `window_len` u32 token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowFileHeader {
    pub window_len: u32,
    pub window_gap: u32,
    pub tokenizer: String,
    pub eos_id: TokenId,
    pub count: u64,
}

impl WindowFileHeader {
    pub fn encoded_len(&self) -> usize {
        4 + 4 * 5 + 8 + self.tokenizer.len()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        if self.tokenizer.len() > MAX_NAME_LEN {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "tokenizer name too long"));
        }
        w.write_all(&WINDOW_FILE_MAGIC)?;
        w.write_all(&WINDOW_FILE_VERSION.to_le_bytes())?;
        w.write_all(&self.window_len.to_le_bytes())?;
        w.write_all(&self.window_gap.to_le_bytes())?;
        w.write_all(&self.eos_id.to_le_bytes())?;
        w.write_all(&self.count.to_le_bytes())?;
        w.write_all(&(self.tokenizer.len() as u32).to_le_bytes())?;
        w.write_all(self.tokenizer.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowFileError {
    #[error("truncated header")]
    Truncated,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("invalid window parameters len={len} gap={gap}")]
    Params { len: u32, gap: u32 },
    #[error("tokenizer name is not valid UTF-8 or too long")]
    Name,
    #[error("payload is {actual} bytes, header implies {expected}")]
    PayloadLength { expected: u128, actual: usize },
}

/// Writes header and windows. `windows` must yield exactly `header.count`
/// windows of `header.window_len` tokens.
pub fn write_window_file<'a, W: Write>(
    w: &mut W,
    header: &WindowFileHeader,
    windows: impl Iterator<Item = &'a [TokenId]>,
) -> io::Result<()> {
    header.write_to(w)?;
    let mut buf = Vec::with_capacity(header.window_len as usize * 4);
    let mut written = 0u64;
    for win in windows {
        if win.len() != header.window_len as usize {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "window length mismatch"));
        }
        buf.clear();
        for t in win {
            buf.extend_from_slice(&t.to_le_bytes());
        }
        w.write_all(&buf)?;
        written += 1;
    }
    if written != header.count {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "window count mismatch"));
    }
    Ok(())
}

/// A fully decoded window file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowFile {
    pub header: WindowFileHeader,
    pub windows: Vec<PackedWindow>,
}

fn read_u32(b: &[u8], at: usize) -> Result<u32, WindowFileError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes(s.try_into().expect("4 bytes")))
        .ok_or(WindowFileError::Truncated)
}

pub fn decode_window_header(bytes: &[u8]) -> Result<WindowFileHeader, WindowFileError> {
    if bytes.len() < 4 {
        return Err(WindowFileError::Truncated);
    }
    if bytes[..4] != WINDOW_FILE_MAGIC {
        return Err(WindowFileError::BadMagic);
    }
    let version = read_u32(bytes, 4)?;
    if version != WINDOW_FILE_VERSION {
        return Err(WindowFileError::Version(version));
    }
    let window_len = read_u32(bytes, 8)?;
    let window_gap = read_u32(bytes, 12)?;
    if window_len == 0 || window_gap == 0 || window_gap > window_len {
        return Err(WindowFileError::Params {
            len: window_len,
            gap: window_gap,
        });
    }
    let eos_id = read_u32(bytes, 16)?;
    let count = bytes
        .get(20..28)
        .map(|s| u64::from_le_bytes(s.try_into().expect("8 bytes")))
        .ok_or(WindowFileError::Truncated)?;
    let name_len = read_u32(bytes, 28)? as usize;
    if name_len > MAX_NAME_LEN {
        return Err(WindowFileError::Name);
    }
    let name = bytes.get(32..32 + name_len).ok_or(WindowFileError::Truncated)?;
    let tokenizer = std::str::from_utf8(name)
        .map_err(|_| WindowFileError::Name)?
        .to_string();
    Ok(WindowFileHeader {
        window_len,
        window_gap,
        tokenizer,
        eos_id,
        count,
    })
}

pub fn decode_window_file(bytes: &[u8]) -> Result<WindowFile, WindowFileError> {
    let header = decode_window_header(bytes)?;
    let payload = &bytes[header.encoded_len()..];
    let expected = header.count as u128 * header.window_len as u128 * 4;
    if expected != payload.len() as u128 {
        return Err(WindowFileError::PayloadLength {
            expected,
            actual: payload.len(),
        });
    }
    let len = header.window_len as usize;
    let gap = header.window_gap as u64;
    let windows = payload
        .chunks_exact(len * 4)
        .enumerate()
        .map(|(i, rec)| PackedWindow {
            start_offset: i as u64 * gap,
            tokens: rec
                .chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect(),
        })
        .collect();
    Ok(WindowFile { header, windows })
}
