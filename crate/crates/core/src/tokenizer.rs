//! Tokenizer interface and the bundled reversible byte-level tokenizer.

pub type TokenId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("token id {0} is outside the vocabulary")]
    UnknownId(TokenId),
    #[error("token sequence does not decode to valid UTF-8")]
    InvalidUtf8,
    #[error("{0}")]
    Other(String),
}

/// Anything that maps text to token ids and back deterministically.
pub trait Tokenizer: Sync {
    fn name(&self) -> &str;
    fn vocab_size(&self) -> u32;
    fn eos_id(&self) -> TokenId;
    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, TokenizeError>;
    fn detokenize(&self, ids: &[TokenId]) -> Result<String, TokenizeError>;

    fn count_tokens(&self, text: &str) -> Result<usize, TokenizeError> {
        self.tokenize(text).map(|t| t.len())
    }
}

/// One token per UTF-8 byte (ids 0..=255) with EOS reserved at 256.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteTokenizer;

impl ByteTokenizer {
    pub const EOS: TokenId = 256;
}

impl Tokenizer for ByteTokenizer {
    fn name(&self) -> &str {
        "byte-v1"
    }

    fn vocab_size(&self) -> u32 {
        257
    }

    fn eos_id(&self) -> TokenId {
        Self::EOS
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, TokenizeError> {
        Ok(text.bytes().map(TokenId::from).collect())
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String, TokenizeError> {
        let bytes = ids
            .iter()
            .map(|&id| u8::try_from(id).map_err(|_| TokenizeError::UnknownId(id)))
            .collect::<Result<Vec<u8>, _>>()?;
        String::from_utf8(bytes).map_err(|_| TokenizeError::InvalidUtf8)
    }

    fn count_tokens(&self, text: &str) -> Result<usize, TokenizeError> {
        Ok(text.len())
    }
}
