//! Length-prefixed framing: an ASCII decimal byte count, a newline, then that
//! many bytes of UTF-8 JSON.

use std::io::{self, BufRead, Read, Write};

use serde_json::Value;
use thiserror::Error;

/// Largest payload accepted from a peer.
pub const MAX_FRAME: usize = 16 * 1024 * 1024;

const MAX_HEADER: usize = 24;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad length header {0:?}")]
    BadHeader(String),
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("stream ended inside a frame")]
    Truncated,
    #[error("payload is not UTF-8")]
    Utf8,
    #[error("payload is not JSON: {0}")]
    Json(String),
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: BufRead>(reader: &mut R) -> Result<Option<Value>, FrameError> {
    let mut header = Vec::new();
    reader.by_ref().take(MAX_HEADER as u64).read_until(b'\n', &mut header)?;
    if header.is_empty() {
        return Ok(None);
    }
    if header.last() != Some(&b'\n') {
        return Err(if header.len() >= MAX_HEADER {
            FrameError::BadHeader(String::from_utf8_lossy(&header).into_owned())
        } else {
            FrameError::Truncated
        });
    }
    header.pop();
    let text = std::str::from_utf8(&header).map_err(|_| FrameError::Utf8)?;
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FrameError::BadHeader(text.to_string()));
    }
    let len: usize = text.parse().map_err(|_| FrameError::BadHeader(text.to_string()))?;
    if len > MAX_FRAME {
        return Err(FrameError::TooLarge(len));
    }
    let mut payload = vec![0; len];
    reader.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::Truncated,
        _ => FrameError::Io(e),
    })?;
    let text = String::from_utf8(payload).map_err(|_| FrameError::Utf8)?;
    serde_json::from_str(&text).map(Some).map_err(|e| FrameError::Json(e.to_string()))
}

pub fn encode_frame(value: &Value) -> Vec<u8> {
    let payload = serde_json::to_string(value).expect("JSON values always serialize");
    let mut out = format!("{}\n", payload.len()).into_bytes();
    out.extend_from_slice(payload.as_bytes());
    out
}

pub fn write_frame<W: Write>(writer: &mut W, value: &Value) -> io::Result<()> {
    writer.write_all(&encode_frame(value))?;
    writer.flush()
}
