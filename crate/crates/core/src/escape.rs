//! Byte-string escaping for token symbols stored in JSON.
//!
//! Valid UTF-8 runs are written as-is with `\` doubled; every byte that is
//! not part of a valid UTF-8 sequence is written as `\xHH` (lowercase hex).

use crate::error::{Error, Result};

pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for chunk in bytes.utf8_chunks() {
        for ch in chunk.valid().chars() {
            if ch == '\\' {
                out.push_str("\\\\");
            } else {
                out.push(ch);
            }
        }
        for b in chunk.invalid() {
            out.push_str(&format!("\\x{b:02x}"));
        }
    }
    out
}

pub fn unescape_bytes(s: &str) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('\\') {
        out.extend_from_slice(&rest.as_bytes()[..pos]);
        let tail = &rest[pos + 1..];
        if let Some(t) = tail.strip_prefix('\\') {
            out.push(b'\\');
            rest = t;
        } else if let Some(t) = tail.strip_prefix('x') {
            let hex = t
                .get(..2)
                .ok_or_else(|| Error::format(format!("truncated \\x escape in {s:?}")))?;
            let b = u8::from_str_radix(hex, 16)
                .map_err(|_| Error::format(format!("bad \\x escape in {s:?}")))?;
            out.push(b);
            rest = &t[2..];
        } else {
            return Err(Error::format(format!("unknown escape in {s:?}")));
        }
    }
    out.extend_from_slice(rest.as_bytes());
    Ok(out)
}
