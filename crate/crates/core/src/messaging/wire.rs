//! Length-prefixed envelope layout, all integers big-endian:
//!
//! ```text
//! version(1) | msg_type(1) | payload_len(2) | payload
//!            | cert_len(2) | cert | sig_len(2) | sig
//! ```
//!
//! The signature covers `version | msg_type | payload` only.

use thiserror::Error;

pub const ENVELOPE_VERSION: u8 = 0x01;
pub const MSG_TYPE_ICA: u8 = 0x21;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated {field}: need {needed} bytes, {available} available")]
    Truncated {
        field: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("unknown envelope version {0:#04x}")]
    UnknownVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownMsgType(u8),
    #[error("{0} trailing bytes after envelope")]
    TrailingBytes(usize),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Cursor over a byte slice that never reads past the end.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8], DecodeError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(DecodeError::Truncated {
                field,
                needed: n,
                available,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn array<const N: usize>(&mut self, field: &'static str) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N, field)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self, field: &'static str) -> Result<u8, DecodeError> {
        Ok(self.array::<1>(field)?[0])
    }

    pub(crate) fn u16(&mut self, field: &'static str) -> Result<u16, DecodeError> {
        Ok(u16::from_be_bytes(self.array(field)?))
    }

    pub(crate) fn u32(&mut self, field: &'static str) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array(field)?))
    }

    pub(crate) fn prefixed(&mut self, field: &'static str) -> Result<&'a [u8], DecodeError> {
        let len = self.u16(field)? as usize;
        self.take(len, field)
    }

    pub(crate) fn finish(self) -> Result<(), DecodeError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub(crate) fn put_prefixed(out: &mut Vec<u8>, bytes: &[u8]) {
    let len = u16::try_from(bytes.len()).expect("length-prefixed field exceeds 65535 bytes");
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(bytes);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedEnvelope {
    pub version: u8,
    pub msg_type: u8,
    pub payload: Vec<u8>,
    pub certificate: Vec<u8>,
    pub signature: Vec<u8>,
}

impl SignedEnvelope {
    pub fn ica(payload: Vec<u8>, certificate: Vec<u8>, signature: Vec<u8>) -> Self {
        Self {
            version: ENVELOPE_VERSION,
            msg_type: MSG_TYPE_ICA,
            payload,
            certificate,
            signature,
        }
    }

    /// Bytes covered by the signature.
    pub fn signed_prefix(&self) -> Vec<u8> {
        signed_prefix(self.version, self.msg_type, &self.payload)
    }

    pub fn encoded_len(&self) -> usize {
        2 + 2 + self.payload.len() + 2 + self.certificate.len() + 2 + self.signature.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(self.version);
        out.push(self.msg_type);
        put_prefixed(&mut out, &self.payload);
        put_prefixed(&mut out, &self.certificate);
        put_prefixed(&mut out, &self.signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let version = r.u8("version")?;
        if version != ENVELOPE_VERSION {
            return Err(DecodeError::UnknownVersion(version));
        }
        let msg_type = r.u8("msg_type")?;
        if msg_type != MSG_TYPE_ICA {
            return Err(DecodeError::UnknownMsgType(msg_type));
        }
        let payload = r.prefixed("payload")?.to_vec();
        let certificate = r.prefixed("certificate")?.to_vec();
        let signature = r.prefixed("signature")?.to_vec();
        r.finish()?;
        Ok(Self {
            version,
            msg_type,
            payload,
            certificate,
            signature,
        })
    }
}

pub fn signed_prefix(version: u8, msg_type: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + payload.len());
    out.push(version);
    out.push(msg_type);
    out.extend_from_slice(payload);
    out
}

/// Byte offset of the payload within an encoded envelope.
pub const PAYLOAD_OFFSET: usize = 4;
