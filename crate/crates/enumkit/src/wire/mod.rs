//! Minimal DNS wire codec for NAPTR queries.
//!
//! Just enough of the message format for a stub resolver: a query
//! encoder, a response decoder that follows name compression (and hunts
//! pointer loops), and the NAPTR rdata form. The encoder never emits
//! compression. UDP only; a TC bit surfaces as [`WireError::TruncatedMessage`]
//! rather than a TCP retry. Send cap 512 bytes, receive cap 4096.
//!
//! Every decoder read is bounds-checked: malformed input yields an error,
//! never a panic or an out-of-range read.

pub mod responder;
mod transport;

pub use transport::udp_exchange;

use thiserror::Error;

use crate::naptr::ere::PlusMode;
use crate::naptr::{NaptrError, NaptrRecord, RewriteRule};

pub const QTYPE_NAPTR: u16 = 35;
pub const QCLASS_IN: u16 = 1;
pub const RCODE_NXDOMAIN: u8 = 3;
pub const MAX_UDP_SEND: usize = 512;
pub const MAX_UDP_RECV: usize = 4096;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad domain name: {0}")]
    NameTooLong(String),
    #[error("truncated message: {0}")]
    TruncatedMessage(String),
    #[error("compression pointer loop")]
    CompressionLoop,
    #[error("malformed rdata: {0}")]
    MalformedRdata(String),
    #[error("no response from {endpoint} after {attempts} attempts")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("only mismatched response ids arrived from {endpoint}")]
    IdMismatchExhausted { endpoint: String },
    #[error("message exceeds the {limit}-byte send cap")]
    MessageTooLarge { limit: usize },
    #[error(transparent)]
    Record(NaptrError),
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub qr: bool,
    pub opcode: u8,
    pub aa: bool,
    pub tc: bool,
    pub rd: bool,
    pub ra: bool,
    pub rcode: u8,
}

impl Flags {
    fn to_u16(self) -> u16 {
        (u16::from(self.qr) << 15)
            | (u16::from(self.opcode & 0x0f) << 11)
            | (u16::from(self.aa) << 10)
            | (u16::from(self.tc) << 9)
            | (u16::from(self.rd) << 8)
            | (u16::from(self.ra) << 7)
            | u16::from(self.rcode & 0x0f)
    }

    fn from_u16(bits: u16) -> Self {
        Flags {
            qr: bits & 0x8000 != 0,
            opcode: ((bits >> 11) & 0x0f) as u8,
            aa: bits & 0x0400 != 0,
            tc: bits & 0x0200 != 0,
            rd: bits & 0x0100 != 0,
            ra: bits & 0x0080 != 0,
            rcode: (bits & 0x000f) as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub qname: String,
    pub qtype: u16,
    pub qclass: u16,
}

/// The wire form of a NAPTR rdata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireNaptr {
    pub order: u16,
    pub preference: u16,
    pub flags: String,
    pub service: String,
    pub regexp: String,
    /// Empty string encodes the root (`.`), i.e. no replacement.
    pub replacement: String,
}

impl WireNaptr {
    pub fn from_record(record: &NaptrRecord) -> Self {
        WireNaptr {
            order: record.order(),
            preference: record.preference(),
            flags: record.flags().to_string(),
            service: record.service().to_string(),
            regexp: record.rule().render(),
            replacement: record.replacement().to_string(),
        }
    }

    pub fn to_record(&self, mode: PlusMode) -> Result<NaptrRecord, NaptrError> {
        let rule = RewriteRule::parse(&self.regexp, mode)?;
        let replacement = if self.replacement.is_empty() {
            "."
        } else {
            &self.replacement
        };
        NaptrRecord::new(
            self.order,
            self.preference,
            &self.flags,
            &self.service,
            rule,
            replacement,
        )
    }

    fn encode_rdata(&self, out: &mut Vec<u8>) -> Result<(), WireError> {
        out.extend_from_slice(&self.order.to_be_bytes());
        out.extend_from_slice(&self.preference.to_be_bytes());
        for (name, text) in [
            ("flags", &self.flags),
            ("service", &self.service),
            ("regexp", &self.regexp),
        ] {
            let bytes = text.as_bytes();
            if bytes.len() > 255 {
                return Err(WireError::MalformedRdata(format!(
                    "{name} character-string exceeds 255 bytes"
                )));
            }
            out.push(bytes.len() as u8);
            out.extend_from_slice(bytes);
        }
        encode_name(&self.replacement, out)?;
        Ok(())
    }
}

/// One decoded resource record. NAPTR rdata is parsed; anything else is
/// kept raw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub name: String,
    pub rtype: u16,
    pub rclass: u16,
    pub ttl: u32,
    pub naptr: Option<WireNaptr>,
    pub rdata: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsMessage {
    pub id: u16,
    pub flags: Flags,
    pub question: Option<Question>,
    pub answers: Vec<Answer>,
}

/// Uncompressed name encoding. The empty string or `.` is the root;
/// labels are capped at 63 bytes and the whole name at 255.
pub fn encode_name(name: &str, out: &mut Vec<u8>) -> Result<(), WireError> {
    let trimmed = name.strip_suffix('.').unwrap_or(name);
    if trimmed.is_empty() {
        if name.is_empty() || name == "." {
            out.push(0);
            return Ok(());
        }
        return Err(WireError::NameTooLong(format!("empty label in {name:?}")));
    }
    let mut total = 1usize; // trailing root byte
    for label in trimmed.split('.') {
        if label.is_empty() {
            return Err(WireError::NameTooLong(format!("empty label in {name:?}")));
        }
        if label.len() > 63 {
            return Err(WireError::NameTooLong(format!(
                "label {label:?} exceeds 63 bytes"
            )));
        }
        total += 1 + label.len();
        if total > 255 {
            return Err(WireError::NameTooLong(format!(
                "name {name:?} exceeds 255 bytes on the wire"
            )));
        }
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
    Ok(())
}

/// A standard recursive-desired NAPTR query: one question, qtype 35,
/// qclass IN. Deterministic bytes for a fixed id.
pub fn encode_query(domain: &str, id: u16) -> Result<Vec<u8>, WireError> {
    if domain.is_empty() || domain == "." {
        return Err(WireError::NameTooLong("empty query domain".into()));
    }
    let mut out = Vec::with_capacity(12 + domain.len() + 6);
    out.extend_from_slice(&id.to_be_bytes());
    let flags = Flags {
        rd: true,
        ..Flags::default()
    };
    out.extend_from_slice(&flags.to_u16().to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes()); // QDCOUNT
    out.extend_from_slice(&0u16.to_be_bytes()); // ANCOUNT
    out.extend_from_slice(&0u16.to_be_bytes()); // NSCOUNT
    out.extend_from_slice(&0u16.to_be_bytes()); // ARCOUNT
    encode_name(domain, &mut out)?;
    out.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
    out.extend_from_slice(&QCLASS_IN.to_be_bytes());
    if out.len() > MAX_UDP_SEND {
        return Err(WireError::MessageTooLarge { limit: MAX_UDP_SEND });
    }
    Ok(out)
}

/// An authoritative answer (or NXDOMAIN) for one question.
pub fn encode_response(
    id: u16,
    question: &Question,
    rcode: u8,
    answers: &[(String, u32, WireNaptr)],
) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::with_capacity(128);
    out.extend_from_slice(&id.to_be_bytes());
    let flags = Flags {
        qr: true,
        aa: true,
        rd: true,
        rcode,
        ..Flags::default()
    };
    out.extend_from_slice(&flags.to_u16().to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(answers.len() as u16).to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    encode_name(&question.qname, &mut out)?;
    out.extend_from_slice(&question.qtype.to_be_bytes());
    out.extend_from_slice(&question.qclass.to_be_bytes());
    for (name, ttl, naptr) in answers {
        encode_name(name, &mut out)?;
        out.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
        out.extend_from_slice(&QCLASS_IN.to_be_bytes());
        out.extend_from_slice(&ttl.to_be_bytes());
        let mut rdata = Vec::new();
        naptr.encode_rdata(&mut rdata)?;
        out.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
        out.extend_from_slice(&rdata);
    }
    Ok(out)
}

/// Decodes a whole message. Accepts compression in names; rejects
/// pointer loops, reads past the end, and the TC bit.
pub fn decode_message(bytes: &[u8]) -> Result<DnsMessage, WireError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let id = cursor.read_u16()?;
    let flags = Flags::from_u16(cursor.read_u16()?);
    if flags.tc {
        return Err(WireError::TruncatedMessage(
            "TC bit set; UDP payload was cut off".into(),
        ));
    }
    let qdcount = cursor.read_u16()?;
    let ancount = cursor.read_u16()?;
    let nscount = cursor.read_u16()?;
    let arcount = cursor.read_u16()?;

    let mut question = None;
    for index in 0..qdcount {
        let qname = cursor.read_name()?;
        let qtype = cursor.read_u16()?;
        let qclass = cursor.read_u16()?;
        if index == 0 {
            question = Some(Question {
                qname,
                qtype,
                qclass,
            });
        }
    }

    let mut answers = Vec::new();
    for _ in 0..ancount {
        answers.push(cursor.read_record()?);
    }
    // Authority and additional sections are validated structurally and
    // discarded.
    for _ in 0..(u32::from(nscount) + u32::from(arcount)) {
        cursor.read_record()?;
    }

    Ok(DnsMessage {
        id,
        flags,
        question,
        answers,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn read_u8(&mut self) -> Result<u8, WireError> {
        let byte = self
            .bytes
            .get(self.pos)
            .copied()
            .ok_or_else(|| WireError::TruncatedMessage("read past end".into()))?;
        self.pos += 1;
        Ok(byte)
    }

    fn read_u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes([self.read_u8()?, self.read_u8()?]))
    }

    fn read_u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes([
            self.read_u8()?,
            self.read_u8()?,
            self.read_u8()?,
            self.read_u8()?,
        ]))
    }

    fn take(&mut self, len: usize) -> Result<&[u8], WireError> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| WireError::TruncatedMessage("rdata past end".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    /// Reads a possibly-compressed name starting at the cursor, leaving
    /// the cursor just past the name's in-place bytes.
    fn read_name(&mut self) -> Result<String, WireError> {
        let (name, consumed) = decode_name_at(self.bytes, self.pos)?;
        self.pos += consumed;
        Ok(name)
    }

    fn read_record(&mut self) -> Result<Answer, WireError> {
        let name = self.read_name()?;
        let rtype = self.read_u16()?;
        let rclass = self.read_u16()?;
        let ttl = self.read_u32()?;
        let rdlength = self.read_u16()? as usize;
        let rdata_start = self.pos;
        let rdata = self.take(rdlength)?.to_vec();
        let naptr = if rtype == QTYPE_NAPTR {
            Some(decode_naptr_rdata(self.bytes, rdata_start, rdlength)?)
        } else {
            None
        };
        Ok(Answer {
            name,
            rtype,
            rclass,
            ttl,
            naptr,
            rdata,
        })
    }
}

/// Decodes a name at `start`, returning it and the number of in-place
/// bytes it occupies (pointers end the in-place run).
fn decode_name_at(bytes: &[u8], start: usize) -> Result<(String, usize), WireError> {
    let mut labels: Vec<String> = Vec::new();
    let mut pos = start;
    let mut consumed = None;
    let mut jumps = 0usize;
    let mut name_len = 0usize;
    loop {
        let len = *bytes
            .get(pos)
            .ok_or_else(|| WireError::TruncatedMessage("name past end".into()))?;
        match len & 0xc0 {
            0xc0 => {
                let low = *bytes
                    .get(pos + 1)
                    .ok_or_else(|| WireError::TruncatedMessage("pointer past end".into()))?;
                if consumed.is_none() {
                    consumed = Some(pos + 2 - start);
                }
                jumps += 1;
                if jumps > 126 {
                    return Err(WireError::CompressionLoop);
                }
                pos = usize::from(len & 0x3f) << 8 | usize::from(low);
            }
            0x00 => {
                if len == 0 {
                    let consumed = consumed.unwrap_or_else(|| pos + 1 - start);
                    return Ok((labels.join("."), consumed));
                }
                let label = bytes
                    .get(pos + 1..pos + 1 + usize::from(len))
                    .ok_or_else(|| WireError::TruncatedMessage("label past end".into()))?;
                name_len += usize::from(len) + 1;
                if name_len > 255 {
                    return Err(WireError::NameTooLong(
                        "decoded name exceeds 255 bytes".into(),
                    ));
                }
                labels.push(
                    std::str::from_utf8(label)
                        .map_err(|_| WireError::MalformedRdata("label is not UTF-8".into()))?
                        .to_string(),
                );
                pos += 1 + usize::from(len);
            }
            _ => {
                return Err(WireError::MalformedRdata(format!(
                    "reserved label type {:#04x}",
                    len & 0xc0
                )))
            }
        }
    }
}

fn decode_naptr_rdata(message: &[u8], start: usize, rdlength: usize) -> Result<WireNaptr, WireError> {
    let end = start
        .checked_add(rdlength)
        .filter(|&e| e <= message.len())
        .ok_or_else(|| WireError::TruncatedMessage("rdata past end".into()))?;
    let mut cursor = Cursor {
        bytes: message,
        pos: start,
    };
    let order = cursor.read_u16()?;
    let preference = cursor.read_u16()?;
    let mut strings = Vec::with_capacity(3);
    for field in ["flags", "service", "regexp"] {
        let len = usize::from(cursor.read_u8()?);
        if cursor.pos + len > end {
            return Err(WireError::MalformedRdata(format!(
                "{field} character-string overruns rdata"
            )));
        }
        let raw = cursor.take(len)?;
        strings.push(
            String::from_utf8(raw.to_vec())
                .map_err(|_| WireError::MalformedRdata(format!("{field} is not UTF-8")))?,
        );
    }
    // Replacement may use compression pointers into the whole message.
    let (replacement, consumed) = decode_name_at(message, cursor.pos)?;
    if cursor.pos + consumed != end {
        return Err(WireError::MalformedRdata(
            "rdata length does not match its contents".into(),
        ));
    }
    let mut it = strings.into_iter();
    Ok(WireNaptr {
        order,
        preference,
        flags: it.next().unwrap(),
        service: it.next().unwrap(),
        regexp: it.next().unwrap(),
        replacement,
    })
}

/// A process-random query id (hash-seeded; no RNG dependency).
pub fn random_query_id() -> u16 {
    use std::collections::hash_map::RandomState;
    use std::hash::{BuildHasher, Hasher};
    let mut hasher = RandomState::new().build_hasher();
    hasher.write_u64(std::time::UNIX_EPOCH.elapsed().map_or(0, |d| d.subsec_nanos().into()));
    (hasher.finish() & 0xffff) as u16
}

#[cfg(test)]
mod tests;
