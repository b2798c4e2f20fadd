//! Bit-exact wire format of the reduced DNP3-style application frame.
//!
//! ```text
//! 0x05 0x64 | len u8 | func u8 | seq u8 | dst u16 LE | src u16 LE | payload | crc u16 LE
//! ```
//!
//! `len` counts the bytes after itself up to the end of the payload; the CRC
//! (CRC-16/DNP) covers `len` through the payload.

use crc::{Crc, CRC_16_DNP};
use thiserror::Error;

pub const SYNC: [u8; 2] = [0x05, 0x64];
/// Bytes covered by `len` besides the payload: func, seq, dst, src.
const HEADER_AFTER_LEN: usize = 6;
/// Smallest well-formed frame: sync, len, header, empty payload, CRC.
pub const MIN_FRAME_LEN: usize = 2 + 1 + HEADER_AFTER_LEN + 2;
/// The length byte must also count the six header bytes.
pub const MAX_PAYLOAD: usize = u8::MAX as usize - HEADER_AFTER_LEN;
/// Size of one command/measurement record in a payload.
pub const RECORD_LEN: usize = 11;

const DNP: Crc<u16> = Crc::<u16>::new(&CRC_16_DNP);

pub fn crc16_dnp(bytes: &[u8]) -> u16 {
    DNP.checksum(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FunctionCode {
    Read = 0x01,
    DirectOperate = 0x05,
    Response = 0x81,
    Unsolicited = 0x82,
}

impl FunctionCode {
    pub const ALL: [FunctionCode; 4] = [
        FunctionCode::Read,
        FunctionCode::DirectOperate,
        FunctionCode::Response,
        FunctionCode::Unsolicited,
    ];

    pub fn from_u8(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| *f as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionCode::Read => "READ",
            FunctionCode::DirectOperate => "DIRECT_OPERATE",
            FunctionCode::Response => "RESPONSE",
            FunctionCode::Unsolicited => "UNSOLICITED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CommandCode {
    Trip = 0x01,
    Close = 0x02,
    Shed = 0x03,
    SetP = 0x04,
    SetQ = 0x05,
    Meas = 0x10,
}

impl CommandCode {
    pub const ALL: [CommandCode; 6] = [
        CommandCode::Trip,
        CommandCode::Close,
        CommandCode::Shed,
        CommandCode::SetP,
        CommandCode::SetQ,
        CommandCode::Meas,
    ];

    pub fn from_u8(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| *c as u8 == b)
    }
}

/// One `(point, code, value)` record: point u16 LE, code u8, f64 LE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub point: u16,
    pub code: u8,
    pub value: f64,
}

impl Record {
    pub fn new(point: u16, code: CommandCode, value: f64) -> Self {
        Self {
            point,
            code: code as u8,
            value,
        }
    }

    pub fn command(&self) -> Option<CommandCode> {
        CommandCode::from_u8(self.code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub function: FunctionCode,
    pub seq: u8,
    pub dst: u16,
    pub src: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
    #[error("bad sync bytes")]
    BadSync,
    #[error("truncated frame: have {have} bytes, need {need}")]
    TruncatedFrame { have: usize, need: usize },
    #[error("checksum mismatch")]
    ChecksumError,
    #[error("unknown function code 0x{0:02x}")]
    UnknownFunction(u8),
    #[error("payload length {0} is not a whole number of records")]
    MalformedPayload(usize),
}

impl Frame {
    pub fn new(function: FunctionCode, dst: u16, src: u16, records: &[Record]) -> Self {
        let mut payload = Vec::with_capacity(records.len() * RECORD_LEN);
        for r in records {
            payload.extend_from_slice(&r.point.to_le_bytes());
            payload.push(r.code);
            payload.extend_from_slice(&r.value.to_le_bytes());
        }
        Self {
            function,
            seq: 0,
            dst,
            src,
            payload,
        }
    }

    /// Parses the payload as a sequence of records.
    pub fn records(&self) -> Result<Vec<Record>, FrameError> {
        if !self.payload.len().is_multiple_of(RECORD_LEN) {
            return Err(FrameError::MalformedPayload(self.payload.len()));
        }
        Ok(self
            .payload
            .chunks_exact(RECORD_LEN)
            .map(|c| Record {
                point: u16::from_le_bytes([c[0], c[1]]),
                code: c[2],
                value: f64::from_le_bytes(c[3..11].try_into().expect("8 bytes")),
            })
            .collect())
    }

    pub fn set_records(&mut self, records: &[Record]) {
        self.payload = Frame::new(self.function, 0, 0, records).payload;
    }
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, FrameError> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLong(frame.payload.len()));
    }
    let mut out = Vec::with_capacity(MIN_FRAME_LEN + frame.payload.len());
    out.extend_from_slice(&SYNC);
    out.push((HEADER_AFTER_LEN + frame.payload.len()) as u8);
    out.push(frame.function as u8);
    out.push(frame.seq);
    out.extend_from_slice(&frame.dst.to_le_bytes());
    out.extend_from_slice(&frame.src.to_le_bytes());
    out.extend_from_slice(&frame.payload);
    let crc = crc16_dnp(&out[2..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn crc_ok(body: &[u8], crc: &[u8]) -> bool {
    crc16_dnp(body) == u16::from_le_bytes([crc[0], crc[1]])
}

/// Decodes one frame occupying the whole buffer.
///
/// Checks run in order: sync, length, checksum, function code. A buffer
/// shorter than its length byte announces is `TruncatedFrame` unless its
/// bytes form a valid frame under the length they actually have, which
/// means the length byte itself was corrupted (`ChecksumError`).
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() < 2 || bytes[..2] != SYNC {
        return Err(FrameError::BadSync);
    }
    if bytes.len() < MIN_FRAME_LEN {
        return Err(FrameError::TruncatedFrame {
            have: bytes.len(),
            need: MIN_FRAME_LEN,
        });
    }
    let declared = bytes[2] as usize;
    let need = 2 + 1 + declared + 2;
    let n = bytes.len();
    if declared < HEADER_AFTER_LEN || n > need {
        return Err(FrameError::ChecksumError);
    }
    if n < need {
        let mut body = bytes[2..n - 2].to_vec();
        body[0] = (n - 5) as u8;
        if crc_ok(&body, &bytes[n - 2..]) {
            return Err(FrameError::ChecksumError);
        }
        return Err(FrameError::TruncatedFrame { have: n, need });
    }
    if !crc_ok(&bytes[2..n - 2], &bytes[n - 2..]) {
        return Err(FrameError::ChecksumError);
    }
    let function = FunctionCode::from_u8(bytes[3]).ok_or(FrameError::UnknownFunction(bytes[3]))?;
    Ok(Frame {
        function,
        seq: bytes[4],
        dst: u16::from_le_bytes([bytes[5], bytes[6]]),
        src: u16::from_le_bytes([bytes[7], bytes[8]]),
        payload: bytes[9..n - 2].to_vec(),
    })
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Bit-at-a-time reference: reflected poly 0x3D65 → 0xA6BC, init 0,
    /// final complement.
    fn crc_oracle(data: &[u8]) -> u16 {
        let mut crc: u16 = 0;
        for &b in data {
            crc ^= b as u16;
            for _ in 0..8 {
                crc = if crc & 1 != 0 { (crc >> 1) ^ 0xA6BC } else { crc >> 1 };
            }
        }
        !crc
    }

    #[test]
    fn check_value() {
        assert_eq!(crc_oracle(b"123456789"), 0xEA82);
        assert_eq!(crc16_dnp(b"123456789"), 0xEA82);
    }

    fn sample() -> Frame {
        let mut f = Frame::new(
            FunctionCode::DirectOperate,
            11,
            1,
            &[Record::new(3, CommandCode::Shed, 300.0)],
        );
        f.seq = 7;
        f
    }

    #[test]
    fn layout_is_bit_exact() {
        let bytes = encode_frame(&sample()).unwrap();
        assert_eq!(&bytes[..9], &[0x05, 0x64, 17, 0x05, 7, 11, 0, 1, 0]);
        assert_eq!(&bytes[9..11], &[3, 0]);
        assert_eq!(bytes[11], 0x03);
        assert_eq!(&bytes[12..20], &300.0f64.to_le_bytes());
        let crc = crc_oracle(&bytes[2..20]);
        assert_eq!(&bytes[20..], &crc.to_le_bytes());
    }

    #[test]
    fn decode_errors() {
        let bytes = encode_frame(&sample()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = 0x06;
        assert_eq!(decode_frame(&bad), Err(FrameError::BadSync));
        assert!(matches!(decode_frame(&bytes[..bytes.len() - 1]), Err(FrameError::TruncatedFrame { .. })));
        assert!(matches!(decode_frame(&bytes[..5]), Err(FrameError::TruncatedFrame { .. })));
        let mut f = sample();
        f.payload = vec![0; MAX_PAYLOAD + 1];
        assert_eq!(encode_frame(&f), Err(FrameError::PayloadTooLong(MAX_PAYLOAD + 1)));
        f.payload.pop();
        assert!(encode_frame(&f).is_ok());
    }

    #[test]
    fn unknown_function_behind_valid_crc() {
        let mut bytes = encode_frame(&sample()).unwrap();
        bytes[3] = 0x42;
        let n = bytes.len();
        let crc = crc_oracle(&bytes[2..n - 2]);
        bytes[n - 2..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(decode_frame(&bytes), Err(FrameError::UnknownFunction(0x42)));
    }

    #[test]
    fn every_single_byte_corruption_after_sync_is_a_checksum_error() {
        for function in FunctionCode::ALL {
            let mut f = sample();
            f.function = function;
            let bytes = encode_frame(&f).unwrap();
            for i in 2..bytes.len() {
                for flip in 1..=255u8 {
                    let mut bad = bytes.clone();
                    bad[i] ^= flip;
                    assert_eq!(decode_frame(&bad), Err(FrameError::ChecksumError), "byte {i} ^ {flip:#04x}");
                }
            }
        }
    }

    fn arb_frame() -> impl Strategy<Value = Frame> {
        (
            proptest::sample::select(FunctionCode::ALL.to_vec()),
            any::<u8>(),
            any::<u16>(),
            any::<u16>(),
            proptest::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD),
        )
            .prop_map(|(function, seq, dst, src, payload)| Frame {
                function,
                seq,
                dst,
                src,
                payload,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn round_trip(f in arb_frame()) {
            let bytes = encode_frame(&f).unwrap();
            prop_assert_eq!(crc16_dnp(&bytes[2..bytes.len() - 2]), crc_oracle(&bytes[2..bytes.len() - 2]));
            prop_assert_eq!(decode_frame(&bytes).unwrap(), f);
        }
    }

    proptest! {
        #[test]
        fn records_round_trip(recs in proptest::collection::vec((any::<u16>(), any::<u8>(), any::<f64>()), 0..20)) {
            let recs: Vec<Record> = recs.into_iter().map(|(point, code, value)| Record { point, code, value }).collect();
            let f = Frame::new(FunctionCode::Response, 1, 2, &recs);
            let back = f.records().unwrap();
            prop_assert_eq!(back.len(), recs.len());
            for (a, b) in back.iter().zip(&recs) {
                prop_assert_eq!((a.point, a.code, a.value.to_bits()), (b.point, b.code, b.value.to_bits()));
            }
        }
    }
}
