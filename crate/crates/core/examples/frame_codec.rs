//! DNP3-style frame codec: encode a command, show the wire bytes, and show
//! what the decoder says about corrupted and truncated copies.
//!
//!     cargo run --example frame_codec

use gridsurge::cybernet::frame::{crc16_dnp, to_hex};
use gridsurge::cybernet::{decode_frame, encode_frame, CommandCode, Frame, FunctionCode, Record};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("CRC-16/DNP(\"123456789\") = 0x{:04X}", crc16_dnp(b"123456789"));

    let records = [Record::new(0, CommandCode::Shed, 0.0), Record::new(3, CommandCode::SetP, 425.5)];
    let mut frame = Frame::new(FunctionCode::DirectOperate, 20, 1, &records);
    frame.seq = 7;
    let bytes = encode_frame(&frame)?;
    println!("{} frame, {} bytes", frame.function.name(), bytes.len());
    println!("  {}", to_hex(&bytes));

    let back = decode_frame(&bytes)?;
    assert_eq!(back, frame);
    for r in back.records()? {
        println!("  point {} {:?} value {}", r.point, r.command(), r.value);
    }

    // Flip one bit in the header, then in the data block.
    for index in [4, bytes.len() - 5] {
        let mut bad = bytes.clone();
        bad[index] ^= 0x01;
        println!("bit flip at byte {index:2}: {}", decode_frame(&bad).unwrap_err());
    }
    println!("truncated: {}", decode_frame(&bytes[..bytes.len() - 3]).unwrap_err());
    Ok(())
}
