//! Mono 16-bit PCM WAV audio.
//!
//! The reader walks the RIFF chunk list, skipping chunks other than `fmt `
//! and `data` (odd-sized chunks carry one pad byte). Samples are normalized
//! by 32768; the writer inverts this with saturation.

use std::path::Path;

use coordfit::tasks::AudioSignal;

use crate::error::{CliError, CliResult};

const PCM_FORMAT: u16 = 1;
const SCALE: f64 = 32768.0;

struct Format {
    sample_rate: u32,
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse_format(bytes: &[u8], body: usize, size: usize) -> CliResult<Format> {
    if size < 16 {
        return Err(CliError::parse(body, format!("fmt chunk of {size} bytes is shorter than 16")));
    }
    let format = u16_at(bytes, body);
    let channels = u16_at(bytes, body + 2);
    let sample_rate = u32_at(bytes, body + 4);
    let bits = u16_at(bytes, body + 14);
    if format != PCM_FORMAT {
        return Err(CliError::Unsupported(format!("WAV format tag {format} (only PCM is read)")));
    }
    if channels != 1 {
        return Err(CliError::Unsupported(format!("{channels}-channel WAV (only mono is read)")));
    }
    if bits != 16 {
        return Err(CliError::Unsupported(format!("{bits}-bit WAV (only 16-bit is read)")));
    }
    if sample_rate == 0 {
        return Err(CliError::parse(body + 4, "sample rate is zero"));
    }
    Ok(Format { sample_rate })
}

/// Decodes a mono 16-bit PCM WAV file held in memory.
pub fn decode_wav(bytes: &[u8]) -> CliResult<AudioSignal> {
    if bytes.len() < 12 {
        return Err(CliError::parse(bytes.len(), "file too short for a RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(CliError::parse(0, "missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(CliError::parse(8, "RIFF form is not WAVE"));
    }
    let mut pos = 12;
    let mut format = None;
    loop {
        if pos + 8 > bytes.len() {
            return Err(CliError::parse(pos, "no data chunk"));
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body.checked_add(size).filter(|&e| e <= bytes.len());
        match id {
            b"fmt " => {
                let end = end.ok_or_else(|| CliError::parse(bytes.len(), format!("truncated fmt chunk of {size} bytes")))?;
                format = Some(parse_format(bytes, body, size)?);
                pos = end + (size & 1);
            }
            b"data" => {
                let fmt = format.ok_or_else(|| CliError::parse(pos, "data chunk before fmt chunk"))?;
                let Some(end) = end else {
                    return Err(CliError::parse(
                        bytes.len(),
                        format!("truncated data chunk: header declares {size} bytes, {} present", bytes.len() - body),
                    ));
                };
                if size % 2 != 0 {
                    return Err(CliError::parse(body, format!("data chunk of {size} bytes is not whole samples")));
                }
                let samples = bytes[body..end]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / SCALE)
                    .collect();
                return Ok(AudioSignal::new(fmt.sample_rate, samples)?);
            }
            _ => {
                let end = end.ok_or_else(|| CliError::parse(bytes.len(), format!("truncated chunk of {size} bytes")))?;
                pos = end + (size & 1);
            }
        }
    }
}

/// `round(x·32768)` saturated to the 16-bit range.
fn quantize(x: f64) -> i16 {
    (x * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Encodes as a canonical 44-byte-header mono 16-bit PCM WAV.
pub fn encode_wav(audio: &AudioSignal) -> Vec<u8> {
    let data_len = 2 * audio.len() as u32;
    let rate = audio.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(2 * rate).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in audio.samples() {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

pub fn read_audio(path: impl AsRef<Path>) -> CliResult<AudioSignal> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| CliError::io(path.as_ref(), e))?;
    decode_wav(&bytes)
}

pub fn write_audio(audio: &AudioSignal, path: impl AsRef<Path>) -> CliResult<()> {
    std::fs::write(path.as_ref(), encode_wav(audio)).map_err(|e| CliError::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(samples: &[i16]) -> Vec<u8> {
        let a = AudioSignal::new(8000, vec![0.0; samples.len()]).unwrap();
        let mut bytes = encode_wav(&a);
        bytes.truncate(44);
        for s in samples {
            bytes.extend_from_slice(&s.to_le_bytes());
        }
        bytes
    }

    #[test]
    fn endpoints_map_exactly() {
        let a = decode_wav(&raw(&[-32768, 32767, 0])).unwrap();
        assert_eq!(a.samples(), &[-1.0, 32767.0 / 32768.0, 0.0]);
        assert_eq!(a.sample_rate(), 8000);
    }

    #[test]
    fn writer_saturates() {
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.0), -32768);
        assert_eq!(quantize(0.5 / 32768.0), 1);
    }

    #[test]
    fn extra_chunks_are_skipped() {
        let plain = raw(&[5, -7]);
        let mut bytes = plain[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(b"abc\0");
        bytes.extend_from_slice(&plain[36..]);
        assert_eq!(decode_wav(&bytes).unwrap(), decode_wav(&plain).unwrap());
    }

    #[test]
    fn stereo_and_float_are_unsupported() {
        let mut stereo = raw(&[0, 0]);
        stereo[22] = 2;
        assert!(matches!(decode_wav(&stereo), Err(CliError::Unsupported(_))));
        let mut float = raw(&[0, 0]);
        float[20] = 3;
        assert!(matches!(decode_wav(&float), Err(CliError::Unsupported(_))));
    }

    #[test]
    fn truncated_data_is_a_parse_error() {
        let mut bytes = raw(&[1, 2, 3]);
        bytes.pop();
        assert!(matches!(decode_wav(&bytes), Err(CliError::Parse { offset: 49, .. })));
    }
}
