//! File codecs: Netpbm images and 16-bit PCM WAV audio.

pub mod pnm;
pub mod wav;

pub use pnm::{decode_pnm, encode_pnm, read_image, write_image};
pub use wav::{decode_wav, encode_wav, read_audio, write_audio};
