//! File formats: mono WAV audio and the `MELB` mel container.

mod melb;
mod wav;

pub use melb::{read_melb, read_melb_from, write_melb, write_melb_to, MelFile, MELB_MAGIC, MELB_VERSION};
pub use wav::{read_wav, write_wav, Audio, SUPPORTED_SAMPLE_RATES};
