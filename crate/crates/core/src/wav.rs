//! WAV input/output: 32-bit float, mono or stereo.

use std::path::Path;

use crate::{Error, Result};

/// Write a 2-channel 32-bit float WAV.
pub fn write_stereo(path: &Path, left: &[f64], right: &[f64], sample_rate: u32) -> Result<()> {
    if left.len() != right.len() {
        return Err(Error::contract("stereo channels must have equal length"));
    }
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for (l, r) in left.iter().zip(right) {
        writer.write_sample(*l as f32)?;
        writer.write_sample(*r as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Read a WAV as (channels, sample_rate). Integer formats are scaled to
/// [-1, 1].
pub fn read(path: &Path) -> Result<(Vec<Vec<f64>>, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let n_ch = spec.channels as usize;
    let mut channels = vec![Vec::new(); n_ch];
    match spec.sample_format {
        hound::SampleFormat::Float => {
            for (i, s) in reader.samples::<f32>().enumerate() {
                channels[i % n_ch].push(s? as f64);
            }
        }
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            for (i, s) in reader.samples::<i32>().enumerate() {
                channels[i % n_ch].push(s? as f64 / scale);
            }
        }
    }
    Ok((channels, spec.sample_rate))
}

/// Read a WAV as mono; stereo input is downmixed by averaging (flagged by
/// the returned bool).
pub fn read_mono(path: &Path) -> Result<(Vec<f64>, u32, bool)> {
    let (channels, sr) = read(path)?;
    match channels.len() {
        0 => Err(Error::parse("wav has no channels")),
        1 => Ok((channels.into_iter().next().unwrap(), sr, false)),
        _ => {
            let n = channels[0].len();
            let k = channels.len() as f64;
            let mono = (0..n)
                .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / k)
                .collect();
            Ok((mono, sr, true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereo_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let l: Vec<f64> = (0..64).map(|i| (i as f64 / 64.0).sin()).collect();
        let r: Vec<f64> = l.iter().map(|x| -x).collect();
        write_stereo(&path, &l, &r, 48000).unwrap();
        let (ch, sr) = read(&path).unwrap();
        assert_eq!(sr, 48000);
        assert_eq!(ch.len(), 2);
        for i in 0..64 {
            assert!((ch[0][i] - l[i]).abs() < 1e-6);
            assert!((ch[1][i] - r[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn downmix_flags_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        write_stereo(&path, &[1.0, 0.0], &[0.0, 1.0], 16000).unwrap();
        let (mono, _, downmixed) = read_mono(&path).unwrap();
        assert!(downmixed);
        assert!((mono[0] - 0.5).abs() < 1e-6);
    }
}
