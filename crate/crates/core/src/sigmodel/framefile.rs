//! Frame files consumed by the `estimate` CLI command.
//!
//! JSON frames embed the system config and store samples as `[re, im]`
//! pairs. The binary alternative is a 32-byte header (magic "CFOF", version,
//! N, N_r as little-endian u32, 16 reserved bytes) followed by interleaved
//! little-endian f64 re/im samples, antenna by antenna; it carries no config.

use super::ReceivedFrame;
use crate::error::{Error, Result};
use crate::numkit::ComplexVec;
use crate::seqdesign::{SystemConfig, SystemConfigFile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const FRAME_MAGIC: &[u8; 4] = b"CFOF";
pub const FRAME_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FrameJson {
    config: SystemConfigFile,
    y: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_cfo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_var: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snr_db: Option<f64>,
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> ComplexVec {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Serialize a frame (with its config) as JSON.
pub fn write_frame_json(
    w: &mut impl Write,
    cfg: &SystemConfig,
    frame: &ReceivedFrame,
) -> Result<()> {
    let doc = FrameJson {
        config: SystemConfigFile::from_config(cfg),
        y: frame.samples.iter().map(|s| to_pairs(s)).collect(),
        true_cfo: frame.true_cfo,
        noise_var: Some(frame.noise_var),
        snr_db: frame.snr_db,
    };
    serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Parse a JSON frame, returning the embedded config alongside the frame.
pub fn read_frame_json(r: &mut impl Read) -> Result<(SystemConfig, ReceivedFrame)> {
    let doc: FrameJson =
        serde_json::from_reader(r).map_err(|e| Error::Format(format!("frame JSON: {e}")))?;
    let cfg = doc.config.into_config()?;
    if doc.y.len() != cfg.rx_antennas {
        return Err(Error::Format(format!(
            "frame has {} antennas, config says {}",
            doc.y.len(),
            cfg.rx_antennas
        )));
    }
    let samples: Vec<ComplexVec> = doc.y.iter().map(|s| from_pairs(s)).collect();
    if samples.iter().any(|s| s.len() != cfg.subcarriers) {
        return Err(Error::Format("frame sample length does not match N".into()));
    }
    Ok((
        cfg,
        ReceivedFrame {
            samples,
            true_cfo: doc.true_cfo,
            noise_var: doc.noise_var.unwrap_or(0.0),
            snr_db: doc.snr_db,
        },
    ))
}

/// Serialize a frame in the binary format.
pub fn write_frame_binary(w: &mut impl Write, frame: &ReceivedFrame) -> Result<()> {
    let n = frame.samples.first().map_or(0, |s| s.len());
    let mut header = [0u8; 32];
    header[..4].copy_from_slice(FRAME_MAGIC);
    header[4..8].copy_from_slice(&FRAME_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(n as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(frame.samples.len() as u32).to_le_bytes());
    w.write_all(&header)?;
    for antenna in &frame.samples {
        for v in antenna {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parse a binary frame. The caller must supply the config separately.
pub fn read_frame_binary(r: &mut impl Read) -> Result<ReceivedFrame> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..4] != FRAME_MAGIC {
        return Err(Error::Format("bad frame magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FRAME_VERSION {
        return Err(Error::Format(format!(
            "unsupported frame version {version}"
        )));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let rx = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut samples = Vec::with_capacity(rx);
    let mut buf = vec![0u8; n * 16];
    for _ in 0..rx {
        r.read_exact(&mut buf)?;
        let antenna: ComplexVec = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        samples.push(antenna);
    }
    Ok(ReceivedFrame {
        samples,
        true_cfo: None,
        noise_var: 0.0,
        snr_db: None,
    })
}

/// Load a frame from disk, sniffing the format from the magic bytes.
/// Binary frames need `fallback_cfg`; JSON frames carry their own config.
pub fn read_frame_path(
    path: &Path,
    fallback_cfg: Option<&SystemConfig>,
) -> Result<(SystemConfig, ReceivedFrame)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == FRAME_MAGIC {
        let cfg = fallback_cfg.ok_or_else(|| {
            Error::Config("binary frames carry no config; pass one explicitly".into())
        })?;
        let frame = read_frame_binary(&mut &bytes[..])?;
        if frame.samples.len() != cfg.rx_antennas
            || frame.samples.iter().any(|s| s.len() != cfg.subcarriers)
        {
            return Err(Error::Format(
                "binary frame dimensions do not match the supplied config".into(),
            ));
        }
        Ok((cfg.clone(), frame))
    } else {
        read_frame_json(&mut &bytes[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::seqdesign::test_configs::small_config;
    use crate::seqdesign::{make_training_set, TrainingVariant};
    use crate::sigmodel::{gen_channel, transmit, uniform_power_delay_profile};

    fn sample_frame() -> (SystemConfig, ReceivedFrame) {
        let cfg = small_config();
        let mut rng = substream(9, "pilots", &[0]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        let profile = uniform_power_delay_profile(cfg.channel_taps);
        let ch = gen_channel(&cfg, &profile, &mut rng).unwrap();
        let frame = transmit(&cfg, &ts, &ch, 0.42, 0.1, &mut rng).unwrap();
        (cfg, frame)
    }

    #[test]
    fn json_roundtrip_preserves_samples() {
        let (cfg, frame) = sample_frame();
        let mut buf = Vec::new();
        write_frame_json(&mut buf, &cfg, &frame).unwrap();
        let (cfg2, frame2) = read_frame_json(&mut &buf[..]).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(frame2.true_cfo, Some(0.42));
        for (a, b) in frame.samples.iter().zip(&frame2.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_roundtrip_is_bit_exact() {
        let (cfg, frame) = sample_frame();
        let mut buf = Vec::new();
        write_frame_binary(&mut buf, &frame).unwrap();
        assert_eq!(&buf[..4], b"CFOF");
        assert_eq!(buf.len(), 32 + cfg.rx_antennas * cfg.subcarriers * 16);
        let frame2 = read_frame_binary(&mut &buf[..]).unwrap();
        for (a, b) in frame.samples.iter().zip(&frame2.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_without_config_is_an_error() {
        let (_, frame) = sample_frame();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.bin");
        let mut f = std::fs::File::create(&path).unwrap();
        write_frame_binary(&mut f, &frame).unwrap();
        assert!(read_frame_path(&path, None).is_err());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let bytes = vec![0u8; 64];
        assert!(read_frame_binary(&mut &bytes[..]).is_err());
    }
}
