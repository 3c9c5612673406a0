//! Precomputed optical flow in the Middlebury `.flo` layout: float32 tag
//! 202021.25 (`PIEH`), int32 width, int32 height, then width*height (dx, dy)
//! float32 pairs, row-major, all little-endian.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::superpixels::SuperpixelFrame;

const FLO_TAG: f32 = 202021.25;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 2]>,
}

pub fn flow_file_name(frame: usize) -> String {
    format!("flow_{frame:05}.flo")
}

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + flow.data.len() * 8);
    out.extend_from_slice(&FLO_TAG.to_le_bytes());
    out.extend_from_slice(&(flow.width as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for v in &flow.data {
        out.extend_from_slice(&v[0].to_le_bytes());
        out.extend_from_slice(&v[1].to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8], source: &Path) -> Result<FlowField> {
    let bad = |message: &str| Error::Parse {
        path: source.to_path_buf(),
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 12 {
        return Err(bad("truncated flow header"));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    if f32::from_le_bytes(word(0)) != FLO_TAG {
        return Err(bad("bad flow tag"));
    }
    let w = i32::from_le_bytes(word(4));
    let h = i32::from_le_bytes(word(8));
    if w <= 0 || h <= 0 {
        return Err(bad("non-positive flow dimensions"));
    }
    let n = w as usize * h as usize;
    if bytes.len() != 12 + n * 8 {
        return Err(bad("flow payload length does not match dimensions"));
    }
    let data = (0..n)
        .map(|k| {
            let o = 12 + 8 * k;
            [f32::from_le_bytes(word(o)), f32::from_le_bytes(word(o + 4))]
        })
        .collect();
    Ok(FlowField {
        width: w as u32,
        height: h as u32,
        data,
    })
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes, path)
}

pub fn write_flo(flow: &FlowField, path: &Path) -> Result<()> {
    fs::write(path, encode_flo(flow)).map_err(|e| Error::io(path, e))
}

/// Loads `flow_NNNNN.flo` for every frame from `dir`.
pub fn load_flow_dir(dir: &Path, frame_count: usize, width: u32, height: u32) -> Result<Vec<FlowField>> {
    (0..frame_count)
        .map(|t| {
            let path: PathBuf = dir.join(flow_file_name(t));
            let f = read_flo(&path)?;
            if (f.width, f.height) != (width, height) {
                return Err(Error::SizeMismatch {
                    path,
                    got_w: f.width,
                    got_h: f.height,
                    want_w: width,
                    want_h: height,
                });
            }
            Ok(f)
        })
        .collect()
}

/// Orientation in [0, pi) of each superpixel's mean motion vector; 0 when the
/// mean is the zero vector.
pub fn flow_orientations(flow: &FlowField, frame: &SuperpixelFrame) -> Result<Vec<f64>> {
    if (flow.width, flow.height) != (frame.width(), frame.height()) {
        return Err(Error::Dimension("flow field and frame differ in size".into()));
    }
    let mut sum = vec![[0.0f64; 2]; frame.len()];
    for (&l, v) in frame.labels().iter().zip(&flow.data) {
        sum[l as usize][0] += v[0] as f64;
        sum[l as usize][1] += v[1] as f64;
    }
    Ok(sum
        .into_iter()
        .map(|[dx, dy]| {
            if dx == 0.0 && dy == 0.0 {
                0.0
            } else {
                let t = dy.atan2(dx).rem_euclid(PI);
                if t >= PI {
                    0.0
                } else {
                    t
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::LabImage;
    use crate::superpixels::segment_frame;

    #[test]
    fn flo_round_trip() {
        let flow = FlowField {
            width: 3,
            height: 2,
            data: (0..6).map(|i| [i as f32 * 0.5, -(i as f32)]).collect(),
        };
        let bytes = encode_flo(&flow);
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(bytes.len(), 12 + 48);
        assert_eq!(decode_flo(&bytes, Path::new("x.flo")).unwrap(), flow);
        assert!(decode_flo(&bytes[..20], Path::new("x.flo")).is_err());
    }

    #[test]
    fn orientations_fold_direction() {
        let frame = segment_frame(&LabImage::from_fn(16, 16, |_, _| [50.0, 0.0, 0.0]), 16, 10.0).unwrap();
        let mk = |v: [f32; 2]| FlowField {
            width: 16,
            height: 16,
            data: vec![v; 256],
        };
        assert_eq!(flow_orientations(&mk([1.0, 0.0]), &frame).unwrap(), vec![0.0]);
        assert_eq!(flow_orientations(&mk([-1.0, 0.0]), &frame).unwrap(), vec![0.0]);
        let up = flow_orientations(&mk([0.0, -2.0]), &frame).unwrap()[0];
        assert!((up - PI / 2.0).abs() < 1e-12);
        assert_eq!(flow_orientations(&mk([0.0, 0.0]), &frame).unwrap(), vec![0.0]);
    }
}
