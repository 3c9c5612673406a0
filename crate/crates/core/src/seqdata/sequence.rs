use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;

use crate::error::{Error, Result};

/// Ordered frames sharing one size. Volumes are ingested as slice sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSequence {
    width: u32,
    height: u32,
    frames: Vec<RgbImage>,
}

impl ImageSequence {
    pub fn new(frames: Vec<RgbImage>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidInput("sequence needs at least one frame".into()))?;
        let (width, height) = first.dimensions();
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("frames must be non-empty".into()));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.dimensions() != (width, height) {
                return Err(Error::SizeMismatch {
                    path: PathBuf::from(format!("<frame {i}>")),
                    got_w: f.width(),
                    got_h: f.height(),
                    want_w: width,
                    want_h: height,
                });
            }
        }
        Ok(Self {
            width,
            height,
            frames,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[RgbImage] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> &RgbImage {
        &self.frames[index]
    }
}

/// Reads a manifest: one image path per line, `#` starts a comment, blank
/// lines ignored. Relative paths resolve against the manifest's directory.
pub fn read_manifest(manifest_path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));
    let paths: Vec<PathBuf> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::EmptyManifest(manifest_path.to_path_buf()));
    }
    Ok(paths)
}

pub fn load_sequence(manifest_path: &Path) -> Result<ImageSequence> {
    let paths = read_manifest(manifest_path)?;
    let mut frames = Vec::with_capacity(paths.len());
    let mut size: Option<(u32, u32)> = None;
    for path in &paths {
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "file listed in manifest does not exist"),
            ));
        }
        let img = image::open(path)
            .map_err(|e| Error::Decode {
                path: path.clone(),
                message: e.to_string(),
            })?
            .to_rgb8();
        match size {
            None => size = Some(img.dimensions()),
            Some((w, h)) if (w, h) != img.dimensions() => {
                return Err(Error::SizeMismatch {
                    path: path.clone(),
                    got_w: img.width(),
                    got_h: img.height(),
                    want_w: w,
                    want_h: h,
                })
            }
            Some(_) => {}
        }
        frames.push(img);
    }
    ImageSequence::new(frames)
}

/// Writes frames as `frame_NNNNN.png` plus a `manifest.txt` listing them.
pub fn write_sequence(sequence: &ImageSequence, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (i, frame) in sequence.frames().iter().enumerate() {
        let name = format!("frame_{i:05}.png");
        let path = dir.join(&name);
        frame.save(&path).map_err(|e| Error::Decode {
            path: path.clone(),
            message: e.to_string(),
        })?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
