//! Sequence ingestion in the common benchmark directory layout:
//! an `img/` folder of numbered image files plus `groundtruth_rect.txt`
//! with one `x,y,w,h` line per frame (comma or tab separated, 1-based
//! coordinates).

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;

/// An ordered set of frames with per-frame ground truth.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<BoundingBox>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The frame-0 box the trackers initialize from.
    pub fn initial_box(&self) -> Result<BoundingBox> {
        self.ground_truth.first().copied().ok_or(Error::EmptySequence)
    }
}

/// Loads a sequence directory, converting 1-based ground truth to the
/// 0-based pixel convention and ordering frames by file number.
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());

    let img_dir = dir.join("img");
    if !img_dir.is_dir() {
        return Err(Error::Sequence {
            path: img_dir,
            line: None,
            message: "missing img/ directory".into(),
        });
    }
    let gt_path = dir.join("groundtruth_rect.txt");
    if !gt_path.is_file() {
        return Err(Error::Sequence {
            path: gt_path,
            line: None,
            message: "missing ground-truth file".into(),
        });
    }

    let mut numbered: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(&img_dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if !matches!(ext.as_str(), "jpg" | "jpeg" | "png" | "bmp") {
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
        let number = digits.parse::<u64>().map_err(|_| Error::Sequence {
            path: path.clone(),
            line: None,
            message: "image filename carries no frame number".into(),
        })?;
        numbered.push((number, path));
    }
    if numbered.is_empty() {
        return Err(Error::Sequence {
            path: img_dir,
            line: None,
            message: "no image files found".into(),
        });
    }
    numbered.sort_by_key(|(n, _)| *n);

    let ground_truth = parse_ground_truth(&gt_path)?;
    if ground_truth.len() != numbered.len() {
        return Err(Error::Sequence {
            path: gt_path,
            line: None,
            message: format!(
                "{} images but {} ground-truth lines",
                numbered.len(),
                ground_truth.len()
            ),
        });
    }

    let mut frames = Vec::with_capacity(numbered.len());
    for (index, (_, path)) in numbered.iter().enumerate() {
        let img = image::open(path).map_err(|e| Error::Sequence {
            path: path.clone(),
            line: None,
            message: format!("unreadable image: {e}"),
        })?;
        let rgb = img.to_rgb8();
        frames.push(Frame::from_rgb8(
            index,
            rgb.width() as usize,
            rgb.height() as usize,
            rgb.as_raw(),
        ));
    }

    Ok(Sequence {
        name,
        frames,
        ground_truth,
    })
}

fn parse_ground_truth(path: &Path) -> Result<Vec<BoundingBox>> {
    let text = std::fs::read_to_string(path)?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c| c == ',' || c == '\t')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(Error::Sequence {
                path: path.to_path_buf(),
                line: Some(line_no),
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(fields.iter()) {
            *slot = field.parse().map_err(|_| Error::Sequence {
                path: path.to_path_buf(),
                line: Some(line_no),
                message: format!("not a number: {field:?}"),
            })?;
        }
        let [x, y, w, h] = values;
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Sequence {
                path: path.to_path_buf(),
                line: Some(line_no),
                message: format!("non-positive box size {w}x{h}"),
            });
        }
        // 1-based file convention to 0-based pixels.
        boxes.push(BoundingBox::new(x - 1.0, y - 1.0, w, h));
    }
    Ok(boxes)
}
