//! Seeded synthetic sequences: a smooth textured square moving over a
//! noisy background, with optional teleport, occlusion and scale-ramp
//! events and exact per-frame ground truth.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::{resize_bilinear, round_half_up, Frame};
use crate::geometry::BoundingBox;

use super::sequence::Sequence;

/// Declarative description of a synthetic sequence.
///
/// Parsed from flat `key = value` text; see [`SynthSpec::parse`] for the
/// key set. Positions refer to the object center.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub name: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub object_w: f64,
    pub object_h: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub vel_x: f64,
    pub vel_y: f64,
    /// Uniform background noise amplitude.
    pub noise: f64,
    pub seed: u64,
    /// Instant jump of the path by `(dx, dy)` from this frame on.
    pub teleport: Option<(usize, f64, f64)>,
    /// Frames (inclusive) during which the object is hidden.
    pub occlusion: Option<(usize, usize)>,
    /// Per-frame multiplicative size ramp over an inclusive frame range.
    pub scale_ramp: Option<(usize, usize, f64)>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            frames: 120,
            width: 320,
            height: 240,
            object_w: 40.0,
            object_h: 40.0,
            start_x: 70.0,
            start_y: 90.0,
            vel_x: 1.0,
            vel_y: 0.5,
            noise: 0.02,
            seed: 7,
            teleport: None,
            occlusion: None,
            scale_ramp: None,
        }
    }
}

impl SynthSpec {
    /// Parses `key = value` text. Unknown keys and malformed values are
    /// errors naming the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        let mut teleport_frame: Option<usize> = None;
        let mut teleport_dx = 0.0;
        let mut teleport_dy = 0.0;
        let mut occlude_from: Option<usize> = None;
        let mut occlude_to: Option<usize> = None;
        let mut ramp_from: Option<usize> = None;
        let mut ramp_to: Option<usize> = None;
        let mut ramp_factor = 1.0;

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", i + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad =
                |k: &str| Error::InvalidConfig(format!("field {k}: bad value {value:?}"));
            match key {
                "name" => spec.name = value.to_string(),
                "frames" => spec.frames = value.parse().map_err(|_| bad(key))?,
                "width" => spec.width = value.parse().map_err(|_| bad(key))?,
                "height" => spec.height = value.parse().map_err(|_| bad(key))?,
                "object_w" => spec.object_w = value.parse().map_err(|_| bad(key))?,
                "object_h" => spec.object_h = value.parse().map_err(|_| bad(key))?,
                "start_x" => spec.start_x = value.parse().map_err(|_| bad(key))?,
                "start_y" => spec.start_y = value.parse().map_err(|_| bad(key))?,
                "vel_x" => spec.vel_x = value.parse().map_err(|_| bad(key))?,
                "vel_y" => spec.vel_y = value.parse().map_err(|_| bad(key))?,
                "noise" => spec.noise = value.parse().map_err(|_| bad(key))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad(key))?,
                "teleport_frame" => teleport_frame = Some(value.parse().map_err(|_| bad(key))?),
                "teleport_dx" => teleport_dx = value.parse().map_err(|_| bad(key))?,
                "teleport_dy" => teleport_dy = value.parse().map_err(|_| bad(key))?,
                "occlude_from" => occlude_from = Some(value.parse().map_err(|_| bad(key))?),
                "occlude_to" => occlude_to = Some(value.parse().map_err(|_| bad(key))?),
                "scale_ramp_from" => ramp_from = Some(value.parse().map_err(|_| bad(key))?),
                "scale_ramp_to" => ramp_to = Some(value.parse().map_err(|_| bad(key))?),
                "scale_ramp_factor" => ramp_factor = value.parse().map_err(|_| bad(key))?,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown field {other}")));
                }
            }
        }
        if let Some(frame) = teleport_frame {
            spec.teleport = Some((frame, teleport_dx, teleport_dy));
        }
        match (occlude_from, occlude_to) {
            (Some(a), Some(b)) => spec.occlusion = Some((a, b)),
            (None, None) => {}
            _ => {
                return Err(Error::InvalidConfig(
                    "field occlude_from/occlude_to: both or neither".into(),
                ))
            }
        }
        match (ramp_from, ramp_to) {
            (Some(a), Some(b)) => spec.scale_ramp = Some((a, b, ramp_factor)),
            (None, None) => {}
            _ => {
                return Err(Error::InvalidConfig(
                    "field scale_ramp_from/scale_ramp_to: both or neither".into(),
                ))
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::InvalidConfig("field frames: must be positive".into()));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidConfig(
                "field width/height: frame too small".into(),
            ));
        }
        if self.object_w < 4.0 || self.object_h < 4.0 {
            return Err(Error::InvalidConfig(
                "field object_w/object_h: object too small".into(),
            ));
        }
        if self.object_w > self.width as f64 || self.object_h > self.height as f64 {
            return Err(Error::InvalidConfig(
                "field object_w/object_h: object larger than frame".into(),
            ));
        }
        if self.noise < 0.0 || self.noise > 0.5 {
            return Err(Error::InvalidConfig(
                "field noise: must be in [0, 0.5]".into(),
            ));
        }
        if let Some((frame, _, _)) = self.teleport {
            if frame >= self.frames {
                return Err(Error::InvalidConfig(
                    "field teleport_frame: beyond sequence end".into(),
                ));
            }
        }
        if let Some((a, b)) = self.occlusion {
            if a > b || b >= self.frames {
                return Err(Error::InvalidConfig(
                    "field occlude_from/occlude_to: bad range".into(),
                ));
            }
        }
        if let Some((a, b, f)) = self.scale_ramp {
            if a > b || b >= self.frames || f <= 0.0 {
                return Err(Error::InvalidConfig(
                    "field scale_ramp_from/scale_ramp_to/scale_ramp_factor: bad ramp".into(),
                ));
            }
        }
        Ok(())
    }

    /// Analytic object center at frame `t`.
    fn center_at(&self, t: usize) -> (f64, f64) {
        let mut cx = self.start_x + self.vel_x * t as f64;
        let mut cy = self.start_y + self.vel_y * t as f64;
        if let Some((frame, dx, dy)) = self.teleport {
            if t >= frame {
                cx += dx;
                cy += dy;
            }
        }
        (cx, cy)
    }

    /// Cumulative scale factor at frame `t`.
    fn scale_at(&self, t: usize) -> f64 {
        match self.scale_ramp {
            None => 1.0,
            Some((from, to, factor)) => {
                if t < from {
                    1.0
                } else {
                    let steps = t.min(to) - from + 1;
                    factor.powi(steps as i32)
                }
            }
        }
    }
}

/// Renders the spec into frames plus exact ground truth.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Sequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Smooth random texture: low-frequency tile upsampled once, then
    // resized per frame to the current object size.
    let tile = Array2::from_shape_fn((6, 6), |_| rng.random_range(0.3..1.0));
    let texture = resize_bilinear(&tile, 64, 64);

    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let (cx, cy) = spec.center_at(t);
        let scale = spec.scale_at(t);
        let (w, h) = (spec.object_w * scale, spec.object_h * scale);
        ground_truth.push(BoundingBox::from_center(cx, cy, w, h));

        let mut pixels = Array2::from_shape_fn((spec.height, spec.width), |_| {
            if spec.noise > 0.0 {
                (0.08 + spec.noise * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0)
            } else {
                0.08
            }
        });

        let occluded = spec
            .occlusion
            .is_some_and(|(a, b)| t >= a && t <= b);

        let wi = (round_half_up(w) as usize).max(1);
        let hi = (round_half_up(h) as usize).max(1);
        let x0 = round_half_up(cx - wi as f64 / 2.0) as i64;
        let y0 = round_half_up(cy - hi as f64 / 2.0) as i64;
        let sprite = resize_bilinear(&texture, hi, wi);
        for ty in 0..hi as i64 {
            for tx in 0..wi as i64 {
                let (py, px) = (y0 + ty, x0 + tx);
                if py >= 0 && (py as usize) < spec.height && px >= 0 && (px as usize) < spec.width
                {
                    pixels[[py as usize, px as usize]] =
                        sprite[[ty as usize, tx as usize]];
                }
            }
        }

        if occluded {
            let ow = (wi as f64 * 1.3).round() as i64;
            let oh = (hi as f64 * 1.3).round() as i64;
            let ox = round_half_up(cx - ow as f64 / 2.0) as i64;
            let oy = round_half_up(cy - oh as f64 / 2.0) as i64;
            for ty in 0..oh {
                for tx in 0..ow {
                    let (py, px) = (oy + ty, ox + tx);
                    if py >= 0
                        && (py as usize) < spec.height
                        && px >= 0
                        && (px as usize) < spec.width
                    {
                        pixels[[py as usize, px as usize]] = 0.45;
                    }
                }
            }
        }

        frames.push(Frame::new(t, pixels));
    }

    Ok(Sequence {
        name: spec.name.clone(),
        frames,
        ground_truth,
    })
}

/// Writes a sequence in the benchmark directory layout (`img/%04d.png`
/// plus 1-based `groundtruth_rect.txt`).
pub fn write_sequence(seq: &Sequence, dir: &Path) -> Result<()> {
    let img_dir = dir.join("img");
    std::fs::create_dir_all(&img_dir)?;
    for (i, frame) in seq.frames.iter().enumerate() {
        let (h, w) = frame.pixels.dim();
        let mut img = image::GrayImage::new(w as u32, h as u32);
        for y in 0..h {
            for x in 0..w {
                let v = (frame.pixels[[y, x]] * 255.0).round().clamp(0.0, 255.0) as u8;
                img.put_pixel(x as u32, y as u32, image::Luma([v]));
            }
        }
        let path = img_dir.join(format!("{:04}.png", i + 1));
        img.save(&path).map_err(|e| Error::Sequence {
            path,
            line: None,
            message: format!("failed to write image: {e}"),
        })?;
    }
    let mut gt = String::new();
    for b in &seq.ground_truth {
        gt.push_str(&format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h));
    }
    std::fs::write(dir.join("groundtruth_rect.txt"), gt)?;
    Ok(())
}
