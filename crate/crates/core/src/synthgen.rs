//! Deterministic synthetic benchmark generator: binary shape masks (fixed
//! shapes plus random convex hulls), random-walk motion with border
//! reflection, per-frame impulse noise, and tight ground-truth boxes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hull::{interior_prune, monotone_chain, Point, Polygon};
use crate::raster::{add_salt_pepper, Image, Patch};
use crate::tracker::TrackBox;

/// The seven object types of the synthetic suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Circle,
    Rectangle,
    Triangle,
    Hexagram,
    Hull5,
    Hull7,
    Hull9,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 7] = [
        ShapeKind::Circle,
        ShapeKind::Rectangle,
        ShapeKind::Triangle,
        ShapeKind::Hexagram,
        ShapeKind::Hull5,
        ShapeKind::Hull7,
        ShapeKind::Hull9,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Hexagram => "hexagram",
            ShapeKind::Hull5 => "hull5",
            ShapeKind::Hull7 => "hull7",
            ShapeKind::Hull9 => "hull9",
        }
    }

    /// Number of random points for the hull shapes.
    fn hull_points(&self) -> Option<usize> {
        match self {
            ShapeKind::Hull5 => Some(5),
            ShapeKind::Hull7 => Some(7),
            ShapeKind::Hull9 => Some(9),
            _ => None,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ShapeKind> {
        ShapeKind::ALL
            .iter()
            .copied()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown shape '{s}'")))
    }
}

/// Suite parameters. Defaults reproduce the full 105-video suite; `desk`
/// keeps one video per shape and size so the whole suite runs in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub frame_width: usize,
    pub frame_height: usize,
    pub noise_density: f64,
    pub object_sizes: Vec<u32>,
    pub videos_per_shape: u32,
    pub frames_per_video: u32,
    pub seed: u64,
}

impl SynthSpec {
    pub fn full(seed: u64) -> Self {
        SynthSpec {
            frame_width: 200,
            frame_height: 200,
            noise_density: 0.01,
            object_sizes: vec![15, 20, 25],
            videos_per_shape: 5,
            frames_per_video: 100,
            seed,
        }
    }

    pub fn desk(seed: u64) -> Self {
        SynthSpec {
            videos_per_shape: 1,
            ..SynthSpec::full(seed)
        }
    }

    /// Every video of the suite in deterministic order: shapes, then sizes,
    /// then video index.
    pub fn video_plan(&self) -> Vec<VideoKey> {
        let mut plan = Vec::new();
        for shape in ShapeKind::ALL {
            for &size in &self.object_sizes {
                for index in 0..self.videos_per_shape {
                    plan.push(VideoKey { shape, size, index });
                }
            }
        }
        plan
    }
}

/// Identity of one video within a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VideoKey {
    pub shape: ShapeKind,
    pub size: u32,
    pub index: u32,
}

impl VideoKey {
    pub fn dir_name(&self) -> String {
        format!("{}_s{}_v{:02}", self.shape, self.size, self.index)
    }

    /// Independent generator stream per video, derived from the suite seed
    /// so any video can be regenerated in isolation.
    pub fn stream_seed(&self, suite_seed: u64) -> u64 {
        let shape_idx = ShapeKind::ALL
            .iter()
            .position(|k| *k == self.shape)
            .expect("shape is in ALL") as u64;
        splitmix(&[suite_seed, shape_idx, self.size as u64, self.index as u64])
    }
}

fn splitmix(parts: &[u64]) -> u64 {
    let mut z: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Per-frame ground-truth boxes, one per frame including the first.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub boxes: Vec<TrackBox>,
}

impl GroundTruth {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,x,y,w,h\n");
        for (i, b) in self.boxes.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", i, b.x, b.y, b.w, b.h));
        }
        out
    }
}

const SUPPORTED_SIZES: [u32; 3] = [15, 20, 25];
const RASTER_EPS: f64 = 1e-9;

fn polygon_mask(size: usize, polys: &[Polygon]) -> Patch {
    Patch::from_fn(size, size, |x, y| {
        let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
        if polys.iter().any(|p| p.contains(c, RASTER_EPS)) {
            1.0
        } else {
            0.0
        }
    })
}

fn equilateral(center: Point, radius: f64, apex_angle: f64) -> Vec<Point> {
    (0..3)
        .map(|k| {
            let a = apex_angle + k as f64 * std::f64::consts::TAU / 3.0;
            Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect()
}

/// Binary `size x size` object mask. Hull shapes redraw their random points
/// until the hull is non-degenerate and covers at least one pixel center.
pub fn rasterize(kind: ShapeKind, size: u32, rng: &mut impl Rng) -> Result<Patch> {
    if !SUPPORTED_SIZES.contains(&size) {
        return Err(Error::InvalidArgument(format!(
            "unsupported object size {size}, expected one of {SUPPORTED_SIZES:?}"
        )));
    }
    let s = size as usize;
    let sf = size as f64;
    let center = Point::new(sf / 2.0, sf / 2.0);

    let mask = match kind {
        ShapeKind::Rectangle => Patch::from_fn(s, s, |_, _| 1.0),
        ShapeKind::Circle => {
            let r2 = (sf / 2.0) * (sf / 2.0);
            Patch::from_fn(s, s, |x, y| {
                let dx = x as f64 + 0.5 - center.x;
                let dy = y as f64 + 0.5 - center.y;
                if dx * dx + dy * dy <= r2 {
                    1.0
                } else {
                    0.0
                }
            })
        }
        ShapeKind::Triangle => {
            let tri = monotone_chain(&[
                Point::new(sf / 2.0, 0.0),
                Point::new(0.0, sf),
                Point::new(sf, sf),
            ])?;
            polygon_mask(s, &[tri])
        }
        ShapeKind::Hexagram => {
            let r = sf / 2.0;
            let quarter = std::f64::consts::FRAC_PI_2;
            // y grows downward, so the upward-pointing triangle has its apex
            // at angle -90 degrees.
            let up = monotone_chain(&equilateral(center, r, -quarter))?;
            let down = monotone_chain(&equilateral(center, r, quarter))?;
            polygon_mask(s, &[up, down])
        }
        ShapeKind::Hull5 | ShapeKind::Hull7 | ShapeKind::Hull9 => {
            let n = kind.hull_points().expect("hull shape");
            loop {
                let points: Vec<Point> = (0..n)
                    .map(|_| Point::new(rng.random_range(0.0..sf), rng.random_range(0.0..sf)))
                    .collect();
                let pruned = interior_prune(&points);
                let Ok(hull) = monotone_chain(&pruned) else {
                    continue;
                };
                let mask = polygon_mask(s, &[hull]);
                // redraw slivers: an object of nominal size s must roughly
                // fill its size class (span most of the square on both
                // axes, carry real area) or it is not a size-s object
                let count = mask.values.iter().filter(|&&v| v > 0.0).count();
                let big_enough = mask_bbox(&mask).is_some_and(|(_, _, w, h)| {
                    w * 10 >= s * 7 && h * 10 >= s * 7 && count * 10 >= s * s * 3
                });
                if big_enough {
                    break mask;
                }
            }
        }
    };
    Ok(mask)
}

/// Tight bounding box (x, y, w, h) of the set pixels of a binary mask.
pub fn mask_bbox(mask: &Patch) -> Option<(usize, usize, usize, usize)> {
    let mut min_x = usize::MAX;
    let mut min_y = usize::MAX;
    let mut max_x = 0usize;
    let mut max_y = 0usize;
    let mut any = false;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) > 0.0 {
                any = true;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    any.then(|| (min_x, min_y, max_x - min_x + 1, max_y - min_y + 1))
}

/// Per-frame top-left positions: uniform start, then steps drawn uniformly
/// from {-2..2} per axis with reflection at the borders so the object stays
/// fully inside the frame.
pub fn gen_trajectory(
    rng: &mut impl Rng,
    frames: u32,
    frame_width: usize,
    frame_height: usize,
    obj_size: u32,
) -> Result<Vec<(i32, i32)>> {
    if frames < 1 {
        return Err(Error::InvalidArgument("need at least one frame".into()));
    }
    if obj_size as usize > frame_width || obj_size as usize > frame_height {
        return Err(Error::InvalidArgument(format!(
            "object of size {obj_size} does not fit a {frame_width}x{frame_height} frame"
        )));
    }
    let max_x = (frame_width - obj_size as usize) as i32;
    let max_y = (frame_height - obj_size as usize) as i32;

    let reflect = |mut v: i32, max: i32| -> i32 {
        if max == 0 {
            return 0;
        }
        while v < 0 || v > max {
            if v < 0 {
                v = -v;
            } else {
                v = 2 * max - v;
            }
        }
        v
    };

    let mut positions = Vec::with_capacity(frames as usize);
    let mut x = rng.random_range(0..=max_x);
    let mut y = rng.random_range(0..=max_y);
    positions.push((x, y));
    for _ in 1..frames {
        let dx = rng.random_range(-2..=2);
        let dy = rng.random_range(-2..=2);
        x = reflect(x + dx, max_x);
        y = reflect(y + dy, max_y);
        positions.push((x, y));
    }
    Ok(positions)
}

/// Render one video: black frames, the object mask painted at intensity 1.0
/// along the trajectory, fresh impulse noise per frame, and the tight
/// object box as ground truth.
pub fn render_video(
    spec: &SynthSpec,
    kind: ShapeKind,
    size: u32,
    rng: &mut impl Rng,
) -> Result<(Vec<Image>, GroundTruth)> {
    let mask = rasterize(kind, size, rng)?;
    let (bx, by, bw, bh) = mask_bbox(&mask).expect("rasterize yields a nonempty mask");
    let positions = gen_trajectory(
        rng,
        spec.frames_per_video,
        spec.frame_width,
        spec.frame_height,
        size,
    )?;

    let mut frames = Vec::with_capacity(positions.len());
    let mut boxes = Vec::with_capacity(positions.len());
    for &(px, py) in &positions {
        let mut img = Image::new(spec.frame_width, spec.frame_height);
        for my in 0..mask.height {
            for mx in 0..mask.width {
                if mask.get(mx, my) > 0.0 {
                    img.set(px as usize + mx, py as usize + my, 1.0);
                }
            }
        }
        frames.push(add_salt_pepper(&img, spec.noise_density, rng)?);
        boxes.push(TrackBox {
            x: px + bx as i32,
            y: py + by as i32,
            w: bw as i32,
            h: bh as i32,
        });
    }
    Ok((frames, GroundTruth { boxes }))
}

/// One generated video on disk.
#[derive(Debug, Clone)]
pub struct VideoManifest {
    pub dir: PathBuf,
    pub key: VideoKey,
    pub frames: u32,
}

/// Generate the whole suite under `out_dir`: one directory per video with
/// `frame_NNNN.pgm` files, `gt.csv` and `meta.txt`.
pub fn generate_dataset(spec: &SynthSpec, out_dir: &Path) -> Result<Vec<VideoManifest>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifests = Vec::new();
    for key in spec.video_plan() {
        let stream = key.stream_seed(spec.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let (frames, gt) = render_video(spec, key.shape, key.size, &mut rng)?;

        let dir = out_dir.join(key.dir_name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, frame) in frames.iter().enumerate() {
            crate::pgm::write_pgm(frame, &dir.join(format!("frame_{i:04}.pgm")))?;
        }
        let gt_path = dir.join("gt.csv");
        fs::write(&gt_path, gt.to_csv()).map_err(|e| Error::io(&gt_path, e))?;
        let meta = format!(
            "seed={}\nstream_seed={}\nshape={}\nsize={}\nvideo={}\n",
            spec.seed, stream, key.shape, key.size, key.index
        );
        let meta_path = dir.join("meta.txt");
        fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;

        manifests.push(VideoManifest {
            dir,
            key,
            frames: spec.frames_per_video,
        });
    }
    Ok(manifests)
}
