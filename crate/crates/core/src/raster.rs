//! Grayscale raster substrate: image container, subpixel sampling,
//! derivative fields and impulse noise.
//!
//! Intensities are `f64` normalized to `[0, 1]`. Sampling and differencing
//! both clamp to the border so a tracking box sliding off the frame degrades
//! to flat data instead of poisoning the solver with NaNs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tracker::TrackBox;

/// A 2-D grayscale intensity grid, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// All-black image.
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Wrap an existing row-major buffer. Fails when the length does not
    /// match or any value falls outside `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "image buffer has {} values, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Evaluate `f(x, y)` per pixel in row-major order, clamping the result
    /// into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        debug_assert!((0.0..=1.0).contains(&v));
        self.data[y * self.width + x] = v;
    }

    /// Bilinear interpolation with clamp-to-edge semantics. Exact at integer
    /// coordinates; out-of-range coordinates are clamped to the border first.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);

        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;

        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);

        let v00 = self.get(x0, y0);
        let v01 = self.get(x1, y0);
        let v10 = self.get(x0, y1);
        let v11 = self.get(x1, y1);

        let top = v00 + fx * (v01 - v00);
        let bot = v10 + fx * (v11 - v10);
        top + fy * (bot - top)
    }

    /// Sample the translated window `(box.x + tx .. , box.y + ty ..)`.
    ///
    /// Patch value at local `(x, y)` is
    /// `sample_bilinear(box.x + x + tx, box.y + y + ty)`; the identity warp
    /// over an in-bounds box reduces to a direct sub-image copy.
    pub fn extract_warped_patch(&self, bbox: &TrackBox, p: crate::optim::WarpParams) -> Patch {
        let w = bbox.w as usize;
        let h = bbox.h as usize;
        let ox = bbox.x as f64 + p.tx;
        let oy = bbox.y as f64 + p.ty;
        let mut values = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                values.push(self.sample_bilinear(ox + x as f64, oy + y as f64));
            }
        }
        Patch {
            origin: (ox, oy),
            width: w,
            height: h,
            values,
        }
    }
}

/// Salt-and-pepper impulse noise: each pixel is independently hit with
/// probability `density` and then forced to 1.0 or 0.0 with equal odds.
/// Returns a new image; the generator stream drives all randomness.
pub fn add_salt_pepper(img: &Image, density: f64, rng: &mut impl Rng) -> Result<Image> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidArgument(format!(
            "noise density {density} outside [0, 1]"
        )));
    }
    let mut out = img.clone();
    for v in &mut out.data {
        if rng.random::<f64>() < density {
            *v = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

/// A rectangular window of real intensities cut out of a frame.
///
/// `origin` records the (possibly fractional) frame coordinates of the
/// top-left sample. Values carry no range constraint: derivative tests and
/// synthetic fields use patches directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin: (f64, f64),
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Patch {
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Patch {
            origin: (0.0, 0.0),
            width,
            height,
            values,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.values[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Patch) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// First derivatives: central differences in the interior, one-sided at
    /// the borders. Requires at least 3x3 support.
    pub fn gradient(&self) -> Result<GradField> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::Dimension(format!(
                "gradient needs a patch of at least 3x3, got {}x{}",
                self.width, self.height
            )));
        }
        let gx = diff_x(&self.values, self.width, self.height);
        let gy = diff_y(&self.values, self.width, self.height);
        Ok(GradField {
            width: self.width,
            height: self.height,
            gx,
            gy,
        })
    }

    /// Second derivatives by repeated differencing; the mixed derivatives are
    /// computed both ways (x-then-y and y-then-x) and must agree.
    /// Requires at least 5x5 support.
    pub fn second_derivatives(&self) -> Result<SecondDerivField> {
        if self.width < 5 || self.height < 5 {
            return Err(Error::Dimension(format!(
                "second derivatives need a patch of at least 5x5, got {}x{}",
                self.width, self.height
            )));
        }
        let gx = diff_x(&self.values, self.width, self.height);
        let gy = diff_y(&self.values, self.width, self.height);
        let ixx = diff_x(&gx, self.width, self.height);
        let iyy = diff_y(&gy, self.width, self.height);
        let ixy = diff_y(&gx, self.width, self.height);
        let iyx = diff_x(&gy, self.width, self.height);
        debug_assert!(
            ixy.iter()
                .zip(&iyx)
                .all(|(a, b)| (a - b).abs() <= 1e-9),
            "mixed partial derivatives disagree"
        );
        Ok(SecondDerivField {
            width: self.width,
            height: self.height,
            ixx,
            ixy,
            iyx,
            iyy,
        })
    }
}

/// Per-pixel first derivatives of a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradField {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.gx[i], self.gy[i])
    }

    pub fn len(&self) -> usize {
        self.gx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gx.is_empty()
    }
}

/// Per-pixel second derivatives of a patch; `ixy` and `iyx` are kept
/// separate because the normalized Newton Hessian sums them independently.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivField {
    pub width: usize,
    pub height: usize,
    pub ixx: Vec<f64>,
    pub ixy: Vec<f64>,
    pub iyx: Vec<f64>,
    pub iyy: Vec<f64>,
}

fn diff_x(values: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        let row = y * width;
        out[row] = values[row + 1] - values[row];
        for x in 1..width - 1 {
            out[row + x] = (values[row + x + 1] - values[row + x - 1]) * 0.5;
        }
        out[row + width - 1] = values[row + width - 1] - values[row + width - 2];
    }
    out
}

fn diff_y(values: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for x in 0..width {
        out[x] = values[width + x] - values[x];
        for y in 1..height - 1 {
            out[y * width + x] = (values[(y + 1) * width + x] - values[(y - 1) * width + x]) * 0.5;
        }
        let last = (height - 1) * width + x;
        out[last] = values[last] - values[last - width];
    }
    out
}
