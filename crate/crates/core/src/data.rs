//! Image data: IDX ingestion, splits, desk-scale reduction, synthetic
//! fallback digits and salt-and-pepper corruption.
//!
//! Images are rows of an `N x d` matrix with entries in `[0, 1]`, flattened
//! row-major from square `side x side` pictures.

use std::fs;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const MNIST_TRAIN_ROWS: usize = 60_000;
pub const MNIST_TRAIN_SPLIT: usize = 50_000;
pub const MNIST_TEST_ROWS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Array2<f64>,
    pub valid: Array2<f64>,
    pub test: Array2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const fn new(train: usize, valid: usize, test: usize) -> Self {
        Self { train, valid, test }
    }
}

impl Dataset {
    pub fn new(train: Array2<f64>, valid: Array2<f64>, test: Array2<f64>) -> Result<Self> {
        let d = train.ncols();
        if valid.ncols() != d || test.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "split widths {} / {} / {}",
                d,
                valid.ncols(),
                test.ncols()
            )));
        }
        if train
            .iter()
            .chain(valid.iter())
            .chain(test.iter())
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Domain("dataset entries must lie in [0, 1]".into()));
        }
        Ok(Self { train, valid, test })
    }

    pub fn dim(&self) -> usize {
        self.train.ncols()
    }

    pub fn sizes(&self) -> SplitSizes {
        SplitSizes::new(self.train.nrows(), self.valid.nrows(), self.test.nrows())
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("header ends at byte {}", bytes.len())))
}

/// Parses an IDX unsigned-byte 3-D tensor (`N x rows x cols`).
pub fn parse_idx_images(bytes: &[u8]) -> Result<Array2<f64>> {
    let magic = read_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let n = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let d = rows * cols;
    let body = &bytes[16..];
    let expected = n * d;
    if body.len() < expected {
        return Err(Error::TruncatedFile(format!(
            "expected {expected} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok(Array2::from_shape_fn((n, d), |(i, j)| {
        f64::from(body[i * d + j]) / 255.0
    }))
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    parse_idx_images(&fs::read(path)?)
}

/// Encodes `[0, 1]` images as an IDX byte tensor, rounding to the nearest
/// 1/255 step.
pub fn encode_idx_images(images: ArrayView2<'_, f64>, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != images.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{rows}x{cols} does not match {} columns",
            images.ncols()
        )));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for dim in [images.nrows(), rows, cols] {
        out.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    out.extend(
        images
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn save_idx_images(
    path: impl AsRef<Path>,
    images: ArrayView2<'_, f64>,
    rows: usize,
    cols: usize,
) -> Result<()> {
    fs::write(path, encode_idx_images(images, rows, cols)?)?;
    Ok(())
}

/// First 50000 training rows for training, last 10000 for validation, the
/// separate test file for testing.
pub fn split_mnist(train_images: Array2<f64>, test_images: Array2<f64>) -> Result<Dataset> {
    if train_images.nrows() != MNIST_TRAIN_ROWS {
        return Err(Error::RowCount {
            what: "training images",
            expected: MNIST_TRAIN_ROWS,
            got: train_images.nrows(),
        });
    }
    if test_images.nrows() != MNIST_TEST_ROWS {
        return Err(Error::RowCount {
            what: "test images",
            expected: MNIST_TEST_ROWS,
            got: test_images.nrows(),
        });
    }
    let train = train_images.slice(s![..MNIST_TRAIN_SPLIT, ..]).to_owned();
    let valid = train_images.slice(s![MNIST_TRAIN_SPLIT.., ..]).to_owned();
    Dataset::new(train, valid, test_images)
}

fn square_side(d: usize) -> Option<usize> {
    let side = (d as f64).sqrt().round() as usize;
    (side * side == d).then_some(side)
}

/// Averages `factor x factor` blocks of a square image set.
pub fn block_average(images: ArrayView2<'_, f64>, factor: usize) -> Result<Array2<f64>> {
    let side = square_side(images.ncols()).ok_or_else(|| {
        Error::Domain(format!("{} columns is not a square image", images.ncols()))
    })?;
    if factor == 0 || side % factor != 0 {
        return Err(Error::InvalidFactor { factor, side });
    }
    if factor == 1 {
        return Ok(images.to_owned());
    }
    let small = side / factor;
    let norm = (factor * factor) as f64;
    let mut out = Array2::zeros((images.nrows(), small * small));
    for (src, mut dst) in images.outer_iter().zip(out.outer_iter_mut()) {
        for by in 0..small {
            for bx in 0..small {
                let mut acc = 0.0;
                for y in by * factor..(by + 1) * factor {
                    for x in bx * factor..(bx + 1) * factor {
                        acc += src[y * side + x];
                    }
                }
                dst[by * small + bx] = acc / norm;
            }
        }
    }
    Ok(out)
}

/// Block-averages every split and keeps the first `counts` rows of each.
pub fn downsample(dataset: &Dataset, counts: SplitSizes, factor: usize) -> Result<Dataset> {
    let have = dataset.sizes();
    if counts.train > have.train || counts.valid > have.valid || counts.test > have.test {
        return Err(Error::Domain(format!(
            "requested {counts:?} but dataset has {have:?}"
        )));
    }
    let take = |m: &Array2<f64>, k: usize| block_average(m.slice(s![..k, ..]), factor);
    Dataset::new(
        take(&dataset.train, counts.train)?,
        take(&dataset.valid, counts.valid)?,
        take(&dataset.test, counts.test)?,
    )
}

// Stroke skeletons on a unit box (x right, y down), seven-segment style plus
// diagonals for the shapes that need them.
const GLYPHS: [&[[f64; 4]]; 10] = [
    &[
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
    ],
    &[[0.3, 0.15, 0.55, 0.0], [0.55, 0.0, 0.55, 1.0]],
    &[
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 0.45],
        [1.0, 0.45, 0.0, 1.0],
        [0.0, 1.0, 1.0, 1.0],
    ],
    &[
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 1.0],
        [0.2, 0.5, 1.0, 0.5],
        [0.0, 1.0, 1.0, 1.0],
    ],
    &[
        [0.0, 0.0, 0.0, 0.55],
        [0.0, 0.55, 1.0, 0.55],
        [0.75, 0.0, 0.75, 1.0],
    ],
    &[
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
        [0.0, 0.5, 1.0, 0.5],
        [1.0, 0.5, 1.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
    ],
    &[
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0, 0.5],
        [1.0, 0.5, 0.0, 0.5],
    ],
    &[[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.35, 1.0]],
    &[
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.5, 1.0, 0.5],
    ],
    &[
        [0.0, 0.5, 1.0, 0.5],
        [0.0, 0.0, 0.0, 0.5],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
    ],
];

fn segment_distance(px: f64, py: f64, [x0, y0, x1, y1]: [f64; 4]) -> f64 {
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - x0) * dx + (py - y0) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (x0 + t * dx - px, y0 + t * dy - py);
    (cx * cx + cy * cy).sqrt()
}

fn render_glyph<R: Rng>(rng: &mut R, side: usize) -> Vec<f64> {
    let strokes = GLYPHS[rng.random_range(0..GLYPHS.len())];
    let s = side as f64;
    let width = s * rng.random_range(0.32..0.46);
    let height = s * rng.random_range(0.55..0.72);
    let cx = s * 0.5 + rng.random_range(-0.06..0.06) * s;
    let cy = s * 0.5 + rng.random_range(-0.06..0.06) * s;
    let slant = rng.random_range(-0.25..0.25);
    let thickness = s * rng.random_range(0.035..0.07);
    // Per-vertex jitter keeps samples of one class distinct.
    let jitter = 0.06;
    let segments: Vec<[f64; 4]> = strokes
        .iter()
        .map(|&[x0, y0, x1, y1]| {
            let mut p = [x0, y0, x1, y1];
            p.iter_mut()
                .for_each(|v| *v += rng.random_range(-jitter..jitter));
            let map = |x: f64, y: f64| {
                let py = cy + (y - 0.5) * height;
                let px = cx + (x - 0.5) * width - slant * (y - 0.5) * height;
                (px, py)
            };
            let (a, b) = map(p[0], p[1]);
            let (c, d) = map(p[2], p[3]);
            [a, b, c, d]
        })
        .collect();

    let mut img = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let dist = segments
                .iter()
                .map(|&seg| segment_distance(px, py, seg))
                .fold(f64::MAX, f64::min);
            img[y * side + x] = if dist <= thickness { 1.0 } else { 0.0 };
        }
    }
    smooth(&img, side)
}

// 3x3 weighted blur (1-2-1 kernel), edges clamped.
fn smooth(img: &[f64], side: usize) -> Vec<f64> {
    const K: [f64; 3] = [1.0, 2.0, 1.0];
    let at = |x: isize, y: isize| {
        let cx = x.clamp(0, side as isize - 1) as usize;
        let cy = y.clamp(0, side as isize - 1) as usize;
        img[cy * side + cx]
    };
    let mut out = vec![0.0; side * side];
    for y in 0..side as isize {
        for x in 0..side as isize {
            let mut acc = 0.0;
            for (dy, ky) in (-1..=1).zip(K) {
                for (dx, kx) in (-1..=1).zip(K) {
                    acc += ky * kx * at(x + dx, y + dy);
                }
            }
            out[y as usize * side + x as usize] = (acc / 16.0).clamp(0.0, 1.0);
        }
    }
    out
}

/// Procedural digit-like glyphs: jittered stroke skeletons rasterised to
/// binary pixels, then smoothed. Deterministic in `seed`.
pub fn synthetic_digits(sizes: SplitSizes, d: usize, seed: u64) -> Result<Dataset> {
    let side = square_side(d).filter(|&s| s >= 4).ok_or_else(|| {
        Error::Domain(format!(
            "synthetic digits need a square dimension >= 16, got {d}"
        ))
    })?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let mut make = |n: usize| {
        let mut m = Array2::zeros((n, d));
        for mut row in m.outer_iter_mut() {
            for (dst, v) in row.iter_mut().zip(render_glyph(&mut rng, side)) {
                *dst = v;
            }
        }
        m
    };
    let train = make(sizes.train);
    let valid = make(sizes.valid);
    let test = make(sizes.test);
    Dataset::new(train, valid, test)
}

/// Salt-and-pepper noise: each pixel, in row-major order, draws one uniform
/// `u`; if `u < p` the pixel becomes `0.0` (`u < p/2`) or `1.0`, otherwise it
/// is kept. Exactly one draw per pixel, so the stream position after the call
/// depends only on the matrix size.
pub fn salt_pepper<R: Rng>(
    images: ArrayView2<'_, f64>,
    p: f64,
    noise: &mut R,
) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "corruption probability must be in [0, 1], got {p}"
        )));
    }
    let mut out = images.to_owned();
    let half = 0.5 * p;
    for v in out.iter_mut() {
        let u: f64 = noise.random();
        if u < p {
            *v = if u < half { 0.0 } else { 1.0 };
        }
    }
    Ok(out)
}
