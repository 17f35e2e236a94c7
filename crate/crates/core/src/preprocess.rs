//! Grayscale image normalization: histogram equalization, bilinear resize,
//! horizontal flip and rotation, plus 8-bit PNG load and save.
//!
//! All resampling rounds half away from zero and clamps to `[0, 255]`.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub const LEVELS: usize = 256;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("bad dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("pixel buffer holds {got} values, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Zero-sized images are representable so that operations can reject
    /// them with [`PreprocessError::EmptyImage`].
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, PreprocessError> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(PreprocessError::BufferSize {
                expected,
                got: pixels.len(),
            });
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn histogram(&self) -> [u64; LEVELS] {
        let mut h = [0u64; LEVELS];
        for &p in &self.pixels {
            h[p as usize] += 1;
        }
        h
    }

    fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage { width, height, pixels }
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Histogram equalization with the `cdf_min` remap
/// `round((cdf(v) - cdf_min) / (N - cdf_min) * 255)`.
/// Constant images come back unchanged.
pub fn equalize(img: &GrayImage) -> Result<GrayImage, PreprocessError> {
    if img.is_empty() {
        return Err(PreprocessError::EmptyImage);
    }
    let hist = img.histogram();
    let n = img.pixels.len() as u64;
    let mut cdf = [0u64; LEVELS];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let cdf_min = *cdf.iter().find(|&&c| c > 0).expect("non-empty image");
    if n == cdf_min {
        return Ok(img.clone());
    }
    let den = n - cdf_min;
    let mut lut = [0u8; LEVELS];
    for (v, slot) in lut.iter_mut().enumerate() {
        // Unpopulated levels below the minimum never occur in the image.
        let num = cdf[v].saturating_sub(cdf_min) * 255;
        *slot = ((2 * num + den) / (2 * den)) as u8;
    }
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| lut[p as usize]).collect(),
    })
}

/// Bilinear resize with half-pixel centers; samples past the edge clamp to
/// the border pixel.
pub fn resize(img: &GrayImage, width: u32, height: u32) -> Result<GrayImage, PreprocessError> {
    if width == 0 || height == 0 {
        return Err(PreprocessError::BadDimensions { width, height });
    }
    if img.is_empty() {
        return Err(PreprocessError::EmptyImage);
    }
    if (width, height) == (img.width, img.height) {
        return Ok(img.clone());
    }
    let axis = |dst: u32, src: u32| -> Vec<(u32, u32, f64)> {
        let scale = f64::from(src) / f64::from(dst);
        (0..dst)
            .map(|i| {
                let s = ((f64::from(i) + 0.5) * scale - 0.5).clamp(0.0, f64::from(src - 1));
                let lo = s.floor() as u32;
                let hi = (lo + 1).min(src - 1);
                (lo, hi, s - f64::from(lo))
            })
            .collect()
    };
    let xs = axis(width, img.width);
    let ys = axis(height, img.height);
    Ok(GrayImage::from_fn(width, height, |x, y| {
        let (x0, x1, fx) = xs[x as usize];
        let (y0, y1, fy) = ys[y as usize];
        let p = |x, y| f64::from(img.get(x, y));
        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
        let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
        to_u8(top * (1.0 - fy) + bottom * fy)
    }))
}

/// Mirrors columns.
pub fn hflip(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.width, img.height, |x, y| img.get(img.width - 1 - x, y))
}

/// Cosine and sine of an angle in degrees, exact at multiples of 90.
fn cos_sin(degrees: f64) -> (f64, f64) {
    let d = degrees.rem_euclid(360.0);
    if d == 0.0 {
        (1.0, 0.0)
    } else if d == 90.0 {
        (0.0, 1.0)
    } else if d == 180.0 {
        (-1.0, 0.0)
    } else if d == 270.0 {
        (0.0, -1.0)
    } else {
        let r = d.to_radians();
        (r.cos(), r.sin())
    }
}

/// Canvas size that contains the image rotated by `degrees`.
pub fn rotated_bounds(width: u32, height: u32, degrees: f64) -> (u32, u32) {
    const EPS: f64 = 1e-9;
    let (c, s) = cos_sin(degrees);
    let (w, h) = (f64::from(width), f64::from(height));
    let bw = (w * c.abs() + h * s.abs() - EPS).ceil().max(1.0);
    let bh = (w * s.abs() + h * c.abs() - EPS).ceil().max(1.0);
    (bw as u32, bh as u32)
}

/// Counter-clockwise rotation about the image center with bilinear
/// resampling and background 0. With `expand` the canvas grows to hold the
/// whole rotated image, otherwise it keeps the input size.
pub fn rotate(img: &GrayImage, degrees: f64, expand: bool) -> GrayImage {
    if img.is_empty() {
        return img.clone();
    }
    let (c, s) = cos_sin(degrees);
    let (w, h) = if expand {
        rotated_bounds(img.width, img.height, degrees)
    } else {
        (img.width, img.height)
    };
    let (cx, cy) = (f64::from(img.width - 1) / 2.0, f64::from(img.height - 1) / 2.0);
    let (ox, oy) = (f64::from(w - 1) / 2.0, f64::from(h - 1) / 2.0);
    let (iw, ih) = (i64::from(img.width), i64::from(img.height));
    let at = |x: i64, y: i64| -> f64 {
        if (0..iw).contains(&x) && (0..ih).contains(&y) {
            f64::from(img.get(x as u32, y as u32))
        } else {
            0.0
        }
    };
    GrayImage::from_fn(w, h, |x, y| {
        let dx = f64::from(x) - ox;
        let dy = f64::from(y) - oy;
        let sx = cx + c * dx - s * dy;
        let sy = cy + s * dx + c * dy;
        if sx <= -1.0 || sy <= -1.0 || sx >= f64::from(img.width) || sy >= f64::from(img.height) {
            return 0;
        }
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
        let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
        to_u8(top * (1.0 - fy) + bottom * fy)
    })
}

/// ITU-R 601 luma with integer rounding.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

/// Reads a PNG as 8-bit grayscale. Color images go through [`luma`];
/// alpha is dropped.
pub fn load_png(path: &Path) -> Result<GrayImage, PreprocessError> {
    let bytes = std::fs::read(path).map_err(|source| PreprocessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| {
        PreprocessError::Image {
            path: path.to_path_buf(),
            source,
        }
    })?;
    let (width, height) = (decoded.width(), decoded.height());
    let pixels = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        image::DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        other => other.to_rgb8().pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
    };
    GrayImage::new(width, height, pixels)
}

pub fn save_png(img: &GrayImage, path: &Path) -> Result<(), PreprocessError> {
    if img.is_empty() {
        return Err(PreprocessError::EmptyImage);
    }
    let buf = image::GrayImage::from_raw(img.width, img.height, img.pixels.clone()).expect("buffer size checked");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| PreprocessError::Image {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: u32, h: u32, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn equalize_examples() {
        assert_eq!(
            equalize(&img(2, 2, &[10, 10, 20, 20])).unwrap().pixels(),
            &[0, 0, 255, 255]
        );
        assert_eq!(equalize(&img(2, 1, &[0, 255])).unwrap().pixels(), &[0, 255]);
        let flat = GrayImage::filled(4, 3, 77);
        assert_eq!(equalize(&flat).unwrap(), flat);
        assert!(matches!(equalize(&img(0, 0, &[])), Err(PreprocessError::EmptyImage)));
    }

    #[test]
    fn equalize_rounds_half_up() {
        // cdf = 1, 2, 3 with cdf_min 1: 0, 127.5, 255.
        assert_eq!(equalize(&img(3, 1, &[5, 6, 7])).unwrap().pixels(), &[0, 128, 255]);
    }

    #[test]
    fn resize_examples() {
        let checker = img(2, 2, &[0, 255, 255, 0]);
        assert_eq!(resize(&checker, 1, 1).unwrap().pixels(), &[128]);
        assert_eq!(resize(&checker, 2, 2).unwrap(), checker);
        assert_eq!(resize(&img(1, 1, &[42]), 3, 3).unwrap(), GrayImage::filled(3, 3, 42));
        assert!(matches!(
            resize(&checker, 0, 3),
            Err(PreprocessError::BadDimensions { .. })
        ));
    }

    #[test]
    fn resize_upsample_row() {
        // Half-pixel centers: 0, 0.25, 0.75, 1 of the way from 0 to 200.
        let up = resize(&img(2, 1, &[0, 200]), 4, 1).unwrap();
        assert_eq!(up.pixels(), &[0, 50, 150, 200]);
    }

    #[test]
    fn flip() {
        let a = img(3, 2, &[1, 2, 3, 4, 5, 6]);
        assert_eq!(hflip(&a).pixels(), &[3, 2, 1, 6, 5, 4]);
        assert_eq!(hflip(&hflip(&a)), a);
    }

    #[test]
    fn rotate_right_angles() {
        let a = img(2, 3, &[1, 2, 3, 4, 5, 6]);
        assert_eq!(rotate(&a, 0.0, false), a);
        let r = rotate(&a, 90.0, true);
        assert_eq!((r.width(), r.height()), (3, 2));
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(r.get(x, y), a.get(1 - y, x));
            }
        }
        assert_eq!(r.pixels(), &[2, 4, 6, 1, 3, 5]);
        let full = (0..4).fold(a.clone(), |acc, _| rotate(&acc, 90.0, true));
        assert_eq!(full, a);
        assert_eq!(rotate(&a, 180.0, false).pixels(), &[6, 5, 4, 3, 2, 1]);
        assert_eq!(rotate(&a, -90.0, true), rotate(&a, 270.0, true));
    }

    #[test]
    fn small_rotation_bounds() {
        assert_eq!(rotated_bounds(299, 299, 0.0), (299, 299));
        assert_eq!(rotated_bounds(299, 299, 1.0), (305, 305));
        let r = rotate(&GrayImage::filled(10, 10, 200), 1.0, true);
        assert_eq!((r.width(), r.height()), (11, 11));
        assert!(r.get(0, 0) < 100);
        assert_eq!(r.get(5, 5), 200);
    }

    #[test]
    fn luma_coefficients() {
        assert_eq!(luma(255, 255, 255), 255);
        assert_eq!(luma(255, 0, 0), 76);
        assert_eq!(luma(0, 255, 0), 150);
        assert_eq!(luma(0, 0, 255), 29);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let a = img(3, 2, &[0, 10, 20, 30, 40, 255]);
        save_png(&a, &path).unwrap();
        assert_eq!(load_png(&path).unwrap(), a);

        let rgb = image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 0, 0, 255]).unwrap();
        let cpath = dir.path().join("c.png");
        rgb.save(&cpath).unwrap();
        assert_eq!(load_png(&cpath).unwrap().pixels(), &[76, 29]);
    }
}
