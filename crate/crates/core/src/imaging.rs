//! Netpbm ingestion and output, integer rasters, and line overlays.
//!
//! Reads binary (P5) and ASCII (P2) graymaps with `maxval <= 255`, writes P5
//! graymaps and P6 pixmaps. Everything else (PNG, JPEG, 16-bit PGM) is rejected.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::hough::LineSegment;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a PGM file (magic {0:?})")]
    BadMagic(String),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 8-bit graymaps are accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample value {value} exceeds maxval {maxval}")]
    SampleOutOfRange { value: u32, maxval: u32 },
    #[error("buffer of {len} bytes does not match {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ImageError + '_ {
    move |source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// 8-bit grayscale raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(ImageError::DimensionMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Pixel at row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.data[i * self.width + j] = v;
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| i32::from(v)).collect(),
        }
    }
}

/// Row-major 3-byte RGB pixmap. Only produced as an overlay output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        let mut data = Vec::with_capacity(img.data.len() * 3);
        for &v in &img.data {
            data.extend_from_slice(&[v, v, v]);
        }
        Self {
            width: img.width,
            height: img.height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let o = (y * self.width + x) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let o = (y * self.width + x) * 3;
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Rasterizes a segment with integer Bresenham. Endpoints are clamped to
    /// the image first.
    pub fn draw_segment(&mut self, seg: &LineSegment, rgb: [u8; 3]) {
        let clamp = |v: i32, hi: usize| v.clamp(0, hi as i32 - 1);
        let x0 = clamp(seg.x1, self.width);
        let y0 = clamp(seg.y1, self.height);
        let x1 = clamp(seg.x2, self.width);
        let y1 = clamp(seg.y2, self.height);
        for (x, y) in bresenham(x0, y0, x1, y1) {
            self.put(x as usize, y as usize, rgb);
        }
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Integer raster used for intermediate pipeline stages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i32>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> i32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.width + j]
    }

    /// Zero outside the raster.
    pub fn get_padded(&self, i: isize, j: isize) -> i32 {
        if i < 0 || j < 0 || i >= self.height as isize || j >= self.width as isize {
            0
        } else {
            self.data[i as usize * self.width + j as usize]
        }
    }
}

/// Integer Bresenham from `(x0, y0)` to `(x1, y1)`, both endpoints included.
pub fn bresenham(x0: i32, y0: i32, x1: i32, y1: i32) -> Vec<(i32, i32)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut pts = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        pts.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    pts
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::MalformedHeader(format!("bad {what}")))
    }
}

/// Decodes a P2 or P5 graymap from memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::BadMagic(String::from_utf8_lossy(bytes).into_owned()));
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        other => return Err(ImageError::BadMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if maxval == 0 {
        return Err(ImageError::MalformedHeader("maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader("zero dimension".into()));
    }
    let expected = width * height;

    let data = if binary {
        // exactly one whitespace byte separates maxval from the payload
        match bytes.get(rd.pos) {
            Some(c) if c.is_ascii_whitespace() => rd.pos += 1,
            _ => return Err(ImageError::MalformedHeader("missing payload separator".into())),
        }
        let payload = &bytes[rd.pos..];
        if payload.len() < expected {
            return Err(ImageError::Truncated {
                expected,
                found: payload.len(),
            });
        }
        let data = payload[..expected].to_vec();
        if let Some(&v) = data.iter().find(|&&v| u32::from(v) > maxval) {
            return Err(ImageError::SampleOutOfRange {
                value: v.into(),
                maxval,
            });
        }
        data
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            rd.skip_ws_and_comments();
            if rd.pos >= bytes.len() {
                return Err(ImageError::Truncated {
                    expected,
                    found: data.len(),
                });
            }
            let v = rd.number("sample")?;
            if v > maxval {
                return Err(ImageError::SampleOutOfRange { value: v, maxval });
            }
            data.push(v as u8);
        }
        data
    };
    GrayImage::new(width, height, data)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_pgm(&bytes)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    write_all(path, &encode_pgm(img))
}

/// Writes `img` as a P6 pixmap with every segment drawn in pure red.
pub fn render_overlay(
    img: &GrayImage,
    lines: &[LineSegment],
    path: impl AsRef<Path>,
) -> Result<(), ImageError> {
    let path = path.as_ref();
    write_all(path, &overlay(img, lines).encode_ppm())
}

pub fn overlay(img: &GrayImage, lines: &[LineSegment]) -> RgbImage {
    let mut rgb = RgbImage::from_gray(img);
    for seg in lines {
        rgb.draw_segment(seg, [255, 0, 0]);
    }
    rgb
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<(), ImageError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm() {
        let img = decode_pgm(b"P2\n# comment\n2 2\n255\n0 10\n20 255\n").unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        assert_eq!(img.data(), &[0, 10, 20, 255]);
    }

    #[test]
    fn binary_pgm_length() {
        let mut bytes = b"P5 512 512 255\n".to_vec();
        bytes.extend(std::iter::repeat_n(7u8, 512 * 512));
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.data().len(), 262_144);
    }

    #[test]
    fn payload_may_start_with_whitespace_byte() {
        let bytes = b"P5\n2 1\n255\n\n\t";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.data(), b"\n\t");
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n65535\n"),
            Err(ImageError::UnsupportedMaxval(65535))
        ));
        assert!(matches!(decode_pgm(b"P6\n2 2\n255\n"), Err(ImageError::BadMagic(_))));
        assert!(matches!(decode_pgm(b"P5\n2\n"), Err(ImageError::MalformedHeader(_))));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x01\x02"),
            Err(ImageError::Truncated {
                expected: 4,
                found: 2
            })
        ));
        assert!(matches!(
            decode_pgm(b"P2\n2 2\n255\n1 2 3"),
            Err(ImageError::Truncated { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n100\n200"),
            Err(ImageError::SampleOutOfRange { .. })
        ));
        assert!(matches!(
            load_pgm("/definitely/not/here.pgm"),
            Err(ImageError::Io { .. })
        ));
    }

    #[test]
    fn save_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let img = GrayImage::new(2, 2, vec![0, 10, 20, 255]).unwrap();
        save_pgm(&img, &p).unwrap();
        assert_eq!(load_pgm(&p).unwrap(), img);

        let edges = GrayImage::from_fn(512, 512, |i, j| if (i + j) % 7 == 0 { 255 } else { 0 });
        save_pgm(&edges, &p).unwrap();
        let header = b"P5\n512 512\n255\n".len() as u64;
        assert_eq!(fs::metadata(&p).unwrap().len(), header + 262_144);
    }

    #[test]
    fn unwritable_path() {
        let img = GrayImage::filled(5, 5, 0);
        let err = save_pgm(&img, "/nonexistent-dir/x/y.pgm").unwrap_err();
        assert!(matches!(err, ImageError::Io { .. }));
    }

    #[test]
    fn overlay_without_lines_is_triplication() {
        let img = GrayImage::from_fn(7, 6, |i, j| (i * 7 + j) as u8);
        let rgb = overlay(&img, &[]);
        for y in 0..6 {
            for x in 0..7 {
                let v = img.get(y, x);
                assert_eq!(rgb.pixel(x, y), [v, v, v]);
            }
        }
    }

    fn red_pixels(rgb: &RgbImage) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for y in 0..rgb.height() {
            for x in 0..rgb.width() {
                if rgb.pixel(x, y) == [255, 0, 0] {
                    v.push((x, y));
                }
            }
        }
        v
    }

    #[test]
    fn horizontal_and_diagonal_segments() {
        let img = GrayImage::filled(10, 10, 30);
        let h = LineSegment { x1: 0, y1: 5, x2: 9, y2: 5 };
        let red = red_pixels(&overlay(&img, &[h]));
        assert_eq!(red, (0..10).map(|x| (x, 5)).collect::<Vec<_>>());

        let d = LineSegment { x1: 0, y1: 0, x2: 9, y2: 9 };
        let red = red_pixels(&overlay(&img, &[d]));
        assert_eq!(red, (0..10).map(|k| (k, k)).collect::<Vec<_>>());
    }

    #[test]
    fn segment_endpoints_are_clamped() {
        let img = GrayImage::filled(10, 10, 0);
        let s = LineSegment { x1: -5, y1: 2, x2: 40, y2: 2 };
        assert_eq!(red_pixels(&overlay(&img, &[s])).len(), 10);
    }
}
