use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Result, VisionError};

/// 8-bit RGB image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(VisionError::EmptyImage { width, height });
        }
        if data.len() != width * height * 3 {
            return Err(VisionError::PixelCount {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
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
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the `w × h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(VisionError::CropOutOfBounds {
                x0,
                y0,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Self::new(w, h, data)
    }

    /// Bilinear resample with pixel-center alignment.
    ///
    /// Each output pixel is the fractional-weight average of its four nearest
    /// source pixels, rounded to nearest. Same-size resizes return an exact copy.
    pub fn resize(&self, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(VisionError::EmptyImage { width, height });
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let xs = sample_axis(self.width, width);
        let ys = sample_axis(self.height, height);
        let mut data = Vec::with_capacity(width * height * 3);
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let p00 = self.pixel(x0, y0);
                let p01 = self.pixel(x1, y0);
                let p10 = self.pixel(x0, y1);
                let p11 = self.pixel(x1, y1);
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - fx) + p01[c] as f64 * fx;
                    let bottom = p10[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                    let v = top * (1.0 - fy) + bottom * fy;
                    data.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Self::new(width, height, data)
    }

    pub fn read_ppm(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            let token = next_header_token(&mut r)?;
            fields.push(token);
        }
        if fields[0] != "P6" {
            return Err(VisionError::Ppm(format!("unsupported magic {:?}", fields[0])));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| VisionError::Ppm(format!("bad header field {s:?}")))
        };
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(VisionError::Ppm(format!("maxval {maxval} unsupported, need 255")));
        }
        let mut data = vec![0u8; width * height * 3];
        r.read_exact(&mut data)
            .map_err(|e| VisionError::Ppm(format!("truncated pixel data: {e}")))?;
        Self::new(width, height, data)
    }

    pub fn write_ppm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| VisionError::Open {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_ppm(file)
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Source taps `(lo, hi, frac)` for each destination coordinate.
fn sample_axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// One whitespace-delimited header token; `#` comments run to end of line.
fn next_header_token(r: &mut impl BufRead) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(VisionError::Ppm("unexpected end of header".into()));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    String::from_utf8(token).map_err(|_| VisionError::Ppm("non-ascii header".into()))
}

/// Rescales so that the longer side equals `cap` when it exceeds it; aspect ratio is kept.
pub fn resize_longest_edge(img: &RawImage, cap: usize) -> Result<RawImage> {
    let (w, h) = (img.width(), img.height());
    let long = w.max(h);
    if cap == 0 {
        return Err(VisionError::InvalidArgument(
            "longest-edge cap must be at least 1".into(),
        ));
    }
    if long <= cap {
        return Ok(img.clone());
    }
    let (nw, nh) = capped_dims(w, h, cap);
    img.resize(nw, nh)
}

/// Dimensions after [`resize_longest_edge`], without touching pixels.
pub fn capped_dims(width: usize, height: usize, cap: usize) -> (usize, usize) {
    let long = width.max(height);
    if long <= cap {
        return (width, height);
    }
    let scale = cap as f64 / long as f64;
    let fit = |side: usize| {
        if side == long {
            cap
        } else {
            ((side as f64 * scale).round() as usize).max(1)
        }
    };
    (fit(width), fit(height))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> RawImage {
        RawImage::from_fn(w, h, |x, y| {
            [(x * 7 % 256) as u8, (y * 13 % 256) as u8, ((x + y) % 256) as u8]
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(RawImage::new(0, 3, vec![]).is_err());
        assert!(RawImage::new(2, 2, vec![0; 11]).is_err());
    }

    #[test]
    fn longest_edge_examples() {
        assert_eq!(capped_dims(2048, 1024, 1920), (1920, 960));
        assert_eq!(capped_dims(512, 512, 1920), (512, 512));
        assert_eq!(capped_dims(4000, 1000, 1536), (1536, 384));
        assert_eq!(capped_dims(1000, 4000, 1536), (384, 1536));
    }

    #[test]
    fn resize_longest_edge_under_cap_is_untouched() {
        let img = gradient(40, 30);
        assert_eq!(resize_longest_edge(&img, 64).unwrap(), img);
        let out = resize_longest_edge(&img, 20).unwrap();
        assert_eq!((out.width(), out.height()), (20, 15));
    }

    #[test]
    fn aspect_ratio_is_preserved_within_rounding() {
        for (w, h, cap) in [(4000, 1000, 1536), (3001, 1999, 1920), (17, 1000, 100)] {
            let (nw, nh) = capped_dims(w, h, cap);
            assert_eq!(nw.max(nh), cap);
            let ratio = w as f64 / h as f64;
            // rounding the short side moves it by at most half a pixel
            let short = nw.min(nh) as f64;
            let exact = cap as f64 * (w.min(h) as f64 / w.max(h) as f64);
            assert!(
                (short - exact).abs() <= 0.5,
                "{w}x{h}: {short} vs {exact} (ratio {ratio})"
            );
        }
    }

    #[test]
    fn bilinear_keeps_constant_images_constant() {
        let img = RawImage::filled(7, 5, [10, 200, 33]).unwrap();
        let up = img.resize(19, 3).unwrap();
        assert!(up.data().chunks(3).all(|p| p == [10, 200, 33]));
    }

    #[test]
    fn bilinear_2x_downsample_averages_blocks() {
        // half-pixel alignment puts every 2x-down sample exactly between four sources
        let img = RawImage::from_fn(4, 2, |x, _| [(x * 40) as u8, 0, 0]).unwrap();
        let down = img.resize(2, 1).unwrap();
        assert_eq!(down.pixel(0, 0)[0], 20);
        assert_eq!(down.pixel(1, 0)[0], 100);
    }

    #[test]
    fn ppm_round_trip_with_comment() {
        let img = gradient(5, 3);
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert_eq!(RawImage::read_ppm(&buf[..]).unwrap(), img);
        let mut commented = b"P6\n# made by hand\n5 3\n255\n".to_vec();
        commented.extend_from_slice(img.data());
        assert_eq!(RawImage::read_ppm(&commented[..]).unwrap(), img);
        assert!(RawImage::read_ppm(&b"P3\n1 1\n255\n"[..]).is_err());
        assert!(RawImage::read_ppm(&b"P6\n2 2\n255\n\x00\x01"[..]).is_err());
    }
}
