use super::image::RawImage;
use super::{Result, VisionError};
use crate::tensor::Tensor;

/// Cuts an image into `patch × patch` squares in raster order.
///
/// Row `i` of the result is patch `i`, flattened as `(y, x, channel)` with
/// values scaled to `[0, 1]`. Shape: `[(h/patch)·(w/patch), patch²·3]`.
pub fn patchify(img: &RawImage, patch: usize) -> Result<Tensor> {
    if patch == 0 {
        return Err(VisionError::InvalidArgument("patch size must be at least 1".into()));
    }
    for (what, side) in [("image width", img.width()), ("image height", img.height())] {
        if side % patch != 0 {
            return Err(VisionError::NotDivisible {
                what,
                value: side,
                by: patch,
            });
        }
    }
    let (gw, gh) = (img.width() / patch, img.height() / patch);
    let dim = patch * patch * 3;
    let mut data = Vec::with_capacity(gw * gh * dim);
    for py in 0..gh {
        for px in 0..gw {
            for y in 0..patch {
                let row = (py * patch + y) * img.width() + px * patch;
                for &v in &img.data()[row * 3..(row + patch) * 3] {
                    data.push(v as f64 / 255.0);
                }
            }
        }
    }
    Ok(Tensor::new([gw * gh, dim], data)?)
}

/// Inverse of [`patchify`] for an image of `width × height`.
pub fn unpatchify(patches: &Tensor, patch: usize, width: usize, height: usize) -> Result<RawImage> {
    let dim = patch * patch * 3;
    let (gw, gh) = (width / patch, height / patch);
    if patch == 0 || !width.is_multiple_of(patch) || !height.is_multiple_of(patch) || patches.shape() != [gw * gh, dim]
    {
        return Err(VisionError::InvalidArgument(format!(
            "patch tensor {:?} does not tile a {width}x{height} image with patch {patch}",
            patches.shape()
        )));
    }
    let mut img = RawImage::filled(width, height, [0, 0, 0])?;
    for (i, row) in patches.data().chunks_exact(dim).enumerate() {
        let (py, px) = (i / gw, i % gw);
        for (j, px_rgb) in row.chunks_exact(3).enumerate() {
            let (y, x) = (j / patch, j % patch);
            let rgb = [0, 1, 2].map(|c| (px_rgb[c] * 255.0).round().clamp(0.0, 255.0) as u8);
            img.set_pixel(px * patch + x, py * patch + y, rgb);
        }
    }
    Ok(img)
}
