//! Image and frame-directory I/O.
//!
//! Images become `H x W x 3` tensors (mode 1 is the row) with values scaled
//! to [0, 1]. Grayscale input is replicated over three channels.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Rgb};
use ttc_core::DenseTensor;

use crate::error::{config_err, Result};

/// A loaded image with the sample depth it was stored at.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub tensor: DenseTensor,
    /// 255 for 8-bit input, 65535 for 16-bit.
    pub max_value: u16,
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("ppm" | "pgm" | "pnm" | "pbm" | "pam") => Ok(ImageFormat::Pnm),
        Some("png") => Ok(ImageFormat::Png),
        _ => Err(config_err!("{}: unsupported image extension (use .ppm, .pgm or .png)", path.display())),
    }
}

pub fn load_image(path: &Path) -> Result<Image> {
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|e| config_err!("{}: {e}", path.display()))?;
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| config_err!("{}: {e}", path.display()))?;
    Ok(from_dynamic(img))
}

fn from_dynamic(img: DynamicImage) -> Image {
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_)
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (max_value, samples): (u16, Vec<f64>) = if sixteen {
        (65535, img.to_rgb16().into_raw().into_iter().map(f64::from).collect())
    } else {
        (255, img.to_rgb8().into_raw().into_iter().map(f64::from).collect())
    };
    let scale = f64::from(max_value);
    let mut data = vec![0.0; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                data[r + h * (c + w * ch)] = samples[3 * (c + w * r) + ch] / scale;
            }
        }
    }
    Image {
        tensor: DenseTensor::new(vec![h, w, 3], data).unwrap(),
        max_value,
    }
}

/// Writes an `H x W x 3` tensor, clamping to [0, 1] and rounding to the
/// image's depth.
pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let format = format_for(path)?;
    let dims = img.tensor.dims();
    if dims.len() != 3 || dims[2] != 3 {
        return Err(config_err!("expected an H x W x 3 tensor, got {dims:?}"));
    }
    let (h, w) = (dims[0], dims[1]);
    let data = img.tensor.data();
    let scale = f64::from(img.max_value);
    let sample = |r: usize, c: usize, ch: usize| (data[r + h * (c + w * ch)].clamp(0.0, 1.0) * scale).round();
    if format == ImageFormat::Pnm {
        // binary P6, big-endian samples when 16-bit
        let mut bytes = format!("P6\n{w} {h}\n{}\n", img.max_value).into_bytes();
        for r in 0..h {
            for c in 0..w {
                for ch in 0..3 {
                    let v = sample(r, c, ch) as u16;
                    if img.max_value > 255 {
                        bytes.extend_from_slice(&v.to_be_bytes());
                    } else {
                        bytes.push(v as u8);
                    }
                }
            }
        }
        return std::fs::write(path, bytes).map_err(|e| config_err!("{}: {e}", path.display()));
    }
    let dynamic = if img.max_value > 255 {
        DynamicImage::ImageRgb16(ImageBuffer::<Rgb<u16>, _>::from_fn(w as u32, h as u32, |c, r| {
            Rgb([0, 1, 2].map(|ch| sample(r as usize, c as usize, ch) as u16))
        }))
    } else {
        DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_fn(w as u32, h as u32, |c, r| {
            Rgb([0, 1, 2].map(|ch| sample(r as usize, c as usize, ch) as u8))
        }))
    };
    dynamic
        .save_with_format(path, format)
        .map_err(|e| config_err!("{}: {e}", path.display()))
}

/// Image files of a directory in lexicographic order.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| config_err!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && format_for(p).is_ok())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config_err!("{}: no frames found", dir.display()));
    }
    Ok(paths)
}

/// Frames of a directory as an `H x W x T x 3` tensor.
pub fn load_video(dir: &Path) -> Result<Image> {
    let frames: Vec<Image> = frame_paths(dir)?.iter().map(|p| load_image(p)).collect::<Result<_>>()?;
    let first = frames[0].tensor.dims().to_vec();
    if let Some(bad) = frames.iter().find(|f| f.tensor.dims() != first.as_slice()) {
        return Err(config_err!("frame sizes differ: {first:?} vs {:?}", bad.tensor.dims()));
    }
    let (h, w, t) = (first[0], first[1], frames.len());
    let mut data = vec![0.0; h * w * t * 3];
    for (f, frame) in frames.iter().enumerate() {
        for ch in 0..3 {
            for p in 0..h * w {
                data[p + h * w * (f + t * ch)] = frame.tensor.data()[p + h * w * ch];
            }
        }
    }
    Ok(Image {
        tensor: DenseTensor::new(vec![h, w, t, 3], data)?,
        max_value: frames.iter().map(|f| f.max_value).max().unwrap_or(255),
    })
}

/// Writes `frame_0001.ppm`, ... for an `H x W x T x 3` tensor.
pub fn save_video(dir: &Path, video: &Image) -> Result<()> {
    let dims = video.tensor.dims();
    if dims.len() != 4 || dims[3] != 3 {
        return Err(config_err!("expected an H x W x T x 3 tensor, got {dims:?}"));
    }
    std::fs::create_dir_all(dir)?;
    let (h, w, t) = (dims[0], dims[1], dims[2]);
    for f in 0..t {
        let mut data = vec![0.0; h * w * 3];
        for ch in 0..3 {
            for p in 0..h * w {
                data[p + h * w * ch] = video.tensor.data()[p + h * w * (f + t * ch)];
            }
        }
        let frame = Image {
            tensor: DenseTensor::new(vec![h, w, 3], data)?,
            max_value: video.max_value,
        };
        save_image(&dir.join(format!("frame_{:04}.ppm", f + 1)), &frame)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 10, 20, 30, 40, 50, 60, 70, 80, 255, 254, 1]);
        std::fs::write(&src, &bytes).unwrap();
        let img = load_image(&src).unwrap();
        assert_eq!(img.tensor.dims(), &[2, 2, 3]);
        // row 1, column 2, green
        assert_eq!(img.tensor.data()[2 + 4], 40.0 / 255.0);
        let out = dir.path().join("b.ppm");
        save_image(&out, &img).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), bytes);
    }

    #[test]
    fn grayscale_is_replicated() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("g.pgm");
        let mut bytes = b"P5\n# comment\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255]);
        std::fs::write(&src, bytes).unwrap();
        let img = load_image(&src).unwrap();
        assert_eq!(img.tensor.dims(), &[1, 3, 3]);
        let d = img.tensor.data();
        for ch in 0..3 {
            assert_eq!(&d[3 * ch..3 * ch + 3], &[0.0, 128.0 / 255.0, 1.0]);
        }
    }

    #[test]
    fn corrupt_header_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("bad.ppm");
        std::fs::write(&src, b"P6\nx y\n255\n").unwrap();
        assert!(load_image(&src).is_err());
        std::fs::write(&src, b"P6\n4 4\n255\n\x01\x02").unwrap();
        assert!(load_image(&src).is_err());
    }

    #[test]
    fn sixteen_bit_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let t = DenseTensor::from_fn(vec![3, 2, 3], |m| ((m[0] * 7 + m[1] * 3 + m[2]) % 11) as f64 / 10.0).unwrap();
        let img = Image { tensor: t, max_value: 65535 };
        let p = dir.path().join("x.ppm");
        save_image(&p, &img).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!(back.max_value, 65535);
        for (a, b) in back.tensor.data().iter().zip(img.tensor.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0);
        }
    }

    #[test]
    fn video_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let t = DenseTensor::from_fn(vec![4, 3, 2, 3], |m| (m[0] + 4 * m[1] + 12 * m[2] + 24 * m[3]) as f64 / 255.0).unwrap();
        let v = Image { tensor: t, max_value: 255 };
        save_video(dir.path(), &v).unwrap();
        let back = load_video(dir.path()).unwrap();
        assert_eq!(back, v);
    }
}
