//! 8-bit grayscale PNG masks: nonzero is foreground, written as 0/255.

use std::path::Path;

use image::{ColorType, GrayImage, ImageReader, Luma};

use super::DatasetError;
use crate::mask::Mask;

pub fn load_mask(path: &Path) -> Result<Mask, DatasetError> {
    let reader = ImageReader::open(path)
        .map_err(|e| DatasetError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| DatasetError::io(path, e))?;
    let img = reader.decode().map_err(|e| DatasetError::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if img.color() != ColorType::L8 {
        return Err(DatasetError::NotGrayscale {
            path: path.to_path_buf(),
            color: format!("{:?}", img.color()),
        });
    }
    let gray = img.into_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w == 0 || h == 0 {
        return Err(DatasetError::ZeroArea {
            path: path.to_path_buf(),
        });
    }
    let bits = gray.pixels().map(|p| p.0[0] != 0).collect();
    Ok(Mask::from_bits(w, h, bits).expect("dimensions checked above"))
}

pub fn store_mask(m: &Mask, path: &Path) -> Result<(), DatasetError> {
    let img = GrayImage::from_fn(m.width() as u32, m.height() as u32, |x, y| {
        Luma([if m.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| DatasetError::Png {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Width and height of an image file without decoding its pixels.
pub fn image_dims(path: &Path) -> Result<(usize, usize), DatasetError> {
    let (w, h) = image::image_dimensions(path).map_err(|e| DatasetError::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok((w as usize, h as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{RgbImage, Rgb};

    #[test]
    fn store_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = Mask::from_fn(13, 7, |x, y| (x * y) % 3 == 1).unwrap();
        store_mask(&m, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), m);
    }

    #[test]
    fn any_nonzero_is_foreground() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.png");
        let img = GrayImage::from_fn(3, 1, |x, _| Luma([[0u8, 1, 255][x as usize]]));
        img.save(&path).unwrap();
        let m = load_mask(&path).unwrap();
        assert_eq!(m.bits(), &[false, true, true]);
    }

    #[test]
    fn rgb_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        RgbImage::from_pixel(2, 2, Rgb([255, 0, 0])).save(&path).unwrap();
        assert!(matches!(load_mask(&path), Err(DatasetError::NotGrayscale { .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_mask(Path::new("/nonexistent/mask.png")),
            Err(DatasetError::Io { .. })
        ));
    }
}
