//! Variance contrast over the valid domain of a (raw or corrected) image.

use crate::correction::CorrectedImage;
use crate::error::{Error, Result};
use crate::warp::WarpedImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastValue {
    pub value: f64,
    /// Number of masked pixels the mean and variance were taken over.
    pub pixel_count: usize,
    pub mean: f64,
}

/// Mean of squared deviations over pixels where `mask` is set.
pub fn contrast_variance(values: &[f64], mask: &[bool]) -> Result<ContrastValue> {
    if values.len() != mask.len() {
        return Err(Error::Contract(format!(
            "image has {} pixels but mask has {}",
            values.len(),
            mask.len()
        )));
    }
    let (sum, n) = values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if n == 0 {
        return Err(Error::Contract("contrast over an empty mask".into()));
    }
    let mean = sum / n as f64;
    let ss: f64 = values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum();
    Ok(ContrastValue {
        value: ss / n as f64,
        pixel_count: n,
        mean,
    })
}

pub fn image_contrast(image: &WarpedImage, mask: &[bool]) -> Result<ContrastValue> {
    contrast_variance(&image.values, mask)
}

pub fn corrected_contrast(image: &CorrectedImage) -> Result<ContrastValue> {
    contrast_variance(&image.values, &image.mask)
}

/// Variance of a masked image given only its non-zero masked entries and the
/// total number of masked pixels; the remaining pixels are zeros.
pub(crate) fn sparse_variance(nonzero: &[f64], pixel_count: usize) -> Option<ContrastValue> {
    if pixel_count == 0 {
        return None;
    }
    let n = pixel_count as f64;
    let mean = nonzero.iter().sum::<f64>() / n;
    let ss: f64 = nonzero.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let zeros = (pixel_count - nonzero.len()) as f64;
    Some(ContrastValue {
        value: (ss + zeros * mean * mean) / n,
        pixel_count,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_contrast() {
        let c = contrast_variance(&[3.0; 12], &[true; 12]).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.pixel_count, 12);
    }

    #[test]
    fn two_point_variance() {
        let c = contrast_variance(&[0.0, 2.0, 100.0], &[true, true, false]).unwrap();
        assert_eq!(c.mean, 1.0);
        assert_eq!(c.value, 1.0);
        assert_eq!(c.pixel_count, 2);
    }

    #[test]
    fn empty_mask_is_rejected() {
        assert!(matches!(contrast_variance(&[1.0], &[false]), Err(Error::Contract(_))));
        assert!(contrast_variance(&[1.0, 2.0], &[true]).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let values = [0.0, 4.0, 0.0, 1.5, 0.0, 7.0];
        let dense = contrast_variance(&values, &[true; 6]).unwrap();
        let sparse = sparse_variance(&[4.0, 1.5, 7.0], 6).unwrap();
        assert!((dense.value - sparse.value).abs() < 1e-12);
        assert!(sparse_variance(&[], 0).is_none());
    }
}
