use super::{BinaryMask, ImagingError};

/// Size and shape of a segmented ventricle in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentricleGeometry {
    /// Foreground pixel count.
    pub area: usize,
    /// Long-axis diameter in pixels.
    pub long_axis: f64,
    /// Short-axis diameter in pixels.
    pub short_axis: f64,
    /// Mean foreground pixel coordinate `(x, y)`.
    pub centroid: (f64, f64),
}

/// Measure area, centroid and the axes of the moment-equivalent solid ellipse.
///
/// A uniform solid ellipse with semi-axis `a` has coordinate variance `a²/4`
/// along that axis, so each diameter is `4·√λ` for the eigenvalues `λ` of the
/// pixel covariance matrix. Diameters are floored at one pixel, so a single
/// pixel or a one-pixel-wide line still has positive axes.
///
/// Moment sums are accumulated in exact integer arithmetic, which makes the
/// axes bit-identical under any flip of the mask.
pub fn measure_geometry(mask: &BinaryMask) -> Result<VentricleGeometry, ImagingError> {
    let w = mask.width();
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128, 0i128);
    for (i, _) in mask.membership().iter().enumerate().filter(|(_, &m)| m) {
        let (x, y) = ((i % w) as i128, (i / w) as i128);
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    if n == 0 {
        return Err(ImagingError::EmptyMask);
    }
    let nf = n as f64;
    let n2 = nf * nf;
    let cxx = (n * sxx - sx * sx) as f64 / n2;
    let cyy = (n * syy - sy * sy) as f64 / n2;
    let cxy = (n * sxy - sx * sy) as f64 / n2;

    let half_trace = 0.5 * (cxx + cyy);
    let spread = (0.25 * (cxx - cyy).powi(2) + cxy * cxy).sqrt();
    let major = half_trace + spread;
    let minor = (half_trace - spread).max(0.0);

    Ok(VentricleGeometry {
        area: n as usize,
        long_axis: (4.0 * major.sqrt()).max(1.0),
        short_axis: (4.0 * minor.sqrt()).max(1.0),
        centroid: (sx as f64 / nf, sy as f64 / nf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{Flip, Flippable};
    use std::f64::consts::PI;

    /// Center-of-pixel rasterization of a rotated solid ellipse.
    fn ellipse(w: usize, h: usize, cx: f64, cy: f64, a: f64, b: f64, deg: f64) -> BinaryMask {
        let (s, c) = deg.to_radians().sin_cos();
        BinaryMask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / a).powi(2) + (v / b).powi(2) <= 1.0
        })
        .unwrap()
    }

    #[test]
    fn axis_aligned_ellipse_recovers_axes_and_area() {
        let m = ellipse(160, 100, 80.0, 50.0, 50.0, 30.0, 0.0);
        let g = measure_geometry(&m).unwrap();
        assert!((g.area as f64 - PI * 50.0 * 30.0).abs() / (PI * 1500.0) < 0.01);
        assert!((g.long_axis - 100.0).abs() / 100.0 < 0.02, "{}", g.long_axis);
        assert!((g.short_axis - 60.0).abs() / 60.0 < 0.02, "{}", g.short_axis);
        assert!((g.centroid.0 - 80.0).abs() < 1e-9 && (g.centroid.1 - 50.0).abs() < 1e-9);
    }

    #[test]
    fn full_mask_centroid() {
        let m = BinaryMask::from_fn(100, 100, |_, _| true).unwrap();
        let g = measure_geometry(&m).unwrap();
        assert_eq!(g.area, 10_000);
        assert_eq!(g.centroid, (49.5, 49.5));
    }

    #[test]
    fn single_pixel_has_unit_axes() {
        let m = BinaryMask::from_fn(10, 10, |x, y| (x, y) == (3, 7)).unwrap();
        let g = measure_geometry(&m).unwrap();
        assert_eq!(g.area, 1);
        assert_eq!(g.centroid, (3.0, 7.0));
        assert_eq!((g.long_axis, g.short_axis), (1.0, 1.0));
    }

    #[test]
    fn thin_line_keeps_positive_short_axis() {
        let m = BinaryMask::from_fn(20, 3, |_, y| y == 1).unwrap();
        let g = measure_geometry(&m).unwrap();
        assert_eq!(g.short_axis, 1.0);
        assert!(g.long_axis > 19.0);
    }

    #[test]
    fn empty_mask_errors() {
        let m = BinaryMask::empty(4, 4).unwrap();
        assert!(matches!(measure_geometry(&m), Err(ImagingError::EmptyMask)));
    }

    #[test]
    fn axes_are_bit_identical_under_flips() {
        let m = ellipse(90, 70, 40.3, 33.7, 30.0, 17.0, 23.0);
        let g = measure_geometry(&m).unwrap();
        for f in Flip::ALL {
            let gf = measure_geometry(&m.flipped(f)).unwrap();
            assert_eq!(gf.area, g.area);
            assert_eq!(gf.long_axis.to_bits(), g.long_axis.to_bits());
            assert_eq!(gf.short_axis.to_bits(), g.short_axis.to_bits());
            let ex = if f.reverses_columns() { 89.0 - g.centroid.0 } else { g.centroid.0 };
            let ey = if f.reverses_rows() { 69.0 - g.centroid.1 } else { g.centroid.1 };
            assert!((gf.centroid.0 - ex).abs() < 1e-9 && (gf.centroid.1 - ey).abs() < 1e-9);
        }
    }

    #[test]
    fn disk_is_round() {
        let m = ellipse(80, 80, 40.0, 40.0, 16.0, 16.0, 0.0);
        let g = measure_geometry(&m).unwrap();
        assert!((g.long_axis - g.short_axis).abs() / 32.0 < 0.02);
    }
}
