//! Conversion between pixel coordinates and the `[0, 1000]` integer grid
//! used in tool calls.

use thiserror::Error;

use super::action::Action;

pub const NORMALIZED_MAX: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoordError {
    #[error("pixel coordinate {value} outside extent {extent}")]
    PixelOutOfRange { value: u32, extent: u32 },
    #[error("normalized coordinate {0} outside [0, 1000]")]
    NormalizedOutOfRange(u32),
    #[error("extent must be at least 1")]
    ZeroExtent,
}

// round(num / den) for nonnegative integers, halves rounded up.
fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// `round(p · 1000 / (extent − 1))`, clamped to `[0, 1000]`.
pub fn normalize_coord(p: u32, extent: u32) -> Result<u32, CoordError> {
    if extent == 0 {
        return Err(CoordError::ZeroExtent);
    }
    if p >= extent {
        return Err(CoordError::PixelOutOfRange { value: p, extent });
    }
    if extent == 1 {
        return Ok(0);
    }
    let n = div_round(u64::from(p) * u64::from(NORMALIZED_MAX), u64::from(extent - 1));
    Ok(n.min(u64::from(NORMALIZED_MAX)) as u32)
}

/// `round(n · (extent − 1) / 1000)`, clamped to `[0, extent)`.
pub fn denormalize_coord(n: u32, extent: u32) -> Result<u32, CoordError> {
    if extent == 0 {
        return Err(CoordError::ZeroExtent);
    }
    if n > NORMALIZED_MAX {
        return Err(CoordError::NormalizedOutOfRange(n));
    }
    let p = div_round(u64::from(n) * u64::from(extent - 1), u64::from(NORMALIZED_MAX));
    Ok(p.min(u64::from(extent - 1)) as u32)
}

pub fn normalize_action(a: &Action, width: usize, height: usize) -> Result<Action, CoordError> {
    a.map_coords(|v, is_x| normalize_coord(v, if is_x { width } else { height } as u32))
}

pub fn denormalize_action(a: &Action, width: usize, height: usize) -> Result<Action, CoordError> {
    a.map_coords(|v, is_x| denormalize_coord(v, if is_x { width } else { height } as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        for extent in [2u32, 3, 256, 1000, 1024, 4096] {
            assert_eq!(normalize_coord(0, extent).unwrap(), 0);
            assert_eq!(normalize_coord(extent - 1, extent).unwrap(), 1000);
            assert_eq!(denormalize_coord(0, extent).unwrap(), 0);
            assert_eq!(denormalize_coord(1000, extent).unwrap(), extent - 1);
        }
        assert_eq!(normalize_coord(0, 1).unwrap(), 0);
        assert_eq!(denormalize_coord(700, 1).unwrap(), 0);
    }

    #[test]
    fn hand_value() {
        // 512000 / 1023 = 500.49
        assert_eq!(normalize_coord(512, 1024).unwrap(), 500);
    }

    #[test]
    fn errors() {
        assert_eq!(
            normalize_coord(1024, 1024),
            Err(CoordError::PixelOutOfRange {
                value: 1024,
                extent: 1024
            })
        );
        assert_eq!(
            denormalize_coord(1001, 1024),
            Err(CoordError::NormalizedOutOfRange(1001))
        );
        assert_eq!(normalize_coord(0, 0), Err(CoordError::ZeroExtent));
    }

    #[test]
    fn round_trip_bound_extent_1024() {
        let extent = 1024u32;
        let bound = (extent - 1).div_ceil(2000);
        for p in 0..extent {
            let back = denormalize_coord(normalize_coord(p, extent).unwrap(), extent).unwrap();
            assert!(back.abs_diff(p) <= bound, "p={p} back={back}");
        }
    }

    #[test]
    fn small_extents_round_trip_exactly() {
        for extent in 1..=1001u32 {
            for p in 0..extent {
                let n = normalize_coord(p, extent).unwrap();
                assert_eq!(denormalize_coord(n, extent).unwrap(), p);
            }
        }
    }

    proptest! {
        #[test]
        fn normalize_is_monotone(extent in 2u32..5000, a in 0u32..5000, b in 0u32..5000) {
            let (a, b) = (a % extent, b % extent);
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(normalize_coord(lo, extent).unwrap() <= normalize_coord(hi, extent).unwrap());
        }
    }
}
