//! Local binary pattern codes over circular neighborhoods.
//!
//! A neighborhood is `P` points on a circle of radius `R` around each pixel.
//! Point `p = 0` sits at offset `(+R, 0)` (the right neighbor) and the
//! points proceed counter-clockwise; positions that do not land on a pixel
//! center are bilinearly interpolated. Each neighbor is thresholded against
//! the center with ties counting as 1 (`s(x) = 1` iff `x >= 0`), and the
//! bits are packed as `sum_p s(f_p - f_c) * 2^p`.
//!
//! Raw codes can be post-mapped to the uniform (`u2`) or rotation-invariant
//! uniform (`riu2`) bin spaces via [`build_mapping`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Positions within this distance of a pixel center are read exactly
/// instead of interpolated.
const SNAP_EPSILON: f64 = 1e-9;

/// Code mapping applied after bit packing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mapping {
    /// Identity: `2^P` bins.
    Raw,
    /// Uniform patterns: each code with at most two circular transitions
    /// gets its own bin, the rest share one. `P(P-1) + 3` bins.
    U2,
    /// Rotation-invariant uniform: uniform codes collapse to their popcount,
    /// the rest share one bin. `P + 2` bins.
    Riu2,
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mapping::Raw => "raw",
            Mapping::U2 => "u2",
            Mapping::Riu2 => "riu2",
        })
    }
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Mapping::Raw),
            "u2" => Ok(Mapping::U2),
            "riu2" => Ok(Mapping::Riu2),
            other => Err(Error::InvalidArgument(format!(
                "unknown mapping {other:?}, expected raw, u2, or riu2"
            ))),
        }
    }
}

/// Circular neighborhood shape plus the code mapping to apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    /// Number of sample points on the circle. At least 4, at most 16
    /// (mappings are table-backed).
    pub points: u32,
    /// Circle radius in pixels, strictly positive.
    pub radius: f64,
    pub mapping: Mapping,
}

impl NeighborhoodSpec {
    pub fn new(points: u32, radius: f64, mapping: Mapping) -> Result<Self> {
        let spec = Self {
            points,
            radius,
            mapping,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.points < 4 {
            return Err(Error::InvalidArgument(format!(
                "need at least 4 neighbors, got P={}",
                self.points
            )));
        }
        if self.points > 16 {
            return Err(Error::InvalidArgument(format!(
                "P={} too large: mapping tables support at most P=16",
                self.points
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive and finite, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Pixels cropped from each image border: `ceil(R)`.
    pub fn border(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Number of histogram bins the configured mapping produces.
    pub fn bin_count(&self) -> u32 {
        bin_count(self.mapping, self.points)
    }
}

/// Histogram bin count for a mapping at `points` neighbors.
pub fn bin_count(mapping: Mapping, points: u32) -> u32 {
    match mapping {
        Mapping::Raw => 1 << points,
        Mapping::U2 => points * (points - 1) + 3,
        Mapping::Riu2 => points + 2,
    }
}

/// Per-pixel codes over the interior of an image (borders of `ceil(R)`
/// pixels are cropped, never padded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    width: usize,
    height: usize,
    codes: Vec<u32>,
}

impl CodeMap {
    pub(crate) fn new(width: usize, height: usize, codes: Vec<u32>) -> Self {
        debug_assert_eq!(codes.len(), width * height);
        Self {
            width,
            height,
            codes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// Code at map coordinates `(x, y)`; map pixel `(0, 0)` corresponds to
    /// image pixel `(ceil(R), ceil(R))`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.codes[y * self.width + x]
    }
}

/// Number of 0-1 or 1-0 transitions in `code` viewed as a circular `points`-bit
/// string.
pub fn uniformity(code: u32, points: u32) -> u32 {
    debug_assert!(points > 0 && code < (1u64 << points) as u32);
    let mut transitions = 0;
    for p in 0..points {
        let a = (code >> p) & 1;
        let b = (code >> ((p + 1) % points)) & 1;
        if a != b {
            transitions += 1;
        }
    }
    transitions
}

/// Lookup table from raw codes to mapped bin indices.
#[derive(Debug, Clone)]
pub struct MappingTable {
    mapping: Mapping,
    points: u32,
    bins: u32,
    table: Vec<u32>,
}

impl MappingTable {
    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn bin_count(&self) -> u32 {
        self.bins
    }

    /// Bin index of a raw code.
    #[inline]
    pub fn apply(&self, code: u32) -> u32 {
        self.table[code as usize]
    }
}

/// Builds the raw-code-to-bin lookup table for `spec`.
///
/// `u2` assigns bins to uniform codes in ascending raw-code order and sends
/// every non-uniform code to the final bin; `riu2` sends uniform codes to
/// their popcount and non-uniform codes to bin `P + 1`.
pub fn build_mapping(spec: &NeighborhoodSpec) -> Result<MappingTable> {
    spec.validate()?;
    let points = spec.points;
    let size = 1usize << points;
    let bins = bin_count(spec.mapping, points);
    let table = match spec.mapping {
        Mapping::Raw => (0..size as u32).collect(),
        Mapping::U2 => {
            let shared = bins - 1;
            let mut next = 0;
            (0..size as u32)
                .map(|code| {
                    if uniformity(code, points) <= 2 {
                        let bin = next;
                        next += 1;
                        bin
                    } else {
                        shared
                    }
                })
                .collect()
        }
        Mapping::Riu2 => (0..size as u32)
            .map(|code| {
                if uniformity(code, points) <= 2 {
                    code.count_ones()
                } else {
                    points + 1
                }
            })
            .collect(),
    };
    Ok(MappingTable {
        mapping: spec.mapping,
        points,
        bins,
        table,
    })
}

/// One precomputed neighbor position relative to the center pixel.
#[derive(Debug, Clone, Copy)]
enum NeighborOffset {
    /// Lands on a pixel center: a single exact read.
    Exact { dx: isize, dy: isize },
    /// General position: bilinear blend of up to four pixels around the
    /// floor corner `(x0, y0)` with fractional parts `(fx, fy)`.
    Bilinear {
        x0: isize,
        y0: isize,
        fx: f64,
        fy: f64,
    },
}

/// Sampler for the `P` circle points of a neighborhood spec.
pub(crate) struct CircleSampler {
    offsets: Vec<NeighborOffset>,
    border: usize,
}

fn split_offset(c: f64) -> (isize, f64) {
    let rounded = c.round();
    if (c - rounded).abs() < SNAP_EPSILON {
        (rounded as isize, 0.0)
    } else {
        let floor = c.floor();
        (floor as isize, c - floor)
    }
}

impl CircleSampler {
    pub(crate) fn new(spec: &NeighborhoodSpec) -> Self {
        let offsets = (0..spec.points)
            .map(|p| {
                let theta = TAU * f64::from(p) / f64::from(spec.points);
                // (dx, dy) = (R cos, -R sin): p = 0 right, counter-clockwise.
                let (x0, fx) = split_offset(spec.radius * theta.cos());
                let (y0, fy) = split_offset(-spec.radius * theta.sin());
                if fx == 0.0 && fy == 0.0 {
                    NeighborOffset::Exact { dx: x0, dy: y0 }
                } else {
                    NeighborOffset::Bilinear { x0, y0, fx, fy }
                }
            })
            .collect();
        Self {
            offsets,
            border: spec.border(),
        }
    }

    pub(crate) fn border(&self) -> usize {
        self.border
    }

    pub(crate) fn points(&self) -> usize {
        self.offsets.len()
    }

    /// Samples every neighbor of the center `(x, y)` into `out`.
    ///
    /// The center must be at least `border` pixels from every image edge.
    pub(crate) fn sample_into(&self, image: &GrayImage, x: usize, y: usize, out: &mut [f64]) {
        let px = |dx: isize, dy: isize| -> f64 {
            let sx = (x as isize + dx) as usize;
            let sy = (y as isize + dy) as usize;
            f64::from(image.get(sx, sy))
        };
        // Factored lerp form: locally constant intensities interpolate
        // exactly, so ties behave the same on and off pixel centers.
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        for (slot, offset) in out.iter_mut().zip(&self.offsets) {
            *slot = match *offset {
                NeighborOffset::Exact { dx, dy } => px(dx, dy),
                NeighborOffset::Bilinear { x0, y0, fx, fy } => {
                    let top = if fx > 0.0 {
                        lerp(px(x0, y0), px(x0 + 1, y0), fx)
                    } else {
                        px(x0, y0)
                    };
                    if fy > 0.0 {
                        let bottom = if fx > 0.0 {
                            lerp(px(x0, y0 + 1), px(x0 + 1, y0 + 1), fx)
                        } else {
                            px(x0, y0 + 1)
                        };
                        lerp(top, bottom, fy)
                    } else {
                        top
                    }
                }
            };
        }
    }
}

fn check_interior(image: &GrayImage, x: usize, y: usize, border: usize) -> Result<()> {
    if x < border || y < border || x + border >= image.width() || y + border >= image.height() {
        return Err(Error::InvalidArgument(format!(
            "center ({x}, {y}) is within {border} pixels of the border of a {}x{} image",
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

pub(crate) fn check_map_size(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<usize> {
    spec.validate()?;
    let border = spec.border();
    let min = 2 * border + 1;
    if image.width() < min || image.height() < min {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} too small for P={}, R={}: minimum size is {min}x{min}",
            image.width(),
            image.height(),
            spec.points,
            spec.radius
        )));
    }
    Ok(border)
}

/// Samples the `P` circular neighbors of image pixel `(x, y)`.
///
/// Neighbor `p` lies at angle `2*pi*p/P` on the circle of radius `R`;
/// positions on pixel centers are read exactly, others are bilinearly
/// interpolated from the four surrounding pixels.
pub fn sample_circular_neighbors(
    image: &GrayImage,
    x: usize,
    y: usize,
    spec: &NeighborhoodSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    check_interior(image, x, y, spec.border())?;
    let sampler = CircleSampler::new(spec);
    let mut out = vec![0.0; sampler.points()];
    sampler.sample_into(image, x, y, &mut out);
    Ok(out)
}

/// Computes the LBP code map of an image.
///
/// Per interior pixel, thresholds the `P` circular samples against the
/// center (ties count as 1), packs bits `p = 0..P-1`, then applies the
/// spec's mapping. The returned map is cropped by `ceil(R)` on every side.
pub fn lbp_map(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<CodeMap> {
    let border = check_map_size(image, spec)?;
    let table = build_mapping(spec)?;
    let sampler = CircleSampler::new(spec);
    let width = image.width() - 2 * border;
    let height = image.height() - 2 * border;
    let mut codes = Vec::with_capacity(width * height);
    let mut samples = vec![0.0; sampler.points()];
    for y in border..border + height {
        for x in border..border + width {
            sampler.sample_into(image, x, y, &mut samples);
            let center = f64::from(image.get(x, y));
            let mut code = 0u32;
            for (p, &sample) in samples.iter().enumerate() {
                if sample >= center {
                    code |= 1 << p;
                }
            }
            codes.push(table.apply(code));
        }
    }
    Ok(CodeMap::new(width, height, codes))
}

/// LBP code of the center of a single 3x3 window (`P = 8`, `R = 1`, raw).
///
/// The window is row-major with the center at index 4. Bit `p = 0` is the
/// right neighbor and bits proceed counter-clockwise; the four diagonal
/// samples are bilinearly interpolated exactly as in [`lbp_map`], so this
/// agrees with the map computed on the same pixels.
pub fn basic_lbp_code(window: &[u8; 9]) -> u8 {
    let image = GrayImage::new(3, 3, window.to_vec()).expect("3x3 window");
    let spec = NeighborhoodSpec {
        points: 8,
        radius: 1.0,
        mapping: Mapping::Raw,
    };
    let map = lbp_map(&image, &spec).expect("3x3 image fits P=8, R=1");
    map.codes()[0] as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(points: u32, radius: f64, mapping: Mapping) -> NeighborhoodSpec {
        NeighborhoodSpec::new(points, radius, mapping).unwrap()
    }

    #[test]
    fn all_equal_window_gives_all_ones() {
        assert_eq!(basic_lbp_code(&[5; 9]), 255);
    }

    #[test]
    fn bright_center_gives_zero() {
        let mut window = [0u8; 9];
        window[4] = 255;
        assert_eq!(basic_lbp_code(&window), 0);
    }

    #[test]
    fn ties_count_as_one() {
        // Center 0, right neighbor 1, rest 0: every difference is >= 0.
        let window = [0, 0, 0, 0, 0, 1, 0, 0, 0];
        assert_eq!(basic_lbp_code(&window), 255);
    }

    #[test]
    fn cardinal_neighbors_are_exact_reads() {
        let img = GrayImage::from_fn(5, 5, |x, y| (10 * y + x) as u8);
        let s = sample_circular_neighbors(&img, 2, 2, &spec(8, 1.0, Mapping::Raw)).unwrap();
        assert_eq!(s[0], f64::from(img.get(3, 2))); // right
        assert_eq!(s[2], f64::from(img.get(2, 1))); // up
        assert_eq!(s[4], f64::from(img.get(1, 2))); // left
        assert_eq!(s[6], f64::from(img.get(2, 3))); // down
    }

    #[test]
    fn diagonal_neighbors_are_interpolated() {
        let img = GrayImage::from_fn(5, 5, |x, y| (10 * y + x) as u8);
        let s = sample_circular_neighbors(&img, 2, 2, &spec(8, 1.0, Mapping::Raw)).unwrap();
        // Independent bilinear evaluation at (2 + 1/sqrt(2), 2 - 1/sqrt(2)).
        let f = 1.0 / 2f64.sqrt();
        let (fx, fy) = (f, 1.0 - f);
        let expected = (1.0 - fx) * (1.0 - fy) * f64::from(img.get(2, 1))
            + fx * (1.0 - fy) * f64::from(img.get(3, 1))
            + (1.0 - fx) * fy * f64::from(img.get(2, 2))
            + fx * fy * f64::from(img.get(3, 2));
        assert!((s[1] - expected).abs() < 1e-12, "{} vs {expected}", s[1]);
    }

    #[test]
    fn constant_image_samples_the_constant() {
        let img = GrayImage::from_fn(7, 7, |_, _| 42);
        let s = sample_circular_neighbors(&img, 3, 3, &spec(12, 2.0, Mapping::Raw)).unwrap();
        assert!(s.iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn four_point_unit_circle_reads_exactly() {
        let img = GrayImage::from_fn(5, 5, |x, y| (x * 7 + y * 3) as u8);
        let s = sample_circular_neighbors(&img, 2, 2, &spec(4, 1.0, Mapping::Raw)).unwrap();
        assert_eq!(
            s,
            vec![
                f64::from(img.get(3, 2)),
                f64::from(img.get(2, 1)),
                f64::from(img.get(1, 2)),
                f64::from(img.get(2, 3)),
            ]
        );
    }

    #[test]
    fn out_of_bounds_center_errors() {
        let img = GrayImage::from_fn(5, 5, |_, _| 0);
        assert!(sample_circular_neighbors(&img, 0, 2, &spec(8, 1.0, Mapping::Raw)).is_err());
        assert!(sample_circular_neighbors(&img, 2, 4, &spec(8, 1.0, Mapping::Raw)).is_err());
    }

    #[test]
    fn constant_image_maps_to_all_ones_code() {
        let img = GrayImage::from_fn(10, 10, |_, _| 7);
        let map = lbp_map(&img, &spec(8, 1.0, Mapping::Raw)).unwrap();
        assert_eq!((map.width(), map.height()), (8, 8));
        assert!(map.codes().iter().all(|&c| c == 255));
    }

    #[test]
    fn constant_image_riu2_maps_to_popcount_bin() {
        let img = GrayImage::from_fn(10, 10, |_, _| 7);
        let map = lbp_map(&img, &spec(8, 1.0, Mapping::Riu2)).unwrap();
        assert!(map.codes().iter().all(|&c| c == 8));
    }

    #[test]
    fn vertical_step_edge_codes_constant_along_columns() {
        let img = GrayImage::from_fn(12, 12, |x, _| if x < 6 { 0 } else { 200 });
        let map = lbp_map(&img, &spec(8, 1.0, Mapping::Raw)).unwrap();
        for x in 0..map.width() {
            let first = map.get(x, 0);
            for y in 1..map.height() {
                assert_eq!(map.get(x, y), first, "column {x} row {y}");
            }
        }
    }

    #[test]
    fn too_small_image_errors() {
        let img = GrayImage::from_fn(4, 4, |_, _| 0);
        let err = lbp_map(&img, &spec(8, 2.0, Mapping::Raw)).unwrap_err();
        assert!(err.to_string().contains("minimum size"), "{err}");
    }

    #[test]
    fn uniformity_examples() {
        assert_eq!(uniformity(0b0000_0000, 8), 0);
        assert_eq!(uniformity(0b0000_1111, 8), 2);
        // Independent count: walk the circular bit string.
        let code = 0b0101_0101u32;
        let bits: Vec<u32> = (0..8).map(|p| (code >> p) & 1).collect();
        let expected = (0..8).filter(|&p| bits[p] != bits[(p + 1) % 8]).count() as u32;
        assert_eq!(expected, 8);
        assert_eq!(uniformity(code, 8), expected);
    }

    #[test]
    fn bin_counts_for_p8() {
        assert_eq!(bin_count(Mapping::Raw, 8), 256);
        assert_eq!(bin_count(Mapping::U2, 8), 59);
        assert_eq!(bin_count(Mapping::Riu2, 8), 10);
    }

    #[test]
    fn u2_bin_count_matches_enumeration() {
        // Oracle: count codes with at most two transitions by brute force.
        let uniform = (0u32..256).filter(|&c| uniformity(c, 8) <= 2).count();
        assert_eq!(uniform, 58);
        let table = build_mapping(&spec(8, 1.0, Mapping::U2)).unwrap();
        assert_eq!(table.bin_count() as usize, uniform + 1);
    }

    #[test]
    fn riu2_table_sends_all_ones_to_popcount() {
        let table = build_mapping(&spec(8, 1.0, Mapping::Riu2)).unwrap();
        assert_eq!(table.apply(0b1111_1111), 8);
        assert_eq!(table.apply(0), 0);
    }

    #[test]
    fn riu2_is_rotation_invariant_exhaustively() {
        let table = build_mapping(&spec(8, 1.0, Mapping::Riu2)).unwrap();
        for code in 0u32..256 {
            for rot in 0..8 {
                let rotated = ((code << rot) | (code >> (8 - rot))) & 0xff;
                assert_eq!(table.apply(code), table.apply(rotated), "code {code} rot {rot}");
            }
        }
    }

    #[test]
    fn mappings_are_surjective() {
        for mapping in [Mapping::Raw, Mapping::U2, Mapping::Riu2] {
            for points in [4u32, 8] {
                let table = build_mapping(&spec(points, 1.0, mapping)).unwrap();
                let mut hit = vec![false; table.bin_count() as usize];
                for code in 0..(1u32 << points) {
                    hit[table.apply(code) as usize] = true;
                }
                assert!(hit.iter().all(|&h| h), "{mapping} P={points}");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NeighborhoodSpec::new(3, 1.0, Mapping::Raw).is_err());
        assert!(NeighborhoodSpec::new(17, 1.0, Mapping::Raw).is_err());
        assert!(NeighborhoodSpec::new(8, 0.0, Mapping::Raw).is_err());
        assert!(NeighborhoodSpec::new(8, -1.0, Mapping::Raw).is_err());
    }

    proptest! {
        // The 3x3 operator and the full map share one sampling convention.
        #[test]
        fn basic_code_matches_map_on_random_windows(window in proptest::array::uniform9(any::<u8>())) {
            let image = GrayImage::new(3, 3, window.to_vec()).unwrap();
            let map = lbp_map(&image, &spec(8, 1.0, Mapping::Raw)).unwrap();
            prop_assert_eq!(u32::from(basic_lbp_code(&window)), map.codes()[0]);
        }

        // Strictly increasing intensity transforms preserve raw codes when
        // every sample is an exact pixel read (P = 4, R = 1).
        #[test]
        fn monotone_transform_preserves_codes(
            seed in any::<u64>(),
            steps in proptest::collection::vec(1u8..4, 64),
        ) {
            // Image restricted to intensities 0..64 so a strictly increasing
            // u8 lookup table exists.
            let mut state = seed;
            let img = GrayImage::from_fn(9, 9, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 64) as u8
            });
            let mut lut = [0u8; 64];
            let mut value = 0u16;
            for (i, &step) in steps.iter().enumerate() {
                value += u16::from(step);
                lut[i] = value.min(255) as u8;
            }
            let transformed = GrayImage::from_fn(9, 9, |x, y| lut[img.get(x, y) as usize]);
            let s = spec(4, 1.0, Mapping::Raw);
            prop_assert_eq!(lbp_map(&img, &s).unwrap(), lbp_map(&transformed, &s).unwrap());
        }
    }
}
