//! Completed LBP operators: sign, magnitude, and center code maps.
//!
//! For each neighbor the local difference `D_p = f_p - f_c` is split into a
//! sign `S_p` (+1 when `D_p >= 0`, otherwise -1) and a magnitude
//! `M_p = |D_p|`, so `S_p * M_p == D_p` exactly. The sign operator codes
//! the signs (bit-for-bit identical to the plain LBP thresholding), the
//! magnitude operator thresholds magnitudes against their mean over all
//! coded pixels, and the center operator thresholds each center pixel
//! against the global image mean.

use crate::error::Result;
use crate::image::GrayImage;
use crate::lbp::{build_mapping, check_map_size, CircleSampler, CodeMap, NeighborhoodSpec};

/// The three code maps of one image plus the thresholds used.
#[derive(Debug, Clone)]
pub struct ClbpMaps {
    /// Sign operator map (mapping applied).
    pub s_map: CodeMap,
    /// Magnitude operator map (mapping applied).
    pub m_map: CodeMap,
    /// Center operator map; every code is 0 or 1.
    pub c_map: CodeMap,
    /// Mean neighbor-difference magnitude over all coded pixels.
    pub m_threshold: f64,
    /// Mean intensity of the whole image (borders included).
    pub c_threshold: f64,
}

/// Splits neighbor differences against `center` into signs and magnitudes.
///
/// Returns `(signs, magnitudes)` with `signs[p] * magnitudes[p]` equal to
/// `neighbors[p] - center` exactly. A zero difference has sign +1.
pub fn clbp_decompose(center: f64, neighbors: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut signs = Vec::with_capacity(neighbors.len());
    let mut magnitudes = Vec::with_capacity(neighbors.len());
    for &neighbor in neighbors {
        let difference = neighbor - center;
        signs.push(if difference >= 0.0 { 1.0 } else { -1.0 });
        magnitudes.push(difference.abs());
    }
    (signs, magnitudes)
}

/// Computes the sign-operator code map.
///
/// Bit `p` is set when `S_p >= 0`, i.e. when the neighbor difference is
/// non-negative, so the result is identical to [`crate::lbp::lbp_map`].
pub fn clbp_s_map(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<CodeMap> {
    let maps = compute(image, spec, Parts::S)?;
    Ok(maps.s_map)
}

/// Computes the magnitude-operator code map and the threshold used.
///
/// A first pass collects every neighbor magnitude over the coded interior;
/// their arithmetic mean `c` is the threshold. Bit `p` is set when
/// `M_p >= c`.
pub fn clbp_m_map(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<(CodeMap, f64)> {
    let maps = compute(image, spec, Parts::M)?;
    Ok((maps.m_map, maps.m_threshold))
}

/// Computes the center-operator code map.
///
/// The threshold is the mean intensity of the whole image (borders
/// included); each interior pixel codes to 1 when its intensity reaches the
/// mean, otherwise 0.
pub fn clbp_c_map(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<CodeMap> {
    let maps = compute(image, spec, Parts::C)?;
    Ok(maps.c_map)
}

/// Computes all three operators from one pass of neighbor samples.
pub fn clbp_all(image: &GrayImage, spec: &NeighborhoodSpec) -> Result<ClbpMaps> {
    compute(image, spec, Parts::All)
}

#[derive(Clone, Copy, PartialEq)]
enum Parts {
    S,
    M,
    C,
    All,
}

impl Parts {
    fn wants_s(self) -> bool {
        matches!(self, Parts::S | Parts::All)
    }

    fn wants_m(self) -> bool {
        matches!(self, Parts::M | Parts::All)
    }

    fn wants_c(self) -> bool {
        matches!(self, Parts::C | Parts::All)
    }
}

fn compute(image: &GrayImage, spec: &NeighborhoodSpec, parts: Parts) -> Result<ClbpMaps> {
    let border = check_map_size(image, spec)?;
    let table = build_mapping(spec)?;
    let sampler = CircleSampler::new(spec);
    let points = sampler.points();
    let width = image.width() - 2 * border;
    let height = image.height() - 2 * border;
    let pixel_count = width * height;

    let c_threshold = image.mean();

    let mut s_codes = Vec::with_capacity(if parts.wants_s() { pixel_count } else { 0 });
    let mut c_codes = Vec::with_capacity(if parts.wants_c() { pixel_count } else { 0 });
    // Magnitudes are buffered so the mean is known before the second pass.
    let mut magnitudes = Vec::with_capacity(if parts.wants_m() { pixel_count * points } else { 0 });

    let mut samples = vec![0.0; points];
    for y in border..border + height {
        for x in border..border + width {
            sampler.sample_into(image, x, y, &mut samples);
            let center = f64::from(image.get(x, y));
            let (signs, mags) = clbp_decompose(center, &samples);
            if parts.wants_s() {
                let mut code = 0u32;
                for (p, &sign) in signs.iter().enumerate() {
                    if sign >= 0.0 {
                        code |= 1 << p;
                    }
                }
                s_codes.push(table.apply(code));
            }
            if parts.wants_m() {
                magnitudes.extend_from_slice(&mags);
            }
            if parts.wants_c() {
                c_codes.push(u32::from(center >= c_threshold));
            }
        }
    }

    let (m_codes, m_threshold) = if parts.wants_m() {
        let sum: f64 = magnitudes.iter().sum();
        let threshold = sum / magnitudes.len() as f64;
        let codes = magnitudes
            .chunks_exact(points)
            .map(|mags| {
                let mut code = 0u32;
                for (p, &m) in mags.iter().enumerate() {
                    if m >= threshold {
                        code |= 1 << p;
                    }
                }
                table.apply(code)
            })
            .collect();
        (codes, threshold)
    } else {
        (Vec::new(), 0.0)
    };

    let empty = CodeMap::new(width, height, vec![0; pixel_count]);
    Ok(ClbpMaps {
        s_map: if parts.wants_s() {
            CodeMap::new(width, height, s_codes)
        } else {
            empty.clone()
        },
        m_map: if parts.wants_m() {
            CodeMap::new(width, height, m_codes)
        } else {
            empty.clone()
        },
        c_map: if parts.wants_c() {
            CodeMap::new(width, height, c_codes)
        } else {
            empty
        },
        m_threshold,
        c_threshold,
    })
}
