//! Regional histograms and the multi-resolution descriptor.
//!
//! A code map is divided into a grid of rectangular regions at one or more
//! resolutions (for example 1x1, 2x2, and 4x4). For every region the sign
//! and magnitude histograms (plus optionally the center histogram) are
//! normalized to unit sum and concatenated, level by level and region by
//! region, into one feature vector. The vector carries a layout describing
//! every segment so it can be sliced apart again.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clbp::clbp_all;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::lbp::{lbp_map, CodeMap, Mapping, NeighborhoodSpec};

/// Rectangle in code-map coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

/// Grid resolutions, each `(rows, cols)`, coarsest first by convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub levels: Vec<(u32, u32)>,
}

impl GridSpec {
    pub fn new(levels: Vec<(u32, u32)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one level".into()));
        }
        if levels.iter().any(|&(r, c)| r == 0 || c == 0) {
            return Err(Error::InvalidArgument(
                "grid levels need at least 1 row and 1 column".into(),
            ));
        }
        Ok(Self { levels })
    }

    /// Parses a comma-separated list like `1x1,2x2,4x4`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        for part in text.split(',') {
            let (rows, cols) = part
                .trim()
                .split_once('x')
                .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "bad grid level {part:?}, expected <rows>x<cols>"
                    ))
                })?;
            levels.push((rows, cols));
        }
        Self::new(levels)
    }

    /// Total number of regions across all levels.
    pub fn region_count(&self) -> usize {
        self.levels
            .iter()
            .map(|&(r, c)| r as usize * c as usize)
            .sum()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            levels: vec![(1, 1), (2, 2), (4, 4)],
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (r, c) in &self.levels {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{r}x{c}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Histogram of code counts; raw until [`Histogram::normalized`] is called.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<f64>,
    normalized: bool,
}

impl Histogram {
    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Scales the bins to unit sum. An all-zero histogram (empty region)
    /// stays all-zero.
    pub fn normalized(mut self) -> Histogram {
        let sum = self.sum();
        if sum > 0.0 {
            for bin in &mut self.bins {
                *bin /= sum;
            }
        }
        self.normalized = true;
        self
    }
}

/// Counts the codes of `map` inside `region` into `bin_count` bins.
pub fn region_histogram(map: &CodeMap, region: Rect, bin_count: u32) -> Result<Histogram> {
    if region.x + region.width > map.width() || region.y + region.height > map.height() {
        return Err(Error::InvalidArgument(format!(
            "region {region:?} exceeds the {}x{} map",
            map.width(),
            map.height()
        )));
    }
    let mut bins = vec![0.0; bin_count as usize];
    for y in region.y..region.y + region.height {
        for x in region.x..region.x + region.width {
            let code = map.get(x, y);
            if code >= bin_count {
                return Err(Error::InvalidArgument(format!(
                    "code {code} at ({x}, {y}) does not fit in {bin_count} bins"
                )));
            }
            bins[code as usize] += 1.0;
        }
    }
    Ok(Histogram {
        bins,
        normalized: false,
    })
}

/// Partitions a `map_width` x `map_height` map into `rows` x `cols`
/// rectangles, row-major.
///
/// When the dimensions do not divide evenly the remainder pixels go to the
/// last row/column of regions, so the regions tile the map exactly.
pub fn grid_regions(
    map_width: usize,
    map_height: usize,
    rows: u32,
    cols: u32,
) -> Result<Vec<Rect>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid needs at least 1x1".into()));
    }
    if rows as usize > map_height || cols as usize > map_width {
        return Err(Error::InvalidArgument(format!(
            "{rows}x{cols} grid larger than the {map_width}x{map_height} map"
        )));
    }
    let base_w = map_width / cols as usize;
    let base_h = map_height / rows as usize;
    let mut regions = Vec::with_capacity(rows as usize * cols as usize);
    for r in 0..rows as usize {
        let y = r * base_h;
        let height = if r + 1 == rows as usize {
            map_height - y
        } else {
            base_h
        };
        for c in 0..cols as usize {
            let x = c * base_w;
            let width = if c + 1 == cols as usize {
                map_width - x
            } else {
                base_w
            };
            regions.push(Rect {
                x,
                y,
                width,
                height,
            });
        }
    }
    Ok(regions)
}

/// Which code map a feature segment was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    /// Sign-operator histogram (identical to a plain LBP histogram).
    Sign,
    /// Magnitude-operator histogram.
    Magnitude,
    /// Center-operator histogram (2 bins).
    Center,
}

/// One contiguous slice of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSegment {
    /// Grid level index within the [`GridSpec`].
    pub level: usize,
    /// Grid shape of that level.
    pub rows: u32,
    pub cols: u32,
    /// Region index within the level, row-major.
    pub region: usize,
    pub operator: Operator,
    /// Starting offset in the feature vector.
    pub start: usize,
    /// Number of bins.
    pub len: usize,
}

/// A flat descriptor with the layout of its segments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<LayoutSegment>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The values of one layout segment.
    pub fn segment(&self, segment: &LayoutSegment) -> &[f64] {
        &self.values[segment.start..segment.start + segment.len]
    }
}

/// Builds the multi-resolution sign/magnitude descriptor of one image.
///
/// All three code maps are computed once. For each grid level and each
/// region (row-major) the sign histogram is appended, then the magnitude
/// histogram, then the center histogram when `include_c` is set; every
/// histogram is individually normalized to unit sum.
pub fn pyramid_feature(
    image: &GrayImage,
    spec: &NeighborhoodSpec,
    grid: &GridSpec,
    include_c: bool,
) -> Result<FeatureVector> {
    let maps = clbp_all(image, spec)?;
    let bins = spec.bin_count();
    let mut values = Vec::new();
    let mut layout = Vec::new();
    let mut push = |values: &mut Vec<f64>,
                    layout: &mut Vec<LayoutSegment>,
                    map: &CodeMap,
                    bin_count: u32,
                    level: usize,
                    shape: (u32, u32),
                    region: usize,
                    rect: Rect,
                    operator: Operator|
     -> Result<()> {
        let hist = region_histogram(map, rect, bin_count)?.normalized();
        let start = values.len();
        values.extend_from_slice(hist.bins());
        layout.push(LayoutSegment {
            level,
            rows: shape.0,
            cols: shape.1,
            region,
            operator,
            start,
            len: bin_count as usize,
        });
        Ok(())
    };

    for (level, &(rows, cols)) in grid.levels.iter().enumerate() {
        let regions = grid_regions(maps.s_map.width(), maps.s_map.height(), rows, cols)?;
        for (region, &rect) in regions.iter().enumerate() {
            push(
                &mut values,
                &mut layout,
                &maps.s_map,
                bins,
                level,
                (rows, cols),
                region,
                rect,
                Operator::Sign,
            )?;
            push(
                &mut values,
                &mut layout,
                &maps.m_map,
                bins,
                level,
                (rows, cols),
                region,
                rect,
                Operator::Magnitude,
            )?;
            if include_c {
                push(
                    &mut values,
                    &mut layout,
                    &maps.c_map,
                    2,
                    level,
                    (rows, cols),
                    region,
                    rect,
                    Operator::Center,
                )?;
            }
        }
    }
    Ok(FeatureVector { values, layout })
}

/// Builds a plain LBP pyramid: one normalized LBP histogram per region.
///
/// Segments are tagged [`Operator::Sign`] since the sign operator and the
/// plain LBP produce identical code maps.
pub fn lbp_pyramid_feature(
    image: &GrayImage,
    spec: &NeighborhoodSpec,
    grid: &GridSpec,
) -> Result<FeatureVector> {
    let map = lbp_map(image, spec)?;
    let bins = spec.bin_count();
    let mut values = Vec::new();
    let mut layout = Vec::new();
    for (level, &(rows, cols)) in grid.levels.iter().enumerate() {
        let regions = grid_regions(map.width(), map.height(), rows, cols)?;
        for (region, &rect) in regions.iter().enumerate() {
            let hist = region_histogram(&map, rect, bins)?.normalized();
            let start = values.len();
            values.extend_from_slice(hist.bins());
            layout.push(LayoutSegment {
                level,
                rows,
                cols,
                region,
                operator: Operator::Sign,
                start,
                len: bins as usize,
            });
        }
    }
    Ok(FeatureVector { values, layout })
}

/// Which descriptor the pipeline extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    /// Plain LBP histograms per region.
    Lbp,
    /// Concatenated sign and magnitude histograms per region.
    ClbpSM,
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::ClbpSM => "clbp_s_m",
        })
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbp" => Ok(DescriptorKind::Lbp),
            "clbp_s_m" => Ok(DescriptorKind::ClbpSM),
            other => Err(Error::InvalidArgument(format!(
                "unknown descriptor {other:?}, expected lbp or clbp_s_m"
            ))),
        }
    }
}

/// Full descriptor configuration: operator family, neighborhood, and grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    pub descriptor: DescriptorKind,
    pub points: u32,
    pub radius: f64,
    pub mapping: Mapping,
    pub grid: GridSpec,
    /// Append the 2-bin center histogram per region (sign/magnitude
    /// descriptor only).
    pub include_center: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            descriptor: DescriptorKind::ClbpSM,
            points: 8,
            radius: 1.0,
            mapping: Mapping::Riu2,
            grid: GridSpec::default(),
            include_center: false,
        }
    }
}

impl DescriptorConfig {
    pub fn neighborhood(&self) -> NeighborhoodSpec {
        NeighborhoodSpec {
            points: self.points,
            radius: self.radius,
            mapping: self.mapping,
        }
    }

    /// Length of the feature vectors this configuration produces.
    pub fn feature_len(&self) -> usize {
        let bins = self.neighborhood().bin_count() as usize;
        let per_region = match self.descriptor {
            DescriptorKind::Lbp => bins,
            DescriptorKind::ClbpSM => 2 * bins + if self.include_center { 2 } else { 0 },
        };
        self.grid.region_count() * per_region
    }
}

/// Extracts the configured descriptor from one image.
pub fn extract_features(image: &GrayImage, config: &DescriptorConfig) -> Result<FeatureVector> {
    let spec = config.neighborhood();
    match config.descriptor {
        DescriptorKind::Lbp => lbp_pyramid_feature(image, &spec, &config.grid),
        DescriptorKind::ClbpSM => pyramid_feature(image, &spec, &config.grid, config.include_center),
    }
}

// --- feature cache -------------------------------------------------------

/// Header line of a feature CSV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    version: u32,
    config_hash: String,
    descriptor: DescriptorConfig,
    layout: Vec<LayoutSegment>,
}

const CACHE_FORMAT: &str = "clbp-face/features";
const CACHE_VERSION: u32 = 1;

/// 64-bit FNV-1a over the canonical JSON form of the configuration.
pub fn config_hash(config: &DescriptorConfig) -> String {
    let json = serde_json::to_string(config).expect("descriptor config serializes");
    let mut hash = 0xcbf29ce484222325u64;
    for byte in json.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

/// A parsed feature CSV: the header plus one labeled vector per row.
#[derive(Debug, Clone)]
pub struct FeatureFile {
    pub descriptor: DescriptorConfig,
    pub config_hash: String,
    pub layout: Vec<LayoutSegment>,
    pub labels: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
}

fn format_f64(v: f64) -> String {
    // Debug formatting round-trips f64 exactly and keeps a trailing ".0".
    format!("{v:?}")
}

/// Writes labeled feature vectors as CSV with a JSON header line.
///
/// Line 1 is a JSON object carrying the format tag, a configuration hash,
/// the descriptor configuration, and the segment layout. Every following
/// line is `label,v0,v1,...` in layout order; floats are written in their
/// shortest exact form.
pub fn write_features_csv(
    path: &Path,
    descriptor: &DescriptorConfig,
    layout: &[LayoutSegment],
    labels: &[usize],
    vectors: &[Vec<f64>],
) -> Result<()> {
    if labels.len() != vectors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels but {} vectors",
            labels.len(),
            vectors.len()
        )));
    }
    let header = CacheHeader {
        format: CACHE_FORMAT.into(),
        version: CACHE_VERSION,
        config_hash: config_hash(descriptor),
        descriptor: descriptor.clone(),
        layout: layout.to_vec(),
    };
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    serde_json::to_writer(&mut out, &header).map_err(|e| Error::Cache(e.to_string()))?;
    out.write_all(b"\n").map_err(io_err)?;
    for (label, vector) in labels.iter().zip(vectors) {
        let mut line = String::with_capacity(vector.len() * 8);
        line.push_str(&label.to_string());
        for value in vector {
            line.push(',');
            line.push_str(&format_f64(*value));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a feature CSV produced by [`write_features_csv`].
pub fn read_features_csv(path: &Path) -> Result<FeatureFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Cache(format!("{}: empty file", path.display())))?;
    let header: CacheHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Cache(format!("{}: bad header: {e}", path.display())))?;
    if header.format != CACHE_FORMAT {
        return Err(Error::Cache(format!(
            "{}: unknown format {:?}",
            path.display(),
            header.format
        )));
    }
    if header.version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "{}: unsupported version {}",
            path.display(),
            header.version
        )));
    }
    let expected_len: usize = header.layout.iter().map(|s| s.len).sum();
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields
            .next()
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(|| Error::Cache(format!("{}: row {}: bad label", path.display(), row + 2)))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Cache(format!("{}: row {}: {e}", path.display(), row + 2)))?;
        if values.len() != expected_len {
            return Err(Error::Cache(format!(
                "{}: row {}: {} values, layout expects {}",
                path.display(),
                row + 2,
                values.len(),
                expected_len
            )));
        }
        labels.push(label);
        vectors.push(values);
    }
    Ok(FeatureFile {
        descriptor: header.descriptor,
        config_hash: header.config_hash,
        layout: header.layout,
        labels,
        vectors,
    })
}
