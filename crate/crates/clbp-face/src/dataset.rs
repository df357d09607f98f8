//! Labeled image datasets: ORL directory ingestion and a synthetic
//! texture generator for dataset-free testing.
//!
//! The ORL database is not bundled. Its canonical layout is
//! `<root>/s<k>/<i>.pgm` with `k` in `1..=40` and `i` in `1..=10`; point
//! [`load_orl`] at a directory with that shape. [`synth_dataset`] produces a
//! deterministic stand-in whose classes are separable by texture
//! descriptors, which is what the test suites run against when no ORL data
//! is available.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{load_pgm, GrayImage};

/// A set of images with 0-based integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    images: Vec<GrayImage>,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    /// Bundles images with their labels.
    ///
    /// Labels must be 0-based and contiguous: `class_count` is the largest
    /// label plus one, and every class in `0..class_count` must own at least
    /// one image.
    pub fn new(images: Vec<GrayImage>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if images.is_empty() {
            return Err(Error::Dataset("dataset has no images".into()));
        }
        let class_count = labels.iter().max().unwrap() + 1;
        let mut counts = vec![0usize; class_count];
        for &label in &labels {
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Dataset(format!("class {empty} has no images")));
        }
        Ok(Self {
            images,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Number of images per class, indexed by label.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &label in &self.labels {
            counts[label] += 1;
        }
        counts
    }

    /// Dataset indices belonging to `class`, in dataset order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Loads an ORL-style directory tree into a dataset.
///
/// Subject directories are named `s1`, `s2`, ... and each must contain
/// `1.pgm` through `10.pgm`. Images are ordered by (subject ascending, image
/// index ascending) and labeled with the subject's 0-based rank. Trees with
/// fewer than 40 subjects load with a warning.
pub fn load_orl(root: &Path) -> Result<LabeledDataset> {
    let entries = fs::read_dir(root).map_err(|source| Error::Io {
        path: root.to_path_buf(),
        source,
    })?;

    let mut subjects: Vec<(u32, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: root.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        let Some(number) = name
            .to_str()
            .and_then(|s| s.strip_prefix('s'))
            .and_then(|s| s.parse::<u32>().ok())
        else {
            continue;
        };
        if entry.path().is_dir() {
            subjects.push((number, entry.path()));
        }
    }
    if subjects.is_empty() {
        return Err(Error::Dataset(format!(
            "no subject directories (s1, s2, ...) found in {}",
            root.display()
        )));
    }
    subjects.sort_by_key(|(number, _)| *number);
    if subjects.len() < 40 {
        eprintln!(
            "warning: {} has {} subject directories, the full ORL tree has 40",
            root.display(),
            subjects.len()
        );
    }

    let mut images = Vec::with_capacity(subjects.len() * 10);
    let mut labels = Vec::with_capacity(subjects.len() * 10);
    for (rank, (number, dir)) in subjects.iter().enumerate() {
        if *number as usize != rank + 1 {
            eprintln!(
                "warning: subject directory s{number} gets label {rank} (numbering has gaps)"
            );
        }
        for index in 1..=10 {
            let path = dir.join(format!("{index}.pgm"));
            let bytes = fs::read(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let image = load_pgm(&bytes)
                .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
            images.push(image);
            labels.push(rank);
        }
    }
    LabeledDataset::new(images, labels)
}

/// Generates a deterministic synthetic dataset of labeled textures.
///
/// Each class is an oriented sinusoid grating with a class-specific spatial
/// frequency and orientation; each image adds a random phase and per-pixel
/// noise drawn from a stream seeded only by `seed`. Identical arguments
/// produce byte-identical datasets.
pub fn synth_dataset(
    class_count: usize,
    per_class: usize,
    side: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if class_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "class_count must be at least 2, got {class_count}"
        )));
    }
    if per_class < 2 {
        return Err(Error::InvalidArgument(format!(
            "per_class must be at least 2, got {per_class}"
        )));
    }
    if side < 16 {
        return Err(Error::InvalidArgument(format!(
            "side must be at least 16, got {side}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(class_count * per_class);
    let mut labels = Vec::with_capacity(class_count * per_class);
    for class in 0..class_count {
        let angle = TAU / 2.0 * class as f64 / class_count as f64;
        let cycles = 2.0 + 1.5 * class as f64;
        let (sin, cos) = angle.sin_cos();
        for _ in 0..per_class {
            let phase = rng.random::<f64>() * TAU;
            let image = GrayImage::from_fn(side, side, |x, y| {
                let u = (x as f64 * cos + y as f64 * sin) / side as f64;
                let wave = 127.5 + 90.0 * (TAU * cycles * u + phase).sin();
                let noise = rng.random_range(-10.0..=10.0);
                (wave + noise).round().clamp(0.0, 255.0) as u8
            });
            images.push(image);
            labels.push(class);
        }
    }
    LabeledDataset::new(images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::write_pgm;
    use std::fs;

    fn write_orl_tree(root: &Path, subjects: usize, side: usize) {
        for s in 1..=subjects {
            let dir = root.join(format!("s{s}"));
            fs::create_dir_all(&dir).unwrap();
            for i in 1..=10 {
                let img = GrayImage::from_fn(side, side, |x, y| ((x + y * s + i) % 256) as u8);
                fs::write(dir.join(format!("{i}.pgm")), write_pgm(&img)).unwrap();
            }
        }
    }

    #[test]
    fn loads_full_tree() {
        let tmp = tempfile::tempdir().unwrap();
        write_orl_tree(tmp.path(), 40, 16);
        let ds = load_orl(tmp.path()).unwrap();
        assert_eq!(ds.len(), 400);
        assert_eq!(ds.class_count(), 40);
        assert!(ds.class_sizes().iter().all(|&c| c == 10));
        // Ordered by (subject, image index): first ten images share label 0.
        assert!(ds.labels()[..10].iter().all(|&l| l == 0));
        assert_eq!(ds.labels()[10], 1);
    }

    #[test]
    fn loads_single_subject() {
        let tmp = tempfile::tempdir().unwrap();
        write_orl_tree(tmp.path(), 1, 16);
        let ds = load_orl(tmp.path()).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.class_count(), 1);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_orl(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)), "{err:?}");
    }

    #[test]
    fn missing_root_names_the_path() {
        let err = load_orl(Path::new("/nonexistent/orl")).unwrap_err();
        match err {
            Error::Io { path, .. } => assert_eq!(path, Path::new("/nonexistent/orl")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_image_names_the_path() {
        let tmp = tempfile::tempdir().unwrap();
        write_orl_tree(tmp.path(), 2, 16);
        fs::remove_file(tmp.path().join("s2/7.pgm")).unwrap();
        let err = load_orl(tmp.path()).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.ends_with("s2/7.pgm")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn label_partition_sums_to_total() {
        let tmp = tempfile::tempdir().unwrap();
        write_orl_tree(tmp.path(), 5, 16);
        let ds = load_orl(tmp.path()).unwrap();
        assert_eq!(ds.class_sizes().iter().sum::<usize>(), ds.len());
    }

    #[test]
    fn synth_shapes_and_determinism() {
        let a = synth_dataset(4, 6, 32, 7).unwrap();
        assert_eq!(a.len(), 24);
        assert_eq!(a.class_count(), 4);
        let b = synth_dataset(4, 6, 32, 7).unwrap();
        for (x, y) in a.images().iter().zip(b.images()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn synth_minimal_arguments() {
        let ds = synth_dataset(2, 2, 16, 0).unwrap();
        assert_eq!(ds.len(), 4);
    }

    #[test]
    fn synth_seeds_differ_but_shapes_match() {
        let a = synth_dataset(3, 2, 16, 1).unwrap();
        let b = synth_dataset(3, 2, 16, 2).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(
            a.images().iter().zip(b.images()).any(|(x, y)| x != y),
            "different seeds should change pixels"
        );
    }

    #[test]
    fn synth_rejects_bad_arguments() {
        assert!(synth_dataset(1, 2, 16, 0).is_err());
        assert!(synth_dataset(2, 1, 16, 0).is_err());
        assert!(synth_dataset(2, 2, 15, 0).is_err());
    }

    #[test]
    fn rejects_label_gaps() {
        let img = GrayImage::from_fn(4, 4, |_, _| 0);
        let err = LabeledDataset::new(vec![img.clone(), img], vec![0, 2]).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
    }
}
