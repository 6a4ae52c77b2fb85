use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::GrayImage;
use crate::error::{Error, Result};
use crate::io::{load_matrix, save_matrix};
use crate::numerics::{sample_indices, Matrix, RngSeed};

/// Where a patch came from: image id and top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchOrigin {
    pub image: usize,
    pub x: usize,
    pub y: usize,
}

/// Vectorized square patches, one per column, column-major within the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub side: usize,
    pub patches: Matrix<f64>,
    /// Mean removed from each patch (0 when extraction kept the DC).
    pub means: Vec<f64>,
    pub origins: Vec<PatchOrigin>,
}

impl PatchSet {
    pub fn empty(side: usize) -> Self {
        Self {
            side,
            patches: Matrix::zeros(side * side, 0),
            means: Vec::new(),
            origins: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.patches.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenates patch sets of equal side.
    pub fn concat(sets: &[PatchSet]) -> Result<PatchSet> {
        let Some(first) = sets.first() else {
            return Err(Error::EmptySamples);
        };
        let side = first.side;
        let mut cols: Vec<&[f64]> = Vec::new();
        let mut out = PatchSet::empty(side);
        for s in sets {
            if s.side != side {
                return Err(Error::ShapeMismatch(format!("patch sides {side} and {}", s.side)));
            }
            cols.extend(s.patches.columns());
            out.means.extend_from_slice(&s.means);
            out.origins.extend_from_slice(&s.origins);
        }
        out.patches = Matrix::from_columns(side * side, &cols)?;
        Ok(out)
    }

    /// Replaces the patch vectors, keeping means and origins.
    pub fn with_patches(&self, patches: Matrix<f64>) -> Result<PatchSet> {
        if patches.shape() != self.patches.shape() {
            return Err(Error::ShapeMismatch(format!(
                "expected {:?} patches, got {:?}",
                self.patches.shape(),
                patches.shape()
            )));
        }
        Ok(PatchSet {
            patches,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOptions {
    pub side: usize,
    pub stride: usize,
    pub subtract_mean: bool,
    /// Keep a uniform random subset of at most this many patches.
    pub max_count: Option<usize>,
    pub seed: RngSeed,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            side: 8,
            stride: 8,
            subtract_mean: true,
            max_count: None,
            seed: RngSeed(0),
        }
    }
}

fn check_fits(img: &GrayImage, side: usize) -> Result<()> {
    if side == 0 || side > img.width() || side > img.height() {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            side,
        });
    }
    Ok(())
}

fn patch_at(img: &GrayImage, side: usize, x0: usize, y0: usize, subtract_mean: bool) -> (Vec<f64>, f64) {
    let mut v = Vec::with_capacity(side * side);
    for x in x0..x0 + side {
        for y in y0..y0 + side {
            v.push(img.get(x, y));
        }
    }
    if !subtract_mean {
        return (v, 0.0);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|p| *p -= mean);
    (v, mean)
}

fn build(img: &GrayImage, image: usize, side: usize, subtract_mean: bool, origins: Vec<(usize, usize)>) -> Result<PatchSet> {
    let mut cols = Vec::with_capacity(origins.len());
    let mut means = Vec::with_capacity(origins.len());
    for &(x, y) in &origins {
        let (v, m) = patch_at(img, side, x, y, subtract_mean);
        cols.push(v);
        means.push(m);
    }
    Ok(PatchSet {
        side,
        patches: Matrix::from_columns(side * side, &cols)?,
        means,
        origins: origins.into_iter().map(|(x, y)| PatchOrigin { image, x, y }).collect(),
    })
}

/// Patches on a regular grid in raster order (row of origins by row).
pub fn extract_patches(img: &GrayImage, image: usize, opts: &ExtractOptions) -> Result<PatchSet> {
    check_fits(img, opts.side)?;
    if opts.stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let mut origins: Vec<(usize, usize)> = (0..=img.height() - opts.side)
        .step_by(opts.stride)
        .flat_map(|y| {
            (0..=img.width() - opts.side)
                .step_by(opts.stride)
                .map(move |x| (x, y))
        })
        .collect();
    if let Some(max) = opts.max_count {
        if max < origins.len() {
            let keep = sample_indices(origins.len(), max, &mut opts.seed.rng());
            origins = keep.into_iter().map(|i| origins[i]).collect();
        }
    }
    build(img, image, opts.side, opts.subtract_mean, origins)
}

/// `count` patches at uniformly random origins.
pub fn random_patches(
    img: &GrayImage,
    image: usize,
    side: usize,
    count: usize,
    subtract_mean: bool,
    seed: RngSeed,
) -> Result<PatchSet> {
    check_fits(img, side)?;
    let mut rng = seed.rng();
    let origins = (0..count)
        .map(|_| {
            (
                rng.random_range(0..=img.width() - side),
                rng.random_range(0..=img.height() - side),
            )
        })
        .collect();
    build(img, image, side, subtract_mean, origins)
}

/// Places every patch (plus its mean) back at its origin. The patches must
/// cover each pixel exactly once. Pixels are clamped to `[0, peak]`.
pub fn reassemble(set: &PatchSet, width: usize, height: usize, peak: f64) -> Result<GrayImage> {
    let side = set.side;
    let mut pixels = vec![0.0; width * height];
    let mut covered = vec![false; width * height];
    for (i, o) in set.origins.iter().enumerate() {
        if o.x + side > width || o.y + side > height {
            return Err(Error::IncompleteTiling { width, height });
        }
        let p = set.patches.col(i);
        for dx in 0..side {
            for dy in 0..side {
                let at = (o.y + dy) * width + o.x + dx;
                if covered[at] {
                    return Err(Error::IncompleteTiling { width, height });
                }
                covered[at] = true;
                pixels[at] = (p[dx * side + dy] + set.means[i]).clamp(0.0, peak);
            }
        }
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::IncompleteTiling { width, height });
    }
    GrayImage::with_peak(width, height, pixels, peak)
}

fn meta_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Writes the patches as MLDMAT1 at `path` and `image x y mean` lines to `path.meta`.
pub fn save_patch_set(path: impl AsRef<Path>, set: &PatchSet) -> Result<()> {
    let path = path.as_ref();
    save_matrix(path, &set.patches)?;
    let mut meta = format!("side {}\n", set.side);
    for (o, m) in set.origins.iter().zip(&set.means) {
        let _ = writeln!(meta, "{} {} {} {:?}", o.image, o.x, o.y, m);
    }
    fs::write(meta_path(path), meta)?;
    Ok(())
}

pub fn load_patch_set(path: impl AsRef<Path>) -> Result<PatchSet> {
    let path = path.as_ref();
    let patches = load_matrix(path)?;
    let text = fs::read_to_string(meta_path(path))?;
    let bad = |line: &str| Error::Format(format!("bad patch metadata line {line:?}"));
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let side: usize = header
        .strip_prefix("side ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad(header))?;
    let mut means = Vec::new();
    let mut origins = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(line));
        }
        let n = |s: &str| s.parse::<usize>().map_err(|_| bad(line));
        origins.push(PatchOrigin { image: n(f[0])?, x: n(f[1])?, y: n(f[2])? });
        means.push(f[3].parse::<f64>().map_err(|_| bad(line))?);
    }
    if patches.rows() != side * side || patches.cols() != means.len() {
        return Err(Error::Format(format!(
            "metadata describes {} patches of side {side}, matrix is {}x{}",
            means.len(),
            patches.rows(),
            patches.cols()
        )));
    }
    Ok(PatchSet { side, patches, means, origins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = RngSeed(seed).rng();
        let px = (0..w * h).map(|_| f64::from(rng.random_range(0u8..=255))).collect();
        GrayImage::new(w, h, px).unwrap()
    }

    #[test]
    fn grid_count_and_constant_image() {
        let img = GrayImage::from_fn(16, 16, |_, _| 42.0);
        let set = extract_patches(&img, 0, &ExtractOptions::default()).unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.patches.as_slice().iter().all(|&v| v == 0.0));
        assert!(set.means.iter().all(|&m| m == 42.0));
        let origins: Vec<(usize, usize)> = set.origins.iter().map(|o| (o.x, o.y)).collect();
        assert_eq!(origins, vec![(0, 0), (8, 0), (0, 8), (8, 8)]);
    }

    #[test]
    fn vectorization_is_column_major() {
        let img = GrayImage::from_fn(2, 2, |x, y| (10 * x + y) as f64);
        let opts = ExtractOptions { side: 2, stride: 2, subtract_mean: false, ..Default::default() };
        let set = extract_patches(&img, 0, &opts).unwrap();
        assert_eq!(set.patches.col(0), &[0.0, 1.0, 10.0, 11.0]);
    }

    #[test]
    fn patches_have_zero_mean() {
        let set = extract_patches(&noisy(24, 16, 1), 3, &ExtractOptions::default()).unwrap();
        for p in set.patches.columns() {
            assert!(p.iter().sum::<f64>().abs() / 64.0 < 1e-10);
        }
        assert!(set.origins.iter().all(|o| o.image == 3));
    }

    #[test]
    fn tiling_roundtrip_exact() {
        let img = noisy(32, 24, 2);
        let set = extract_patches(&img, 0, &ExtractOptions::default()).unwrap();
        assert_eq!(reassemble(&set, 32, 24, 255.0).unwrap(), img);
        let whole = ExtractOptions { side: 24, stride: 24, ..Default::default() };
        let img = noisy(24, 24, 3);
        let set = extract_patches(&img, 0, &whole).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(reassemble(&set, 24, 24, 255.0).unwrap(), img);
    }

    #[test]
    fn zero_patches_give_piecewise_constant_means() {
        let img = noisy(16, 8, 4);
        let set = extract_patches(&img, 0, &ExtractOptions::default()).unwrap();
        let flat = set.with_patches(Matrix::zeros(64, 2)).unwrap();
        let out = reassemble(&flat, 16, 8, 255.0).unwrap();
        for x in 0..16 {
            for y in 0..8 {
                assert_eq!(out.get(x, y), set.means[x / 8]);
            }
        }
    }

    #[test]
    fn errors() {
        let img = noisy(6, 10, 5);
        assert!(matches!(
            extract_patches(&img, 0, &ExtractOptions::default()),
            Err(Error::ImageTooSmall { .. })
        ));
        let img = noisy(16, 16, 6);
        let mut set = extract_patches(&img, 0, &ExtractOptions::default()).unwrap();
        set.origins.pop();
        set.means.pop();
        assert!(matches!(reassemble(&set, 16, 16, 255.0), Err(Error::IncompleteTiling { .. })));
        let overlapping = ExtractOptions { stride: 4, ..Default::default() };
        let set = extract_patches(&img, 0, &overlapping).unwrap();
        assert!(matches!(reassemble(&set, 16, 16, 255.0), Err(Error::IncompleteTiling { .. })));
    }

    #[test]
    fn subsampling_is_seeded() {
        let img = noisy(64, 64, 7);
        let opts = ExtractOptions { stride: 1, max_count: Some(100), seed: RngSeed(9), ..Default::default() };
        let a = extract_patches(&img, 0, &opts).unwrap();
        let b = extract_patches(&img, 0, &opts).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        let r1 = random_patches(&img, 0, 8, 30, true, RngSeed(1)).unwrap();
        let r2 = random_patches(&img, 0, 8, 30, true, RngSeed(1)).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = noisy(16, 16, 8);
        let set = extract_patches(&img, 2, &ExtractOptions::default()).unwrap();
        let p = dir.path().join("patches.bin");
        save_patch_set(&p, &set).unwrap();
        assert!(dir.path().join("patches.bin.meta").exists());
        assert_eq!(load_patch_set(&p).unwrap(), set);
    }
}
