use rand::Rng;

use super::GrayImage;
use crate::error::{Error, Result};
use crate::numerics::{normalize, random_unit_vector, sample_indices, standard_normal, Matrix, RngSeed};

/// Planted multilevel model: sample `i` is `Σ_l c_{l,i} ψ_{l,j_l(i)}` plus noise,
/// with `c_{l,i} ~ N(0, decay^l)` so expected level energies shrink by `decay`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dim: usize,
    /// Atoms per level; a single entry applies to every level.
    pub k_per_level: Vec<usize>,
    pub levels: usize,
    pub samples: usize,
    pub noise_sigma: f64,
    pub energy_decay: f64,
    pub seed: RngSeed,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub data: Matrix<f64>,
    pub planted: Vec<Matrix<f64>>,
    /// `assignments[l][i]`: planted atom used by sample `i` at level `l`.
    pub assignments: Vec<Vec<usize>>,
    pub coefficients: Vec<Vec<f64>>,
}

fn k_at(ks: &[usize], l: usize) -> usize {
    if ks.len() == 1 {
        ks[0]
    } else {
        ks[l]
    }
}

pub fn synth_hyperlines(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.dim == 0 || cfg.samples == 0 || cfg.levels == 0 {
        return Err(Error::InvalidArgument("dim, samples and levels must be >= 1".into()));
    }
    if cfg.k_per_level.is_empty() || (cfg.k_per_level.len() != 1 && cfg.k_per_level.len() != cfg.levels) {
        return Err(Error::InvalidK(format!(
            "{} atom counts for {} levels",
            cfg.k_per_level.len(),
            cfg.levels
        )));
    }
    if cfg.k_per_level.contains(&0) {
        return Err(Error::InvalidK("atom counts must be >= 1".into()));
    }
    if !(cfg.noise_sigma >= 0.0) || !(cfg.energy_decay > 0.0) {
        return Err(Error::InvalidArgument("noise must be >= 0 and decay > 0".into()));
    }
    let mut rng = cfg.seed.rng();
    let m = cfg.dim;
    let planted: Vec<Matrix<f64>> = (0..cfg.levels)
        .map(|l| {
            let cols: Vec<Vec<f64>> = (0..k_at(&cfg.k_per_level, l))
                .map(|_| random_unit_vector(m, &mut rng))
                .collect();
            Matrix::from_columns(m, &cols)
        })
        .collect::<Result<_>>()?;

    draw_planted(&planted, cfg.samples, cfg.noise_sigma, cfg.energy_decay, &mut rng)
}

/// Fresh samples from an existing planted model (see [`SynthConfig`]).
pub fn draw_planted<R: Rng + ?Sized>(
    planted: &[Matrix<f64>],
    count: usize,
    noise_sigma: f64,
    energy_decay: f64,
    rng: &mut R,
) -> Result<SynthData> {
    let Some(first) = planted.first() else {
        return Err(Error::InvalidArgument("planted model has no levels".into()));
    };
    let m = first.rows();
    let mut data = Matrix::zeros(m, count);
    let mut assignments = vec![Vec::with_capacity(count); planted.len()];
    let mut coefficients = vec![Vec::with_capacity(count); planted.len()];
    for i in 0..count {
        for (l, atoms) in planted.iter().enumerate() {
            let j = rng.random_range(0..atoms.cols());
            let c = energy_decay.powi(l as i32).sqrt() * standard_normal::<f64, _>(rng);
            for (v, &a) in data.col_mut(i).iter_mut().zip(atoms.col(j)) {
                *v += c * a;
            }
            assignments[l].push(j);
            coefficients[l].push(c);
        }
        if noise_sigma > 0.0 {
            for v in data.col_mut(i) {
                *v += noise_sigma * standard_normal::<f64, _>(rng);
            }
        }
    }
    Ok(SynthData {
        data,
        planted: planted.to_vec(),
        assignments,
        coefficients,
    })
}

/// `k` random unit atoms orthogonal to the all-ones vector, so that a patch
/// built from them survives mean removal unchanged.
pub fn zero_mean_atoms(dim: usize, k: usize, seed: RngSeed) -> Result<Matrix<f64>> {
    if dim < 2 {
        return Err(Error::InvalidArgument("zero-mean atoms need dim >= 2".into()));
    }
    let mut rng = seed.rng();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|_| loop {
            let mut v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
            let mean = v.iter().sum::<f64>() / dim as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            if normalize(&mut v) > 1e-12 {
                break v;
            }
        })
        .collect();
    Matrix::from_columns(dim, &cols)
}

/// Image whose non-overlapping `side×side` patches are each a patch mean plus
/// one atom per level of `levels`, with level-`l` coefficient magnitude drawn
/// from `[scales[l]/2, scales[l]]`. Means are uniform in `[96, 160]`; keep
/// `Σ scales` below 95 and the atoms zero-mean for exact extraction.
pub fn planted_image(
    levels: &[Matrix<f64>],
    scales: &[f64],
    side: usize,
    width: usize,
    height: usize,
    seed: RngSeed,
) -> Result<GrayImage> {
    if levels.len() != scales.len() {
        return Err(Error::SizeMismatch {
            left: levels.len(),
            right: scales.len(),
        });
    }
    if let Some(bad) = levels.iter().find(|a| a.rows() != side * side) {
        return Err(Error::DimensionMismatch {
            expected: side * side,
            found: bad.rows(),
        });
    }
    if side == 0 || !width.is_multiple_of(side) || !height.is_multiple_of(side) {
        return Err(Error::IncompleteTiling { width, height });
    }
    let mut rng = seed.rng();
    let mut img = GrayImage::from_fn(width, height, |_, _| 0.0);
    for y0 in (0..height).step_by(side) {
        for x0 in (0..width).step_by(side) {
            let mut patch = vec![rng.random_range(96.0..=160.0); side * side];
            for (atoms, &s) in levels.iter().zip(scales) {
                let j = rng.random_range(0..atoms.cols());
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let c = sign * s * rng.random_range(0.5..=1.0);
                for (p, &a) in patch.iter_mut().zip(atoms.col(j)) {
                    *p += c * a;
                }
            }
            for dx in 0..side {
                for dy in 0..side {
                    img.set(x0 + dx, y0 + dy, patch[dx * side + dy].clamp(0.0, 255.0));
                }
            }
        }
    }
    Ok(img)
}

/// Random disjoint split into `(train, test)` with `test_count` test columns.
/// Both keep the original column order.
pub fn split_columns(data: &Matrix<f64>, test_count: usize, seed: RngSeed) -> Result<(Matrix<f64>, Matrix<f64>)> {
    if test_count > data.cols() {
        return Err(Error::SubsetTooLarge {
            subset: test_count,
            total: data.cols(),
        });
    }
    let test = sample_indices(data.cols(), test_count, &mut seed.rng());
    let mut is_test = vec![false; data.cols()];
    test.iter().for_each(|&i| is_test[i] = true);
    let train: Vec<usize> = (0..data.cols()).filter(|&i| !is_test[i]).collect();
    Ok((data.select_columns(&train), data.select_columns(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, norm};

    fn cfg(k: usize, levels: usize, samples: usize, noise: f64, decay: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            dim: 6,
            k_per_level: vec![k],
            levels,
            samples,
            noise_sigma: noise,
            energy_decay: decay,
            seed: RngSeed(seed),
        }
    }

    #[test]
    fn single_atom_is_collinear() {
        let s = synth_hyperlines(&cfg(1, 1, 50, 0.0, 0.5, 1)).unwrap();
        let atom = s.planted[0].col(0);
        for y in s.data.columns() {
            assert!((dot(y, atom).abs() - norm(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn level_energies_follow_decay() {
        let s = synth_hyperlines(&cfg(4, 3, 10_000, 0.0, 0.5, 2)).unwrap();
        let e: Vec<f64> = s.coefficients.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        for w in e.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 0.05, "{e:?}");
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_hyperlines(&cfg(3, 2, 20, 0.1, 0.5, 3)).unwrap();
        let b = synth_hyperlines(&cfg(3, 2, 20, 0.1, 0.5, 3)).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.planted, b.planted);
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let m = Matrix::from_col_major(1, 10, (0..10).map(f64::from).collect()).unwrap();
        let (train, test) = split_columns(&m, 3, RngSeed(4)).unwrap();
        assert_eq!((train.cols(), test.cols()), (7, 3));
        let mut all: Vec<f64> = train.as_slice().iter().chain(test.as_slice()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn zero_mean_atoms_are_unit_and_centered() {
        let a = zero_mean_atoms(16, 5, RngSeed(5)).unwrap();
        for c in a.columns() {
            assert!((norm(c) - 1.0).abs() < 1e-12);
            assert!(c.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn planted_image_patches_are_planted() {
        use crate::datasets::{extract_patches, ExtractOptions};
        let atoms = zero_mean_atoms(16, 3, RngSeed(6)).unwrap();
        let img = planted_image(std::slice::from_ref(&atoms), &[40.0], 4, 8, 8, RngSeed(7)).unwrap();
        let opts = ExtractOptions { side: 4, stride: 4, ..Default::default() };
        let set = extract_patches(&img, 0, &opts).unwrap();
        for p in set.patches.columns() {
            let best = atoms.columns().map(|a| dot(a, p).abs()).fold(0.0, f64::max);
            assert!((best - norm(p)).abs() < 1e-9 * norm(p).max(1.0));
        }
    }
}
