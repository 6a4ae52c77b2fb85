use rayon::prelude::*;

use crate::datasets::{extract_patches, reassemble, ExtractOptions, GrayImage, PatchSet};
use crate::error::{Error, Result};
use crate::io::StoredDictionary;
use crate::numerics::{axpy, dot, normalize, psnr_slices, standard_normal, Matrix, RngSeed};

/// Projected atoms shorter than this are never selected.
const DEGENERATE_NORM: f64 = 1e-12;

/// Random measurement operator `x = Φy + η`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    /// N×M.
    pub phi: Matrix<f64>,
    /// Target `‖Φy‖² / ‖η‖²` over the whole image, in dB; `None` for no noise.
    pub snr_db: Option<f64>,
    pub seed: RngSeed,
}

impl MeasurementEnsemble {
    /// Φ with i.i.d. standard normal entries drawn from `seed`.
    pub fn gaussian(n: usize, m: usize, snr_db: Option<f64>, seed: RngSeed) -> Result<Self> {
        if n == 0 || n > m {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= N <= M measurements, got N={n}, M={m}"
            )));
        }
        let mut rng = seed.derive(0).rng();
        let entries = (0..n * m).map(|_| standard_normal(&mut rng)).collect();
        Ok(Self {
            phi: Matrix::from_col_major(n, m, entries)?,
            snr_db,
            seed,
        })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            phi: Matrix::identity(m),
            snr_db: None,
            seed: RngSeed(0),
        }
    }

    pub fn n(&self) -> usize {
        self.phi.rows()
    }

    pub fn m(&self) -> usize {
        self.phi.cols()
    }

    pub fn is_identity(&self) -> bool {
        self.n() == self.m() && self.phi == Matrix::identity(self.m())
    }

    /// Measures every column of `y`, adding white Gaussian noise whose
    /// variance is set from the total measured energy to hit `snr_db`.
    pub fn measure(&self, y: &Matrix<f64>) -> Result<Matrix<f64>> {
        if y.rows() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: y.rows(),
            });
        }
        let mut x = if self.is_identity() { y.clone() } else { self.phi.matmul(y)? };
        if let Some(snr) = self.snr_db {
            let n = x.as_slice().len();
            if n > 0 {
                let power = x.frobenius_norm_sq() / n as f64;
                let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
                let mut rng = self.seed.derive(1).rng();
                for v in x.as_mut_slice() {
                    *v += sigma * standard_normal::<f64, _>(&mut rng);
                }
            }
        }
        Ok(x)
    }
}

/// A dictionary's atoms mapped through Φ and renormalized. Plain
/// dictionaries are stored as single-round ensembles.
#[derive(Debug, Clone)]
pub struct ProjectedDictionary {
    original: Vec<Vec<Matrix<f64>>>,
    projected: Vec<Vec<Matrix<f64>>>,
    /// `‖Φψ‖` per atom, before renormalization.
    norms: Vec<Vec<Vec<f64>>>,
}

impl ProjectedDictionary {
    pub fn new(dict: &StoredDictionary, ens: &MeasurementEnsemble) -> Result<Self> {
        let original: Vec<Vec<Matrix<f64>>> = match dict {
            StoredDictionary::Plain(d) => d.levels().iter().map(|l| vec![l.clone()]).collect(),
            StoredDictionary::Robust(d) => d.levels().to_vec(),
        };
        if dict.dim() != ens.m() {
            return Err(Error::DimensionMismatch {
                expected: dict.dim(),
                found: ens.m(),
            });
        }
        if ens.is_identity() {
            let norms = original
                .iter()
                .map(|e| e.iter().map(|a| vec![1.0; a.cols()]).collect())
                .collect();
            return Ok(Self {
                projected: original.clone(),
                original,
                norms,
            });
        }
        let mut projected = Vec::with_capacity(original.len());
        let mut norms = Vec::with_capacity(original.len());
        for ensemble in &original {
            let mut pe = Vec::with_capacity(ensemble.len());
            let mut ne = Vec::with_capacity(ensemble.len());
            for atoms in ensemble {
                let mut p = ens.phi.matmul(atoms)?;
                let n: Vec<f64> = (0..p.cols()).map(|j| normalize(p.col_mut(j))).collect();
                pe.push(p);
                ne.push(n);
            }
            projected.push(pe);
            norms.push(ne);
        }
        Ok(Self {
            original,
            projected,
            norms,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.original.len()
    }

    /// Greedy multilevel pursuit on a measurement `x`, returning the estimate
    /// of the signal in the original space.
    pub fn recover(&self, x: &[f64], levels: usize) -> Result<Vec<f64>> {
        let n = self.projected[0][0].rows();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if levels > self.num_levels() {
            return Err(Error::InvalidArgument(format!(
                "requested {levels} levels, dictionary has {}",
                self.num_levels()
            )));
        }
        let m = self.original[0][0].rows();
        let mut r = x.to_vec();
        let mut y = vec![0.0; m];
        let mut mean = vec![0.0; n];
        for l in 0..levels {
            let d = self.projected[l].len();
            let inv_d = 1.0 / d as f64;
            mean.iter_mut().for_each(|v| *v = 0.0);
            for round in 0..d {
                let p = &self.projected[l][round];
                let norms = &self.norms[l][round];
                let mut best: Option<(usize, f64)> = None;
                for (j, &norm) in norms.iter().enumerate() {
                    if !(norm >= DEGENERATE_NORM) {
                        continue;
                    }
                    let c = dot(p.col(j), &r);
                    if best.is_none_or(|(_, b)| c.abs() > b.abs()) {
                        best = Some((j, c));
                    }
                }
                if let Some((j, c)) = best {
                    axpy(c, p.col(j), &mut mean);
                    axpy(c / norms[j] * inv_d, self.original[l][round].col(j), &mut y);
                }
            }
            for (rk, &a) in r.iter_mut().zip(&mean) {
                *rk -= a * inv_d;
            }
        }
        Ok(y)
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub image: GrayImage,
    pub psnr_db: f64,
}

/// Measures every non-overlapping `side×side` patch of `img`, recovers it
/// with the projected dictionary and reassembles the image using the
/// stored patch means.
pub fn compressed_recovery(
    img: &GrayImage,
    dict: &StoredDictionary,
    ens: &MeasurementEnsemble,
    levels: usize,
    side: usize,
) -> Result<RecoveryResult> {
    if side * side != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: side * side,
        });
    }
    let opts = ExtractOptions {
        side,
        stride: side,
        subtract_mean: true,
        max_count: None,
        seed: RngSeed(0),
    };
    let patches = extract_patches(img, 0, &opts)?;
    let projected = ProjectedDictionary::new(dict, ens)?;
    let x = ens.measure(&patches.patches)?;
    let cols: Vec<Vec<f64>> = (0..x.cols())
        .into_par_iter()
        .map(|i| projected.recover(x.col(i), levels))
        .collect::<Result<_>>()?;
    let estimate = Matrix::from_columns(dict.dim(), &cols)?;
    let recovered = reassemble_like(&patches, estimate, img)?;
    let psnr_db = psnr_slices(img.pixels(), recovered.pixels(), img.peak())?;
    Ok(RecoveryResult {
        image: recovered,
        psnr_db,
    })
}

fn reassemble_like(patches: &PatchSet, estimate: Matrix<f64>, img: &GrayImage) -> Result<GrayImage> {
    let set = patches.with_patches(estimate)?;
    let w = img.width() / set.side * set.side;
    let h = img.height() / set.side * set.side;
    if w != img.width() || h != img.height() {
        return Err(Error::IncompleteTiling {
            width: img.width(),
            height: img.height(),
        });
    }
    reassemble(&set, w, h, img.peak())
}
