use std::fs;
use std::path::{Path, PathBuf};

use mldict::datasets::{extract_patches, read_pgm, ExtractOptions};
use mldict::io::load_matrix;
use mldict::khyperline::ClusteringConfig;
use mldict::{Matrix, RngSeed};

use crate::error::{at, CliError};
use crate::params::{def, Params, Spec};

mod coding;
mod experiments;
mod learn;
mod subspace;
mod synth;

/// One subcommand: its flags and what it does.
pub struct CommandDef {
    pub name: &'static str,
    pub about: &'static str,
    pub specs: Vec<Spec>,
    pub run: fn(&Params, &Output) -> Result<(), CliError>,
}

pub fn all() -> Vec<CommandDef> {
    vec![
        learn::train(),
        learn::mdl_estimate(),
        coding::encode(),
        coding::recover(),
        experiments::stability(),
        experiments::generalize(),
        subspace::subspace(),
        synth::synth(),
    ]
}

/// Destination directory for a command's artifacts.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display())))?;
        Ok(p)
    }
}

fn clustering_specs() -> Vec<Spec> {
    vec![
        def("restarts", "1", "K-hyperline initializations per fit; the best is kept"),
        def("max-iters", "100", "outer iterations per K-hyperline fit"),
        def("seed", "0", "random seed"),
    ]
}

fn clustering(p: &Params) -> Result<ClusteringConfig, CliError> {
    let mut c = ClusteringConfig::new(1)
        .with_seed(p.get::<u64>("seed")?)
        .with_restarts(p.get("restarts")?);
    c.max_outer_iters = p.get("max-iters")?;
    Ok(c)
}

fn seed(p: &Params) -> Result<RngSeed, CliError> {
    Ok(RngSeed(p.get("seed")?))
}

fn patch_specs() -> Vec<Spec> {
    vec![
        def("side", "8", "patch side when the input is a PGM image"),
        def("stride", "8", "patch stride when the input is a PGM image"),
    ]
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Samples as columns: an MLDMAT1 matrix, or the mean-removed patches of a
/// PGM image.
fn load_samples(p: &Params, key: &str) -> Result<Matrix<f64>, CliError> {
    let path = Path::new(p.str(key)?);
    if is_pgm(path) {
        let img = at(path, read_pgm(path))?;
        let opts = ExtractOptions {
            side: p.get("side")?,
            stride: p.get("stride")?,
            ..Default::default()
        };
        at(path, extract_patches(&img, 0, &opts)).map(|s| s.patches)
    } else {
        at(path, load_matrix(path))
    }
}

/// Full-precision float for CSV output.
fn f(v: f64) -> String {
    format!("{v:?}")
}
