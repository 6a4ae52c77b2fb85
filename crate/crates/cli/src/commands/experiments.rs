use mldict::datasets::{synth_hyperlines, SynthConfig};
use mldict::experiments::{
    generalization_experiment, stability_experiment, GeneralizationConfig, SampleSource, StabilityConfig,
};
use mldict::io::load_matrix;
use mldict::mld::{MdlConfig, TrainParams};
use mldict::{Matrix, RngSeed};

use super::{clustering, clustering_specs, load_samples, patch_specs, seed, CommandDef, Output};
use crate::error::{at, CliError};
use crate::params::{def, opt, Params, Spec};

fn source_specs() -> Vec<Spec> {
    let mut v = vec![
        opt("data", "sample pool (MLDMAT1 or PGM); default: a planted synthetic model"),
        def("dim", "16", "planted model: sample dimension"),
        def("planted-k", "8", "planted model: atoms per level"),
        def("planted-levels", "4", "planted model: levels"),
        def("noise", "0.02", "planted model: noise standard deviation"),
        def("decay", "0.5", "planted model: coefficient variance ratio between levels"),
        def("synth-seed", "77", "planted model: seed for the atoms"),
    ];
    v.extend(patch_specs());
    v
}

/// Planted atoms and the synthetic config that produced them.
fn planted(p: &Params, samples: usize, seed: RngSeed) -> Result<(SampleSource, Matrix<f64>), CliError> {
    let noise: f64 = p.get("noise")?;
    let decay: f64 = p.get("decay")?;
    let s = synth_hyperlines(&SynthConfig {
        dim: p.get("dim")?,
        k_per_level: vec![p.get("planted-k")?],
        levels: p.get("planted-levels")?,
        samples: samples.max(1),
        noise_sigma: noise,
        energy_decay: decay,
        seed,
    })?;
    let source = SampleSource::Planted {
        atoms: s.planted,
        noise_sigma: noise,
        energy_decay: decay,
    };
    Ok((source, s.data))
}

fn source(p: &Params) -> Result<SampleSource, CliError> {
    if p.get_str("data").is_some() {
        Ok(SampleSource::Pool(load_samples(p, "data")?))
    } else {
        Ok(planted(p, 1, RngSeed(p.get("synth-seed")?))?.0)
    }
}

pub fn stability() -> CommandDef {
    let mut specs = source_specs();
    specs.extend([
        def("t-values", "500,5000", "training set sizes T"),
        def("replace", "100,250,500,1000,2500,5000", "numbers of samples replaced"),
        def("trials", "10", "trials per T"),
        def("k", "8", "atoms per level of the learned dictionaries"),
        def("levels", "4", "levels of the learned dictionaries"),
    ]);
    specs.extend(clustering_specs());
    CommandDef {
        name: "stability",
        about: "Dictionary change under sample replacement; writes stability.csv and stability_summary.csv",
        specs,
        run: run_stability,
    }
}

fn run_stability(p: &Params, out: &Output) -> Result<(), CliError> {
    let cfg = StabilityConfig {
        t_values: p.list("t-values")?,
        replace_counts: p.list("replace")?,
        trials: p.get("trials")?,
        train: TrainParams::new(p.get("k")?, p.get("levels")?),
        clustering: clustering(p)?,
        seed: seed(p)?,
    };
    let rep = stability_experiment(&source(p)?, &cfg)?;
    out.write("stability.csv", rep.to_csv())?;
    out.write("stability_summary.csv", rep.summary_csv())?;
    Ok(())
}

pub fn generalize() -> CommandDef {
    let mut specs = source_specs();
    specs.extend([
        opt("test", "test samples (MLDMAT1); default: drawn from the planted model"),
        def("test-count", "2000", "planted test samples"),
        def("t-values", "1000,10000", "training set sizes T"),
        def("k", "8", "atoms per level"),
        def("levels", "4", "levels"),
        def("mdl", "false", "pick MLD level sizes by description length"),
        def("candidates", "1..16", "candidate atom counts when mdl is on"),
        def("alpha", "0.5", "description-length energy fraction when mdl is on"),
        def("rounds", "10", "RMLD ensemble rounds D"),
        def("subset-fraction", "0.1", "RMLD subset size as a fraction of T"),
        def("rounds-curve", "1,5,10", "round counts for the MSE-versus-rounds curve"),
    ]);
    specs.extend(clustering_specs());
    CommandDef {
        name: "generalize",
        about: "Train/test error of MLD and RMLD versus T; writes generalization.csv, levels.csv, rounds.csv",
        specs,
        run: run_generalize,
    }
}

fn run_generalize(p: &Params, out: &Output) -> Result<(), CliError> {
    let (source, test) = match (p.get_str("data"), p.get_str("test")) {
        (Some(_), Some(t)) => (SampleSource::Pool(load_samples(p, "data")?), at(t, load_matrix(t))?),
        (Some(_), None) => return Err(CliError::Config("a sample pool needs a test set".into())),
        (None, t) => {
            let (src, draw) = planted(p, p.get("test-count")?, RngSeed(p.get("synth-seed")?))?;
            (src, if let Some(t) = t { at(t, load_matrix(t))? } else { draw })
        }
    };
    let levels = TrainParams::new(p.get("k")?, p.get("levels")?);
    let mdl = if p.flag("mdl")? {
        Some(MdlConfig {
            alpha: p.get("alpha")?,
            candidate_k: p.list("candidates")?,
            max_levels: p.get("levels")?,
            ..MdlConfig::default()
        })
    } else {
        None
    };
    let cfg = GeneralizationConfig {
        t_values: p.list("t-values")?,
        mld: levels.clone(),
        mdl,
        rmld: levels,
        rounds: p.get("rounds")?,
        subset_fraction: p.get("subset-fraction")?,
        rounds_curve: p.list("rounds-curve")?,
        clustering: clustering(p)?,
        seed: seed(p)?,
    };
    let rep = generalization_experiment(&source, &test, &cfg)?;
    out.write("generalization.csv", rep.to_csv())?;
    out.write("levels.csv", rep.levels_csv())?;
    out.write("rounds.csv", rep.rounds_csv())?;
    Ok(())
}
