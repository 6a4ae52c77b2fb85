use mldict::io::write_matrix;
use mldict::mld::TrainParams;
use mldict::subspace::{load_labeled_csv, subspace_experiment, SubspaceConfig, SubspaceMethod};

use super::{clustering, clustering_specs, seed, CommandDef, Output};
use crate::error::{at, CliError};
use crate::params::{def, opt, req, Params};

pub fn subspace() -> CommandDef {
    let mut specs = vec![
        req("data", "labeled CSV: one sample per line, class label in the last column"),
        def("train-per-class", "30", "training samples per class, comma list for several runs"),
        opt("test-per-class", "test samples per class (default: all remaining)"),
        def(
            "methods",
            "lpp,sc-mld-lpp,sc-rmld-lpp,lde,sc-mld-lde,sc-rmld-lde",
            "graph/embedding combinations to evaluate",
        ),
        def("embed-dim", "2", "embedding dimension d"),
        def("tau", "5", "neighbors kept per sample (intra-class for LDE)"),
        def("tau-prime", "5", "inter-class neighbors per sample for LDE"),
        def("k", "8", "atoms per dictionary level"),
        def("levels", "4", "dictionary levels"),
        def("rounds", "10", "RMLD ensemble rounds"),
        def("subset-fraction", "0.5", "RMLD subset size as a fraction of the training set"),
        def("standardize", "true", "z-score features with training statistics"),
    ];
    specs.extend(clustering_specs());
    CommandDef {
        name: "subspace",
        about: "Sparse-code graph LPP/LDE with 1-NN classification; writes accuracy.csv and embeddings/",
        specs,
        run: run_subspace,
    }
}

/// The library configuration a resolved parameter set describes.
pub fn config(p: &Params) -> Result<SubspaceConfig, CliError> {
    let methods = p
        .list::<String>("methods")?
        .iter()
        .map(|m| m.parse::<SubspaceMethod>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubspaceConfig {
        train_per_class: p.list("train-per-class")?,
        test_per_class: p.opt("test-per-class")?,
        methods,
        embed_dim: p.get("embed-dim")?,
        tau: p.get("tau")?,
        tau_prime: p.get("tau-prime")?,
        dictionary: TrainParams::new(p.get("k")?, p.get("levels")?),
        rounds: p.get("rounds")?,
        subset_fraction: p.get("subset-fraction")?,
        clustering: clustering(p)?,
        standardize: p.flag("standardize")?,
        seed: seed(p)?,
    })
}

fn run_subspace(p: &Params, out: &Output) -> Result<(), CliError> {
    let data = at(p.str("data")?, load_labeled_csv(p.str("data")?))?;
    let rep = subspace_experiment(&data, &config(p)?)?;
    out.write("accuracy.csv", rep.to_csv())?;
    for r in &rep.rows {
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &r.embedding)?;
        out.write(&format!("embeddings/{}-{}.mat", r.train_per_class, r.method), bytes)?;
    }
    Ok(())
}
