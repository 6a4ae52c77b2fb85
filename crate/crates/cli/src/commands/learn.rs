use std::fmt::Write as _;

use mldict::io::{write_dictionary, write_robust_dictionary};
use mldict::mld::{estimate_level_sizes, train as train_mld, train_robust, MdlConfig, RobustParams, TrainParams};
use mldict::TrainingTrace;

use super::{clustering, clustering_specs, f, load_samples, patch_specs, CommandDef, Output};
use crate::error::CliError;
use crate::params::{def, opt, req, Params};

pub fn train() -> CommandDef {
    let mut specs = vec![
        req("data", "training samples: MLDMAT1 matrix (one sample per column) or PGM image"),
        def("k", "8", "atoms per level, one value or a comma list"),
        def("levels", "4", "maximum number of levels"),
        def("error-goal", "0", "samples with residual energy at or below this stop"),
        def("rounds", "1", "ensemble rounds D; above 1 trains a robust dictionary"),
        opt("subset", "samples per ensemble round (default: all)"),
    ];
    specs.extend(patch_specs());
    specs.extend(clustering_specs());
    CommandDef {
        name: "train",
        about: "Learn a multilevel dictionary; writes dictionary.mld and trace.csv",
        specs,
        run: run_train,
    }
}

fn train_params(p: &Params) -> Result<TrainParams, CliError> {
    Ok(TrainParams {
        per_level_k: p.list("k")?,
        max_levels: p.get("levels")?,
        error_goal: p.get("error-goal")?,
    })
}

fn trace_csv(trace: &TrainingTrace<f64>) -> String {
    let mut s = String::from("level,k,active_samples,input_energy,represented_energy,residual_energy\n");
    for (l, t) in trace.levels.iter().enumerate() {
        let _ = writeln!(
            s,
            "{l},{},{},{},{},{}",
            t.k,
            t.active_samples,
            f(t.input_energy),
            f(t.represented_energy),
            f(t.residual_energy)
        );
    }
    s
}

fn run_train(p: &Params, out: &Output) -> Result<(), CliError> {
    let data = load_samples(p, "data")?;
    let params = train_params(p)?;
    let clus = clustering(p)?;
    let rounds: usize = p.get("rounds")?;
    let mut bytes = Vec::new();
    let trace = if rounds > 1 {
        let subset = p.opt("subset")?.unwrap_or(data.cols());
        let o = train_robust(
            &data,
            &RobustParams {
                levels: params,
                rounds,
                subset_size: subset,
            },
            &clus,
        )?;
        write_robust_dictionary(&mut bytes, &o.dictionary)?;
        o.trace
    } else {
        let o = train_mld(&data, &params, &clus)?;
        write_dictionary(&mut bytes, &o.dictionary)?;
        o.trace
    };
    out.write("dictionary.mld", bytes)?;
    out.write("trace.csv", trace_csv(&trace))?;
    log::info!("trained {} levels on {} samples", trace.levels.len(), data.cols());
    Ok(())
}

pub fn mdl_estimate() -> CommandDef {
    let mut specs = vec![
        req("data", "training samples: MLDMAT1 matrix or PGM image"),
        def("candidates", "1..8", "candidate atom counts per level, comma list or a..b"),
        def("alpha", "0.5", "fraction of residual energy a level is expected to capture"),
        def("levels", "4", "maximum number of levels"),
        def("error-goal", "0", "samples with residual energy at or below this stop"),
        def("mdl-restarts", "8", "K-hyperline initializations per candidate fit (at least)"),
    ];
    specs.extend(patch_specs());
    specs.extend(clustering_specs());
    CommandDef {
        name: "mdl-estimate",
        about: "Pick atoms per level by minimum description length; writes dictionary.mld, mdl_scores.csv, selected_k.csv",
        specs,
        run: run_mdl,
    }
}

fn run_mdl(p: &Params, out: &Output) -> Result<(), CliError> {
    let data = load_samples(p, "data")?;
    let cfg = MdlConfig {
        alpha: p.get("alpha")?,
        candidate_k: p.list("candidates")?,
        max_levels: p.get("levels")?,
        error_goal: p.get("error-goal")?,
        restarts: p.get("mdl-restarts")?,
    };
    let est = estimate_level_sizes(&data, &cfg, &clustering(p)?)?;

    let mut scores = String::from("level,k,data,coefficients,locations,atoms,total,selected\n");
    let mut minima = Vec::new();
    for (l, level) in est.scores.iter().enumerate() {
        for (k, s) in level {
            let _ = writeln!(
                scores,
                "{l},{k},{},{},{},{},{},{}",
                f(s.data),
                f(s.coefficients),
                f(s.locations),
                f(s.atoms),
                f(s.total()),
                u8::from(*k == est.selected_k[l])
            );
        }
        minima.push(level.iter().map(|(_, s)| s.total()).fold(f64::INFINITY, f64::min));
    }
    let mut selected = String::from("level,k\n");
    for (l, k) in est.selected_k.iter().enumerate() {
        let _ = writeln!(selected, "{l},{k}");
    }
    if minima.windows(2).any(|w| w[1] < w[0]) {
        eprintln!("warning: the minimum description length decreases between some levels: {minima:?}");
    }
    let mut bytes = Vec::new();
    write_dictionary(&mut bytes, &est.output.dictionary)?;
    out.write("dictionary.mld", bytes)?;
    out.write("mdl_scores.csv", scores)?;
    out.write("selected_k.csv", selected)?;
    out.write("trace.csv", trace_csv(&est.output.trace))?;
    Ok(())
}
