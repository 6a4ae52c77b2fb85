use mldict::datasets::{encode_pgm, planted_image, synth_hyperlines, zero_mean_atoms, SynthConfig};
use mldict::io::{write_dictionary, write_matrix};
use mldict::subspace::{two_class_gaussian, write_labeled_csv};
use mldict::MultilevelDictionary;

use super::{seed, CommandDef, Output};
use crate::error::CliError;
use crate::params::{def, req, Params};

pub fn synth() -> CommandDef {
    CommandDef {
        name: "synth",
        about: "Generate synthetic inputs: hyperlines (data.mat), image (planted.pgm) or two-class (two_class.csv)",
        specs: vec![
            req("kind", "hyperlines, image or two-class"),
            def("dim", "16", "sample dimension (hyperlines, two-class)"),
            def("k", "8", "atoms per level (hyperlines, image)"),
            def("levels", "2", "planted levels (hyperlines, image)"),
            def("samples", "1000", "number of samples (hyperlines)"),
            def("noise", "0", "noise standard deviation (hyperlines)"),
            def("decay", "0.5", "coefficient variance ratio between levels (hyperlines)"),
            def("side", "8", "patch side (image)"),
            def("width", "64", "image width (image)"),
            def("height", "64", "image height (image)"),
            def("scales", "50,25", "coefficient magnitude per level (image)"),
            def("per-class", "100", "samples per class (two-class)"),
            def("seed", "0", "random seed"),
        ],
        run: run_synth,
    }
}

fn run_synth(p: &Params, out: &Output) -> Result<(), CliError> {
    let seed = seed(p)?;
    match p.str("kind")? {
        "hyperlines" => {
            let s = synth_hyperlines(&SynthConfig {
                dim: p.get("dim")?,
                k_per_level: vec![p.get("k")?],
                levels: p.get("levels")?,
                samples: p.get("samples")?,
                noise_sigma: p.get("noise")?,
                energy_decay: p.get("decay")?,
                seed,
            })?;
            let mut data = Vec::new();
            write_matrix(&mut data, &s.data)?;
            let mut dict = Vec::new();
            write_dictionary(&mut dict, &MultilevelDictionary::new(s.planted, 0.0)?)?;
            out.write("data.mat", data)?;
            out.write("planted.mld", dict)?;
        }
        "image" => {
            let side: usize = p.get("side")?;
            let k: usize = p.get("k")?;
            let levels: usize = p.get("levels")?;
            let atoms = (0..levels)
                .map(|l| zero_mean_atoms(side * side, k, seed.derive(l as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            let img = planted_image(&atoms, &p.list::<f64>("scales")?, side, p.get("width")?, p.get("height")?, seed.derive(levels as u64))?;
            let mut dict = Vec::new();
            write_dictionary(&mut dict, &MultilevelDictionary::new(atoms, 0.0)?)?;
            out.write("planted.pgm", encode_pgm(&img))?;
            out.write("planted.mld", dict)?;
        }
        "two-class" => {
            let d = two_class_gaussian(p.get("dim")?, p.get("per-class")?, seed)?;
            write_labeled_csv(&d, out.path("two_class.csv"))?;
        }
        other => return Err(CliError::Config(format!("unknown synth kind '{other}'"))),
    }
    Ok(())
}
