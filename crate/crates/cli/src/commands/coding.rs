use std::fmt::Write as _;
use std::path::Path;

use mldict::datasets::{encode_pgm, extract_patches, read_pgm, reassemble, ExtractOptions};
use mldict::experiments::{compressed_recovery, MeasurementEnsemble};
use mldict::io::{load_dictionary, load_matrix, write_codes, write_ensemble_codes, write_matrix, StoredDictionary};
use mldict::numerics::psnr;
use mldict::pursuit::{encode_columns, encode_columns_robust, reconstruct, reconstruct_ensemble};
use mldict::Matrix;

use super::{f, is_pgm, seed, CommandDef, Output};
use crate::error::{at, CliError};
use crate::params::{def, opt, req, Params};

pub fn encode() -> CommandDef {
    CommandDef {
        name: "encode",
        about: "Encode samples or an image with multilevel pursuit; writes codes.code, reconstruction.mat and summary.csv",
        specs: vec![
            req("dictionary", "MLDDICT1 dictionary"),
            req("data", "MLDMAT1 matrix, or a PGM image cut into non-overlapping patches"),
            opt("levels", "levels to use (default: all)"),
            def("seed", "0", "random seed (unused; kept for a uniform interface)"),
        ],
        run: run_encode,
    }
}

fn levels(p: &Params, dict: &StoredDictionary) -> Result<usize, CliError> {
    Ok(p.opt("levels")?.unwrap_or(dict.num_levels()))
}

fn run_encode(p: &Params, out: &Output) -> Result<(), CliError> {
    let dict = at(p.str("dictionary")?, load_dictionary(p.str("dictionary")?))?;
    let levels = levels(p, &dict)?;
    let path = Path::new(p.str("data")?);
    let image = if is_pgm(path) { Some(at(path, read_pgm(path))?) } else { None };
    let patches = match &image {
        Some(img) => {
            let side = (dict.dim() as f64).sqrt().round() as usize;
            if side * side != dict.dim() {
                return Err(CliError::Data(format!("dictionary dimension {} is not a square patch", dict.dim())));
            }
            Some(extract_patches(
                img,
                0,
                &ExtractOptions {
                    side,
                    stride: side,
                    ..Default::default()
                },
            )?)
        }
        None => None,
    };
    let data = match &patches {
        Some(set) => set.patches.clone(),
        None => at(path, load_matrix(path))?,
    };

    let mut code_bytes = Vec::new();
    let (approx, residual_energy): (Vec<Vec<f64>>, f64) = match &dict {
        StoredDictionary::Plain(d) => {
            let codes = encode_columns(&data, d, levels)?;
            write_codes(&mut code_bytes, &codes)?;
            let e = codes.iter().map(|c| c.residual.iter().map(|r| r * r).sum::<f64>()).sum();
            (codes.iter().map(|c| reconstruct(c, d)).collect::<Result<_, _>>()?, e)
        }
        StoredDictionary::Robust(d) => {
            let codes = encode_columns_robust(&data, d, levels)?;
            write_ensemble_codes(&mut code_bytes, &codes)?;
            let e = codes.iter().map(|c| c.residual.iter().map(|r| r * r).sum::<f64>()).sum();
            (codes.iter().map(|c| reconstruct_ensemble(c, d)).collect::<Result<_, _>>()?, e)
        }
    };
    let approx = Matrix::from_columns(data.rows(), &approx)?;
    let mse = residual_energy / (data.rows() * data.cols()).max(1) as f64;
    let mut mat = Vec::new();
    write_matrix(&mut mat, &approx)?;
    out.write("codes.code", code_bytes)?;
    out.write("reconstruction.mat", mat)?;

    let mut summary = String::from("levels,mse,psnr_db\n");
    match (&image, &patches) {
        (Some(img), Some(set)) => {
            let w = img.width() / set.side * set.side;
            let h = img.height() / set.side * set.side;
            if (w, h) != (img.width(), img.height()) {
                return Err(CliError::Data(format!(
                    "{}x{} image is not a whole number of {}-pixel patches",
                    img.width(),
                    img.height(),
                    set.side
                )));
            }
            let rec = reassemble(&set.with_patches(approx)?, w, h, img.peak())?;
            let db = psnr(
                &Matrix::from_col_major(w * h, 1, img.pixels().to_vec())?,
                &Matrix::from_col_major(w * h, 1, rec.pixels().to_vec())?,
                img.peak(),
            )?;
            out.write("reconstruction.pgm", encode_pgm(&rec))?;
            let _ = writeln!(summary, "{levels},{},{}", f(mse), f(db));
        }
        _ => {
            let _ = writeln!(summary, "{levels},{},", f(mse));
        }
    }
    out.write("summary.csv", summary)?;
    Ok(())
}

pub fn recover() -> CommandDef {
    CommandDef {
        name: "recover",
        about: "Recover an image from random patch measurements; writes recovered.pgm and recovery.csv",
        specs: vec![
            req("dictionary", "MLDDICT1 dictionary"),
            req("image", "PGM image; patch side is the square root of the dictionary dimension"),
            def("ensemble", "gaussian", "measurement matrix: gaussian or identity"),
            opt("measurements", "measurements N per patch (default: the patch dimension)"),
            opt("snr-db", "measurement SNR in dB (default: noiseless)"),
            opt("levels", "levels to use (default: all)"),
            def("seed", "0", "seed for the measurement matrix and noise"),
        ],
        run: run_recover,
    }
}

fn run_recover(p: &Params, out: &Output) -> Result<(), CliError> {
    let dict = at(p.str("dictionary")?, load_dictionary(p.str("dictionary")?))?;
    let img = at(p.str("image")?, read_pgm(p.str("image")?))?;
    let levels = levels(p, &dict)?;
    let m = dict.dim();
    let side = (m as f64).sqrt().round() as usize;
    if side * side != m {
        return Err(CliError::Data(format!("dictionary dimension {m} is not a square patch")));
    }
    let n: usize = p.opt("measurements")?.unwrap_or(m);
    let snr: Option<f64> = p.opt("snr-db")?;
    let ens = match p.str("ensemble")? {
        "identity" => {
            if n != m || snr.is_some() {
                return Err(CliError::Config("the identity ensemble takes N = M and no noise".into()));
            }
            MeasurementEnsemble::identity(m)
        }
        "gaussian" => MeasurementEnsemble::gaussian(n, m, snr, seed(p)?)?,
        other => return Err(CliError::Config(format!("unknown ensemble '{other}'"))),
    };
    let res = compressed_recovery(&img, &dict, &ens, levels, side)?;
    out.write("recovered.pgm", encode_pgm(&res.image))?;
    let snr_text = snr.map(f).unwrap_or_default();
    out.write(
        "recovery.csv",
        format!("measurements,snr_db,levels,psnr_db\n{n},{snr_text},{levels},{}\n", f(res.psnr_db)),
    )?;
    Ok(())
}
