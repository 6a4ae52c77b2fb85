//! Grayscale images, patch extraction, synthetic planted data and splits.

mod image;
mod patches;
mod synth;

pub use image::{encode_pgm, parse_pgm, read_pgm, write_pgm, GrayImage};
pub use patches::{
    extract_patches, load_patch_set, random_patches, reassemble, save_patch_set, ExtractOptions,
    PatchOrigin, PatchSet,
};
pub use synth::{
    draw_planted, planted_image, split_columns, synth_hyperlines, zero_mean_atoms, SynthConfig, SynthData,
};
