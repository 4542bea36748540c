//! Synthetic ConfMats for end-to-end tests and demos.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::alphabet::{Alphabet, Label};
use crate::confmat::ConfMat;

/// Probability of an optional NaC frame before each character that does not
/// need one, and after the last character.
const OPTIONAL_NAC_PROBABILITY: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("character {0:?} is not in the alphabet")]
    OutsideAlphabet(char),
    #[error("noise {0} outside [0, 1)")]
    BadNoise(f64),
    #[error("frames per character must be at least 1")]
    NoFrames,
}

/// Frame-level label sequence whose collapse is `text`: `frames_per_char`
/// frames per character, a NaC frame between equal neighbours and, at
/// random, elsewhere.
fn frame_labels<R: Rng>(
    labels: &[Label],
    nac: Label,
    frames_per_char: usize,
    rng: &mut R,
) -> Vec<Label> {
    let mut out = Vec::with_capacity(labels.len() * (frames_per_char + 1) + 1);
    for (i, &l) in labels.iter().enumerate() {
        let forced = i > 0 && labels[i - 1] == l;
        if forced || rng.random_bool(OPTIONAL_NAC_PROBABILITY) {
            out.push(nac);
        }
        out.extend(std::iter::repeat_n(l, frames_per_char));
    }
    if rng.random_bool(OPTIONAL_NAC_PROBABILITY) {
        out.push(nac);
    }
    out
}

/// ConfMat whose frames put `1 - noise` on the generating label and spread
/// `noise` over all other labels with Dirichlet(1) weights. Deterministic in
/// `seed`; at `noise = 0` every row is one-hot and the greedy collapse is
/// `text`.
pub fn synth_confmat(
    text: &str,
    alphabet: &Arc<Alphabet>,
    noise: f64,
    seed: u64,
    frames_per_char: usize,
) -> Result<ConfMat, SynthError> {
    if !(0.0..1.0).contains(&noise) {
        return Err(SynthError::BadNoise(noise));
    }
    if frames_per_char == 0 {
        return Err(SynthError::NoFrames);
    }
    let labels = alphabet.encode(text).map_err(SynthError::OutsideAlphabet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = frame_labels(&labels, alphabet.nac(), frames_per_char, &mut rng);
    let width = alphabet.len();
    let rows = frames
        .iter()
        .map(|&target| {
            let mut row = vec![0.0; width];
            if noise == 0.0 || width == 1 {
                row[target] = 1.0;
                return row;
            }
            for (j, v) in row.iter_mut().enumerate() {
                if j != target {
                    *v = rng.sample::<f64, _>(Exp1);
                }
            }
            let spread: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v *= noise / spread;
            }
            row[target] = 1.0 - noise;
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            row
        })
        .collect();
    Ok(ConfMat::new(alphabet.clone(), rows).expect("synthetic rows are stochastic"))
}
