//! Character bigram bags for identifier names and their PCA compression.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz0123456789_$";
pub const ALPHABET_SIZE: usize = 38;
pub const BIGRAM_DIMS: usize = ALPHABET_SIZE * ALPHABET_SIZE;
pub const MAX_NAME_DIMS: usize = 20;

/// Sparse vector: dimension index to value.
pub type SparseVec = BTreeMap<usize, f64>;

fn letter(c: char) -> usize {
    let c = c.to_ascii_lowercase();
    ALPHABET.find(c).unwrap_or(36)
}

pub fn bigram_index(a: char, b: char) -> usize {
    letter(a) * ALPHABET_SIZE + letter(b)
}

/// The two characters a bigram dimension stands for.
pub fn bigram_label(dim: usize) -> String {
    let chars: Vec<char> = ALPHABET.chars().collect();
    [chars[dim / ALPHABET_SIZE], chars[dim % ALPHABET_SIZE]].iter().collect()
}

/// Counts of adjacent character pairs; characters outside the alphabet
/// become `_`.
pub fn encode_name_2gram(name: &str) -> SparseVec {
    let chars: Vec<char> = name.chars().collect();
    let mut out = SparseVec::new();
    for w in chars.windows(2) {
        *out.entry(bigram_index(w[0], w[1])).or_insert(0.0) += 1.0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaOptions {
    pub dims: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            dims: MAX_NAME_DIMS,
            max_iter: 2_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PcaError {
    #[error("need at least two vectors, got {0}")]
    TooFewVectors(usize),
    #[error("requested {0} dimensions")]
    BadDims(usize),
    #[error("vector has index {index} beyond dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
}

/// Mean plus orthonormal principal directions, strongest first. Output
/// vectors always have `dims` entries; missing directions project to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub dims: usize,
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// v ↦ (1/n) Σ (x−μ)(x−μ)ᵀ v, evaluated without forming the matrix.
fn covariance_action(rows: &[SparseVec], mean: &[f64], v: &[f64]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut out = vec![0.0; v.len()];
    let mv = dot(mean, v);
    let mut acc = 0.0;
    for x in rows {
        let xv: f64 = x.iter().map(|(&i, &val)| val * v[i]).sum::<f64>() - mv;
        for (&i, &val) in x {
            out[i] += val * xv / n;
        }
        acc += xv / n;
    }
    for (o, m) in out.iter_mut().zip(mean) {
        *o -= m * acc;
    }
    out
}

pub fn pca_fit(rows: &[SparseVec], dim: usize, opts: &PcaOptions) -> Result<Pca, PcaError> {
    if rows.len() < 2 {
        return Err(PcaError::TooFewVectors(rows.len()));
    }
    if opts.dims == 0 || opts.dims > MAX_NAME_DIMS {
        return Err(PcaError::BadDims(opts.dims));
    }
    for r in rows {
        if let Some((&index, _)) = r.iter().next_back() {
            if index >= dim {
                return Err(PcaError::OutOfRange { index, dim });
            }
        }
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (&i, &v) in r {
            mean[i] += v / n;
        }
    }
    let total: f64 = {
        rows.iter()
            .map(|r| {
                let mut d = mean.iter().map(|m| m * m).sum::<f64>();
                for (&i, &v) in r {
                    d += (v - mean[i]).powi(2) - mean[i] * mean[i];
                }
                d
            })
            .sum::<f64>()
            / n
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut variances = Vec::new();
    let wanted = opts.dims.min(dim);
    while components.len() < wanted {
        let deflate = |v: &mut Vec<f64>, comps: &[Vec<f64>]| {
            for c in comps {
                let p = dot(v, c);
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= p * y;
                }
            }
        };
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        deflate(&mut v, &components);
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut lambda = 0.0;
        for _ in 0..opts.max_iter {
            let mut w = covariance_action(rows, &mean, &v);
            deflate(&mut w, &components);
            let nw = norm(&w);
            if nw <= f64::EPSILON * total.max(1.0) {
                lambda = 0.0;
                break;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            v = w;
            lambda = nw;
            if delta < opts.tol {
                break;
            }
        }
        let cv = covariance_action(rows, &mean, &v);
        let rq = dot(&v, &cv);
        if lambda == 0.0 || rq <= 1e-12 * total {
            break;
        }
        // sign convention: largest-magnitude entry positive
        let big = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1.abs() { (i, *x) } else { acc });
        if big.1 < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        variances.push(rq);
        components.push(v);
    }
    Ok(Pca {
        dims: opts.dims,
        mean,
        components,
        variances,
    })
}

pub fn pca_fit_dense(rows: &[Vec<f64>], opts: &PcaOptions) -> Result<Pca, PcaError> {
    let dim = rows.first().map_or(0, Vec::len);
    let sparse: Vec<SparseVec> = rows
        .iter()
        .map(|r| r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
        .collect();
    pca_fit(&sparse, dim, opts)
}

impl Pca {
    pub fn apply(&self, x: &SparseVec) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        for (o, c) in out.iter_mut().zip(&self.components) {
            let mc = dot(&self.mean, c);
            *o = x.iter().map(|(&i, &v)| v * c.get(i).copied().unwrap_or(0.0)).sum::<f64>() - mc;
        }
        out
    }

    pub fn apply_dense(&self, x: &[f64]) -> Vec<f64> {
        let sparse: SparseVec = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        self.apply(&sparse)
    }

    /// Name vector; names without bigrams map to zero.
    pub fn name_vector(&self, name: &str) -> Vec<f64> {
        let bag = encode_name_2gram(name);
        if bag.is_empty() {
            return vec![0.0; self.dims];
        }
        self.apply(&bag)
    }
}

/// Fits the name transform on distinct names.
pub fn fit_name_pca<'a>(
    names: impl IntoIterator<Item = &'a str>,
    opts: &PcaOptions,
) -> Result<Pca, PcaError> {
    let mut uniq: Vec<&str> = names.into_iter().collect();
    uniq.sort_unstable();
    uniq.dedup();
    let rows: Vec<SparseVec> = uniq.iter().map(|n| encode_name_2gram(n)).collect();
    pca_fit(&rows, BIGRAM_DIMS, opts)
}
