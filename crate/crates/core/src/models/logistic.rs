//! Logistic models trained by full-batch gradient descent with an L2
//! penalty on the weights. Inputs are standardized with training moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            epochs: 150,
            learning_rate: 0.5,
            l2: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Scaler {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaler {
    fn fit(rows: &[&[f64]], dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        Scaler { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) * s)
            .collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn init(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect()
}

/// Scores one feature vector; used for creation and variable choices,
/// where candidate scores are renormalized by the caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogistic {
    scaler: Scaler,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Set when training saw no data; scores are then constant.
    pub untrained: bool,
}

impl BinaryLogistic {
    pub fn train(rows: &[(Vec<f64>, bool)], opts: &LogisticOptions) -> Self {
        let Some(dim) = rows.first().map(|r| r.0.len()) else {
            return BinaryLogistic {
                untrained: true,
                ..Default::default()
            };
        };
        let raw: Vec<&[f64]> = rows.iter().map(|r| r.0.as_slice()).collect();
        let scaler = Scaler::fit(&raw, dim);
        let xs: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
        let ys: Vec<f64> = rows.iter().map(|r| if r.1 { 1.0 } else { 0.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut w = init(&mut rng, dim);
        let mut b = 0.0;
        let n = xs.len() as f64;
        let mut grad = vec![0.0; dim];
        for _ in 0..opts.epochs {
            grad.iter_mut().zip(&w).for_each(|(g, w)| *g = opts.l2 * w);
            let mut gb = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let z = b + x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let err = (sigmoid(z) - y) / n;
                gb += err;
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g += err * xi;
                }
            }
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= opts.learning_rate * g;
            }
            b -= opts.learning_rate * gb;
        }
        BinaryLogistic {
            scaler,
            weights: w,
            bias: b,
            untrained: false,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        if self.untrained {
            return 0.5;
        }
        let x = self.scaler.apply(x);
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>())
    }

    /// Scores renormalized over a candidate set.
    pub fn distribution(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let s: Vec<f64> = xs.iter().map(|x| self.score(x).max(1e-12)).collect();
        let total: f64 = s.iter().sum();
        s.into_iter().map(|v| v / total).collect()
    }
}

/// Softmax over named classes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultinomialLogistic {
    scaler: Scaler,
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub untrained: bool,
}

impl MultinomialLogistic {
    /// `rows` pair a feature vector with its class label.
    pub fn train(rows: &[(Vec<f64>, String)], opts: &LogisticOptions) -> Self {
        let Some(dim) = rows.first().map(|r| r.0.len()) else {
            return MultinomialLogistic {
                untrained: true,
                ..Default::default()
            };
        };
        let mut classes: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
        classes.sort();
        classes.dedup();
        let k = classes.len();
        let raw: Vec<&[f64]> = rows.iter().map(|r| r.0.as_slice()).collect();
        let scaler = Scaler::fit(&raw, dim);
        let xs: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
        let ys: Vec<usize> = rows
            .iter()
            .map(|r| classes.binary_search(&r.1).expect("class listed"))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut w: Vec<Vec<f64>> = (0..k).map(|_| init(&mut rng, dim)).collect();
        let mut b = vec![0.0; k];
        let n = xs.len() as f64;
        let mut gw = vec![vec![0.0; dim]; k];
        let mut gb = vec![0.0; k];
        let mut p = vec![0.0; k];
        for _ in 0..opts.epochs {
            for (g, wc) in gw.iter_mut().zip(&w) {
                g.iter_mut().zip(wc).for_each(|(g, w)| *g = opts.l2 * w);
            }
            gb.iter_mut().for_each(|g| *g = 0.0);
            for (x, &y) in xs.iter().zip(&ys) {
                for c in 0..k {
                    p[c] = b[c] + x.iter().zip(&w[c]).map(|(a, c)| a * c).sum::<f64>();
                }
                let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = p.iter_mut().map(|v| {
                    *v = (*v - m).exp();
                    *v
                }).sum();
                for c in 0..k {
                    let err = (p[c] / s - if c == y { 1.0 } else { 0.0 }) / n;
                    gb[c] += err;
                    if err != 0.0 {
                        for (g, xi) in gw[c].iter_mut().zip(x) {
                            *g += err * xi;
                        }
                    }
                }
            }
            for c in 0..k {
                for (wi, g) in w[c].iter_mut().zip(&gw[c]) {
                    *wi -= opts.learning_rate * g;
                }
                b[c] -= opts.learning_rate * gb[c];
            }
        }
        MultinomialLogistic {
            scaler,
            classes,
            weights: w,
            bias: b,
            untrained: false,
        }
    }

    fn logit(&self, x: &[f64], class: &str) -> Option<f64> {
        let c = self.classes.binary_search_by(|s| s.as_str().cmp(class)).ok()?;
        Some(self.bias[c] + x.iter().zip(&self.weights[c]).map(|(a, w)| a * w).sum::<f64>())
    }

    /// Softmax restricted to `candidates`; classes never seen in training
    /// sit well below every known one.
    pub fn distribution(&self, x: &[f64], candidates: &[&str]) -> Vec<f64> {
        let n = candidates.len();
        if self.untrained || n == 0 {
            return vec![1.0 / n.max(1) as f64; n];
        }
        let x = self.scaler.apply(x);
        let known: Vec<Option<f64>> = candidates.iter().map(|c| self.logit(&x, c)).collect();
        let floor = known.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor - 10.0 } else { 0.0 };
        let z: Vec<f64> = known.into_iter().map(|v| v.unwrap_or(floor)).collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }
}
