//! Small dense networks with hand-written backpropagation, and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Two-layer perceptron `y = W2 tanh(W1 x + b1) + b2`, parameters stored flat
/// as `[W1 (hidden x in), b1, W2 (out x hidden), b2]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize, outputs: usize) -> usize {
        hidden * inputs + hidden + outputs * hidden + outputs
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng>(inputs: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        let mut params = vec![0.0; Self::param_count(inputs, hidden, outputs)];
        let a1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + outputs) as f64).sqrt();
        let w1 = hidden * inputs;
        let w2_start = w1 + hidden;
        for p in &mut params[..w1] {
            *p = rng.random_range(-a1..a1);
        }
        for p in &mut params[w2_start..w2_start + outputs * hidden] {
            *p = rng.random_range(-a2..a2);
        }
        Mlp {
            inputs,
            hidden,
            outputs,
            params,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    pub fn forward(&self, x: &[f64]) -> MlpTrace {
        debug_assert_eq!(x.len(), self.inputs);
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &p[h * self.inputs..(h + 1) * self.inputs];
                let s: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
                (s + p[b1 + h]).tanh()
            })
            .collect();
        let output = (0..self.outputs)
            .map(|o| {
                let row = &p[w2 + o * self.hidden..w2 + (o + 1) * self.hidden];
                let s: f64 = row.iter().zip(&hidden).map(|(w, hi)| w * hi).sum();
                s + p[b2 + o]
            })
            .collect();
        MlpTrace { hidden, output }
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the input.
    pub fn backward(
        &self,
        x: &[f64],
        trace: &MlpTrace,
        grad_out: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut grad_hidden = vec![0.0; self.hidden];
        for o in 0..self.outputs {
            let g = grad_out[o];
            if g == 0.0 {
                continue;
            }
            grad[b2 + o] += g;
            let base = w2 + o * self.hidden;
            for h in 0..self.hidden {
                grad[base + h] += g * trace.hidden[h];
                grad_hidden[h] += g * p[base + h];
            }
        }
        let mut grad_in = vec![0.0; self.inputs];
        for h in 0..self.hidden {
            let g = grad_hidden[h] * (1.0 - trace.hidden[h] * trace.hidden[h]);
            if g == 0.0 {
                continue;
            }
            grad[b1 + h] += g;
            let base = h * self.inputs;
            for i in 0..self.inputs {
                grad[base + i] += g * x[i];
                grad_in[i] += g * p[base + i];
            }
        }
        grad_in
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Per-dimension mean and standard deviation; spreads below `min_std` become 1.
pub fn column_stats(rows: &[Vec<f64>], min_std: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let dim = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dim];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, x)| *m += x / n);
    }
    let mut std = vec![0.0; dim];
    for r in rows {
        std.iter_mut()
            .zip(r.iter().zip(&mean))
            .for_each(|(s, (x, m))| *s += (x - m) * (x - m) / n);
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s < min_std {
            *s = 1.0;
        }
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(net: &Mlp, x: &[f64], target: &[f64]) -> f64 {
        net.forward(x)
            .output
            .iter()
            .zip(target)
            .map(|(y, t)| 0.5 * (y - t) * (y - t))
            .sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(5, 7, 3, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = [0.3, -0.2, 0.9];
        let trace = net.forward(&x);
        let gy: Vec<f64> = trace
            .output
            .iter()
            .zip(&target)
            .map(|(y, t)| y - t)
            .collect();
        let mut grad = vec![0.0; net.params.len()];
        let gx = net.backward(&x, &trace, &gy, &mut grad);

        let h = 1e-6;
        for i in 0..net.params.len() {
            let mut a = net.clone();
            a.params[i] += h;
            let mut b = net.clone();
            b.params[i] -= h;
            let fd = (loss(&a, &x, &target) - loss(&b, &x, &target)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() < 1e-7,
                "param {i}: {fd} vs {}",
                grad[i]
            );
        }
        for i in 0..5 {
            let mut xa = x.clone();
            xa[i] += h;
            let mut xb = x.clone();
            xb[i] -= h;
            let fd = (loss(&net, &xa, &target) - loss(&net, &xb, &target)) / (2.0 * h);
            assert!((fd - gx[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        for _ in 0..500 {
            let g = p.clone();
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2));
    }

    #[test]
    fn stats_floor_constant_columns() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 4.0]];
        let (m, s) = column_stats(&rows, 1e-8);
        assert_eq!(m, vec![1.0, 3.0]);
        assert_eq!(s, vec![1.0, 1.0]);
    }
}
