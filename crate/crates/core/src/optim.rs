//! Nelder–Mead simplex minimization.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMead {
    pub max_iterations: usize,
    /// Stop when `f_worst - f_best <= tolerance * max(1, |f_best|)` and the
    /// simplex has collapsed to within `x_tolerance` (relative).
    pub tolerance: f64,
    pub x_tolerance: f64,
    /// Fresh simplexes built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-8,
            x_tolerance: 1e-6,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// `steps[k]` is the initial simplex offset along coordinate `k`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], steps: &[f64]) -> Minimum {
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut best = Minimum {
            x: x0.to_vec(),
            value: eval(x0),
            iterations: 0,
            converged: false,
        };
        for _round in 0..=self.restarts {
            let budget = self.max_iterations - best.iterations;
            let (x, value, used, converged) = self.run(&mut eval, &best.x, steps, budget);
            let improved = value < best.value;
            let gain = best.value - value;
            best.iterations += used;
            best.converged = converged;
            if improved {
                best.x = x;
                best.value = value;
            }
            if !converged || gain <= self.tolerance * best.value.abs().max(1.0) {
                break;
            }
        }
        best
    }

    fn run<F: FnMut(&[f64]) -> f64>(
        &self,
        f: &mut F,
        x0: &[f64],
        steps: &[f64],
        budget: usize,
    ) -> (Vec<f64>, f64, usize, bool) {
        let n = x0.len();
        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for k in 0..n {
            let mut v = x0.to_vec();
            v[k] += steps[k];
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        let mut order: Vec<usize> = (0..=n).collect();

        for iteration in 0..budget {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let (lo, hi) = (order[0], order[n]);
            let spread = values[hi] - values[lo];
            let diameter = simplex
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[lo]).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)))
                .fold(0.0, f64::max);
            if spread <= self.tolerance * values[lo].abs().max(1.0) && diameter <= self.x_tolerance {
                return (simplex[lo].clone(), values[lo], iteration, true);
            }
            let second = order[n - 1];
            let mut centroid = vec![0.0; n];
            for &i in &order[..n] {
                for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[hi])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let reflected = along(1.0);
            let fr = f(&reflected);
            if fr < values[lo] {
                let expanded = along(2.0);
                let fe = f(&expanded);
                if fe < fr {
                    simplex[hi] = expanded;
                    values[hi] = fe;
                } else {
                    simplex[hi] = reflected;
                    values[hi] = fr;
                }
                continue;
            }
            if fr < values[second] {
                simplex[hi] = reflected;
                values[hi] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[hi] {
                let c = along(0.5);
                let v = f(&c);
                (c, v)
            } else {
                let c = along(-0.5);
                let v = f(&c);
                (c, v)
            };
            if fc < values[hi].min(fr) {
                simplex[hi] = contracted;
                values[hi] = fc;
                continue;
            }
            let anchor = simplex[lo].clone();
            for &i in &order[1..] {
                for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                    *v = a + 0.5 * (*v - a);
                }
                values[i] = f(&simplex[i]);
            }
        }
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        (simplex[order[0]].clone(), values[order[0]], budget, false)
    }
}
