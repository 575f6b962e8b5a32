//! Test-only oracles, independent of the library's factorization path.
#![allow(dead_code)]

use gpc_core::gp::{KernelKind, KernelSpec, Smoothness};

/// Kernel written out directly from the textbook formulas, with the
/// per-axis effective length-scales passed in.
pub fn oracle_kernel(spec: &KernelSpec, lengths: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(y).zip(lengths).map(|((a, b), l)| ((a - b) / l).powi(2)).sum();
    let r = r2.sqrt();
    let rho = match spec.kind {
        KernelKind::SquaredExponential => (-r2 / 2.0).exp(),
        KernelKind::Matern { nu: Smoothness::Half } => (-r).exp(),
        KernelKind::Matern { nu: Smoothness::ThreeHalves } => (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
        KernelKind::Matern { nu: Smoothness::FiveHalves } => {
            (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp()
        }
    };
    spec.signal_variance * rho
}

/// LU factorization with partial pivoting, kept for repeated solves.
pub struct DenseLu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(mut a: Vec<Vec<f64>>) -> Self {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            perm.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                a[row][col] = f;
                for k in col + 1..n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        DenseLu { lu: a, perm }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[i][k] * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.lu[i][k] * y[k];
            }
            y[i] /= self.lu[i][i];
        }
        y
    }
}

/// Brute-force GP posterior built on a dense LU of `K + σ_n² I`.
pub struct DenseGp<'a> {
    spec: &'a KernelSpec,
    lengths: Vec<f64>,
    xs: Vec<Vec<f64>>,
    lu: Option<DenseLu>,
}

impl<'a> DenseGp<'a> {
    pub fn new(spec: &'a KernelSpec, lengths: &[f64], xs: &[Vec<f64>]) -> Self {
        let n = xs.len();
        let noise = spec.noise_std * spec.noise_std;
        let lu = (n > 0).then(|| {
            DenseLu::new(
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| oracle_kernel(spec, lengths, &xs[i], &xs[j]) + if i == j { noise } else { 0.0 })
                            .collect()
                    })
                    .collect(),
            )
        });
        DenseGp { spec, lengths: lengths.to_vec(), xs: xs.to_vec(), lu }
    }

    /// Posterior mean for target column `ys` and the posterior std at `q`.
    pub fn posterior(&self, ys: &[f64], q: &[f64]) -> (f64, f64) {
        let Some(lu) = &self.lu else {
            return (0.0, self.spec.signal_variance.sqrt());
        };
        let ks: Vec<f64> = self.xs.iter().map(|x| oracle_kernel(self.spec, &self.lengths, x, q)).collect();
        let alpha = lu.solve(ys);
        let mean = ks.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let v = lu.solve(&ks);
        let var = oracle_kernel(self.spec, &self.lengths, q, q) - ks.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        (mean, var.max(0.0).sqrt())
    }
}

/// One-shot convenience wrapper around [`DenseGp`].
pub fn dense_posterior(spec: &KernelSpec, lengths: &[f64], xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
    DenseGp::new(spec, lengths, xs).posterior(ys, q)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Deterministic xorshift stream for fixtures.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}
