//! Iterative radix-2 FFT for the density convolutions.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Precomputed bit reversal and twiddles for one power-of-two size.
#[derive(Debug, Clone)]
pub(crate) struct FftPlan {
    n: usize,
    rev: Vec<u32>,
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size must be a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        FftPlan { n, rev, twiddles }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.n);
        for i in 0..self.n {
            let j = self.rev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let t = data[start + k + half] * w;
                    let u = data[start + k];
                    data[start + k] = u + t;
                    data[start + k + half] = u - t;
                }
            }
            half *= 2;
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }

    /// Spectra of two real sequences (zero padded to the plan size) with one
    /// complex transform.
    pub fn forward_pair(&self, a: &[f64], b: &[f64], fa: &mut [Complex64], fb: &mut [Complex64]) {
        let mut z: Vec<Complex64> = (0..self.n)
            .map(|i| Complex64::new(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
            .collect();
        self.forward(&mut z);
        for k in 0..self.n {
            let zk = z[k];
            let zc = z[(self.n - k) % self.n].conj();
            fa[k] = (zk + zc) * 0.5;
            fb[k] = (zk - zc) * Complex64::new(0.0, -0.5);
        }
    }

    /// Inverse of two Hermitian spectra at once; writes the real sequences.
    pub fn inverse_pair(&self, fa: &[Complex64], fb: &[Complex64], a: &mut [f64], b: &mut [f64]) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut z);
        for (k, v) in z.iter().enumerate() {
            if k < a.len() {
                a[k] = v.re;
            }
            if k < b.len() {
                b[k] = v.im;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 8, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            FftPlan::new(n).forward(&mut y);
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-9);
            }
            FftPlan::new(n).inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pair_transform_convolves() {
        let plan = FftPlan::new(8);
        let (a, b) = ([0.5, 0.5], [0.25, 0.25, 0.5]);
        let mut fa = vec![Complex64::default(); 8];
        let mut fb = fa.clone();
        plan.forward_pair(&a, &b, &mut fa, &mut fb);
        let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        let (mut c, mut d) = (vec![0.0; 4], vec![0.0; 3]);
        plan.inverse_pair(&prod, &fb, &mut c, &mut d);
        for (got, want) in c.iter().zip([0.125, 0.25, 0.375, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        for (got, want) in d.iter().zip(b) {
            assert!((got - want).abs() < 1e-14);
        }
    }
}
