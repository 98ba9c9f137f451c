//! Orthonormal 2-D DCT-II on square tiles.

use std::f64::consts::PI;

pub struct Dct2 {
    n: usize,
    /// Row-major basis: `basis[k * n + i] = a(k) cos(pi (2i + 1) k / 2n)`.
    basis: Vec<f64>,
}

impl Dct2 {
    pub fn new(n: usize) -> Self {
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for i in 0..n {
                basis[k * n + i] = scale * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `C X C^T` in place on an `n*n` row-major tile.
    pub fn forward(&self, tile: &mut [f64]) {
        self.separable(tile, false);
    }

    /// `C^T Y C` in place.
    pub fn inverse(&self, tile: &mut [f64]) {
        self.separable(tile, true);
    }

    fn separable(&self, tile: &mut [f64], transpose: bool) {
        let n = self.n;
        let coef = |k: usize, i: usize| if transpose { self.basis[i * n + k] } else { self.basis[k * n + i] };
        let mut tmp = vec![0.0; n * n];
        // columns
        for k in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += coef(k, i) * tile[i * n + c];
                }
                tmp[k * n + c] = acc;
            }
        }
        // rows
        for r in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += coef(k, i) * tmp[r * n + i];
                }
                tile[r * n + k] = acc;
            }
        }
    }
}

/// Zigzag scan order for an `n x n` tile, as row-major indices.
pub fn zigzag(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 0 {
            // up-right: row decreasing
            for r in (lo..=hi).rev() {
                order.push(r * n + (s - r));
            }
        } else {
            for r in lo..=hi {
                order.push(r * n + (s - r));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_8_matches_jpeg_order() {
        let z = zigzag(8);
        assert_eq!(&z[..10], &[0, 1, 8, 16, 9, 2, 3, 10, 17, 24]);
        assert_eq!(z[63], 63);
        let mut sorted = z.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn constant_tile_is_dc_only() {
        let dct = Dct2::new(8);
        let mut tile = vec![3.0; 64];
        dct.forward(&mut tile);
        assert!((tile[0] - 24.0).abs() < 1e-12);
        assert!(tile[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn matches_direct_double_sum_and_inverts() {
        for n in [2usize, 3, 8] {
            let dct = Dct2::new(n);
            let x: Vec<f64> = (0..n * n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
            let mut y = x.clone();
            dct.forward(&mut y);
            let a = |k: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for u in 0..n {
                for v in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            acc += x[i * n + j]
                                * (PI * (2 * i + 1) as f64 * u as f64 / (2 * n) as f64).cos()
                                * (PI * (2 * j + 1) as f64 * v as f64 / (2 * n) as f64).cos();
                        }
                    }
                    assert!((a(u) * a(v) * acc - y[u * n + v]).abs() < 1e-10);
                }
            }
            dct.inverse(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
