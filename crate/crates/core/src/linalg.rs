//! Symmetric banded storage and Cholesky factorization.

/// Lower band of a symmetric `n × n` matrix with half-bandwidth `bw`.
/// Entry `(i, j)` with `i - bw ≤ j ≤ i` lives at `i·(bw+1) + (j + bw - i)`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub(crate) fn clear(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` to the symmetric pair `(i, j)`/`(j, i)`.
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub(crate) fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += v;
        }
    }

    /// `A ← S A S` for the diagonal matrix `S = diag(s)`.
    pub(crate) fn scale_symmetric(&mut self, s: &[f64]) {
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let k = self.slot(i, j);
                self.data[k] *= s[i] * s[j];
            }
        }
    }

    pub(crate) fn max_abs_diagonal(&self) -> f64 {
        (0..self.n).fold(0.0_f64, |m, i| m.max(self.get(i, i).abs()))
    }

    /// `y = A x`.
    pub(crate) fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.slot(i, i)] * x[i];
        }
    }

    /// Restriction to the rows and columns where `keep` is true.
    pub(crate) fn restricted(&self, keep: &[bool]) -> (BandMatrix, Vec<usize>) {
        let index: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut out = BandMatrix::zeros(index.len(), self.bw);
        for (a, &i) in index.iter().enumerate() {
            for (b, &j) in index.iter().enumerate().take(a + 1) {
                if i - j <= self.bw && a - b <= out.bw {
                    out.add(a, b, self.get(i, j));
                }
            }
        }
        (out, index)
    }

    /// Cholesky factor `L Lᵀ`, or `None` if a pivot is not positive.
    pub(crate) fn cholesky(&self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.clone();
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = l.data[l.slot(j, j)];
            for k in lo..j {
                let v = l.data[l.slot(j, k)];
                d -= v * v;
            }
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            let d = d.sqrt();
            let sjj = l.slot(j, j);
            l.data[sjj] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = l.data[l.slot(i, j)];
                for k in lo_i..j {
                    s -= l.data[l.slot(i, k)] * l.data[l.slot(j, k)];
                }
                let sij = l.slot(i, j);
                l.data[sij] = s / d;
            }
        }
        Some(BandCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.l.n, self.l.bw);
        let l = &self.l;
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.slot(i, k)] * b[k];
            }
            b[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= l.data[l.slot(k, i)] * b[k];
            }
            b[i] = s / l.data[l.slot(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve_round_trips() {
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.5);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&x, &mut b);
        a.cholesky().unwrap().solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_band_matches_direct_solution() {
        // [[4,1,2],[1,3,0],[2,0,5]] x = [1,2,3]
        let mut a = BandMatrix::zeros(3, 2);
        let m = [[4.0, 1.0, 2.0], [1.0, 3.0, 0.0], [2.0, 0.0, 5.0]];
        for i in 0..3 {
            for j in 0..=i {
                a.add(i, j, m[i][j]);
            }
        }
        let mut b = vec![1.0, 2.0, 3.0];
        a.cholesky().unwrap().solve(&mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| m[i][j] * b[j]).sum::<f64>() - [1.0, 2.0, 3.0][i];
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = BandMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn restriction_keeps_selected_block() {
        let mut a = BandMatrix::zeros(4, 1);
        for i in 0..4 {
            a.add(i, i, 1.0 + i as f64);
            if i > 0 {
                a.add(i, i - 1, 0.5);
            }
        }
        let (r, idx) = a.restricted(&[true, false, true, true]);
        assert_eq!(idx, vec![0, 2, 3]);
        assert_eq!(r.get(0, 0), 1.0);
        assert_eq!(r.get(1, 0), 0.0);
        assert_eq!(r.get(2, 1), 0.5);
    }
}
