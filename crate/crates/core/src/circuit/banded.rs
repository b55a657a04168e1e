//! Cholesky factorization of symmetric positive definite band matrices.

/// Lower band storage: row `i` keeps columns `i - bw ..= i` at offsets `0 ..= bw`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw + j - i
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored, so callers
    /// pass each off-diagonal pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    /// In-place `L L^T` factorization. Returns the failing pivot row when the
    /// matrix is not numerically positive definite.
    pub fn factor(mut self) -> Result<BandCholesky, usize> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            for j in i0..=i {
                let k0 = j.saturating_sub(bw).max(i0);
                let len = j - k0;
                let ri = self.idx(i, k0);
                let rj = self.idx(j, k0);
                let mut s = self.data[self.idx(i, j)];
                for t in 0..len {
                    s -= self.data[ri + t] * self.data[rj + t];
                }
                let at = self.idx(i, j);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(i);
                    }
                    self.data[at] = s.sqrt();
                } else {
                    self.data[at] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            let row = l.idx(i, i0);
            let mut s = b[i];
            for (t, k) in (i0..i).enumerate() {
                s -= l.data[row + t] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let x = b[i] / l.data[l.idx(i, i)];
            b[i] = x;
            let i0 = i.saturating_sub(bw);
            let row = l.idx(i, i0);
            for (t, k) in (i0..i).enumerate() {
                b[k] -= l.data[row + t] * x;
            }
        }
    }
}
