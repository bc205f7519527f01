//! Dense row-major matrix and the handful of vector helpers the model needs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense 2-D tensor, row-major. Columns are the batch/region axis throughout
/// the model: a feature matrix holds one column per region or per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Tensor2<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                context: "tensor construction",
                left: format!("{}x{}", rows, cols),
                right: format!("data length {}", data.len()),
            });
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor2 { rows, cols, data }
    }

    /// Column vector from a slice.
    pub fn column(v: &[S]) -> Self {
        Tensor2 {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_copy(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[S]) {
        debug_assert_eq!(v.len(), self.rows);
        for (r, &x) in v.iter().enumerate() {
            self.set(r, c, x);
        }
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// self · other
    pub fn matmul(&self, other: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                context: "matmul",
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        let mut out = Tensor2::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == S::zero() {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// selfᵀ · other
    pub fn matmul_tn(&self, other: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                context: "matmul_tn",
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        let mut out = Tensor2::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == S::zero() {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// self · otherᵀ
    pub fn matmul_nt(&self, other: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.cols != other.cols {
            return Err(Error::Shape {
                context: "matmul_nt",
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        let mut out = Tensor2::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..other.rows {
                let brow = &other.data[j * other.cols..(j + 1) * other.cols];
                let mut acc = S::zero();
                for (&a, &b) in arow.iter().zip(brow) {
                    acc += a * b;
                }
                out.data[i * other.rows + j] = acc;
            }
        }
        Ok(out)
    }

    /// self · v for a vector v of length self.cols.
    pub fn matvec(&self, v: &[S]) -> Result<Vec<S>> {
        if self.cols != v.len() {
            return Err(Error::Shape {
                context: "matvec",
                left: self.shape_string(),
                right: format!("vector length {}", v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|r| dot(self.row(r), v))
            .collect())
    }

    /// selfᵀ · v for a vector v of length self.rows.
    pub fn tmatvec(&self, v: &[S]) -> Result<Vec<S>> {
        if self.rows != v.len() {
            return Err(Error::Shape {
                context: "tmatvec",
                left: self.shape_string(),
                right: format!("vector length {}", v.len()),
            });
        }
        let mut out = vec![S::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += vr * a;
            }
        }
        Ok(out)
    }

    /// Adds `v` to every column.
    pub fn add_col_broadcast(&mut self, v: &[S]) -> Result<()> {
        if v.len() != self.rows {
            return Err(Error::Shape {
                context: "column broadcast",
                left: self.shape_string(),
                right: format!("vector length {}", v.len()),
            });
        }
        for r in 0..self.rows {
            let b = v[r];
            for x in &mut self.data[r * self.cols..(r + 1) * self.cols] {
                *x += b;
            }
        }
        Ok(())
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|r| self.row(r).iter().copied().sum())
            .collect()
    }

    pub fn add_assign(&mut self, other: &Tensor2<S>) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape {
                context: "tensor add",
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Stacks `top` on `bottom` (same column count).
    pub fn vstack(top: &Tensor2<S>, bottom: &Tensor2<S>) -> Result<Tensor2<S>> {
        if top.cols != bottom.cols {
            return Err(Error::Shape {
                context: "vstack",
                left: top.shape_string(),
                right: bottom.shape_string(),
            });
        }
        let mut data = Vec::with_capacity((top.rows + bottom.rows) * top.cols);
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Ok(Tensor2 {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    /// u · vᵀ
    pub fn outer(u: &[S], v: &[S]) -> Tensor2<S> {
        Tensor2::from_fn(u.len(), v.len(), |r, c| u[r] * v[c])
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// y += alpha * x
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent triple-loop product used as the matmul oracle.
    fn matmul_naive(a: &Tensor2<f64>, b: &Tensor2<f64>) -> Tensor2<f64> {
        let mut out = Tensor2::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_matches_naive_oracle() {
        let mut state = 0x12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        let a = Tensor2::from_fn(3, 4, |_, _| next());
        let b = Tensor2::from_fn(4, 2, |_, _| next());
        let got = a.matmul(&b).unwrap();
        let want = matmul_naive(&a, &b);
        for (g, w) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((g - w).abs() < 1e-12, "{} vs {}", g, w);
        }
    }

    #[test]
    fn matmul_tn_and_nt_match_explicit_transpose() {
        let a = Tensor2::from_fn(3, 2, |r, c| (r * 2 + c) as f64 + 0.5);
        let b = Tensor2::from_fn(3, 4, |r, c| (r as f64) - (c as f64) * 0.25);
        let at = Tensor2::from_fn(2, 3, |r, c| a.get(c, r));
        assert_eq!(a.matmul_tn(&b).unwrap(), at.matmul(&b).unwrap());

        let c = Tensor2::from_fn(4, 2, |r, c| (r + c) as f64);
        let ct = Tensor2::from_fn(2, 4, |r, cc| c.get(cc, r));
        assert_eq!(a.matmul_nt(&c).unwrap(), a.matmul(&ct).unwrap());
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let a = Tensor2::<f64>::zeros(3, 4);
        let b = Tensor2::<f64>::zeros(3, 4);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3x4"), "message was: {}", msg);
    }

    #[test]
    fn vstack_stacks_rows() {
        let a = Tensor2::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let b = Tensor2::from_fn(1, 3, |_, c| 10.0 + c as f64);
        let s = Tensor2::vstack(&a, &b).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(2), &[10.0, 11.0, 12.0]);
    }

    #[test]
    fn generic_scalar_works_in_f32() {
        let a = Tensor2::<f32>::from_fn(2, 2, |r, c| (r + c) as f32);
        let v = a.matvec(&[1.0f32, 2.0]).unwrap();
        assert_eq!(v, vec![2.0, 5.0]);
    }
}
