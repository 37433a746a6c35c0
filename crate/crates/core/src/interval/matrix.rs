use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use super::Interval;

/// Dense row-major matrix of intervals.
///
/// Arithmetic encloses the result of the same operation applied to every
/// choice of point members.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![Interval::ZERO; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Interval::ONE;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn from_point(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Interval::point(m[(i, j)]))
    }

    /// Widens every entry of `m` by `[-r, r]`.
    pub fn from_point_with_radius(m: &DMatrix<f64>, r: f64) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Interval::point(m[(i, j)]) + Interval::ball(r))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.data.iter()
    }

    pub fn mid(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].mid())
    }

    pub fn lower(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].lo())
    }

    pub fn upper(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].hi())
    }

    /// Largest entry width.
    pub fn max_width(&self) -> f64 {
        self.data.iter().map(|x| x.width()).fold(0.0, f64::max)
    }

    pub fn contains(&self, m: &DMatrix<f64>) -> bool {
        m.shape() == self.shape()
            && (0..self.nrows).all(|i| (0..self.ncols).all(|j| self[(i, j)].contains(m[(i, j)])))
    }

    pub fn is_subset_of(&self, other: &IntervalMatrix) -> bool {
        self.shape() == other.shape() && self.data.iter().zip(&other.data).all(|(a, b)| a.is_subset_of(*b))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Interval) -> Self {
        Self { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// Copies `src` into the block starting at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &IntervalMatrix) {
        for i in 0..src.nrows {
            for j in 0..src.ncols {
                self[(r0 + i, c0 + j)] = src[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, nrows: usize, ncols: usize) -> Self {
        Self::from_fn(nrows, ncols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn row(&self, i: usize) -> IntervalVector {
        IntervalVector((0..self.ncols).map(|j| self[(i, j)]).collect())
    }

    pub fn column(&self, j: usize) -> IntervalVector {
        IntervalVector((0..self.nrows).map(|i| self[(i, j)]).collect())
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &IntervalVector) -> IntervalVector {
        assert_eq!(self.ncols, v.len(), "matrix-vector dimension mismatch");
        IntervalVector(
            (0..self.nrows)
                .map(|i| {
                    let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
                    row.iter().zip(&v.0).map(|(&a, &b)| a * b).sum()
                })
                .collect(),
        )
    }

    /// `selfᵀ * v`, i.e. the row vector `vᵀ self` stored as a column.
    pub fn tr_mul_vec(&self, v: &IntervalVector) -> IntervalVector {
        assert_eq!(self.nrows, v.len(), "matrix-vector dimension mismatch");
        let mut out = vec![Interval::ZERO; self.ncols];
        for (i, &vi) in v.0.iter().enumerate() {
            if vi == Interval::ZERO {
                continue;
            }
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        IntervalVector(out)
    }

    pub fn matmul(&self, rhs: &IntervalMatrix) -> IntervalMatrix {
        assert_eq!(self.ncols, rhs.nrows, "matrix product dimension mismatch");
        let mut out = IntervalMatrix::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            let orow = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
            for k in 0..self.ncols {
                let a = self.data[i * self.ncols + k];
                if a == Interval::ZERO {
                    continue;
                }
                let brow = &rhs.data[k * rhs.ncols..(k + 1) * rhs.ncols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    if b != Interval::ZERO {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    /// Frobenius-norm enclosure `sqrt(Σ a_ij²)` over all members.
    pub fn frobenius(&self) -> Interval {
        self.data.iter().map(|x| x.sqr()).sum::<Interval>().sqrt()
    }
}

impl Index<(usize, usize)> for IntervalMatrix {
    type Output = Interval;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Interval {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for IntervalMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Interval {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

impl From<&DMatrix<f64>> for IntervalMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        IntervalMatrix::from_point(m)
    }
}

impl Add for &IntervalMatrix {
    type Output = IntervalMatrix;
    fn add(self, rhs: &IntervalMatrix) -> IntervalMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum dimension mismatch");
        IntervalMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl Sub for &IntervalMatrix {
    type Output = IntervalMatrix;
    fn sub(self, rhs: &IntervalMatrix) -> IntervalMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference dimension mismatch");
        IntervalMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl Mul for &IntervalMatrix {
    type Output = IntervalMatrix;
    fn mul(self, rhs: &IntervalMatrix) -> IntervalMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &IntervalMatrix {
    type Output = IntervalMatrix;
    fn neg(self) -> IntervalMatrix {
        IntervalMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|&x| -x).collect() }
    }
}

/// Column vector of intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalVector(pub Vec<Interval>);

impl IntervalVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Interval::ZERO; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = Interval::ONE;
        v
    }

    pub fn from_point(v: &DVector<f64>) -> Self {
        Self(v.iter().map(|&x| Interval::point(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mid(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|x| x.mid()))
    }

    pub fn dot(&self, other: &IntervalVector) -> Interval {
        assert_eq!(self.len(), other.len(), "dot product dimension mismatch");
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    /// Euclidean-norm enclosure.
    pub fn norm(&self) -> Interval {
        self.0.iter().map(|x| x.sqr()).sum::<Interval>().sqrt()
    }

    pub fn scale(&self, s: Interval) -> Self {
        Self(self.0.iter().map(|&x| x * s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_product_encloses_float_product() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.7, -0.9, 0.11]);
        let ia = IntervalMatrix::from_point(&a);
        let ib = IntervalMatrix::from_point(&b);
        let p = &ia * &ib;
        let f = &a * &b;
        assert!(p.contains(&f));
        assert!(p.max_width() < 1e-15);
    }

    #[test]
    fn transpose_and_blocks() {
        let m = IntervalMatrix::from_fn(2, 3, |i, j| Interval::point((3 * i + j) as f64));
        let t = m.transpose();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t[(2, 1)], Interval::point(5.0));
        let b = m.block(0, 1, 2, 2);
        assert_eq!(b[(1, 1)], Interval::point(5.0));
        let mut z = IntervalMatrix::zeros(3, 3);
        z.set_block(1, 1, &b);
        assert_eq!(z[(2, 2)], Interval::point(5.0));
    }

    #[test]
    fn vector_products_agree_with_matmul() {
        let m = IntervalMatrix::from_fn(3, 2, |i, j| Interval::point(i as f64 - 0.5 * j as f64));
        let v = IntervalVector(vec![Interval::point(2.0), Interval::point(-1.0), Interval::point(0.5)]);
        let w = m.tr_mul_vec(&v);
        let as_row = IntervalMatrix::from_fn(1, 3, |_, j| v.0[j]).matmul(&m);
        assert_eq!(w.0, as_row.row(0).0);
    }
}
