//! Double-double arithmetic, used as a high-accuracy reference.

use nalgebra::DMatrix;

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div_f64(self, k: f64) -> Dd {
        let q = self.hi / k;
        let p = q * k;
        let e = q.mul_add(k, -p);
        quick_two_sum(q, (self.hi - p - e + self.lo) / k)
    }

    /// `lo ≤ self` with `lo` a double, decided exactly.
    pub fn at_least(self, lo: f64) -> bool {
        self.hi > lo || (self.hi == lo && self.lo >= 0.0)
    }

    pub fn at_most(self, hi: f64) -> bool {
        self.hi < hi || (self.hi == hi && self.lo <= 0.0)
    }
}

pub type DdMat = Vec<Vec<Dd>>;

pub fn dd_matmul(a: &DdMat, b: &DdMat) -> DdMat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(Dd::ZERO, |acc, k| acc.add(a[i][k].mul(b[k][j])))).collect())
        .collect()
}

/// Scaling and squaring with a long Taylor sum, all in double-double.
pub fn dd_expm(a: &DMatrix<f64>) -> DdMat {
    let n = a.nrows();
    let mut s = 0;
    while a.norm() / 2f64.powi(s) > 1.0 / 16.0 {
        s += 1;
    }
    let scaled: DdMat = (0..n).map(|i| (0..n).map(|j| Dd::from(a[(i, j)] / 2f64.powi(s))).collect()).collect();
    let mut sum: DdMat = (0..n).map(|i| (0..n).map(|j| Dd::from(if i == j { 1.0 } else { 0.0 })).collect()).collect();
    let mut term = sum.clone();
    for k in 1..=30 {
        term = dd_matmul(&term, &scaled).into_iter().map(|r| r.into_iter().map(|x| x.div_f64(k as f64)).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] = sum[i][j].add(term[i][j]);
            }
        }
    }
    for _ in 0..s {
        sum = dd_matmul(&sum, &sum);
    }
    sum
}

/// `a·b` exactly, as an unevaluated sum.
pub fn exact_product(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}
