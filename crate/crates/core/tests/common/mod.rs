//! Reference implementations the library is checked against. They share no
//! code with the crate beyond its public types.

#![allow(dead_code)]

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

/// Unevaluated sum `hi + lo` with about 106 bits of precision.
#[derive(Debug, Clone, Copy)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = self.add(Self { hi: -p, lo: -e });
        let q2 = r.hi / d;
        let (hi, lo) = two_sum(q1, q2);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Variance of the equal-weight Gaussian mixture, `E[X^2] - E[X]^2`,
/// evaluated in double-double so the cancellation is harmless.
pub fn mixture_variance(means: &[f64], sigmas: &[f64]) -> f64 {
    let m = means.len() as f64;
    let mut s1 = DoubleDouble::ZERO;
    let mut s2 = DoubleDouble::ZERO;
    for (&mu, &s) in means.iter().zip(sigmas) {
        let mu = DoubleDouble::from(mu);
        let s = DoubleDouble::from(s);
        s1 = s1.add(mu);
        s2 = s2.add(mu.mul(mu)).add(s.mul(s));
    }
    let ex = s1.div_f64(m);
    let ex2 = s2.div_f64(m);
    ex2.add(ex.mul(ex).neg()).to_f64()
}

pub fn mixture_mean(means: &[f64]) -> f64 {
    means
        .iter()
        .fold(DoubleDouble::ZERO, |a, &x| a.add(DoubleDouble::from(x)))
        .div_f64(means.len() as f64)
        .to_f64()
}

/// Direct sparsification: for each step sort, drop, and recompute RMSE
/// from scratch. Quadratic-ish but obviously correct.
pub fn brute_sparsification(uncertainty: &[f64], abs_err: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = abs_err.len();
    let rmse_keep = |order: &[usize], drop: usize| {
        let kept = &order[drop..];
        (kept.iter().map(|&i| abs_err[i] * abs_err[i]).sum::<f64>() / kept.len() as f64).sqrt()
    };
    let sorted_desc = |key: &[f64]| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| key[b].partial_cmp(&key[a]).unwrap().then(a.cmp(&b)));
        idx
    };
    let by_u = sorted_desc(uncertainty);
    let by_e = sorted_desc(abs_err);
    let all: Vec<usize> = (0..n).collect();
    let full = rmse_keep(&all, 0);
    let mut cu = Vec::new();
    let mut co = Vec::new();
    for k in 0..100 {
        let drop = k * n / 100;
        cu.push(rmse_keep(&by_u, drop) / full);
        co.push(rmse_keep(&by_e, drop) / full);
    }
    (cu, co)
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + h;
    let fp = f(&p);
    p[i] = x[i] - h;
    let fm = f(&p);
    (fp - fm) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Angle between two rotations via unit quaternions, degrees.
pub fn quaternion_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*a));
    let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*b));
    let d = qa.inverse() * qb;
    let v = d.imag().norm();
    (2.0 * v.atan2(d.scalar().abs())).to_degrees()
}

/// Ranks with ties averaged, 1-based.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}
