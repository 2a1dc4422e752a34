#![allow(dead_code)]

use num_complex::Complex64;
use so3_trotter::linalg::{unitary_exp, CMatrix};
use so3_trotter::state::generator_matrices;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 32 digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f(self, x: f64) -> Dd {
        self.mul(Dd::from(x))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    pub fn div_f(self, x: f64) -> Dd {
        self.div(Dd::from(x))
    }
}

/// Taylor series of `cos x` in double-double, for `|x| < 1`.
pub fn dd_cos(x: Dd) -> Dd {
    let x2 = x.mul(x);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for k in 1..40 {
        term = term.mul(x2).neg().div_f(((2 * k - 1) * (2 * k)) as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-40 {
            break;
        }
    }
    sum
}

/// `ln(1 + y)` for small `|y|` by the alternating series, double-double.
pub fn dd_ln1p(y: Dd) -> Dd {
    let mut power = y;
    let mut sum = Dd::ZERO;
    for k in 1..200 {
        let term = power.div_f(k as f64);
        sum = if k % 2 == 1 { sum.add(term) } else { sum.sub(term) };
        power = power.mul(y);
        if term.hi.abs() < 1e-40 {
            break;
        }
    }
    sum
}

/// `exp(x)` for moderate `|x|`: scale by 2^-k, Taylor, square back.
pub fn dd_exp(x: Dd) -> Dd {
    let k = 20;
    let r = x.mul_f(1.0 / (1u64 << k) as f64);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for j in 1..40 {
        term = term.mul(r).div_f(j as f64);
        sum = sum.add(term);
    }
    for _ in 0..k {
        sum = sum.mul(sum);
    }
    sum
}

/// Three-term Legendre recurrence carried out in double-double.
pub fn dd_legendre(ell: u64, x: Dd) -> Dd {
    let (mut p0, mut p1) = (Dd::ONE, x);
    if ell == 0 {
        return p0;
    }
    for k in 1..ell {
        let kf = k as f64;
        let p2 = x.mul(p1).mul_f(2.0 * kf + 1.0).sub(p0.mul_f(kf)).div_f(kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `Σ_{ℓ=1}^{L} ℓ^{-s}` summed smallest-first in double-double.
pub fn dd_power_sum(s: f64, l_max: u64) -> Dd {
    let mut acc = Dd::ZERO;
    for ell in (1..=l_max).rev() {
        let l = ell as f64;
        // ℓ^{-s} = exp(-s ln ℓ); the f64 power is correctly rounded to a few
        // ulp, and the sum itself is what needs extra precision.
        acc = acc.add(Dd::from(l.powf(-s)));
    }
    acc
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(-iθ n̂·J)` on block `ℓ`, straight from the generator matrices.
pub fn block_exponential(ell: u64, angle: f64, axis: [f64; 3]) -> CMatrix {
    unitary_exp(&generator_matrices(ell).unwrap().along(axis), angle)
}

/// `e^{-iαJ_z} e^{-iβJ_y} e^{-iγJ_z}` from matrix exponentials.
pub fn euler_exponential(ell: u64, alpha: f64, beta: f64, gamma: f64) -> CMatrix {
    let g = generator_matrices(ell).unwrap();
    unitary_exp(&g.jz, alpha) * unitary_exp(&g.jy, beta) * unitary_exp(&g.jz, gamma)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
