//! Truncated Taylor jets in the four real coordinates (t, x, y, z).
//!
//! A [`Jet4`] stores the Taylor coefficients (partial derivatives divided by
//! multi-index factorials) of a scalar field at a point, dense up to a total
//! degree of at most [`MAX_ORDER`]. Arithmetic is exact in the truncated
//! Taylor algebra: products only discard terms whose total degree exceeds the
//! jet order. All higher derivatives used by the residual and curvature
//! suites come out of this module, so there is no finite-difference noise in
//! the main computation paths.
//!
//! Multi-indices (i_t, i_x, i_y, i_z) are ordered by total degree first and
//! lexicographically descending within a degree, so the order-1 block reads
//! t, x, y, z. The ordering is fixed so serialized coefficient vectors are
//! bit-stable.

use crate::error::{Error, Result};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Maximum supported total derivative degree.
pub const MAX_ORDER: usize = 4;

/// Coordinate axes in jet order.
pub const T: usize = 0;
pub const X: usize = 1;
pub const Y: usize = 2;
pub const Z: usize = 3;

/// Number of coefficients of a dense jet of the given order: C(order+4, 4).
pub const fn term_count(order: usize) -> usize {
    [1, 5, 15, 35, 70][order]
}

/// Offsets of each total degree block inside the coefficient vector.
const DEGREE_OFFSET: [usize; 6] = [0, 1, 5, 15, 35, 70];

struct Tables {
    /// Multi-index for each coefficient position (global order-4 layout).
    idx: Vec<[u8; 4]>,
    /// Position lookup for multi-indices with |idx| <= 4.
    pos: [[[[u16; 5]; 5]; 5]; 5],
    /// pos of idx[a] + idx[b] for all coefficient pairs with degree sum <= 4.
    prod: Vec<u16>,
    /// Factorial product i_t! i_x! i_y! i_z! per position.
    fact: Vec<f64>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut idx = Vec::with_capacity(70);
        for deg in 0..=MAX_ORDER {
            for it in (0..=deg).rev() {
                for ix in (0..=(deg - it)).rev() {
                    for iy in (0..=(deg - it - ix)).rev() {
                        let iz = deg - it - ix - iy;
                        idx.push([it as u8, ix as u8, iy as u8, iz as u8]);
                    }
                }
            }
        }
        let mut pos = [[[[u16::MAX; 5]; 5]; 5]; 5];
        for (k, m) in idx.iter().enumerate() {
            pos[m[0] as usize][m[1] as usize][m[2] as usize][m[3] as usize] = k as u16;
        }
        let n = idx.len();
        let mut prod = vec![u16::MAX; n * n];
        for a in 0..n {
            for b in 0..n {
                let s = [
                    idx[a][0] + idx[b][0],
                    idx[a][1] + idx[b][1],
                    idx[a][2] + idx[b][2],
                    idx[a][3] + idx[b][3],
                ];
                let deg = (s[0] + s[1] + s[2] + s[3]) as usize;
                if deg <= MAX_ORDER {
                    prod[a * n + b] =
                        pos[s[0] as usize][s[1] as usize][s[2] as usize][s[3] as usize];
                }
            }
        }
        let fact = |k: u8| -> f64 { [1.0, 1.0, 2.0, 6.0, 24.0][k as usize] };
        let fac = idx
            .iter()
            .map(|m| fact(m[0]) * fact(m[1]) * fact(m[2]) * fact(m[3]))
            .collect();
        Tables {
            idx,
            pos,
            prod,
            fact: fac,
        }
    })
}

/// Dense truncated Taylor expansion of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet4 {
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet4 {
    /// Jet of a constant field.
    pub fn constant(value: f64, order: usize) -> Jet4 {
        assert!(order <= MAX_ORDER);
        let mut coeffs = vec![0.0; term_count(order)];
        coeffs[0] = value;
        Jet4 { order, coeffs }
    }

    /// Jet of the coordinate function along `axis`, evaluated at `value`.
    pub fn coordinate(value: f64, axis: usize, order: usize) -> Jet4 {
        assert!(order <= MAX_ORDER && axis < 4);
        let mut j = Jet4::constant(value, order);
        if order >= 1 {
            let mut m = [0usize; 4];
            m[axis] = 1;
            let p = tables().pos[m[0]][m[1]][m[2]][m[3]] as usize;
            j.coeffs[p] = 1.0;
        }
        j
    }

    pub fn zero(order: usize) -> Jet4 {
        Jet4::constant(0.0, order)
    }

    /// Rebuild a jet from raw coefficients in the documented ordering.
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Jet4> {
        if order > MAX_ORDER || coeffs.len() != term_count(order) {
            return Err(Error::Parameter(format!(
                "expected {} coefficients for order {order}, got {}",
                term_count(order.min(MAX_ORDER)),
                coeffs.len()
            )));
        }
        Ok(Jet4 { order, coeffs })
    }

    /// Multi-index at a coefficient position, in the documented ordering.
    pub fn index_at(position: usize) -> [usize; 4] {
        let m = tables().idx[position];
        [m[0] as usize, m[1] as usize, m[2] as usize, m[3] as usize]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the field at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficients in the documented degree-graded ordering.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient for a multi-index (no factorial weight).
    pub fn coeff(&self, idx: [usize; 4]) -> f64 {
        let deg = idx.iter().sum::<usize>();
        assert!(deg <= self.order);
        let p = tables().pos[idx[0]][idx[1]][idx[2]][idx[3]] as usize;
        self.coeffs[p]
    }

    /// Partial derivative for a multi-index: coefficient times factorials.
    pub fn partial(&self, idx: [usize; 4]) -> Result<f64> {
        let deg = idx.iter().sum::<usize>();
        if deg > self.order || idx.iter().any(|&i| i > MAX_ORDER) {
            return Err(Error::Parameter(format!(
                "partial index {idx:?} exceeds jet order {}",
                self.order
            )));
        }
        let tb = tables();
        let p = tb.pos[idx[0]][idx[1]][idx[2]][idx[3]] as usize;
        Ok(self.coeffs[p] * tb.fact[p])
    }

    /// First partial derivative along one axis as a plain value.
    pub fn partial_at(&self, axis: usize) -> f64 {
        let mut idx = [0usize; 4];
        idx[axis] = 1;
        self.partial(idx).expect("order >= 1")
    }

    /// Jet of the partial derivative along one axis; lowers the order by one.
    pub fn deriv(&self, axis: usize) -> Jet4 {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < 4);
        let tb = tables();
        let order = self.order - 1;
        let mut coeffs = vec![0.0; term_count(order)];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut m = tb.idx[k];
            m[axis] += 1;
            let src = tb.pos[m[0] as usize][m[1] as usize][m[2] as usize][m[3] as usize] as usize;
            *c = self.coeffs[src] * m[axis] as f64;
        }
        Jet4 { order, coeffs }
    }

    /// Truncate to a lower order (cheap prefix copy).
    pub fn truncate(&self, order: usize) -> Jet4 {
        assert!(order <= self.order);
        Jet4 {
            order,
            coeffs: self.coeffs[..term_count(order)].to_vec(),
        }
    }

    /// Two-dimensional Laplacian in (y, z) as a jet of order-2 lower.
    pub fn laplace_yz(&self) -> Jet4 {
        &self.deriv(Y).deriv(Y) + &self.deriv(Z).deriv(Z)
    }

    fn binop(&self, rhs: &Jet4, f: impl Fn(f64, f64) -> f64) -> Jet4 {
        let order = self.order.min(rhs.order);
        let n = term_count(order);
        let coeffs = (0..n).map(|k| f(self.coeffs[k], rhs.coeffs[k])).collect();
        Jet4 { order, coeffs }
    }

    fn mul_jet(&self, rhs: &Jet4) -> Jet4 {
        let tb = tables();
        let order = self.order.min(rhs.order);
        let mut coeffs = vec![0.0; term_count(order)];
        let n = tb.idx.len();
        for da in 0..=order {
            for ka in DEGREE_OFFSET[da]..DEGREE_OFFSET[da + 1] {
                let va = self.coeffs[ka];
                if va == 0.0 {
                    continue;
                }
                let row = ka * n;
                for kb in 0..DEGREE_OFFSET[order - da + 1] {
                    let vb = rhs.coeffs[kb];
                    if vb != 0.0 {
                        coeffs[tb.prod[row + kb] as usize] += va * vb;
                    }
                }
            }
        }
        Jet4 { order, coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet4 {
        Jet4 {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet4 {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    /// Univariate Taylor composition: `ders[k]` must hold f^(k)(g0)/k!.
    fn compose(&self, ders: &[f64]) -> Jet4 {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet4::constant(ders[self.order], self.order);
        for k in (0..self.order).rev() {
            acc = acc.mul_jet(&h).add_scalar(ders[k]);
        }
        acc
    }

    pub fn exp(&self) -> Jet4 {
        let e0 = self.value().exp();
        let mut ders = [0.0; MAX_ORDER + 1];
        let mut kfac = 1.0;
        for (k, d) in ders.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                kfac *= k as f64;
            }
            *d = e0 / kfac;
        }
        self.compose(&ders[..=self.order])
    }

    pub fn sin(&self) -> Jet4 {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet4 {
        self.sin_cos().1
    }

    pub fn sin_cos(&self) -> (Jet4, Jet4) {
        let (s0, c0) = self.value().sin_cos();
        let cycle = [s0, c0, -s0, -c0];
        let mut ds = [0.0; MAX_ORDER + 1];
        let mut dc = [0.0; MAX_ORDER + 1];
        let mut kfac = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                kfac *= k as f64;
            }
            ds[k] = cycle[k % 4] / kfac;
            dc[k] = cycle[(k + 1) % 4] / kfac;
        }
        (
            self.compose(&ds[..=self.order]),
            self.compose(&dc[..=self.order]),
        )
    }

    pub fn sqrt(&self) -> Result<Jet4> {
        let g0 = self.value();
        if g0 <= 0.0 {
            return Err(Error::Domain {
                what: "sqrt",
                value: g0,
            });
        }
        let mut ders = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        let mut kfac = 1.0;
        for (k, d) in ders.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                kfac *= k as f64;
            }
            *d = coef * g0.powf(0.5 - k as f64) / kfac;
            coef *= 0.5 - k as f64;
        }
        Ok(self.compose(&ders[..=self.order]))
    }

    pub fn recip(&self) -> Result<Jet4> {
        let g0 = self.value();
        if g0 == 0.0 {
            return Err(Error::Domain {
                what: "recip",
                value: g0,
            });
        }
        let mut ders = [0.0; MAX_ORDER + 1];
        let mut p = 1.0 / g0;
        for d in ders.iter_mut().take(self.order + 1) {
            *d = p;
            p *= -1.0 / g0;
        }
        Ok(self.compose(&ders[..=self.order]))
    }

    /// Integer power by repeated multiplication; negative exponents go
    /// through the reciprocal and require a nonzero constant term.
    pub fn powi(&self, n: i32) -> Result<Jet4> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet4::constant(1.0, self.order);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            base = base.mul_jet(&base);
            k >>= 1;
        }
        Ok(acc)
    }
}

/// Coordinate jets at a point: (t̂, x̂, ŷ, ẑ).
pub fn seed(point: [f64; 4], order: usize) -> Result<[Jet4; 4]> {
    if order > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "jet order {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok([
        Jet4::coordinate(point[0], T, order),
        Jet4::coordinate(point[1], X, order),
        Jet4::coordinate(point[2], Y, order),
        Jet4::coordinate(point[3], Z, order),
    ])
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:ident) => {
        impl<'b> $trait<&'b Jet4> for &Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &'b Jet4) -> Jet4 {
                self.$body(rhs)
            }
        }
        impl $trait<Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: Jet4) -> Jet4 {
                self.$body(&rhs)
            }
        }
        impl $trait<&Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &Jet4) -> Jet4 {
                self.$body(rhs)
            }
        }
        impl $trait<Jet4> for &Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: Jet4) -> Jet4 {
                self.$body(&rhs)
            }
        }
    };
}

impl Jet4 {
    fn add_jet(&self, rhs: &Jet4) -> Jet4 {
        self.binop(rhs, |a, b| a + b)
    }
    fn sub_jet(&self, rhs: &Jet4) -> Jet4 {
        self.binop(rhs, |a, b| a - b)
    }
}

forward_binop!(Add, add, add_jet);
forward_binop!(Sub, sub, sub_jet);
forward_binop!(Mul, mul, mul_jet);

impl Neg for &Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet4 {
    type Output = Jet4;
    fn mul(self, s: f64) -> Jet4 {
        self.scale(s)
    }
}

impl Mul<f64> for Jet4 {
    type Output = Jet4;
    fn mul(self, s: f64) -> Jet4 {
        self.scale(s)
    }
}
