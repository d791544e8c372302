//! Metric, coframe, Levi-Civita connection and Riemann curvature for the
//! Kähler-type line element built from any jet-evaluable potential.
//!
//! Curvature is computed along two independent routes: explicit component
//! formulas in terms of Psi = Q^{-1/2} and the auxiliary fields K, L, M, N,
//! and a direct evaluation of the Cartan structure equations
//! R^a_b = d omega^a_b + omega^a_c ^ omega^c_b from numerically derived
//! structure coefficients. Their agreement is the central cross-check.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::jets::{Jet4, T, X, Y, Z};
use crate::solution::{Point4, PotentialField};
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients (a, b, c, Q) of the line element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricComponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// Which route to use for the metric coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricPath {
    /// Second derivatives of (u, v) extracted from jets; works for any provider.
    FromJets,
    /// Straight scalar evaluation of the derived closed forms; exact-solution only.
    ClosedForm,
}

/// Which route to use for the Riemann tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    /// Explicit component formulas in Psi, K, L, M, N.
    ClosedForm,
    /// Cartan structure equations evaluated numerically.
    Cartan,
}

/// Orthonormal coframe, rows e^0..e^3 over the coordinate basis (dt,dx,dy,dz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coframe {
    pub e: [[f64; 4]; 4],
}

impl Coframe {
    /// g = e0 (x) e0 + e1 (x) e1 + eps (e2 (x) e2 + e3 (x) e3).
    pub fn reconstruct(&self, eps: f64) -> [[f64; 4]; 4] {
        let mut g = [[0.0; 4]; 4];
        for (a, row) in self.e.iter().enumerate() {
            let w = if a < 2 { 1.0 } else { eps };
            for m in 0..4 {
                for n in 0..4 {
                    g[m][n] += w * row[m] * row[n];
                }
            }
        }
        g
    }
}

/// Connection data at a point: Psi and its first derivatives, the auxiliary
/// fields K, L, M, N, the three independent connection 1-forms in frame
/// components, and the nonzero structure coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionForms {
    pub psi: f64,
    pub psi_t: f64,
    pub psi_x: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    /// Frame components along e^0..e^3.
    pub omega23: [f64; 4],
    pub omega31: [f64; 4],
    pub omega12: [f64; 4],
    /// c^a_{cd} for index pairs in the order (01, 02, 03, 23, 31, 12).
    pub struct_coeffs: [[f64; 6]; 4],
}

impl ConnectionForms {
    /// omega^0_1 = -omega^2_3 and cyclic partners.
    pub fn omega01(&self) -> [f64; 4] {
        self.omega23.map(|v| -v)
    }
    pub fn omega02(&self) -> [f64; 4] {
        self.omega31.map(|v| -v)
    }
    pub fn omega03(&self) -> [f64; 4] {
        self.omega12.map(|v| -v)
    }
}

/// Frame-index pairs used for 2-form components, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Structure-coefficient pair labels (01, 02, 03, 23, 31, 12).
const SPAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

/// Riemann curvature in frame components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    /// The 18 independent components: rows R^0_1, R^0_2, R^0_3 over [`PAIRS`].
    pub components: [[f64; 6]; 3],
    /// All six curvature 2-forms, rows (01, 02, 03, 12, 13, 23) over [`PAIRS`].
    pub forms: [[f64; 6]; 6],
    pub ricci: [[f64; 4]; 4],
    pub kretschmann: f64,
    /// Max relative residual of the three duality relations
    /// R01 + R23, R02 - R13, R03 + R12.
    pub duality: [f64; 3],
}

impl Curvature {
    /// Full frame tensor R^a_{bcd} rebuilt from the six 2-forms.
    pub fn full_tensor(&self) -> [[[[f64; 4]; 4]; 4]; 4] {
        let mut t = [[[[0.0; 4]; 4]; 4]; 4];
        for (row, &(i, j)) in PAIRS.iter().enumerate() {
            for (col, &(c, d)) in PAIRS.iter().enumerate() {
                let v = self.forms[row][col];
                t[i][j][c][d] = v;
                t[i][j][d][c] = -v;
                t[j][i][c][d] = -v;
                t[j][i][d][c] = v;
            }
        }
        t
    }

    pub fn ricci_max(&self) -> f64 {
        self.ricci
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn duality_max(&self) -> f64 {
        self.duality.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn component_scale(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Metric coefficients at a point via the requested path.
pub fn metric_components<F: PotentialField>(
    field: &F,
    p: Point4,
    path: MetricPath,
) -> Result<MetricComponents> {
    match path {
        MetricPath::FromJets => {
            let u = field.u_jet(p, 2)?;
            let v = field.v_jet(p, 1)?;
            let a = u.partial([0, 0, 2, 0])? + u.partial([0, 0, 0, 2])?;
            let b = u.partial([0, 1, 1, 0])? - v.partial([0, 0, 0, 1])?;
            let c = v.partial([0, 0, 1, 0])? + u.partial([0, 1, 0, 1])?;
            if a == 0.0 {
                return Err(Error::Domain {
                    what: "metric: a = 0",
                    value: a,
                });
            }
            let q = (b * b + c * c + field.epsilon()) / a;
            Ok(MetricComponents { a, b, c, q })
        }
        MetricPath::ClosedForm => match field.closed_form_abcq(p) {
            Some(r) => {
                let [a, b, c, q] = r?;
                Ok(MetricComponents { a, b, c, q })
            }
            None => Err(Error::UnsupportedPath(
                "closed-form metric coefficients are only available for the exact solution",
            )),
        },
    }
}

/// Symmetric 4x4 metric matrix in coordinates (t, x, y, z).
pub fn metric_matrix(mc: &MetricComponents) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    g[0][0] = mc.q;
    g[1][1] = mc.q;
    g[2][2] = mc.a;
    g[3][3] = mc.a;
    g[0][3] = -mc.b;
    g[3][0] = -mc.b;
    g[1][2] = mc.b;
    g[2][1] = mc.b;
    g[0][2] = mc.c;
    g[2][0] = mc.c;
    g[1][3] = mc.c;
    g[3][1] = mc.c;
    g
}

/// Signature of the metric as (positive, negative) eigenvalue counts.
pub fn metric_signature(mc: &MetricComponents) -> (usize, usize) {
    let g = metric_matrix(mc);
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    let eig = m.symmetric_eigenvalues();
    let pos = eig.iter().filter(|&&v| v > 0.0).count();
    let neg = eig.iter().filter(|&&v| v < 0.0).count();
    (pos, neg)
}

/// Orthonormal coframe from the metric coefficients; needs Q > 0.
pub fn coframe(mc: &MetricComponents) -> Result<Coframe> {
    if mc.q <= 0.0 {
        return Err(Error::FrameDomain { q: mc.q });
    }
    let sq = mc.q.sqrt();
    let isq = 1.0 / sq;
    Ok(Coframe {
        e: [
            [sq, 0.0, mc.c * isq, -mc.b * isq],
            [0.0, sq, mc.b * isq, mc.c * isq],
            [0.0, 0.0, isq, 0.0],
            [0.0, 0.0, 0.0, isq],
        ],
    })
}

/// Complex null coframe (Omega_1, Omega_2) over (dt, dx, dy, dz).
pub fn complex_coframe(mc: &MetricComponents) -> Result<[[Complex64; 4]; 2]> {
    if mc.q <= 0.0 {
        return Err(Error::FrameDomain { q: mc.q });
    }
    let sq = mc.q.sqrt();
    let isq = 1.0 / sq;
    let cb = Complex64::new(mc.c, mc.b);
    let i = Complex64::new(0.0, 1.0);
    let om1 = [Complex64::new(sq, 0.0), i * sq, cb * isq, i * cb * isq];
    let om2 = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(isq, 0.0),
        i * isq,
    ];
    Ok([om1, om2])
}

/// Hermitian reconstruction Re(Om1 (x) conj(Om1) + eps Om2 (x) conj(Om2)).
pub fn complex_reconstruct(frames: &[[Complex64; 4]; 2], eps: f64) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            g[m][n] = 0.5
                * (frames[0][m] * frames[0][n].conj()
                    + frames[0][n] * frames[0][m].conj()
                    + eps
                        * (frames[1][m] * frames[1][n].conj()
                            + frames[1][n] * frames[1][m].conj()))
                .re;
        }
    }
    g
}

struct FrameJets {
    /// b and c as order-2 jets.
    b: Jet4,
    c: Jet4,
    /// Psi = Q^{-1/2} and Psi^{-1} as order-2 jets.
    psi: Jet4,
    psi_inv: Jet4,
    /// Vielbein rows e^a_mu, order-2 jets.
    e: [[Jet4; 4]; 4],
    /// Inverse-frame components E_a^mu, order-2 jets.
    inv: [[Jet4; 4]; 4],
}

fn frame_jets<F: PotentialField>(field: &F, p: Point4) -> Result<FrameJets> {
    if field.epsilon() != 1.0 {
        return Err(Error::EpsilonUnsupported {
            eps: field.epsilon() as i8,
        });
    }
    let u = field.u_jet(p, 4)?;
    let v = field.v_jet(p, 3)?;
    let a = u.laplace_yz();
    if a.value() == 0.0 {
        return Err(Error::Domain {
            what: "frame: a = 0",
            value: 0.0,
        });
    }
    let b = &u.deriv(X).deriv(Y) - &v.deriv(Z);
    let c = &v.deriv(Y) + &u.deriv(X).deriv(Z);
    let q = (&(&b * &b) + &(&c * &c)).add_scalar(field.epsilon()) * a.recip()?;
    if q.value() <= 0.0 {
        return Err(Error::FrameDomain { q: q.value() });
    }
    let psi_inv = q.sqrt()?;
    let psi = psi_inv.recip()?;
    let zero = Jet4::zero(2);
    let e = [
        [
            psi_inv.clone(),
            zero.clone(),
            &psi * &c,
            (&psi * &b).scale(-1.0),
        ],
        [zero.clone(), psi_inv.clone(), &psi * &b, &psi * &c],
        [zero.clone(), zero.clone(), psi.clone(), zero.clone()],
        [zero.clone(), zero.clone(), zero.clone(), psi.clone()],
    ];
    let inv = [
        [psi.clone(), zero.clone(), zero.clone(), zero.clone()],
        [zero.clone(), psi.clone(), zero.clone(), zero.clone()],
        [
            (&c * &psi).scale(-1.0),
            (&b * &psi).scale(-1.0),
            psi_inv.clone(),
            zero.clone(),
        ],
        [
            &b * &psi,
            (&c * &psi).scale(-1.0),
            zero.clone(),
            psi_inv.clone(),
        ],
    ];
    Ok(FrameJets {
        b,
        c,
        psi,
        psi_inv,
        e,
        inv,
    })
}

/// Structure coefficients c^a_{cd} as order-1 jets over [`SPAIRS`].
fn struct_coeff_jets(fj: &FrameJets) -> [[Jet4; 6]; 4] {
    // de^a_{mu nu} = d_mu e^a_nu - d_nu e^a_mu, order-1 jets
    std::array::from_fn(|a| {
        let de: [[Jet4; 4]; 4] = std::array::from_fn(|m| {
            std::array::from_fn(|n| &fj.e[a][n].deriv(m) - &fj.e[a][m].deriv(n))
        });
        std::array::from_fn(|k| {
            let (ci, di) = SPAIRS[k];
            let mut acc = Jet4::zero(1);
            for m in 0..4 {
                for n in 0..4 {
                    if m == n {
                        continue;
                    }
                    acc = &acc
                        + &(&de[m][n].truncate(1)
                            * &(&fj.inv[ci][m].truncate(1) * &fj.inv[di][n].truncate(1)));
                }
            }
            acc
        })
    })
}

/// Connection 1-forms via the torsion-free solution of the structure
/// equations, as order-1 jets of frame coefficients. Row order:
/// omega^0_1, omega^0_2, omega^0_3, omega^2_3, omega^3_1, omega^1_2.
fn omega_jets(cc: &[[Jet4; 6]; 4]) -> [[Jet4; 4]; 6] {
    // structure-coefficient columns: 0 -> (01), 1 -> (02), 2 -> (03),
    // 3 -> (23), 4 -> (31), 5 -> (12)
    let c = |a: usize, k: usize| &cc[a][k];
    let half = 0.5;
    [
        [
            -c(0, 0),
            -c(1, 0),
            (&(c(0, 5) - c(1, 1)) - c(2, 0)).scale(half),
            (&(c(0, 4) + c(3, 0)) + c(1, 2)).scale(-half),
        ],
        [
            -c(0, 1),
            (&(c(0, 5) + c(1, 1)) + c(2, 0)).scale(-half),
            -c(2, 1),
            (&(c(0, 3) - c(2, 2)) - c(3, 1)).scale(half),
        ],
        [
            -c(0, 2),
            (&(c(0, 4) - c(3, 0)) - c(1, 2)).scale(half),
            (&(c(0, 3) + c(2, 2)) + c(3, 1)).scale(-half),
            -c(3, 2),
        ],
        [
            (&(c(3, 1) - c(0, 3)) - c(2, 2)).scale(half),
            (&(c(2, 4) + c(3, 5)) - c(1, 3)).scale(half),
            -c(2, 3),
            -c(3, 3),
        ],
        [
            (&(c(1, 2) - c(0, 4)) - c(3, 0)).scale(half),
            -c(1, 4),
            (&(c(3, 5) + c(1, 3)) - c(2, 4)).scale(half),
            -c(3, 4),
        ],
        [
            (&(c(2, 0) - c(0, 5)) - c(1, 1)).scale(half),
            -c(1, 5),
            -c(2, 5),
            (&(c(1, 3) + c(2, 4)) - c(3, 5)).scale(half),
        ],
    ]
}

/// Closed-form K, L, M, N as order-1 jets.
fn klmn_jets(fj: &FrameJets) -> [Jet4; 4] {
    let psi_t = fj.psi.deriv(T);
    let psi_x = fj.psi.deriv(X);
    let b1 = fj.b.truncate(1);
    let c1 = fj.c.truncate(1);
    let k = &(&fj.b * &fj.psi).deriv(T) + &(&(&c1 * &psi_x) + &fj.psi_inv.deriv(Z));
    let l = &(&fj.c * &fj.psi).deriv(T) - &(&(&b1 * &psi_x) + &fj.psi_inv.deriv(Y));
    let m = &(&(&b1 * &psi_t) - &(&c1 * &psi_x)) - &fj.psi_inv.deriv(Z);
    let n = &(&(&c1 * &psi_t) + &(&b1 * &psi_x)) + &fj.psi_inv.deriv(Y);
    [k, l, m, n]
}

/// Connection data: Psi, K, L, M, N, the closed-form 1-forms and the
/// numerically derived structure coefficients.
pub fn connection<F: PotentialField>(field: &F, p: Point4) -> Result<ConnectionForms> {
    let fj = frame_jets(field, p)?;
    let cc = struct_coeff_jets(&fj);
    let [k, l, m, n] = klmn_jets(&fj);
    let psi_t = fj.psi.partial([1, 0, 0, 0])?;
    let psi_x = fj.psi.partial([0, 1, 0, 0])?;
    let (kv, lv, mv, nv) = (k.value(), l.value(), m.value(), n.value());
    let struct_coeffs = std::array::from_fn(|a| std::array::from_fn(|kk| cc[a][kk].value()));
    Ok(ConnectionForms {
        psi: fj.psi.value(),
        psi_t,
        psi_x,
        k: kv,
        l: lv,
        m: mv,
        n: nv,
        omega23: [psi_x, -psi_t, mv, nv],
        omega31: [lv, kv, psi_t, psi_x],
        omega12: [-kv, lv, -psi_x, psi_t],
        struct_coeffs,
    })
}

/// Coordinate components of the six connection forms, order-1 jets.
fn omega_coord_jets(fj: &FrameJets, om: &[[Jet4; 4]; 6]) -> [[Jet4; 4]; 6] {
    std::array::from_fn(|row| {
        std::array::from_fn(|mu| {
            let mut acc = Jet4::zero(1);
            for a in 0..4 {
                acc = &acc + &(&om[row][a] * &fj.e[a][mu].truncate(1));
            }
            acc
        })
    })
}

/// Full antisymmetric matrix W[i][j] of coordinate 1-form jets from the six
/// independent forms (row order omega01, omega02, omega03, omega23,
/// omega31, omega12).
fn omega_matrix(omc: &[[Jet4; 4]; 6]) -> [[[Jet4; 4]; 4]; 4] {
    let zero: [Jet4; 4] = std::array::from_fn(|_| Jet4::zero(1));
    let neg = |row: &[Jet4; 4]| -> [Jet4; 4] { std::array::from_fn(|m| -&row[m]) };
    let mut w: [[[Jet4; 4]; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
    let assign = |w: &mut [[[Jet4; 4]; 4]; 4], i: usize, j: usize, v: &[Jet4; 4]| {
        w[i][j] = v.clone();
        w[j][i] = neg(v);
    };
    assign(&mut w, 0, 1, &omc[0]);
    assign(&mut w, 0, 2, &omc[1]);
    assign(&mut w, 0, 3, &omc[2]);
    assign(&mut w, 2, 3, &omc[3]);
    assign(&mut w, 3, 1, &omc[4]);
    assign(&mut w, 1, 2, &omc[5]);
    w
}

/// Torsion residuals: max |de^a + omega^a_b ^ e^b| per frame index, scaled
/// by the largest contributing term.
pub fn torsion_residual<F: PotentialField>(field: &F, p: Point4) -> Result<[f64; 4]> {
    let fj = frame_jets(field, p)?;
    let cc = struct_coeff_jets(&fj);
    let om = omega_jets(&cc);
    let omc = omega_coord_jets(&fj, &om);
    let w = omega_matrix(&omc);
    let mut out = [0.0; 4];
    for a in 0..4 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for m in 0..4 {
            for n in (m + 1)..4 {
                let de = fj.e[a][n].partial_at(m) - fj.e[a][m].partial_at(n);
                let mut wedge = 0.0;
                for b in 0..4 {
                    wedge += w[a][b][m].value() * fj.e[b][n].value()
                        - w[a][b][n].value() * fj.e[b][m].value();
                }
                worst = worst.max((de + wedge).abs());
                scale = scale.max(de.abs()).max(wedge.abs());
            }
        }
        out[a] = worst / scale.max(1e-30);
    }
    Ok(out)
}

fn ricci_and_kretschmann(forms: &[[f64; 6]; 6]) -> ([[f64; 4]; 4], f64) {
    let mut t = [[[[0.0; 4]; 4]; 4]; 4];
    for (row, &(i, j)) in PAIRS.iter().enumerate() {
        for (col, &(c, d)) in PAIRS.iter().enumerate() {
            let v = forms[row][col];
            t[i][j][c][d] = v;
            t[i][j][d][c] = -v;
            t[j][i][c][d] = -v;
            t[j][i][d][c] = v;
        }
    }
    let mut ric = [[0.0; 4]; 4];
    for b in 0..4 {
        for d in 0..4 {
            ric[b][d] = (0..4).map(|a| t[a][b][a][d]).sum();
        }
    }
    let mut kret = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    kret += t[i][j][c][d] * t[i][j][c][d];
                }
            }
        }
    }
    (ric, kret)
}

fn duality_residuals(forms: &[[f64; 6]; 6]) -> [f64; 3] {
    // rows: 0 -> R01, 1 -> R02, 2 -> R03, 3 -> R12, 4 -> R13, 5 -> R23
    let scale = forms
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-30);
    let mut out = [0.0f64; 3];
    for col in 0..6 {
        out[0] = out[0].max((forms[0][col] + forms[5][col]).abs() / scale);
        out[1] = out[1].max((forms[1][col] - forms[4][col]).abs() / scale);
        out[2] = out[2].max((forms[2][col] + forms[3][col]).abs() / scale);
    }
    out
}

/// Riemann curvature by the requested method.
pub fn riemann<F: PotentialField>(
    field: &F,
    p: Point4,
    method: CurvatureMethod,
) -> Result<Curvature> {
    let fj = frame_jets(field, p)?;
    let forms = match method {
        CurvatureMethod::Cartan => cartan_forms(&fj)?,
        CurvatureMethod::ClosedForm => closed_form_forms(&fj)?,
    };
    let components = [forms[0], forms[1], forms[2]];
    let (ricci, kretschmann) = ricci_and_kretschmann(&forms);
    let duality = duality_residuals(&forms);
    Ok(Curvature {
        components,
        forms,
        ricci,
        kretschmann,
        duality,
    })
}

/// All six curvature 2-forms from d omega + omega ^ omega.
fn cartan_forms(fj: &FrameJets) -> Result<[[f64; 6]; 6]> {
    let cc = struct_coeff_jets(fj);
    let om = omega_jets(&cc);
    let omc = omega_coord_jets(fj, &om);
    let w = omega_matrix(&omc);
    let inv: [[f64; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|m| fj.inv[a][m].value()));
    let rows = [(0usize, 1usize), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut out = [[0.0; 6]; 6];
    for (ri, &(i, j)) in rows.iter().enumerate() {
        // coordinate 2-form components R_{mu nu}
        let mut rc = [[0.0; 4]; 4];
        for m in 0..4 {
            for n in 0..4 {
                let mut val = w[i][j][n].partial_at(m) - w[i][j][m].partial_at(n);
                for k in 0..4 {
                    val += w[i][k][m].value() * w[k][j][n].value()
                        - w[i][k][n].value() * w[k][j][m].value();
                }
                rc[m][n] = val;
            }
        }
        for (ci, &(c, d)) in PAIRS.iter().enumerate() {
            let mut s = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    s += rc[m][n] * inv[c][m] * inv[d][n];
                }
            }
            out[ri][ci] = s;
        }
    }
    Ok(out)
}

/// The 18 components from the explicit formulas, completed to all six forms
/// by the duality relations R23 = -R01, R13 = R02, R12 = -R03.
fn closed_form_forms(fj: &FrameJets) -> Result<[[f64; 6]; 6]> {
    let psi = &fj.psi;
    let pv = psi.value();
    let ip = 1.0 / pv;
    let pt = psi.partial([1, 0, 0, 0])?;
    let px = psi.partial([0, 1, 0, 0])?;
    let ptt = psi.partial([2, 0, 0, 0])?;
    let ptx = psi.partial([1, 1, 0, 0])?;
    let pxx = psi.partial([0, 2, 0, 0])?;
    let pty = psi.partial([1, 0, 1, 0])?;
    let ptz = psi.partial([1, 0, 0, 1])?;
    let pxy = psi.partial([0, 1, 1, 0])?;
    let pxz = psi.partial([0, 1, 0, 1])?;
    let [kj, lj, mj, nj] = klmn_jets(fj);
    let (k, l, m, n) = (kj.value(), lj.value(), mj.value(), nj.value());
    let kt = kj.partial_at(T);
    let kx = kj.partial_at(X);
    let ky = kj.partial_at(Y);
    let kz = kj.partial_at(Z);
    let lt = lj.partial_at(T);
    let lx = lj.partial_at(X);
    let ly = lj.partial_at(Y);
    let lz = lj.partial_at(Z);
    let mt = mj.partial_at(T);
    let mx = mj.partial_at(X);
    let mz = mj.partial_at(Z);
    let nt = nj.partial_at(T);
    let nx = nj.partial_at(X);
    let ny = nj.partial_at(Y);
    let b = fj.b.value();
    let c = fj.c.value();

    let r01 = [
        ptt * pv - pt * pt + pxx * pv - px * px + 2.0 * (k * k + l * l),
        ip * pxy - pv * (ptx * c + pxx * b + mt) + 3.0 * (pt * k - px * l),
        ip * pxz + pv * (ptx * b - pxx * c - nt) + 3.0 * (pt * l + px * k),
        -(ip * pty) + pv * (ptx * b + ptt * c - mx) - 3.0 * (pt * l + px * k),
        -(ip * ptz + pv * (ptt * b - ptx * c + nx) - 3.0 * (pt * k - px * l)),
        ip * (mz - ny)
            + pv * (b * (mt + nx) + c * (nt - mx))
            + m * m
            + n * n
            + 4.0 * (pt * pt + px * px),
    ];
    let r02 = [
        pv * (lx - kt) + 3.0 * (pt * k - px * l),
        ip * ly - pv * (c * lt + b * lx) - (k * k + l * l + 3.0 * k * m) - ptt * pv - pt * pt
            + 2.0 * px * px,
        ip * lz + pv * (b * lt - c * lx) - 3.0 * (pt * px + k * n) - ptx * pv,
        ip * ky - pv * (c * kt + b * kx) - 3.0 * (pt * px - l * m) - ptx * pv,
        ip * kz + pv * (b * kt - c * kx) - k * k - l * l + 3.0 * l * n - pxx * pv - px * px
            + 2.0 * pt * pt,
        ip * (ptz - pxy) + b * pv * (ptt + pxx) + 2.0 * (px * l - pt * k) - pt * m - px * n,
    ];
    let r03 = [
        -pv * (kx + lt) + 3.0 * (px * k + pt * l),
        -(ip * ky) + pv * (c * kt + b * kx) + pv * ptx + 3.0 * (pt * px - l * m),
        -(ip * kz) - pv * (b * kt - c * kx) - k * k - l * l - 3.0 * l * n - pv * ptt - pt * pt
            + 2.0 * px * px,
        ip * ly - pv * (c * lt + b * lx) + k * k + l * l - 3.0 * k * m + pv * pxx + px * px
            - 2.0 * pt * pt,
        ip * lz + pv * (b * lt - c * lx) - pv * ptx - 3.0 * (pt * px + k * n),
        -(ip * (pxz + pty)) + c * pv * (ptt + pxx) - 2.0 * (px * k + pt * l) + px * m - pt * n,
    ];
    let neg = |r: &[f64; 6]| -> [f64; 6] { r.map(|v| -v) };
    Ok([r01, r02, r03, neg(&r03), r02, neg(&r01)])
}

/// Per-point observables for scans.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub kretschmann: f64,
    pub ricci_max: f64,
    pub duality_max: f64,
}

/// Metric and curvature observables at one point (Cartan route).
pub fn scan_observables<F: PotentialField>(field: &F, p: Point4) -> Result<ScanRow> {
    let mc = metric_components(field, p, MetricPath::FromJets)?;
    let cur = riemann(field, p, CurvatureMethod::Cartan)?;
    Ok(ScanRow {
        a: mc.a,
        b: mc.b,
        c: mc.c,
        q: mc.q,
        kretschmann: cur.kretschmann,
        ricci_max: cur.ricci_max(),
        duality_max: cur.duality_max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::halton_points;
    use crate::solution::{FlatPotential, Params, SolutionField};

    const P0: Point4 = Point4 {
        t: 0.1,
        x: 1.0,
        y: 0.2,
        z: -0.3,
    };
    // frozen by an independent high-precision run
    #[allow(clippy::excessive_precision)]
    const KRETSCHMANN_P0: f64 = 65.868855723721048154;

    #[test]
    fn flat_metric_is_euclidean() {
        let flat = FlatPotential { eps: 1 };
        let mc = metric_components(&flat, P0, MetricPath::FromJets).unwrap();
        assert_eq!((mc.a, mc.b, mc.c, mc.q), (1.0, 0.0, 0.0, 1.0));
        let g = metric_matrix(&mc);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        let cf = coframe(&mc).unwrap();
        for (a, row) in cf.e.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                assert_eq!(*v, if a == m { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn flat_connection_and_curvature_vanish() {
        let flat = FlatPotential { eps: 1 };
        let conn = connection(&flat, P0).unwrap();
        assert_eq!((conn.k, conn.l, conn.m, conn.n), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(conn.omega23, [0.0; 4]);
        for t in torsion_residual(&flat, P0).unwrap() {
            assert_eq!(t, 0.0);
        }
        for method in [CurvatureMethod::Cartan, CurvatureMethod::ClosedForm] {
            let cur = riemann(&flat, P0, method).unwrap();
            assert_eq!(cur.kretschmann, 0.0);
            assert_eq!(cur.ricci_max(), 0.0);
            assert_eq!(cur.component_scale(), 0.0);
        }
    }

    #[test]
    fn closed_form_path_rejected_for_flat() {
        let flat = FlatPotential { eps: 1 };
        match metric_components(&flat, P0, MetricPath::ClosedForm) {
            Err(Error::UnsupportedPath(_)) => {}
            other => panic!("expected unsupported-path error, got {other:?}"),
        }
    }

    #[test]
    fn metric_paths_agree_for_exact_solution() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 5, 60) {
            let jets = metric_components(&field, p, MetricPath::FromJets).unwrap();
            let closed = metric_components(&field, p, MetricPath::ClosedForm).unwrap();
            for (x, y) in [
                (jets.a, closed.a),
                (jets.b, closed.b),
                (jets.c, closed.c),
                (jets.q, closed.q),
            ] {
                assert!(
                    (x - y).abs() <= 1e-10 * x.abs().max(1e-10),
                    "{x} vs {y} at {p:?}"
                );
            }
            // definition of Q
            let lhs = jets.q * jets.a - (jets.b * jets.b + jets.c * jets.c + 1.0);
            assert!(lhs.abs() <= 1e-11 * jets.q.abs().max(1.0));
        }
    }

    #[test]
    fn euclidean_signature_on_certified_box() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 9, 40) {
            let mc = metric_components(&field, p, MetricPath::FromJets).unwrap();
            assert_eq!(metric_signature(&mc), (4, 0), "at {p:?}");
        }
    }

    #[test]
    fn neutral_signature_with_flipped_branch() {
        // with these constants b^2 + c^2 > 1 on the box, so the positive
        // branch keeps Q > 0 for eps = -1 as well
        let params = Params {
            eps: -1,
            ..Params::canonical()
        };
        let field = SolutionField::new(&params);
        let p = Point4::new(0.1, 1.0, 0.1, -0.1);
        let mc = metric_components(&field, p, MetricPath::FromJets).unwrap();
        assert!(mc.q > 0.0 && mc.a > 0.0);
        assert_eq!(metric_signature(&mc), (2, 2));
        // coframe still exists and reconstructs with eps = -1
        let cf = coframe(&mc).unwrap();
        let g = cf.reconstruct(-1.0);
        let gm = metric_matrix(&mc);
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[i][j] - gm[i][j]).abs() <= 1e-12 * gm[i][j].abs().max(1.0));
            }
        }
        // connection/curvature are Euclidean-only
        match connection(&field, p) {
            Err(Error::EpsilonUnsupported { eps }) => assert_eq!(eps, -1),
            other => panic!("expected epsilon error, got {other:?}"),
        }
    }

    #[test]
    fn coframe_reconstruction_on_probes() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 2, 50) {
            let mc = metric_components(&field, p, MetricPath::FromJets).unwrap();
            let cf = coframe(&mc).unwrap();
            let g = cf.reconstruct(1.0);
            let gm = metric_matrix(&mc);
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (g[i][j] - gm[i][j]).abs() <= 1e-12 * gm[i][j].abs().max(1.0),
                        "entry ({i},{j}) at {p:?}"
                    );
                }
            }
            let frames = complex_coframe(&mc).unwrap();
            let gc = complex_reconstruct(&frames, 1.0);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((gc[i][j] - gm[i][j]).abs() <= 1e-11 * gm[i][j].abs().max(1.0));
                }
            }
            // second complex frame is (dy + i dz)/sqrt(Q)
            let isq = 1.0 / mc.q.sqrt();
            assert_eq!(frames[1][2].re, isq);
            assert_eq!(frames[1][3].im, isq);
        }
    }

    #[test]
    fn structure_coefficients_match_closed_forms() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 4, 25) {
            let conn = connection(&field, p).unwrap();
            // c^0_{23} = -2 Psi_x (column 3) and c^1_{23} = 2 Psi_t
            let c023 = conn.struct_coeffs[0][3];
            let c123 = conn.struct_coeffs[1][3];
            assert!((c023 + 2.0 * conn.psi_x).abs() <= 1e-10 * conn.psi_x.abs().max(1e-6));
            assert!((c123 - 2.0 * conn.psi_t).abs() <= 1e-10 * conn.psi_t.abs().max(1e-6));
            // full closed-form table of nonzero coefficients
            let fjt = frame_jets(&field, p).unwrap();
            let bpsix = (&fjt.b * &fjt.psi).deriv(X).value() + fjt.b.value() * conn.psi_x;
            let cpsix = (&fjt.c * &fjt.psi).deriv(X).value() + fjt.c.value() * conn.psi_x;
            let bpsit = (&fjt.b * &fjt.psi).deriv(T).value() + fjt.b.value() * conn.psi_t;
            let cpsit = (&fjt.c * &fjt.psi).deriv(T).value() + fjt.c.value() * conn.psi_t;
            let expect: [[f64; 6]; 4] = [
                [conn.psi_x, conn.l, -conn.k, -2.0 * conn.psi_x, bpsix, cpsix],
                [
                    -conn.psi_t,
                    bpsit,
                    cpsit,
                    2.0 * conn.psi_t,
                    -conn.k,
                    -conn.l,
                ],
                [0.0, conn.psi_t, 0.0, -conn.m, 0.0, conn.psi_x],
                [0.0, 0.0, conn.psi_t, -conn.n, -conn.psi_x, 0.0],
            ];
            let scale = expect.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for a in 0..4 {
                for k in 0..6 {
                    assert!(
                        (conn.struct_coeffs[a][k] - expect[a][k]).abs() <= 1e-9 * scale,
                        "c[{a}][{k}] at {p:?}: {} vs {}",
                        conn.struct_coeffs[a][k],
                        expect[a][k]
                    );
                }
            }
        }
    }

    #[test]
    fn omega_dual_pairs_are_exact_by_construction() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        let conn = connection(&field, P0).unwrap();
        for i in 0..4 {
            assert_eq!(conn.omega01()[i], -conn.omega23[i]);
            assert_eq!(conn.omega02()[i], -conn.omega31[i]);
            assert_eq!(conn.omega03()[i], -conn.omega12[i]);
        }
    }

    #[test]
    fn derived_connection_matches_closed_form() {
        // the torsion-free solution of the structure equations must reproduce
        // the closed-form frame coefficients of the three independent forms
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 6, 25) {
            let fj = frame_jets(&field, p).unwrap();
            let cc = struct_coeff_jets(&fj);
            let om = omega_jets(&cc);
            let conn = connection(&field, p).unwrap();
            let refs = [conn.omega23, conn.omega31, conn.omega12];
            let scale = refs
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-6);
            for (row, want) in [3usize, 4, 5].iter().zip(refs) {
                for i in 0..4 {
                    let got = om[*row][i].value();
                    assert!(
                        (got - want[i]).abs() <= 1e-9 * scale,
                        "row {row} comp {i} at {p:?}"
                    );
                }
            }
            // and the duals
            for (row, want) in [0usize, 1, 2].iter().zip(refs) {
                for i in 0..4 {
                    let got = om[*row][i].value();
                    assert!((got + want[i]).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn torsion_vanishes_for_exact_solution() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 8, 40) {
            for r in torsion_residual(&field, p).unwrap() {
                assert!(r <= 1e-9, "torsion {r} at {p:?}");
            }
        }
    }

    #[test]
    fn spoiled_connection_breaks_torsion() {
        // bump K in the closed-form omega coefficients and re-evaluate the
        // structure equation: the residual detector must fire.
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        let fj = frame_jets(&field, P0).unwrap();
        let conn = connection(&field, P0).unwrap();
        let bump = 0.1;
        let omega23 = conn.omega23;
        let omega31 = [conn.l, conn.k + bump, conn.psi_t, conn.psi_x];
        let omega12 = [-(conn.k + bump), conn.l, -conn.psi_x, conn.psi_t];
        let rows = [
            omega23.map(|v| -v),
            omega31.map(|v| -v),
            omega12.map(|v| -v),
            omega23,
            omega31,
            omega12,
        ];
        // coordinate components (values suffice for the wedge part)
        let e: [[f64; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|m| fj.e[a][m].value()));
        let omc: [[f64; 4]; 6] = std::array::from_fn(|row| {
            std::array::from_fn(|mu| (0..4).map(|a| rows[row][a] * e[a][mu]).sum())
        });
        let mut w = [[[0.0f64; 4]; 4]; 4];
        let pairs = [
            (0, 1, 0),
            (0, 2, 1),
            (0, 3, 2),
            (2, 3, 3),
            (3, 1, 4),
            (1, 2, 5),
        ];
        for &(i, j, r) in &pairs {
            for m in 0..4 {
                w[i][j][m] = omc[r][m];
                w[j][i][m] = -omc[r][m];
            }
        }
        let mut worst = 0.0f64;
        for a in 0..4 {
            for m in 0..4 {
                for n in (m + 1)..4 {
                    let de = fj.e[a][n].partial_at(m) - fj.e[a][m].partial_at(n);
                    let mut wedge = 0.0;
                    for b in 0..4 {
                        wedge += w[a][b][m] * e[b][n] - w[a][b][n] * e[b][m];
                    }
                    worst = worst.max((de + wedge).abs());
                }
            }
        }
        assert!(worst > 1e-3, "spoiled connection not detected: {worst}");
    }

    #[test]
    fn curvature_paths_agree() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 3, 25) {
            let cf = riemann(&field, p, CurvatureMethod::ClosedForm).unwrap();
            let ca = riemann(&field, p, CurvatureMethod::Cartan).unwrap();
            let scale = cf.component_scale().max(1e-12);
            for r in 0..3 {
                for c in 0..6 {
                    let d = (cf.components[r][c] - ca.components[r][c]).abs();
                    assert!(d / scale <= 1e-8, "component ({r},{c}) at {p:?}: diff {d}");
                }
            }
        }
    }

    #[test]
    fn curvature_is_ricci_flat_and_dual() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 13, 25) {
            let cur = riemann(&field, p, CurvatureMethod::Cartan).unwrap();
            let scale = cur.kretschmann.sqrt().max(1e-12);
            assert!(cur.ricci_max() / scale <= 1e-8, "ricci at {p:?}");
            assert!(cur.duality_max() <= 1e-9, "duality at {p:?}");
        }
    }

    #[test]
    fn bianchi_and_pair_symmetry() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        for p in halton_points(&Params::canonical_box(), 17, 15) {
            let cur = riemann(&field, p, CurvatureMethod::Cartan).unwrap();
            let t = cur.full_tensor();
            let scale = cur.component_scale().max(1e-12);
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            let cyc = t[a][b][c][d] + t[a][c][d][b] + t[a][d][b][c];
                            assert!(cyc.abs() / scale <= 1e-9, "bianchi at {p:?}");
                            let pair = t[a][b][c][d] - t[c][d][a][b];
                            assert!(pair.abs() / scale <= 1e-9, "pair symmetry at {p:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kretschmann_matches_frozen_value() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        let cur = riemann(&field, P0, CurvatureMethod::Cartan).unwrap();
        assert!(
            (cur.kretschmann - KRETSCHMANN_P0).abs() <= 1e-9 * KRETSCHMANN_P0,
            "kretschmann {} vs {}",
            cur.kretschmann,
            KRETSCHMANN_P0
        );
    }

    #[test]
    fn scan_row_collects_observables() {
        let params = Params::canonical();
        let field = SolutionField::new(&params);
        let row = scan_observables(&field, P0).unwrap();
        assert!(row.kretschmann > 0.0);
        assert!(row.ricci_max < 1e-7);
        assert!(row.q > 0.0 && row.a > 0.0);
    }
}
