//! Point-symmetry (Killing vector) detection by an SVD rank test, and a
//! periodic-grid realization of the two nonlocal symmetry flows with an
//! iterative Poisson solver for the inverse 2D Laplacian.

use crate::error::{Error, Result};
use crate::sampling::{halton_points, Box4};
use crate::solution::{Point4, PotentialField};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Harmonic polynomial bases alpha_k(t, x) and beta_k(y, z) up to a degree
/// cap, built from real and imaginary parts of (t + i x)^n and (y + i z)^n.
///
/// The constant function appears once, on the alpha side only: a constant
/// beta generates the same shift of u as a constant alpha, and keeping both
/// would put an exact null direction into every assembled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub degree: usize,
}

/// Powers (re, im) of (u + i v)^n for n = 0..=nmax.
fn complex_powers(u: f64, v: f64, nmax: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nmax + 1);
    let (mut re, mut im) = (1.0, 0.0);
    out.push((re, im));
    for _ in 0..nmax {
        let nre = re * u - im * v;
        im = re * v + im * u;
        re = nre;
        out.push((re, im));
    }
    out
}

impl HarmonicBasis {
    pub fn new(degree: usize) -> HarmonicBasis {
        HarmonicBasis { degree }
    }

    /// Number of alpha(t, x) basis functions: constant + Re/Im pairs.
    pub fn alpha_count(&self) -> usize {
        2 * self.degree + 1
    }

    /// Number of beta(y, z) basis functions (no constant).
    pub fn beta_count(&self) -> usize {
        2 * self.degree
    }

    /// Values of all alpha basis functions and their t-derivatives.
    pub fn alpha_values(&self, t: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
        let pw = complex_powers(t, x, self.degree);
        let mut vals = Vec::with_capacity(self.alpha_count());
        let mut dts = Vec::with_capacity(self.alpha_count());
        vals.push(1.0);
        dts.push(0.0);
        for n in 1..=self.degree {
            let (re, im) = pw[n];
            let (rem1, imm1) = pw[n - 1];
            vals.push(re);
            dts.push(n as f64 * rem1);
            vals.push(im);
            dts.push(n as f64 * imm1);
        }
        (vals, dts)
    }

    /// Values of all beta basis functions.
    pub fn beta_values(&self, y: f64, z: f64) -> Vec<f64> {
        let pw = complex_powers(y, z, self.degree);
        let mut vals = Vec::with_capacity(self.beta_count());
        for &(re, im) in pw.iter().skip(1) {
            vals.push(re);
            vals.push(im);
        }
        vals
    }
}

/// Number of unknowns of the invariance system for a basis.
pub fn killing_unknowns(basis: &HarmonicBasis) -> usize {
    8 + basis.alpha_count() + basis.beta_count()
}

/// Assemble the homogeneous linear system for point-symmetry invariance of
/// the solution surface (u, v) = (F, F_t): two rows per sample point, one
/// column per generator coefficient.
pub fn killing_system<F: PotentialField>(
    field: &F,
    points: &[Point4],
    basis: &HarmonicBasis,
) -> Result<DMatrix<f64>> {
    let ncols = killing_unknowns(basis);
    let nrows = 2 * points.len();
    if nrows < ncols + 8 {
        return Err(Error::Parameter(format!(
            "need at least {} sample points for {ncols} unknowns, got {}",
            ncols.div_ceil(2) + 4,
            points.len()
        )));
    }
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&p| -> Result<Vec<f64>> {
            let j = field.u_jet(p, 2)?;
            let f = j.value();
            let ft = j.partial([1, 0, 0, 0])?;
            let fx = j.partial([0, 1, 0, 0])?;
            let fy = j.partial([0, 0, 1, 0])?;
            let fz = j.partial([0, 0, 0, 1])?;
            let ftt = j.partial([2, 0, 0, 0])?;
            let ftx = j.partial([1, 1, 0, 0])?;
            let fty = j.partial([1, 0, 1, 0])?;
            let ftz = j.partial([1, 0, 0, 1])?;
            let (t, x, y, z) = (p.t, p.x, p.y, p.z);
            let (avals, adts) = basis.alpha_values(t, x);
            let bvals = basis.beta_values(y, z);

            let mut r1 = Vec::with_capacity(2 * ncols);
            r1.extend_from_slice(&[
                -t * z,
                -(t * y - x * z),
                t * ft + x * fx - f,
                y * fy + z * fz - f,
                ft,
                fx,
                fy,
                fz,
            ]);
            r1.extend(avals.iter().map(|a| -a));
            r1.extend(bvals.iter().map(|b| -b));
            r1.extend_from_slice(&[
                -z,
                -y,
                t * ftt + x * ftx,
                y * fty + z * ftz - ft,
                ftt,
                ftx,
                fty,
                ftz,
            ]);
            r1.extend(adts.iter().map(|a| -a));
            r1.extend(std::iter::repeat_n(0.0, bvals.len()));
            Ok(r1)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::zeros(nrows, ncols);
    for (k, pair) in rows.iter().enumerate() {
        for c in 0..ncols {
            m[(2 * k, c)] = pair[c];
            m[(2 * k + 1, c)] = pair[ncols + c];
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Noninvariant,
    Inconclusive,
}

/// Outcome of the SVD rank test on the invariance system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KillingTestReport {
    pub n_unknowns: usize,
    pub n_rows: usize,
    /// Descending singular values of the column-normalized system.
    pub singular_values: Vec<f64>,
    pub smallest_rel: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub basis_degree: usize,
    pub n_points: usize,
    pub seed: u64,
}

/// Sample the box, assemble the invariance system, column-normalize it and
/// decide noninvariance from sigma_min / sigma_max.
pub fn noninvariance_test<F: PotentialField>(
    field: &F,
    bx: &Box4,
    n_points: usize,
    basis_degree: usize,
    threshold: f64,
    seed: u64,
) -> Result<KillingTestReport> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Parameter("threshold must be positive".into()));
    }
    let basis = HarmonicBasis::new(basis_degree);
    let points = halton_points(bx, seed, n_points);
    let mut m = killing_system(field, &points, &basis)?;
    // column equilibration: rank and kernel are unchanged, conditioning is not
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smallest_rel = sv.last().unwrap() / sv.first().unwrap();
    let verdict = if smallest_rel > threshold {
        Verdict::Noninvariant
    } else {
        Verdict::Inconclusive
    };
    Ok(KillingTestReport {
        n_unknowns: killing_unknowns(&basis),
        n_rows: 2 * n_points,
        singular_values: sv,
        smallest_rel,
        threshold,
        verdict,
        basis_degree,
        n_points,
        seed,
    })
}

/// Scalar field on a uniform periodic 2D lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(nx: usize, ny: usize, h: f64) -> Grid2 {
        Grid2 {
            nx,
            ny,
            h,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, h: f64, mut f: impl FnMut(f64, f64) -> f64) -> Grid2 {
        let mut g = Grid2::zeros(nx, ny, h);
        for i in 0..nx {
            for j in 0..ny {
                g.data[i * ny + j] = f(i as f64 * h, j as f64 * h);
            }
        }
        g
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Five-point periodic Laplacian.
    pub fn laplacian(&self) -> Grid2 {
        let (nx, ny, h2) = (self.nx, self.ny, self.h * self.h);
        let mut out = Grid2::zeros(nx, ny, self.h);
        for i in 0..nx {
            let ip = (i + 1) % nx;
            let im = (i + nx - 1) % nx;
            for j in 0..ny {
                let jp = (j + 1) % ny;
                let jm = (j + ny - 1) % ny;
                out.data[i * ny + j] =
                    (self.at(ip, j) + self.at(im, j) + self.at(i, jp) + self.at(i, jm)
                        - 4.0 * self.at(i, j))
                        / h2;
            }
        }
        out
    }

    fn dot(&self, other: &Grid2) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    fn axpy(&mut self, alpha: f64, x: &Grid2) {
        for (d, s) in self.data.iter_mut().zip(&x.data) {
            *d += alpha * s;
        }
    }

    fn sub_mean(&mut self) {
        let m = self.mean();
        for d in &mut self.data {
            *d -= m;
        }
    }

    /// Serialize as flat CSV: a `nx,ny,h` header line, then one value per line
    /// in row-major order, rendered with 17 significant digits.
    pub fn write_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "{},{},{}",
            self.nx,
            self.ny,
            crate::report::fmt_f64(self.h)
        )?;
        for v in &self.data {
            writeln!(f, "{}", crate::report::fmt_f64(*v))?;
        }
        f.flush()
    }

    pub fn read_csv(path: &std::path::Path) -> std::io::Result<Grid2> {
        let text = std::fs::read_to_string(path)?;
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty grid file"))?;
        let parts: Vec<&str> = header.split(',').collect();
        if parts.len() != 3 {
            return Err(bad("grid header must be nx,ny,h"));
        }
        let nx: usize = parts[0].trim().parse().map_err(|_| bad("bad nx"))?;
        let ny: usize = parts[1].trim().parse().map_err(|_| bad("bad ny"))?;
        let h: f64 = parts[2].trim().parse().map_err(|_| bad("bad h"))?;
        let data: Vec<f64> = lines
            .map(|l| l.trim().parse().map_err(|_| bad("bad grid value")))
            .collect::<std::io::Result<_>>()?;
        if data.len() != nx * ny {
            return Err(bad("grid value count does not match header"));
        }
        Ok(Grid2 { nx, ny, h, data })
    }
}

const POISSON_TOL: f64 = 1e-10;
const POISSON_MAX_ITER: usize = 20_000;

/// Solve lap(phi) = rhs - mean(rhs) on the periodic grid in the zero-mean
/// gauge, by conjugate gradients on the five-point operator.
pub fn poisson_solve(rhs: &Grid2) -> Result<Grid2> {
    poisson_solve_with(rhs, POISSON_TOL, POISSON_MAX_ITER)
}

pub fn poisson_solve_with(rhs: &Grid2, tol: f64, max_iter: usize) -> Result<Grid2> {
    // CG on A = -lap (positive semidefinite, SPD on the zero-mean subspace)
    let mut b = rhs.clone();
    b.sub_mean();
    for d in &mut b.data {
        *d = -*d;
    }
    let bnorm = b.dot(&b).sqrt();
    let mut phi = Grid2::zeros(rhs.nx, rhs.ny, rhs.h);
    if bnorm == 0.0 {
        return Ok(phi);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let ap = {
            let mut lap = p.laplacian();
            for d in &mut lap.data {
                *d = -*d;
            }
            lap
        };
        let alpha = rs / p.dot(&ap);
        phi.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rs_new = r.dot(&r);
        let resid = rs_new.sqrt() / bnorm;
        history.push(resid);
        if resid <= tol {
            phi.sub_mean();
            return Ok(phi);
        }
        p = {
            let mut next = r.clone();
            next.axpy(rs_new / rs, &p);
            next
        };
        rs = rs_new;
    }
    let tail = history.len().saturating_sub(16);
    Err(Error::SolverDiverged {
        residual: *history.last().unwrap_or(&f64::INFINITY),
        iterations: history.len(),
        history: history[tail..].to_vec(),
    })
}

/// Scalar field on a uniform periodic 3D lattice over (x, y, z).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    pub data: Vec<f64>,
}

impl Grid3 {
    pub fn zeros(nx: usize, ny: usize, nz: usize, h: f64) -> Grid3 {
        Grid3 {
            nx,
            ny,
            nz,
            h,
            data: vec![0.0; nx * ny * nz],
        }
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        h: f64,
        mut f: impl FnMut(f64, f64, f64) -> f64,
    ) -> Grid3 {
        let mut g = Grid3::zeros(nx, ny, nz, h);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    g.data[(i * ny + j) * nz + k] = f(i as f64 * h, j as f64 * h, k as f64 * h);
                }
            }
        }
        g
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.ny + j) * self.nz + k]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.ny + j) * self.nz + k] = v;
    }

    fn map2(&self, other: &Grid3, f: impl Fn(f64, f64) -> f64) -> Grid3 {
        let mut out = self.clone();
        for (d, o) in out.data.iter_mut().zip(&other.data) {
            *d = f(*d, *o);
        }
        out
    }

    /// Central difference along an axis (0 = x, 1 = y, 2 = z).
    pub fn diff(&self, axis: usize) -> Grid3 {
        let mut out = Grid3::zeros(self.nx, self.ny, self.nz, self.h);
        let n = [self.nx, self.ny, self.nz];
        for i in 0..self.nx {
            for j in 0..self.ny {
                for k in 0..self.nz {
                    let mut up = [i, j, k];
                    let mut dn = [i, j, k];
                    up[axis] = (up[axis] + 1) % n[axis];
                    dn[axis] = (dn[axis] + n[axis] - 1) % n[axis];
                    let v = (self.at(up[0], up[1], up[2]) - self.at(dn[0], dn[1], dn[2]))
                        / (2.0 * self.h);
                    out.set(i, j, k, v);
                }
            }
        }
        out
    }

    /// Second central difference along an axis.
    pub fn diff2(&self, axis: usize) -> Grid3 {
        let mut out = Grid3::zeros(self.nx, self.ny, self.nz, self.h);
        let n = [self.nx, self.ny, self.nz];
        let h2 = self.h * self.h;
        for i in 0..self.nx {
            for j in 0..self.ny {
                for k in 0..self.nz {
                    let mut up = [i, j, k];
                    let mut dn = [i, j, k];
                    up[axis] = (up[axis] + 1) % n[axis];
                    dn[axis] = (dn[axis] + n[axis] - 1) % n[axis];
                    let v = (self.at(up[0], up[1], up[2]) - 2.0 * self.at(i, j, k)
                        + self.at(dn[0], dn[1], dn[2]))
                        / h2;
                    out.set(i, j, k, v);
                }
            }
        }
        out
    }

    /// 2D Laplacian in (y, z) applied slab-wise.
    pub fn laplace_yz(&self) -> Grid3 {
        self.diff2(1).map2(&self.diff2(2), |a, b| a + b)
    }

    /// Extract the (y, z) slab at a fixed x index.
    pub fn slab(&self, i: usize) -> Grid2 {
        let mut g = Grid2::zeros(self.ny, self.nz, self.h);
        g.data
            .copy_from_slice(&self.data[i * self.ny * self.nz..(i + 1) * self.ny * self.nz]);
        g
    }

    fn set_slab(&mut self, i: usize, s: &Grid2) {
        self.data[i * self.ny * self.nz..(i + 1) * self.ny * self.nz].copy_from_slice(&s.data);
    }

    /// Quarter-turn of the (y, z) plane: the mapped field samples the
    /// original at (y, z) -> (-z, y). Requires ny == nz.
    pub fn rotate_yz(&self) -> Grid3 {
        assert_eq!(self.ny, self.nz, "rotation needs a square (y, z) lattice");
        let n = self.ny;
        let mut out = Grid3::zeros(self.nx, n, n, self.h);
        for i in 0..self.nx {
            for j in 0..n {
                for k in 0..n {
                    // y' = -z, z' = y on the periodic lattice
                    let jy = (n - k) % n;
                    let kz = j;
                    out.set(i, j, k, self.at(i, jy, kz));
                }
            }
        }
        out
    }
}

/// Both nonlocal flow right-hand sides on periodic (x, y, z) grids:
///
/// flow_a = lap^{-1}[ D_z(a u_xx - u_xy^2 - u_xz^2 - eps) - D_x D_y(a v) ] + u_xy v
/// flow_b = lap^{-1}[ D_y(a u_xx - u_xy^2 - u_xz^2 - eps) + D_x D_z(a v) ] - u_xz v
///
/// with a = lap(u), all derivatives central and lap^{-1} the zero-mean
/// periodic solve applied per (y, z) slab.
pub fn nonlocal_flow_rhs(u: &Grid3, v: &Grid3, eps: f64) -> Result<(Grid3, Grid3)> {
    assert_eq!(u.data.len(), v.data.len());
    let a = u.laplace_yz();
    let ux = u.diff(0);
    let uxx = u.diff2(0);
    let uxy = ux.diff(1);
    let uxz = ux.diff(2);
    let _ = &uxx;
    let bracket = {
        let mut b = a.map2(&uxx, |a, u| a * u);
        for (d, (xy, xz)) in b.data.iter_mut().zip(uxy.data.iter().zip(&uxz.data)) {
            *d -= xy * xy + xz * xz + eps;
        }
        b
    };
    let av = a.map2(v, |a, v| a * v);
    let local_a = bracket.diff(2).map2(&av.diff(0).diff(1), |p, q| p - q);
    let local_b = bracket.diff(1).map2(&av.diff(0).diff(2), |p, q| p + q);

    let mut flow_a = Grid3::zeros(u.nx, u.ny, u.nz, u.h);
    let mut flow_b = flow_a.clone();
    for i in 0..u.nx {
        flow_a.set_slab(i, &poisson_solve(&local_a.slab(i))?);
        flow_b.set_slab(i, &poisson_solve(&local_b.slab(i))?);
    }
    let uxy_v = uxy.map2(v, |a, b| a * b);
    let uxz_v = uxz.map2(v, |a, b| a * b);
    flow_a = flow_a.map2(&uxy_v, |f, c| f + c);
    flow_b = flow_b.map2(&uxz_v, |f, c| f - c);
    Ok((flow_a, flow_b))
}

/// Consistency residual of the nonlocal part: lap applied to
/// (flow - local correction) must reproduce the mean-free local bracket.
pub fn flow_consistency(u: &Grid3, v: &Grid3, eps: f64) -> Result<f64> {
    let (flow_a, _) = nonlocal_flow_rhs(u, v, eps)?;
    let a = u.laplace_yz();
    let ux = u.diff(0);
    let uxx = u.diff2(0);
    let uxy = ux.diff(1);
    let uxz = ux.diff(2);
    let bracket = {
        let mut b = a.map2(&uxx, |x, y| x * y);
        for (d, (xy, xz)) in b.data.iter_mut().zip(uxy.data.iter().zip(&uxz.data)) {
            *d -= xy * xy + xz * xz + eps;
        }
        b
    };
    let av = a.map2(v, |x, y| x * y);
    let local = bracket.diff(2).map2(&av.diff(0).diff(1), |p, q| p - q);
    let uxy_v = uxy.map2(v, |x, y| x * y);
    let nonlocal = flow_a.map2(&uxy_v, |f, c| f - c);
    let lap_back = nonlocal.laplace_yz();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..u.nx {
        let slab_local = local.slab(i);
        let slab_back = lap_back.slab(i);
        let m = slab_local.mean();
        for (lb, lo) in slab_back.data.iter().zip(&slab_local.data) {
            worst = worst.max((lb - (lo - m)).abs());
            scale = scale.max(lo.abs());
        }
    }
    Ok(worst / scale.max(1e-30))
}
