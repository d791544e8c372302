//! Closed-form evaluator of the noninvariant potential (u, v) and its
//! ingredient profiles, plus regularity certification of evaluation domains.
//!
//! Two independent computation routes exist on purpose: jet evaluation of the
//! full potential (this module's `u_eval`/`v_eval`) and straight scalar
//! evaluation of the derived closed forms (`closed_state`, `closed_metric_abcq`).
//! The residual and geometry suites cross-check one against the other.

use crate::error::{Error, Result};
use crate::jets::{seed, Jet4, MAX_ORDER, T};
use crate::sampling::{halton_points, Box4};
use serde::{Deserialize, Serialize};

/// A point in the real coordinates (t, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point4 {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point4 {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Point4 {
        Point4 { t, x, y, z }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

/// One harmonic polynomial term p*Re((y+iz)^n) + q*Im((y+iz)^n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub n: u32,
    pub p: f64,
    pub q: f64,
}

impl HarmonicTerm {
    pub fn value(&self, y: f64, z: f64) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..self.n {
            let nre = re * y - im * z;
            im = re * z + im * y;
            re = nre;
        }
        self.p * re + self.q * im
    }

    fn jet(&self, yj: &Jet4, zj: &Jet4) -> Jet4 {
        let order = yj.order();
        let mut re = Jet4::constant(1.0, order);
        let mut im = Jet4::zero(order);
        for _ in 0..self.n {
            let nre = &(&re * yj) - &(&im * zj);
            im = &(&re * zj) + &(&im * yj);
            re = nre;
        }
        &re.scale(self.p) + &im.scale(self.q)
    }
}

/// Full constant/branch set of the closed-form solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub theta0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub nu1: f64,
    pub nu2: f64,
    #[serde(rename = "A")]
    pub a_hom: f64,
    #[serde(rename = "B")]
    pub b_hom: f64,
    pub eps: i8,
    pub branch: i8,
    #[serde(default)]
    pub r_terms: Vec<HarmonicTerm>,
}

impl Params {
    /// The canonical parameter set used by the bundled configs and tests.
    pub fn canonical() -> Params {
        Params {
            c0: 1.0,
            c1: 0.5,
            c2: 0.0,
            c3: 1.0,
            rho1: 0.0,
            rho2: 0.0,
            theta0: 0.0,
            mu1: 1.0,
            mu2: 0.0,
            nu1: 0.0,
            nu2: 1.0,
            a_hom: 0.0,
            b_hom: 0.0,
            eps: 1,
            branch: 1,
            r_terms: Vec::new(),
        }
    }

    /// The certified evaluation box that goes with [`Params::canonical`].
    pub fn canonical_box() -> Box4 {
        Box4::new([0.0, 0.2], [0.8, 1.2], [-0.5, 0.5], [-0.5, 0.5])
    }

    pub fn epsf(&self) -> f64 {
        self.eps as f64
    }

    pub fn branchf(&self) -> f64 {
        self.branch as f64
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.c0,
            self.c1,
            self.c2,
            self.c3,
            self.rho1,
            self.rho2,
            self.theta0,
            self.mu1,
            self.mu2,
            self.nu1,
            self.nu2,
            self.a_hom,
            self.b_hom,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite constant in Params".into()));
        }
        if self.c1 == 0.0 {
            return Err(Error::Parameter("c1 must be nonzero".into()));
        }
        if self.c0 == 0.0 || self.c3 == 0.0 {
            return Err(Error::Parameter("c0 and c3 must be nonzero".into()));
        }
        if self.mu1 * self.mu1 + self.mu2 * self.mu2 == 0.0 {
            return Err(Error::Parameter("mu1^2 + mu2^2 must be positive".into()));
        }
        if !matches!(self.eps, 1 | -1) {
            return Err(Error::Parameter(format!(
                "eps must be +1 or -1, got {}",
                self.eps
            )));
        }
        if !matches!(self.branch, 1 | -1) {
            return Err(Error::Parameter(format!(
                "branch must be +1 or -1, got {}",
                self.branch
            )));
        }
        Ok(())
    }
}

/// Time profiles and their first two derivatives at fixed t.
#[derive(Debug, Clone, Copy)]
pub struct Profiles {
    /// [value, d/dt, d2/dt2]
    pub mu: [f64; 3],
    pub nu: [f64; 3],
    pub gamma: [f64; 3],
    pub sigma0: [f64; 3],
    pub theta: f64,
    pub theta_t: f64,
}

/// Evaluate mu, nu, gamma = nu/mu, sigma0 and theta at time t.
pub fn profiles(params: &Params, t: f64) -> Result<Profiles> {
    params.validate()?;
    let c1 = params.c1;
    let (s3, c3t) = (3.0 * c1 * t).sin_cos();
    let mu = params.mu1 * c3t + params.mu2 * s3;
    let mu_t = 3.0 * c1 * (-params.mu1 * s3 + params.mu2 * c3t);
    let mu_tt = -9.0 * c1 * c1 * mu;

    let (s2, c2t) = (2.0 * c1 * t).sin_cos();
    let nu = params.nu1 * c2t + params.nu2 * s2;
    let nu_t = 2.0 * c1 * (-params.nu1 * s2 + params.nu2 * c2t);
    let nu_tt = -4.0 * c1 * c1 * nu;

    if mu == 0.0 {
        return Err(Error::SingularProfile { t });
    }
    let gamma = nu / mu;
    let gamma_t = (nu_t * mu - nu * mu_t) / (mu * mu);
    let gamma_tt = (nu_tt - 2.0 * gamma_t * mu_t - gamma * mu_tt) / mu;

    let k = params.epsf() * params.c0 * params.c3 * params.c3 / 8.0;
    let (s1, c1t) = (c1 * t).sin_cos();
    let hom = params.a_hom * c1t + params.b_hom * s1;
    let hom_t = c1 * (-params.a_hom * s1 + params.b_hom * c1t);
    let sigma0 = k * mu + hom;
    let sigma0_t = k * mu_t + hom_t;
    let sigma0_tt = k * mu_tt - c1 * c1 * hom;

    Ok(Profiles {
        mu: [mu, mu_t, mu_tt],
        nu: [nu, nu_t, nu_tt],
        gamma: [gamma, gamma_t, gamma_tt],
        sigma0: [sigma0, sigma0_t, sigma0_tt],
        theta: -c1 * t + params.theta0,
        theta_t: -c1,
    })
}

/// sigma(y, z, t) and its analytic t-derivative.
pub fn sigma_field(params: &Params, p: Point4) -> Result<(f64, f64)> {
    let pr = profiles(params, p.t)?;
    let (s, c) = pr.theta.sin_cos();
    let cc = params.c1 * params.c3;
    let sigma = cc * (p.y * s + p.z * c) + pr.sigma0[0];
    let sigma_t = params.c1 * cc * (p.z * s - p.y * c) + pr.sigma0[1];
    Ok((sigma, sigma_t))
}

/// Gamma(t, x, y, z); defined for every finite point.
pub fn gamma_big(params: &Params, p: Point4) -> Result<f64> {
    let pr = profiles(params, p.t)?;
    let (sigma, _) = sigma_field(params, p)?;
    let e = (-params.c1 * p.x).exp();
    Ok(2.0 * params.c0 * pr.mu[0] * (params.c3 * params.c3 * e - sigma) + pr.nu[0] * pr.nu[0])
}

/// a = branch * Gamma^{-1/2}; regularity demands Gamma > 0.
pub fn a_field(params: &Params, p: Point4) -> Result<f64> {
    let gamma = gamma_big(params, p)?;
    if gamma <= 0.0 {
        return Err(Error::OutsideRegularity { gamma });
    }
    Ok(params.branchf() / gamma.sqrt())
}

struct JetState {
    theta: Jet4,
    mu: Jet4,
    nu: Jet4,
    gamma: Jet4,
    sigma0: Jet4,
    emx: Jet4,
    big_gamma: Jet4,
    a: Jet4,
    yj: Jet4,
    zj: Jet4,
    tj: Jet4,
    xj: Jet4,
}

fn jet_state(params: &Params, p: Point4, order: usize) -> Result<JetState> {
    let [tj, xj, yj, zj] = seed(p.coords(), order)?;
    let c1 = params.c1;
    let theta = tj.scale(-c1).add_scalar(params.theta0);
    let mu =
        &tj.scale(3.0 * c1).cos().scale(params.mu1) + &tj.scale(3.0 * c1).sin().scale(params.mu2);
    if mu.value() == 0.0 {
        return Err(Error::SingularProfile { t: p.t });
    }
    let nu =
        &tj.scale(2.0 * c1).cos().scale(params.nu1) + &tj.scale(2.0 * c1).sin().scale(params.nu2);
    let gamma = &nu * &mu.recip()?;
    let k = params.epsf() * params.c0 * params.c3 * params.c3 / 8.0;
    let sigma0 = &mu.scale(k)
        + &(&tj.scale(c1).cos().scale(params.a_hom) + &tj.scale(c1).sin().scale(params.b_hom));
    let (sth, cth) = theta.sin_cos();
    let sigma = (&(&yj * &sth) + &(&zj * &cth)).scale(c1 * params.c3) + &sigma0;
    let emx = xj.scale(-c1).exp();
    let big_gamma =
        (&emx.scale(params.c3 * params.c3) - &sigma).scale(2.0 * params.c0) * &mu + &nu * &nu;
    if big_gamma.value() <= 0.0 {
        return Err(Error::OutsideRegularity {
            gamma: big_gamma.value(),
        });
    }
    let a = big_gamma.sqrt()?.recip()?.scale(params.branchf());
    Ok(JetState {
        theta,
        mu,
        nu,
        gamma,
        sigma0,
        emx,
        big_gamma,
        a,
        yj,
        zj,
        tj,
        xj,
    })
}

/// Jet of Gamma to the requested order.
pub fn gamma_big_jet(params: &Params, p: Point4, order: usize) -> Result<Jet4> {
    Ok(jet_state(params, p, order)?.big_gamma)
}

/// Jet of a = branch * Gamma^{-1/2}.
pub fn a_jet(params: &Params, p: Point4, order: usize) -> Result<Jet4> {
    Ok(jet_state(params, p, order)?.a)
}

/// Jet of sigma(y, z, t).
pub fn sigma_jet(params: &Params, p: Point4, order: usize) -> Result<Jet4> {
    let st = jet_state(params, p, order)?;
    let (sth, cth) = st.theta.sin_cos();
    Ok((&(&st.yj * &sth) + &(&st.zj * &cth)).scale(params.c1 * params.c3) + &st.sigma0)
}

/// Taylor jet of the potential u at a point, exact to the requested order.
///
/// The pure-t integration constant carries the coefficient -eps/(4 c1^2) on
/// nu. That sign is pinned by the evolution system itself: flipping it
/// leaves every other identity intact but breaks the second component, which
/// the residual suites check at every probe.
pub fn u_eval(params: &Params, p: Point4, order: usize) -> Result<Jet4> {
    params.validate()?;
    if order > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "u jets support order <= {MAX_ORDER}, got {order}"
        )));
    }
    if !p.is_finite() {
        return Err(Error::Parameter("evaluation point must be finite".into()));
    }
    let st = jet_state(params, p, order)?;
    let (c0, c1, c2, c3) = (params.c0, params.c1, params.c2, params.c3);
    let br = params.branchf();
    let (sth, cth) = st.theta.sin_cos();
    let harm = &(&st.yj * &sth) + &(&st.zj * &cth);

    let mut u = (&st.gamma * &st.emx).scale(-1.0 / (c0 * c1 * c1));
    let gam32 = &st.big_gamma * &st.big_gamma.sqrt()?;
    u = &u
        + &((&gam32 * &(&st.mu * &st.mu).recip()?).scale(br / (3.0 * c0 * c0 * c1 * c1 * c3 * c3)));
    u = &u + &st.xj.scale(-c2 / c1);
    u = &u + &(&st.gamma * &harm).scale(1.0 / (c0 * c1 * c3));
    let paren = &st.sigma0 - &(&st.gamma * &st.nu).scale(1.0 / (3.0 * c0));
    u = &u + &(&st.gamma * &paren).scale(1.0 / (c0 * c1 * c1 * c3 * c3));
    u = &u + &st.nu.scale(-params.epsf() / (4.0 * c1 * c1));
    u = &u + &st.tj.scale(params.rho1).add_scalar(params.rho2);
    for term in &params.r_terms {
        u = &u + &term.jet(&st.yj, &st.zj);
    }
    Ok(u)
}

/// Taylor jet of v = u_t; supports order <= 3.
pub fn v_eval(params: &Params, p: Point4, order: usize) -> Result<Jet4> {
    if order + 1 > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "v jets support order <= {}, got {order}",
            MAX_ORDER - 1
        )));
    }
    Ok(u_eval(params, p, order + 1)?.deriv(T))
}

/// Scalar closed-form state shared by the chain identities and the
/// closed-form metric path. Straight-line arithmetic, no jets.
#[derive(Debug, Clone, Copy)]
pub struct ClosedState {
    pub profiles: Profiles,
    pub sigma: f64,
    pub sigma_t: f64,
    pub emx: f64,
    pub big_gamma: f64,
    pub big_gamma_t: f64,
    pub a: f64,
    pub a_t: f64,
    /// G = gamma - 1/(mu a) and its t-derivative.
    pub g: f64,
    pub g_t: f64,
    pub sin_theta: f64,
    pub cos_theta: f64,
}

pub fn closed_state(params: &Params, p: Point4) -> Result<ClosedState> {
    let pr = profiles(params, p.t)?;
    let (sigma, sigma_t) = sigma_field(params, p)?;
    let (c0, c1, c3) = (params.c0, params.c1, params.c3);
    let br = params.branchf();
    let emx = (-c1 * p.x).exp();
    let big_gamma = 2.0 * c0 * pr.mu[0] * (c3 * c3 * emx - sigma) + pr.nu[0] * pr.nu[0];
    if big_gamma <= 0.0 {
        return Err(Error::OutsideRegularity { gamma: big_gamma });
    }
    let big_gamma_t = 2.0 * c0 * pr.mu[1] * (c3 * c3 * emx - sigma) - 2.0 * c0 * pr.mu[0] * sigma_t
        + 2.0 * pr.nu[0] * pr.nu[1];
    let sq = big_gamma.sqrt();
    let a = br / sq;
    let a_t = -br * big_gamma_t / (2.0 * sq * big_gamma);
    // 1/(mu a) = br sqrt(Gamma)/mu
    let inv_mu_a = br * sq / pr.mu[0];
    let inv_mu_a_t =
        br * (big_gamma_t / (2.0 * sq * pr.mu[0]) - sq * pr.mu[1] / (pr.mu[0] * pr.mu[0]));
    let (sin_theta, cos_theta) = pr.theta.sin_cos();
    Ok(ClosedState {
        profiles: pr,
        sigma,
        sigma_t,
        emx,
        big_gamma,
        big_gamma_t,
        a,
        a_t,
        g: pr.gamma[0] - inv_mu_a,
        g_t: pr.gamma[1] - inv_mu_a_t,
        sin_theta,
        cos_theta,
    })
}

/// Closed-form u_x.
pub fn ux_closed(params: &Params, p: Point4) -> Result<f64> {
    let st = closed_state(params, p)?;
    Ok(st.emx * st.g / (params.c0 * params.c1) - params.c2 / params.c1)
}

/// Closed-form v_x (total t-derivative of u_x).
pub fn vx_closed(params: &Params, p: Point4) -> Result<f64> {
    let st = closed_state(params, p)?;
    Ok(st.emx * st.g_t / (params.c0 * params.c1))
}

/// Closed-form metric coefficients [a, b, c, Q] by straight scalar evaluation.
pub fn closed_metric_abcq(params: &Params, p: Point4) -> Result<[f64; 4]> {
    let st = closed_state(params, p)?;
    let (c0, c1, c3) = (params.c0, params.c1, params.c3);
    let eps = params.epsf();
    // [G cos th]_t = G_t cos th + c1 G sin th ;  [G sin th]_t = G_t sin th - c1 G cos th
    let gcos_t = st.g_t * st.cos_theta + c1 * st.g * st.sin_theta;
    let gsin_t = st.g_t * st.sin_theta - c1 * st.g * st.cos_theta;
    let minus_b = gcos_t / (c0 * c1 * c3) - c3 * st.emx * st.a * st.sin_theta;
    let c = gsin_t / (c0 * c1 * c3) + c3 * st.emx * st.a * st.cos_theta;
    let q = (st.g_t * st.g_t / (c0 * c0 * c1 * c1 * c3 * c3) + st.g * st.g / (c0 * c0 * c3 * c3)
        - 2.0 * st.a / c0 * st.emx * st.g
        + c3 * c3 * st.a * st.a * st.emx * st.emx
        + eps)
        / st.a;
    Ok([st.a, -minus_b, c, q])
}

/// Scalar field provider abstraction used by the residual and geometry suites.
pub trait PotentialField: Sync {
    /// Taylor jet of u at the point.
    fn u_jet(&self, p: Point4, order: usize) -> Result<Jet4>;

    /// Taylor jet of v; defaults to the analytic t-derivative of u.
    fn v_jet(&self, p: Point4, order: usize) -> Result<Jet4> {
        Ok(self.u_jet(p, order + 1)?.deriv(T))
    }

    fn epsilon(&self) -> f64;

    /// Closed-form metric coefficients, when the provider has them.
    fn closed_form_abcq(&self, _p: Point4) -> Option<Result<[f64; 4]>> {
        None
    }
}

/// The exact closed-form solution as a field provider.
#[derive(Debug, Clone, Copy)]
pub struct SolutionField<'a> {
    pub params: &'a Params,
}

impl<'a> SolutionField<'a> {
    pub fn new(params: &'a Params) -> SolutionField<'a> {
        SolutionField { params }
    }
}

impl PotentialField for SolutionField<'_> {
    fn u_jet(&self, p: Point4, order: usize) -> Result<Jet4> {
        u_eval(self.params, p, order)
    }

    fn epsilon(&self) -> f64 {
        self.params.epsf()
    }

    fn closed_form_abcq(&self, p: Point4) -> Option<Result<[f64; 4]>> {
        Some(closed_metric_abcq(self.params, p))
    }
}

/// Flat baseline potential (t^2 + x^2)/4 + eps (y^2 + z^2)/4.
#[derive(Debug, Clone, Copy)]
pub struct FlatPotential {
    pub eps: i8,
}

impl PotentialField for FlatPotential {
    fn u_jet(&self, p: Point4, order: usize) -> Result<Jet4> {
        let [t, x, y, z] = seed(p.coords(), order)?;
        Ok((&(&t * &t) + &(&x * &x)).scale(0.25)
            + (&(&y * &y) + &(&z * &z)).scale(0.25 * self.eps as f64))
    }

    fn epsilon(&self) -> f64 {
        self.eps as f64
    }
}

/// Domain certification summary over a probe set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub gamma_min: f64,
    pub a_min: f64,
    #[serde(rename = "Q_min")]
    pub q_min: f64,
    pub delta_min: f64,
    pub ok: bool,
    pub n_probe: usize,
    pub failures: usize,
}

const A_FLOOR: f64 = 1e-12;
const DELTA_FLOOR: f64 = 1e-18;

/// Probe a low-discrepancy sequence of points and report the minima of
/// Gamma, a, Q and delta = u_xy^2 + u_xz^2 over the box.
pub fn certify_regularity(params: &Params, bx: &Box4, n_probe: usize) -> Result<RegularityReport> {
    params.validate()?;
    if n_probe == 0 {
        return Err(Error::Parameter("n_probe must be at least 1".into()));
    }
    if !bx.is_valid() {
        return Err(Error::Parameter(
            "box intervals must be nonempty and finite".into(),
        ));
    }
    let eps = params.epsf();
    let mut gamma_min = f64::INFINITY;
    let mut a_min = f64::INFINITY;
    let mut a_abs_min = f64::INFINITY;
    let mut q_min = f64::INFINITY;
    let mut delta_min = f64::INFINITY;
    let mut failures = 0usize;
    for p in halton_points(bx, 0, n_probe) {
        let gamma = match gamma_big(params, p) {
            Ok(g) => g,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        gamma_min = gamma_min.min(gamma);
        if gamma <= 0.0 {
            failures += 1;
            continue;
        }
        let u = match u_eval(params, p, 2) {
            Ok(u) => u,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let v = u_eval(params, p, 3).map(|j| j.deriv(T));
        let v = match v {
            Ok(v) => v,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let a = u.partial([0, 0, 2, 0]).unwrap() + u.partial([0, 0, 0, 2]).unwrap();
        let uxy = u.partial([0, 1, 1, 0]).unwrap();
        let uxz = u.partial([0, 1, 0, 1]).unwrap();
        let b = uxy - v.partial([0, 0, 0, 1]).unwrap();
        let c = v.partial([0, 0, 1, 0]).unwrap() + uxz;
        let q = (b * b + c * c + eps) / a;
        let delta = uxy * uxy + uxz * uxz;
        a_min = a_min.min(a);
        a_abs_min = a_abs_min.min(a.abs());
        q_min = q_min.min(q);
        delta_min = delta_min.min(delta);
    }
    let ok = failures == 0
        && gamma_min > 0.0
        && a_abs_min > A_FLOOR
        && q_min > 0.0
        && delta_min > DELTA_FLOOR;
    Ok(RegularityReport {
        gamma_min,
        a_min: if a_min.is_finite() { a_min } else { 0.0 },
        q_min: if q_min.is_finite() { q_min } else { 0.0 },
        delta_min: if delta_min.is_finite() {
            delta_min
        } else {
            0.0
        },
        ok,
        n_probe,
        failures,
    })
}
