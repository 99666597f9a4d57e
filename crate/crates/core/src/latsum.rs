//! Lattice sums R_l^Y and R_l^K from their three-fold integrated spectral
//! forms, and the absolutely convergent spectral sum (1/A) sum 1/(Q^4 - k^4).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{dot, norm, BlochVector, Lattice, Vec2};
use crate::quad;
use crate::specfun;

pub const DEFAULT_MULTIPOLE_MAX: usize = 12;
pub const DEFAULT_ZETA_FRACTION: f64 = 0.37;
pub const DEFAULT_WINDOW_TOLERANCE: f64 = 1e-16;
pub const MAX_SPECTRAL_CUTOFF: usize = 256;

/// Truncation and regularisation settings shared by all lattice sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumConfig {
    /// Length of zeta; `None` selects `DEFAULT_ZETA_FRACTION` of the
    /// nearest-neighbour distance.
    pub zeta: Option<f64>,
    /// Direction of zeta. The integrated forms depend only on its length.
    pub zeta_angle: f64,
    /// Box half-width H of the spectral dispersion sum; `None` is adaptive.
    pub spectral_cutoff: Option<usize>,
    /// Target truncation error of the windowed accelerated sums.
    pub window_tolerance: f64,
    pub multipole_max: usize,
    /// Relative guard |Q_h^2 - k^2| > pole_guard k^2.
    pub pole_guard: f64,
    /// Adaptive spectral cutoff target: tail estimate below this times the
    /// far-field moment.
    pub tail_tolerance: f64,
}

impl Default for SumConfig {
    fn default() -> Self {
        Self {
            zeta: None,
            zeta_angle: 0.4,
            spectral_cutoff: None,
            window_tolerance: DEFAULT_WINDOW_TOLERANCE,
            multipole_max: DEFAULT_MULTIPOLE_MAX,
            pole_guard: 1e-6,
            tail_tolerance: 1e-9,
        }
    }
}

impl SumConfig {
    pub fn zeta_length(&self, lattice: &Lattice) -> f64 {
        self.zeta.unwrap_or(DEFAULT_ZETA_FRACTION * lattice.nearest_neighbour())
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        let z = self.zeta_length(lattice);
        if !(z > 0.0 && z < lattice.nearest_neighbour()) {
            return Err(Error::InvalidInput(format!(
                "zeta = {z} must lie in (0, {})",
                lattice.nearest_neighbour()
            )));
        }
        if self.spectral_cutoff == Some(0) {
            return Err(Error::InvalidInput("cutoff H must be at least 1".into()));
        }
        if !(self.window_tolerance > 0.0 && self.window_tolerance < 1e-3) {
            return Err(Error::InvalidInput("window_tolerance must lie in (0, 1e-3)".into()));
        }
        if !(self.pole_guard >= 0.0) {
            return Err(Error::InvalidInput("pole_guard must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Accelerated lattice sums of one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSums {
    pub l: i64,
    pub ry: Complex64,
    pub rk: Complex64,
    pub k: f64,
    pub k0: BlochVector,
}

/// Restriction of the reciprocal index set by the parity of h_x + h_y
/// (rectangular lattices only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    All,
    Even,
    Odd,
}

/// Index set {offset + i u + j v} with its normalisation 1/A.
#[derive(Debug, Clone, Copy)]
struct SumGrid {
    u: Vec2,
    v: Vec2,
    offset: Vec2,
    inv_area: f64,
    parity: Parity,
}

impl SumGrid {
    fn new(lattice: &Lattice, k0: BlochVector, parity: Parity) -> Result<Self> {
        let (b1, b2) = lattice.reciprocal_basis();
        let k = k0.as_array();
        match parity {
            Parity::All => Ok(Self { u: b1, v: b2, offset: k, inv_area: 1.0 / lattice.area(), parity }),
            Parity::Even | Parity::Odd => {
                if lattice.is_triangular() {
                    return Err(Error::InvalidInput("parity restriction needs a rectangular lattice".into()));
                }
                let u = [b1[0] + b2[0], b1[1] + b2[1]];
                let v = [b1[0] - b2[0], b1[1] - b2[1]];
                let offset = if parity == Parity::Odd { [k[0] + b1[0], k[1] + b1[1]] } else { k };
                // Normalised by the area of the triangle-equivalent cell, A/2.
                Ok(Self { u, v, offset, inv_area: 2.0 / lattice.area(), parity })
            }
        }
    }

    fn index(&self, i: i64, j: i64) -> [i64; 2] {
        match self.parity {
            Parity::All => [i, j],
            Parity::Even => [i + j, i - j],
            Parity::Odd => [i + j + 1, i - j],
        }
    }

    fn point(&self, i: i64, j: i64) -> Vec2 {
        let (fi, fj) = (i as f64, j as f64);
        [
            self.offset[0] + fi * self.u[0] + fj * self.v[0],
            self.offset[1] + fi * self.u[1] + fj * self.v[1],
        ]
    }

    fn cell(&self) -> f64 {
        (self.u[0] * self.v[1] - self.u[1] * self.v[0]).abs()
    }

    fn longest(&self) -> f64 {
        norm(self.u).max(norm(self.v))
    }

    /// Distance from the origin to the boundary of the union of the cells
    /// with |i|, |j| <= h.
    fn box_clearance(&self, h: usize) -> f64 {
        let l = h as f64 + 0.5;
        let inr = l * self.cell() / self.longest();
        inr - norm(self.offset)
    }
}

/// A light-line pole |Q_h| inside the near zone of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearPole {
    pub h: [i64; 2],
    pub q: f64,
}

/// Precomputed spectral sum at fixed k0, valid for 0 < k <= k_max.
///
/// Terms with |Q| below a split radius are summed exactly; the rest of the
/// index box is expanded as sum_n k^{4n} Q^{-4(n+1)}, and the region outside
/// the box is replaced by its integral with a second-order Euler-Maclaurin
/// correction.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    near: Vec<NearPole>,
    moments: Vec<f64>,
    inv_area: f64,
    k_max: f64,
    cutoff: usize,
    tail_estimate: f64,
}

impl SpectralKernel {
    pub fn new(lattice: &Lattice, k0: BlochVector, parity: Parity, k_max: f64, cfg: &SumConfig) -> Result<Self> {
        if !(k_max > 0.0 && k_max.is_finite()) {
            return Err(Error::InvalidInput(format!("k_max must be positive, got {k_max}")));
        }
        let grid = SumGrid::new(lattice, k0, parity)?;
        let r_split = 3.0 * k_max + grid.longest();
        let ratio: f64 = k_max / r_split;
        let n_mom = ((-17.0 / (4.0 * ratio.log10())).ceil() as usize + 1).max(2);

        let need = r_split + 8.0 * grid.longest();
        let mut h_min = 1usize;
        while grid.box_clearance(h_min) < need {
            h_min += 1;
        }
        match cfg.spectral_cutoff {
            Some(h) => {
                let h = h.max(h_min);
                Ok(Self::build(&grid, k_max, r_split, n_mom, h))
            }
            None => {
                let mut h = h_min.max(16);
                loop {
                    let kern = Self::build(&grid, k_max, r_split, n_mom, h);
                    let scale = kern.moments[0].abs();
                    if kern.tail_estimate <= cfg.tail_tolerance * scale || h >= MAX_SPECTRAL_CUTOFF {
                        if kern.tail_estimate > cfg.tail_tolerance * scale {
                            log::debug!("spectral cutoff capped at H = {h}");
                        }
                        return Ok(kern);
                    }
                    h = (2 * h).min(MAX_SPECTRAL_CUTOFF);
                }
            }
        }
    }

    fn build(grid: &SumGrid, k_max: f64, r_split: f64, n_mom: usize, h: usize) -> Self {
        let hi = h as i64;
        let r2 = r_split * r_split;
        let mut near = Vec::new();
        let mut far = vec![0.0; n_mom];
        for i in -hi..=hi {
            for j in -hi..=hi {
                let q = grid.point(i, j);
                let q2 = dot(q, q);
                if q2 < r2 {
                    near.push(NearPole { h: grid.index(i, j), q: q2.sqrt() });
                } else {
                    let inv = 1.0 / (q2 * q2);
                    let mut p = inv;
                    for m in far.iter_mut() {
                        *m += p;
                        p *= inv;
                    }
                }
            }
        }
        near.sort_by(|a, b| a.q.total_cmp(&b.q).then(a.h.cmp(&b.h)));

        let l = h as f64 + 0.5;
        let (u, v, o) = (grid.u, grid.v, grid.offset);
        let corner = |su: f64, sv: f64| [o[0] + l * (su * u[0] + sv * v[0]), o[1] + l * (su * u[1] + sv * v[1])];
        let corners = [corner(1.0, 1.0), corner(-1.0, 1.0), corner(-1.0, -1.0), corner(1.0, -1.0)];
        let density = grid.inv_area / grid.cell();

        let mut moments: Vec<f64> = far.iter().map(|m| m * grid.inv_area).collect();
        for (n, m) in moments.iter_mut().enumerate() {
            let p = (4 * n + 2) as f64;
            *m += density * ring_integral(&corners, p, None) / p;
        }
        let mut em = 0.0;
        for w in [u, v] {
            em += -dot(w, w) * ring_integral(&corners, 4.0, None) + 6.0 * ring_integral(&corners, 4.0, Some(w));
        }
        let em = -density * em / 24.0;
        moments[0] += em;

        Self { near, moments, inv_area: grid.inv_area, k_max, cutoff: h, tail_estimate: em.abs() }
    }

    /// (1/A) sum_h 1/(Q_h^4 - k^4).
    pub fn eval(&self, k: f64) -> f64 {
        debug_assert!(k <= self.k_max * (1.0 + 1e-12));
        let k2 = k * k;
        let mut s = 0.0;
        for p in &self.near {
            s += 1.0 / ((p.q - k) * (p.q + k) * (p.q * p.q + k2));
        }
        let k4 = k2 * k2;
        let mut far = 0.0;
        for m in self.moments.iter().rev() {
            far = far * k4 + m;
        }
        s * self.inv_area + far
    }

    /// Poles |Q_h| of the near zone, ascending.
    pub fn poles(&self) -> &[NearPole] {
        &self.near
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Magnitude of the Euler-Maclaurin correction applied to the tail,
    /// a conservative bound on the remaining truncation error.
    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }

    pub fn check_pole_guard(&self, k: f64, guard: f64) -> Result<()> {
        let k2 = k * k;
        for p in &self.near {
            if ((p.q - k) * (p.q + k)).abs() <= guard * k2 {
                return Err(Error::PoleProximity { k, q: p.q, hx: p.h[0], hy: p.h[1] });
            }
            if p.q > 2.0 * k {
                break;
            }
        }
        Ok(())
    }
}

/// int_0^{2 pi} r(theta)^{-p} [ (w . xhat)^2 ] d theta, with r(theta) the
/// distance from the origin to the boundary of the convex quadrilateral.
fn ring_integral(corners: &[Vec2; 4], p: f64, w: Option<Vec2>) -> f64 {
    let mut total = 0.0;
    for s in 0..4 {
        let a = corners[s];
        let b = corners[(s + 1) % 4];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let t = -dot(a, ab) / dot(ab, ab);
        let foot = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let c = norm(foot);
        let phi = foot[1].atan2(foot[0]);
        let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
        let psi_a = wrap(a[1].atan2(a[0]) - phi);
        let psi_b = wrap(b[1].atan2(b[0]) - phi);
        let (lo, hi) = if psi_a < psi_b { (psi_a, psi_b) } else { (psi_b, psi_a) };
        let cp = c.powf(-p);
        total += cp
            * quad::integrate(lo, hi, 4, |psi| {
                let base = psi.cos().powf(p);
                match w {
                    None => base,
                    Some(w) => {
                        let th = phi + psi;
                        let proj = w[0] * th.cos() + w[1] * th.sin();
                        base * proj * proj
                    }
                }
            });
    }
    total
}

/// Spectral dispersion sum (1/A) sum_h 1/(Q_h^4 - k^4) with its tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub tail_estimate: f64,
    pub cutoff: usize,
}

pub fn spectral_dispersion_sum(k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<f64> {
    Ok(spectral_dispersion_detail(k, k0, lattice, Parity::All, cfg)?.value)
}

pub fn spectral_dispersion_detail(
    k: f64,
    k0: BlochVector,
    lattice: &Lattice,
    parity: Parity,
    cfg: &SumConfig,
) -> Result<SpectralValue> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    let kern = SpectralKernel::new(lattice, k0, parity, k, cfg)?;
    kern.check_pole_guard(k, cfg.pole_guard)?;
    Ok(SpectralValue { value: kern.eval(k), tail_estimate: kern.tail_estimate(), cutoff: kern.cutoff() })
}

fn i_pow(l: usize) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// J_nu(x) sits close to one of its zeros.
fn near_bessel_zero(nu: usize, x: f64) -> bool {
    if x <= nu as f64 {
        return false;
    }
    let j = specfun::j_array(nu + 1, x);
    j[nu].abs() < 0.02 * j[nu - 1].abs().max(j[nu + 1].abs())
}

fn zeta_candidates(z0: f64, limit: f64) -> Vec<f64> {
    (0..6)
        .map(|j| {
            let up = z0 * 1.07f64.powi(j);
            if up < 0.97 * limit {
                up
            } else {
                z0 / 1.07f64.powi(j)
            }
        })
        .collect()
}

/// R_l^Y and R_l^K for l = 0..=lmax.
pub fn lattice_sums(lmax: usize, k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Vec<LatticeSums>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    cfg.validate(lattice)?;
    let z0 = cfg.zeta_length(lattice);
    let candidates = zeta_candidates(z0, lattice.nearest_neighbour());

    let mut chosen = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        match candidates.iter().find(|&&z| !near_bessel_zero(l + 3, k * z)) {
            Some(&z) => chosen.push(z),
            None => return Err(Error::BadZeta { order: l + 3 }),
        }
    }

    let mut out: Vec<Option<LatticeSums>> = vec![None; lmax + 1];
    let mut zetas: Vec<f64> = chosen.clone();
    zetas.sort_by(f64::total_cmp);
    zetas.dedup();
    for z in zetas {
        let orders: Vec<usize> = (0..=lmax).filter(|&l| chosen[l] == z).collect();
        let sums = accelerated_pass(&orders, k, k0, lattice, z, cfg)?;
        for (l, s) in orders.into_iter().zip(sums) {
            out[l] = Some(s);
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every order assigned")).collect())
}

/// Radial window separating the lattice sum from its smooth remainder.
#[derive(Debug, Clone, Copy)]
struct Window {
    centre: f64,
    width: f64,
    /// Below this the remainder weight 1 - w is negligible.
    lower: f64,
    /// Above this the weight w is negligible.
    upper: f64,
}

impl Window {
    fn new(k: f64, zeta: f64, nn: f64, tol: f64) -> Self {
        let s = (-tol.ln()).sqrt();
        let width = 2.0 * s / (nn - zeta);
        let centre = k + (s + 0.5) * width;
        Self { centre, width, lower: centre - s * width, upper: centre + s * width }
    }

    fn weight(&self, q: f64) -> f64 {
        0.5 * libm::erfc((q - self.centre) / self.width)
    }
}

/// Integral over Q > win.lower of (1 - w) k^3 J_3(Q zeta) / (Q^2 (Q^2 + sign k^2)).
fn radial_remainder(k: f64, zeta: f64, sign: f64, win: &Window) -> f64 {
    let k3 = k * k * k;
    let g = |q: f64| k3 * specfun::j_array(3, q * zeta)[3] / (q * q * (q * q + sign * k * k));
    let x_end = win.upper + 40.0 * PI / zeta;
    let step = (PI / zeta).min(0.5 * win.width);
    let panels = ((x_end - win.lower) / step).ceil() as usize;
    let body = quad::integrate(win.lower, x_end, panels, |q| (1.0 - win.weight(q)) * g(q));

    // Beyond x_end the integrand is Re[c(Q) e^{i zeta Q}] with c from the
    // Hankel expansion of J_3; integrate by parts three times.
    let mu = 36.0;
    let amp = |q: f64| {
        let x = q * zeta;
        let t = 8.0 * x;
        let p = 1.0 - (mu - 1.0) * (mu - 9.0) / (2.0 * t * t)
            + (mu - 1.0) * (mu - 9.0) * (mu - 25.0) * (mu - 49.0) / (24.0 * t.powi(4));
        let qh = (mu - 1.0) / t - (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * t.powi(3));
        let r = k3 / (q * q * (q * q + sign * k * k)) * (2.0 / (PI * x)).sqrt();
        r * Complex64::from_polar(1.0, -1.75 * PI) * Complex64::new(p, qh)
    };
    let h = 1e-3 * x_end;
    let (cm, c0, cp) = (amp(x_end - h), amp(x_end), amp(x_end + h));
    let d1 = (cp - cm) / (2.0 * h);
    let d2 = (cp - 2.0 * c0 + cm) / (h * h);
    let iz = Complex64::new(0.0, zeta);
    let tail = -Complex64::from_polar(1.0, zeta * x_end) * (c0 / iz - d1 / (iz * iz) + d2 / (iz * iz * iz));
    body + tail.re
}

fn accelerated_pass(
    orders: &[usize],
    k: f64,
    k0: BlochVector,
    lattice: &Lattice,
    zeta: f64,
    cfg: &SumConfig,
) -> Result<Vec<LatticeSums>> {
    let lmax = *orders.iter().max().expect("nonempty order list");
    let grid = SumGrid::new(lattice, k0, Parity::All)?;
    let win = Window::new(k, zeta, lattice.nearest_neighbour(), cfg.window_tolerance);
    let k2 = k * k;
    let reach = win.upper + norm(grid.offset);
    let cell = grid.cell();
    let imax = (reach * norm(grid.v) / cell).ceil() as i64;
    let jmax = (reach * norm(grid.u) / cell).ceil() as i64;
    let mut sy = vec![Complex64::new(0.0, 0.0); lmax + 1];
    let mut sk = vec![Complex64::new(0.0, 0.0); lmax + 1];
    for i in -imax..=imax {
        for j in -jmax..=jmax {
            let qv = grid.point(i, j);
            let q = norm(qv);
            if q > win.upper {
                continue;
            }
            let dq = (q - k) * (q + k);
            if dq.abs() <= cfg.pole_guard * k2 {
                let idx = grid.index(i, j);
                return Err(Error::PoleProximity { k, q, hx: idx[0], hy: idx[1] });
            }
            let w = win.weight(q);
            let (ay, ak) = (w / dq, w / (q * q + k2));
            if q < 1e-12 * k {
                // Only l = 0 survives: (k/Q)^3 J_3(Q zeta) -> k^3 (zeta/2)^3 / 6.
                let f = k * k2 * (0.5 * zeta).powi(3) / 6.0;
                sy[0] += f * ay;
                sk[0] += f * ak;
                continue;
            }
            let js = specfun::j_array(lmax + 3, q * zeta);
            let e = Complex64::new(qv[0] / q, qv[1] / q);
            let kq3 = (k / q).powi(3);
            let mut phase = Complex64::new(1.0, 0.0);
            for l in 0..=lmax {
                let f = phase * (kq3 * js[l + 3]);
                sy[l] += f * ay;
                sk[l] += f * ak;
                phase *= e;
            }
        }
    }
    // The remainder (1 - w) f is smooth on the reciprocal lattice, so its sum
    // is its integral; the angular average removes every order but l = 0.
    let area = lattice.area();
    sy[0] += area / (2.0 * PI) * radial_remainder(k, zeta, -1.0, &win);
    sk[0] += area / (2.0 * PI) * radial_remainder(k, zeta, 1.0, &win);
    let x = k * zeta;
    let jk = specfun::j_array(lmax + 3, x);
    let ik = specfun::bessel_i_seq(lmax + 3, x)?;
    let mut out = Vec::with_capacity(orders.len());
    for &l in orders {
        let il = i_pow(l);
        let mut ry = -(4.0 / area) * il * sy[l];
        let mut rk = (2.0 * PI / area) * il * sk[l];
        if l == 0 {
            let y3 = specfun::y_array(3, x)[3];
            let k3 = specfun::k_array(3, x)[3];
            let tw = 2.0 / x;
            ry -= y3 + (2.0 * tw.powi(3) + tw + 0.5 / tw) / PI;
            rk += k3 - 8.0 / x.powi(3) + 1.0 / x - x / 8.0;
        }
        ry /= jk[l + 3];
        rk /= ik[l + 3];
        if !(ry.re.is_finite() && ry.im.is_finite() && rk.re.is_finite() && rk.im.is_finite()) {
            return Err(Error::NoConvergence(format!("non-finite lattice sum at order {l}")));
        }
        out.push(LatticeSums { l: l as i64, ry, rk, k, k0 });
    }
    Ok(out)
}

pub fn sum_ry(l: usize, k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Complex64> {
    let sums = lattice_sums(l, k, k0, lattice, cfg)?;
    Ok(sums[l].ry)
}

pub fn sum_rk(l: usize, k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Complex64> {
    let sums = lattice_sums(l, k, k0, lattice, cfg)?;
    Ok(sums[l].rk)
}

/// Extends non-negative orders to negative ones:
/// R_{-m}^Y = conj(R_m^Y), R_{-m}^K = (-1)^m conj(R_m^K).
pub fn negative_order(s: &LatticeSums) -> LatticeSums {
    let m = s.l;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    LatticeSums { l: -m, ry: s.ry.conj(), rk: sign * s.rk.conj(), k: s.k, k0: s.k0 }
}
