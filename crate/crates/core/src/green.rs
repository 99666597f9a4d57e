//! Quasiperiodic and free-space Green's functions of the biharmonic operator,
//! the dispersion function G(0) and the triangular Bloch-ratio filter.

use num_complex::Complex64;
use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::lattice::{dot, norm, BlochVector, Lattice, Vec2};
use crate::latsum::{self, LatticeSums, Parity, SpectralKernel, SumConfig};
use crate::specfun;

/// Default acceptance radius of the Bloch-ratio filter.
pub const DEFAULT_RATIO_TOL: f64 = 1e-3;

/// Optional physical plate parameters, used only for unit conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateMaterial {
    pub youngs_modulus: f64,
    pub poissons_ratio: f64,
    pub thickness: f64,
    pub density: f64,
}

impl PlateMaterial {
    pub fn new(youngs_modulus: f64, poissons_ratio: f64, thickness: f64, density: f64) -> Result<Self> {
        let m = Self { youngs_modulus, poissons_ratio, thickness, density };
        if !(poissons_ratio > -1.0 && poissons_ratio < 0.5) {
            return Err(Error::InvalidInput(format!("Poisson ratio {poissons_ratio} outside (-1, 0.5)")));
        }
        if !(youngs_modulus > 0.0 && thickness > 0.0 && density > 0.0) {
            return Err(Error::InvalidInput("E, h and density must be positive".into()));
        }
        Ok(m)
    }

    /// Flexural rigidity D = E h^3 / (12 (1 - nu^2)).
    pub fn rigidity(&self) -> f64 {
        self.youngs_modulus * self.thickness.powi(3) / (12.0 * (1.0 - self.poissons_ratio.powi(2)))
    }

    /// Angular frequency from k^2 = omega sqrt(rho h / D).
    pub fn omega(&self, k: f64) -> f64 {
        k * k / (self.density * self.thickness / self.rigidity()).sqrt()
    }

    pub fn wavenumber(&self, omega: f64) -> f64 {
        (omega * (self.density * self.thickness / self.rigidity()).sqrt()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionMethod {
    Accelerated,
    Spectral,
    /// Both methods, failing with `MethodMismatch` beyond 1e-5 relative.
    CrossChecked,
}

/// Dispersion function G(0; k, k0).
pub fn dispersion_value(k: f64, k0: BlochVector, lattice: &Lattice, method: DispersionMethod, cfg: &SumConfig) -> Result<f64> {
    match method {
        DispersionMethod::Spectral => latsum::spectral_dispersion_sum(k, k0, lattice, cfg),
        DispersionMethod::Accelerated => accelerated_dispersion(k, k0, lattice, cfg),
        DispersionMethod::CrossChecked => {
            let s = latsum::spectral_dispersion_sum(k, k0, lattice, cfg)?;
            let a = accelerated_dispersion(k, k0, lattice, cfg)?;
            if (a - s).abs() > 1e-5 * a.abs().max(s.abs()) {
                return Err(Error::MethodMismatch { accelerated: a, spectral: s });
            }
            Ok(s)
        }
    }
}

/// -(1/8k^2)(R_0^Y + (2/pi) R_0^K), with the imaginary residue checked.
fn accelerated_dispersion(k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<f64> {
    let s = latsum::lattice_sums(0, k, k0, lattice, cfg)?[0];
    let v = -(s.ry + FRAC_2_PI * s.rk) / (8.0 * k * k);
    if v.im.abs() > 1e-8 * v.re.abs().max(1.0) {
        return Err(Error::NoConvergence(format!("imaginary residue {} in the dispersion combination", v.im)));
    }
    Ok(v.re)
}

/// One evaluation of the quasiperiodic Green's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEvaluation {
    pub r: Vec2,
    pub k: f64,
    pub k0: BlochVector,
    pub value: Complex64,
}

/// Multipole form of G built from one set of lattice sums.
#[derive(Debug, Clone)]
pub struct MultipoleGreen {
    lattice: Lattice,
    k: f64,
    k0: BlochVector,
    sums: Vec<LatticeSums>,
}

impl MultipoleGreen {
    pub fn new(k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Self> {
        let sums = latsum::lattice_sums(cfg.multipole_max, k, k0, lattice, cfg)?;
        Ok(Self { lattice: *lattice, k, k0, sums })
    }

    /// Lattice point nearest to r.
    fn nearest_lattice_point(&self, r: Vec2) -> [i64; 2] {
        let (a1, a2) = self.lattice.real_basis();
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        let s = (r[0] * a2[1] - r[1] * a2[0]) / det;
        let t = (a1[0] * r[1] - a1[1] * r[0]) / det;
        let (s0, t0) = (s.floor() as i64, t.floor() as i64);
        let mut best = [s0, t0];
        let mut best_d = f64::INFINITY;
        for ds in -1..=2 {
            for dt in -1..=2 {
                let p = [s0 + ds, t0 + dt];
                let lp = self.lattice.lattice_point(p);
                let d = (r[0] - lp[0]).hypot(r[1] - lp[1]);
                if d < best_d - 1e-15 {
                    best_d = d;
                    best = p;
                }
            }
        }
        best
    }

    pub fn eval(&self, r: Vec2) -> Complex64 {
        let p = self.nearest_lattice_point(r);
        let rp = self.lattice.lattice_point(p);
        let local = [r[0] - rp[0], r[1] - rp[1]];
        let phase = Complex64::from_polar(1.0, dot(self.k0.as_array(), rp));
        phase * self.eval_local(local)
    }

    /// Multipole sum about the origin, |r| inside the central cell.
    fn eval_local(&self, r: Vec2) -> Complex64 {
        let k = self.k;
        let rr = norm(r);
        let m_max = self.sums.len() - 1;
        let pref = -1.0 / (8.0 * k * k);
        if rr == 0.0 {
            let s = &self.sums[0];
            return pref * (s.ry + FRAC_2_PI * s.rk);
        }
        let x = k * rr;
        let theta = r[1].atan2(r[0]);
        let js = specfun::j_array(m_max, x);
        let is: Vec<f64> = specfun::i_scaled_array(m_max, x).into_iter().map(|v| v * x.exp()).collect();
        let (_, y0) = specfun::j0_y0(x);
        let k0v = specfun::k_array(0, x)[0];
        let mut total = Complex64::new(y0 + FRAC_2_PI * k0v, 0.0);
        for (m, s) in self.sums.iter().enumerate() {
            let e = Complex64::from_polar(1.0, -(m as f64) * theta);
            total += (s.ry * js[m] + FRAC_2_PI * s.rk * is[m]) * e;
            if m > 0 {
                let neg = latsum::negative_order(s);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                total += (neg.ry * (sign * js[m]) + FRAC_2_PI * neg.rk * is[m]) * e.conj();
            }
        }
        pref * total
    }
}

/// G(r; k, k0) from its multipole expansion, after translating r into the
/// cell around the nearest lattice point.
pub fn quasiperiodic_green(r: Vec2, k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Complex64> {
    Ok(MultipoleGreen::new(k, k0, lattice, cfg)?.eval(r))
}

/// Evaluations of G at several points sharing one set of lattice sums.
pub fn evaluate_green(points: &[Vec2], k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig) -> Result<Vec<GreenEvaluation>> {
    let g = MultipoleGreen::new(k, k0, lattice, cfg)?;
    Ok(points.iter().map(|&r| GreenEvaluation { r, k, k0, value: g.eval(r) }).collect())
}

/// (1/A) sum over |h_x|, |h_y| <= cutoff of e^{i Q_h . r}/(Q_h^4 - k^4), and
/// the matching sum of absolute term values.
pub fn spectral_green(r: Vec2, k: f64, k0: BlochVector, lattice: &Lattice, cutoff: usize) -> (Complex64, f64) {
    let h = cutoff as i64;
    let k4 = k.powi(4);
    let mut s = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for i in -h..=h {
        for j in -h..=h {
            let q = lattice.reciprocal_vector([i, j], k0);
            let d = q.norm.powi(4) - k4;
            s += Complex64::from_polar(1.0, dot(q.q, r)) / d;
            abs += 1.0 / d.abs();
        }
    }
    let inv = 1.0 / lattice.area();
    (s * inv, abs * inv)
}

/// Free-space Green's function g(r) = (i/8k^2)[H_0(kr) + (2i/pi) K_0(kr)].
pub fn free_green(r: f64, k: f64) -> Result<Complex64> {
    if !(r >= 0.0) || !(k > 0.0) {
        return Err(Error::InvalidInput(format!("free_green needs r >= 0 and k > 0, got r = {r}, k = {k}")));
    }
    let pref = 1.0 / (8.0 * k * k);
    if r == 0.0 {
        return Ok(Complex64::new(0.0, pref));
    }
    let x = k * r;
    let (j0, y0) = specfun::j0_y0(x);
    let k0 = specfun::k_array(0, x)[0];
    Ok(Complex64::new(-(y0 + FRAC_2_PI * k0), j0) * pref)
}

/// Outcome of the Bloch-ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochRatio {
    pub eta: Complex64,
    pub expected: Complex64,
    pub pass: bool,
}

/// Amplitude ratio of the shifted sublattice in the interlaced rectangular
/// representation of a triangular lattice, eta = -G_R(c_T)/G_R(0).
///
/// A candidate root of the two-sublattice system is a true triangular mode
/// when eta matches the Bloch phase e^{i k0 . c_T}.
pub fn bloch_ratio(k: f64, k0: BlochVector, lattice: &Lattice, cfg: &SumConfig, tol: f64) -> Result<BlochRatio> {
    let rect = lattice.interlaced_rectangular()?;
    let c = lattice.triangular_shift();
    let kern = SpectralKernel::new(&rect, k0, Parity::All, k, cfg)?;
    kern.check_pole_guard(k, cfg.pole_guard)?;
    let g0 = kern.eval(k);
    let cutoff = cfg.spectral_cutoff.unwrap_or(128);
    let (gc, scale) = spectral_green(c, k, k0, &rect, cutoff);
    if g0.abs() < 1e-12 * scale && gc.norm() < 1e-12 * scale {
        return Err(Error::DegenerateRatio { k });
    }
    let eta = -gc / g0;
    let expected = Complex64::from_polar(1.0, dot(k0.as_array(), c));
    Ok(BlochRatio { eta, expected, pass: (eta - expected).norm() < tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::EULER_GAMMA;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn multipole_matches_spectral_green() {
        let lat = Lattice::rectangular(1.0, 1.3).unwrap();
        let k0 = BlochVector::new(0.1, 0.2);
        let cfg = SumConfig { multipole_max: 20, ..SumConfig::default() };
        let g = MultipoleGreen::new(3.0, k0, &lat, &cfg).unwrap();
        for r in [[0.2, 0.1], [-0.3, 0.25], [0.05, -0.35]] {
            let m = g.eval(r);
            let (s, _) = spectral_green(r, 3.0, k0, &lat, 400);
            assert!((m - s).norm() < 2e-8 * s.norm().max(1e-3), "r={r:?}: {m} vs {s}");
        }
    }

    #[test]
    fn triangular_interior_point_matches_spectral() {
        let lat = Lattice::triangular(1.0).unwrap();
        let k0 = BlochVector::new(0.4, -0.3);
        let cfg = SumConfig { multipole_max: 20, ..SumConfig::default() };
        let r = [0.21, 0.17];
        let m = quasiperiodic_green(r, 4.0, k0, &lat, &cfg).unwrap();
        let (s, _) = spectral_green(r, 4.0, k0, &lat, 400);
        assert!((m - s).norm() < 2e-8 * s.norm().max(1e-3), "{m} vs {s}");
    }

    #[test]
    fn origin_limit_is_dispersion_combination() {
        let lat = Lattice::square(1.0).unwrap();
        let k0 = BlochVector::new(0.3, 0.1);
        let cfg = SumConfig::default();
        let g = MultipoleGreen::new(2.5, k0, &lat, &cfg).unwrap();
        let d = dispersion_value(2.5, k0, &lat, DispersionMethod::Accelerated, &cfg).unwrap();
        assert!((g.eval([0.0, 0.0]).re - d).abs() < 1e-14);
        let near = g.eval([1e-5, 0.0]);
        assert!((near.re - d).abs() < 1e-8 * d.abs().max(1e-3));
    }

    #[test]
    fn multipole_truncation_converges() {
        let lat = Lattice::rectangular(1.0, 1.4).unwrap();
        let k0 = BlochVector::new(0.9, 0.4);
        let cfg = SumConfig::default();
        let cfg4 = SumConfig { multipole_max: cfg.multipole_max + 4, ..cfg };
        let a = MultipoleGreen::new(3.7, k0, &lat, &cfg).unwrap();
        let b = MultipoleGreen::new(3.7, k0, &lat, &cfg4).unwrap();
        for i in 0..8 {
            let th = i as f64 * 0.8;
            let r = [0.4 * th.cos(), 0.4 * th.sin()];
            let (va, vb) = (a.eval(r), b.eval(r));
            assert!((va - vb).norm() < 1e-8, "r={r:?}: {va} vs {vb}");
        }
    }

    #[test]
    fn methods_agree_and_are_even_in_k0() {
        let lat = Lattice::triangular(1.0).unwrap();
        let cfg = SumConfig::default();
        let k0 = BlochVector::new(0.6, -0.2);
        let a = dispersion_value(3.9, k0, &lat, DispersionMethod::CrossChecked, &cfg).unwrap();
        let b = dispersion_value(3.9, k0.neg(), &lat, DispersionMethod::Spectral, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
        let c = dispersion_value(3.9, k0.neg(), &lat, DispersionMethod::Accelerated, &cfg).unwrap();
        assert!((a - c).abs() < 1e-6 * a.abs());
    }

    #[test]
    fn free_green_origin_limit() {
        let k = 2.3;
        let g0 = free_green(0.0, k).unwrap();
        // Ascending series of (i/8k^2)[J_0 + i Y_0 + (2i/pi) K_0] at small r.
        let series = |r: f64| {
            let y = 0.25 * (k * r).powi(2);
            let l = (0.5 * k * r).ln() + EULER_GAMMA;
            let (mut t, mut h) = (1.0, 0.0);
            let (mut j0, mut ysum, mut ksum) = (1.0, 0.0, 0.0);
            for n in 1..30 {
                t *= -y / (n * n) as f64;
                h += 1.0 / n as f64;
                j0 += t;
                ysum -= h * t;
                ksum += h * t.abs();
            }
            let i0: f64 = (0..30).map(|n| y.powi(n) / (1..=n).map(|v| v as f64).product::<f64>().powi(2)).sum();
            let y0 = FRAC_2_PI * (l * j0 + ysum);
            let k0 = -l * i0 + ksum;
            Complex64::new(-(y0 + FRAC_2_PI * k0), j0) / (8.0 * k * k)
        };
        for r in [1e-2, 1e-4, 1e-6] {
            let s = series(r);
            let v = free_green(r, k).unwrap();
            assert!((s - v).norm() < 1e-12, "r={r}: {s} vs {v}");
        }
        assert!((series(1e-7) - g0).norm() < 1e-10);
    }

    #[test]
    fn free_green_far_field_decay() {
        let k = 3.0;
        let amp = (2.0 / (PI * k)).sqrt() / (8.0 * k * k);
        for r in [30.0, 100.0, 400.0] {
            let g = free_green(r, k).unwrap();
            let scaled = g.norm() * r.sqrt();
            assert!((scaled - amp).abs() < 0.02 * amp, "r={r}: {scaled} vs {amp}");
        }
    }

    #[test]
    fn bloch_filter_separates_interlaced_roots() {
        let tri = Lattice::triangular(1.0).unwrap();
        let rect = tri.interlaced_rectangular().unwrap();
        let cfg = SumConfig::default();
        let sum = |p: Parity, k: f64| latsum::spectral_dispersion_detail(k, BlochVector::GAMMA, &rect, p, &cfg).unwrap().value;
        let even = bisect(4.0, 4.5, |k| sum(Parity::Even, k));
        let odd = bisect(5.0, 5.4, |k| sum(Parity::Odd, k));
        let a = bloch_ratio(even, BlochVector::GAMMA, &tri, &cfg, DEFAULT_RATIO_TOL).unwrap();
        let b = bloch_ratio(odd, BlochVector::GAMMA, &tri, &cfg, DEFAULT_RATIO_TOL).unwrap();
        assert!(a.pass && !b.pass);
        assert!((a.eta - 1.0).norm() < 1e-6 && a.eta.re > 0.0);
        assert!((b.eta + 1.0).norm() < 1e-6);
    }

    #[test]
    fn plate_material_roundtrip() {
        let m = PlateMaterial::new(70e9, 0.33, 1e-3, 2700.0).unwrap();
        let w = m.omega(3.1);
        assert!((m.wavenumber(w) - 3.1).abs() < 1e-12);
        assert!(PlateMaterial::new(70e9, 0.6, 1e-3, 2700.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn quasiperiodicity(rx in -0.45f64..0.45, ry in -0.45f64..0.45, px in -3i64..4, py in -3i64..4) {
            let lat = Lattice::rectangular(1.0, 1.2).unwrap();
            let k0 = BlochVector::new(0.7, -1.1);
            let g = MultipoleGreen::new(2.9, k0, &lat, &SumConfig::default()).unwrap();
            let rp = lat.lattice_point([px, py]);
            let a = g.eval([rx + rp[0], ry + rp[1]]);
            let b = Complex64::from_polar(1.0, dot(k0.as_array(), rp)) * g.eval([rx, ry]);
            prop_assert!((a - b).norm() < 1e-6 * b.norm().max(1e-3));
        }
    }
}
