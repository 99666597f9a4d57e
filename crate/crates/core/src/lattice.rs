//! Real and reciprocal geometry of rectangular and triangular pin arrays.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Bloch vector k0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
}

impl BlochVector {
    pub const GAMMA: BlochVector = BlochVector { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn as_array(self) -> Vec2 {
        [self.x, self.y]
    }

    pub fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<Vec2> for BlochVector {
    fn from(v: Vec2) -> Self {
        Self::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeFamily {
    Rectangular,
    Triangular,
}

/// A Bravais lattice of pins. Triangular lattices store `d` in `dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    family: LatticeFamily,
    dx: f64,
    dy: f64,
}

/// Q_h = k0 + K_h with its polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalVector {
    pub h: [i64; 2],
    pub q: Vec2,
    pub norm: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryPoint {
    pub name: String,
    pub k0: BlochVector,
}

impl SymmetryPoint {
    pub fn custom(name: &str, k0: BlochVector) -> Self {
        Self { name: name.to_string(), k0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub leg: usize,
    pub param: f64,
    pub k0: BlochVector,
}

impl Lattice {
    pub fn rectangular(dx: f64, dy: f64) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidInput(format!("periods must be positive, got ({dx}, {dy})")));
        }
        Ok(Self { family: LatticeFamily::Rectangular, dx, dy })
    }

    pub fn square(d: f64) -> Result<Self> {
        Self::rectangular(d, d)
    }

    /// Rectangular lattice with d_x = 1 and d_y = rho.
    pub fn with_aspect(rho: f64) -> Result<Self> {
        Self::rectangular(1.0, rho)
    }

    pub fn triangular(d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidInput(format!("period must be positive, got {d}")));
        }
        Ok(Self { family: LatticeFamily::Triangular, dx: d, dy: d })
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    pub fn is_triangular(&self) -> bool {
        self.family == LatticeFamily::Triangular
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        match self.family {
            LatticeFamily::Rectangular => self.dy,
            LatticeFamily::Triangular => 3f64.sqrt() * self.dx,
        }
    }

    /// Triangular period d (equal to d_x).
    pub fn d(&self) -> f64 {
        self.dx
    }

    /// Aspect ratio d_y / d_x; sqrt(3) for the triangular lattice.
    pub fn rho(&self) -> f64 {
        self.dy() / self.dx
    }

    /// Unit-cell area A (or A_T).
    pub fn area(&self) -> f64 {
        match self.family {
            LatticeFamily::Rectangular => self.dx * self.dy,
            LatticeFamily::Triangular => 0.5 * 3f64.sqrt() * self.dx * self.dx,
        }
    }

    /// Shortest nonzero lattice vector.
    pub fn nearest_neighbour(&self) -> f64 {
        match self.family {
            LatticeFamily::Rectangular => self.dx.min(self.dy),
            LatticeFamily::Triangular => self.dx,
        }
    }

    pub fn real_basis(&self) -> (Vec2, Vec2) {
        match self.family {
            LatticeFamily::Rectangular => ([self.dx, 0.0], [0.0, self.dy]),
            LatticeFamily::Triangular => {
                let d = self.dx;
                ([d, 0.0], [0.5 * d, 0.5 * 3f64.sqrt() * d])
            }
        }
    }

    pub fn reciprocal_basis(&self) -> (Vec2, Vec2) {
        match self.family {
            LatticeFamily::Rectangular => ([2.0 * PI / self.dx, 0.0], [0.0, 2.0 * PI / self.dy]),
            LatticeFamily::Triangular => {
                let d = self.dx;
                let s3 = 3f64.sqrt();
                ([2.0 * PI / d, -2.0 * PI / (s3 * d)], [0.0, 4.0 * PI / (s3 * d)])
            }
        }
    }

    pub fn lattice_point(&self, p: [i64; 2]) -> Vec2 {
        let (a1, a2) = self.real_basis();
        let (p0, p1) = (p[0] as f64, p[1] as f64);
        [p0 * a1[0] + p1 * a2[0], p0 * a1[1] + p1 * a2[1]]
    }

    pub fn reciprocal_vector(&self, h: [i64; 2], k0: BlochVector) -> ReciprocalVector {
        let (b1, b2) = self.reciprocal_basis();
        let (h0, h1) = (h[0] as f64, h[1] as f64);
        let q = [k0.x + h0 * b1[0] + h1 * b2[0], k0.y + h0 * b1[1] + h1 * b2[1]];
        ReciprocalVector { h, q, norm: norm(q), angle: q[1].atan2(q[0]) }
    }

    /// Triangular shift vector c_T = d (1/2, sqrt(3)/2).
    pub fn triangular_shift(&self) -> Vec2 {
        self.real_basis().1
    }

    /// The rectangular lattice (d, sqrt(3) d) whose union with its copy
    /// shifted by c_T is this triangular lattice.
    pub fn interlaced_rectangular(&self) -> Result<Lattice> {
        if !self.is_triangular() {
            return Err(Error::InvalidInput("interlaced form needs a triangular lattice".into()));
        }
        Lattice::rectangular(self.dx, 3f64.sqrt() * self.dx)
    }

    pub fn gamma(&self) -> SymmetryPoint {
        SymmetryPoint::custom("G", BlochVector::GAMMA)
    }

    /// Named symmetry point. Rectangular: G, X, Y, M. Triangular: G, K, M.
    pub fn symmetry_point(&self, name: &str) -> Result<SymmetryPoint> {
        let k0 = match (self.family, name) {
            (_, "G") | (_, "Γ") => BlochVector::GAMMA,
            (LatticeFamily::Rectangular, "X") => BlochVector::new(PI / self.dx, 0.0),
            (LatticeFamily::Rectangular, "Y") => BlochVector::new(0.0, PI / self.dy),
            (LatticeFamily::Rectangular, "M") => BlochVector::new(PI / self.dx, PI / self.dy),
            (LatticeFamily::Triangular, "K") => BlochVector::new(4.0 * PI / (3.0 * self.dx), 0.0),
            (LatticeFamily::Triangular, "M") => {
                BlochVector::new(PI / self.dx, PI / (3f64.sqrt() * self.dx))
            }
            _ => return Err(Error::InvalidInput(format!("unknown symmetry point {name}"))),
        };
        let name = if name == "Γ" { "G" } else { name };
        Ok(SymmetryPoint::custom(name, k0))
    }

    /// Piecewise-linear path through the waypoints, both leg endpoints
    /// included, parameterised by cumulative arclength in k0.
    pub fn bz_path(&self, waypoints: &[SymmetryPoint], samples_per_leg: usize) -> Result<Vec<PathSample>> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two waypoints".into()));
        }
        if samples_per_leg < 2 {
            return Err(Error::InvalidInput("samples_per_leg must be at least 2".into()));
        }
        let mut out = Vec::with_capacity((waypoints.len() - 1) * samples_per_leg);
        let mut start = 0.0;
        for (leg, w) in waypoints.windows(2).enumerate() {
            let (a, b) = (w[0].k0, w[1].k0);
            let len = (b.x - a.x).hypot(b.y - a.y);
            if len <= 1e-14 * (1.0 + a.x.hypot(a.y)) {
                return Err(Error::InvalidInput(format!(
                    "coincident consecutive waypoints {} and {}",
                    w[0].name, w[1].name
                )));
            }
            for s in 0..samples_per_leg {
                let t = s as f64 / (samples_per_leg - 1) as f64;
                out.push(PathSample {
                    leg,
                    param: start + t * len,
                    k0: BlochVector::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)),
                });
            }
            start += len;
        }
        Ok(out)
    }

    /// Reduced coordinates (k0x d_x / 2 pi, k0y d_y / 2 pi).
    pub fn reduced(&self, k0: BlochVector) -> Vec2 {
        [k0.x * self.dx / (2.0 * PI), k0.y * self.dy() / (2.0 * PI)]
    }

    /// Reduced coordinates folded into the first quadrant [0, 1/2]^2.
    pub fn reduce(&self, k0: BlochVector) -> Result<Vec2> {
        if self.is_triangular() {
            return Err(Error::InvalidInput("reduction is defined for rectangular lattices".into()));
        }
        let fold = |v: f64| (v - v.round()).abs();
        let [kx, ky] = self.reduced(k0);
        Ok([fold(kx), fold(ky)])
    }

    /// Bloch vector from reduced coordinates.
    pub fn from_reduced(&self, kappa: Vec2) -> BlochVector {
        BlochVector::new(2.0 * PI * kappa[0] / self.dx, 2.0 * PI * kappa[1] / self.dy())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn reciprocal_vector_examples() {
        let sq = Lattice::square(1.0).unwrap();
        let q = sq.reciprocal_vector([0, 0], BlochVector::new(0.3, 0.4));
        assert!(close(q.q, [0.3, 0.4], 0.0));
        assert!((q.norm - 0.5).abs() < 1e-15);

        let tri = Lattice::triangular(1.0).unwrap();
        let q = tri.reciprocal_vector([1, 1], BlochVector::GAMMA);
        assert!(close(q.q, [2.0 * PI, 2.0 * PI / 3f64.sqrt()], 1e-14));

        let rect = Lattice::rectangular(1.0, 2.0).unwrap();
        let q = rect.reciprocal_vector([1, 1], BlochVector::GAMMA);
        assert!(close(q.q, [2.0 * PI, PI], 1e-14));
    }

    #[test]
    fn bases_are_dual() {
        for lat in [Lattice::rectangular(1.0, 1.7).unwrap(), Lattice::triangular(1.3).unwrap()] {
            let (a1, a2) = lat.real_basis();
            let (b1, b2) = lat.reciprocal_basis();
            assert!((dot(a1, b1) - 2.0 * PI).abs() < 1e-13);
            assert!((dot(a2, b2) - 2.0 * PI).abs() < 1e-13);
            assert!(dot(a1, b2).abs() < 1e-13);
            assert!(dot(a2, b1).abs() < 1e-13);
            let cell = (a1[0] * a2[1] - a1[1] * a2[0]).abs();
            assert!((cell - lat.area()).abs() < 1e-13);
            let bz = (b1[0] * b2[1] - b1[1] * b2[0]).abs();
            assert!((cell * bz - 4.0 * PI * PI).abs() < 1e-11);
        }
    }

    #[test]
    fn path_examples() {
        let lat = Lattice::square(1.0).unwrap();
        let g = lat.symmetry_point("G").unwrap();
        let x = lat.symmetry_point("X").unwrap();
        let path = lat.bz_path(&[g.clone(), x.clone()], 3).unwrap();
        let params: Vec<f64> = path.iter().map(|s| s.param).collect();
        assert_eq!(params.len(), 3);
        assert!((params[1] - PI / 2.0).abs() < 1e-15 && (params[2] - PI).abs() < 1e-15);
        assert!(close(path[1].k0.as_array(), [PI / 2.0, 0.0], 1e-15));

        let names = ["G", "X", "M", "Y", "G"];
        let pts: Vec<_> = names.iter().map(|n| lat.symmetry_point(n).unwrap()).collect();
        let path = lat.bz_path(&pts, 2).unwrap();
        let mut corners: Vec<Vec2> = Vec::new();
        for s in &path {
            if corners.last().is_none_or(|c| !close(*c, s.k0.as_array(), 1e-14)) {
                corners.push(s.k0.as_array());
            }
        }
        assert_eq!(corners.len(), 5);
        for (c, p) in corners.iter().zip(&pts) {
            assert!(close(*c, p.k0.as_array(), 1e-14));
        }
        assert!(path.windows(2).all(|w| w[1].param >= w[0].param));

        assert!(lat.bz_path(&[g.clone(), g], 4).is_err());
    }

    #[test]
    fn reduce_examples() {
        let lat = Lattice::rectangular(1.0, 1.5).unwrap();
        assert_eq!(lat.reduce(BlochVector::GAMMA).unwrap(), [0.0, 0.0]);
        let m = lat.symmetry_point("M").unwrap().k0;
        let r = lat.reduce(m).unwrap();
        assert!(close(r, [0.5, 0.5], 1e-15));
        let r = lat.reduce(BlochVector::new(2.0 * PI + 0.1 * 2.0 * PI, 0.0)).unwrap();
        assert!(close(r, [0.1, 0.0], 1e-14));
    }

    #[test]
    fn triangular_even_rows_form_rectangular_lattice() {
        let d = 1.0;
        let tri = Lattice::triangular(d).unwrap();
        let rect = tri.interlaced_rectangular().unwrap();
        let mut even: Vec<Vec2> = Vec::new();
        for px in -5..=5 {
            for py in (-5..=5).filter(|p: &i64| p % 2 == 0) {
                even.push(tri.lattice_point([px, py]));
            }
        }
        // Each even-row triangular point is a rectangular point and vice versa.
        for p in &even {
            let i = (p[0] / rect.dx()).round();
            let j = (p[1] / rect.dy()).round();
            assert!(close(*p, [i * rect.dx(), j * rect.dy()], 1e-12));
        }
        for i in -2..=2 {
            for j in -2..=2 {
                let r = rect.lattice_point([i, j]);
                assert!(even.iter().any(|p| close(*p, r, 1e-12)));
            }
        }
    }

    proptest! {
        #[test]
        fn reciprocal_additive(hx in -20i64..20, hy in -20i64..20, gx in -20i64..20, gy in -20i64..20,
                               kx in -5.0f64..5.0, ky in -5.0f64..5.0, tri in any::<bool>()) {
            let lat = if tri { Lattice::triangular(1.0).unwrap() } else { Lattice::rectangular(1.0, 1.4).unwrap() };
            let k0 = BlochVector::new(kx, ky);
            let a = lat.reciprocal_vector([hx + gx, hy + gy], k0).q;
            let b = lat.reciprocal_vector([hx, hy], k0).q;
            let c = lat.reciprocal_vector([gx, gy], BlochVector::GAMMA).q;
            prop_assert!(close([a[0] - b[0], a[1] - b[1]], c, 1e-10));
        }

        #[test]
        fn reduce_lands_in_quadrant(kx in -50.0f64..50.0, ky in -50.0f64..50.0, rho in 0.5f64..3.0) {
            let lat = Lattice::with_aspect(rho).unwrap();
            let r = lat.reduce(BlochVector::new(kx, ky)).unwrap();
            prop_assert!((0.0..=0.5).contains(&r[0]) && (0.0..=0.5).contains(&r[1]));
            let raw = lat.reduced(BlochVector::new(kx, ky));
            for a in 0..2 {
                let frac = raw[a] - raw[a].round();
                prop_assert!((frac.abs() - r[a]).abs() < 1e-12);
            }
        }
    }
}
