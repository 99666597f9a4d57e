//! Light-line geometry: degenerate-line trajectories in the reduced zone of a
//! rectangular lattice, their triple intersections, cone expansions about
//! degenerate points and the analytic density-of-states coefficients.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use crate::error::{Error, Result};
use crate::lattice::{dot, norm, BlochVector, Lattice, Vec2};

/// Exact rational.
pub type Q = Ratio<i128>;

/// Reciprocal index h = (n, m) in the lattice's own reciprocal basis, so
/// Q_h = k0 + n b1 + m b2. On a rectangular lattice n runs along x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LightLineIndex {
    pub n: i64,
    pub m: i64,
}

impl LightLineIndex {
    pub fn new(n: i64, m: i64) -> Self {
        Self { n, m }
    }

    pub fn h(self) -> [i64; 2] {
        [self.n, self.m]
    }
}

/// k = |Q_h(k0)| on the light line of index q.
pub fn light_line_k(q: LightLineIndex, k0: BlochVector, lattice: &Lattice) -> f64 {
    lattice.reciprocal_vector(q.h(), k0).norm
}

/// Squared aspect ratio rho^2 = (d_y / d_x)^2, exact when rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AspectSquared {
    Rational(Q),
    Real(f64),
}

impl AspectSquared {
    pub fn rational(p: i128, q: i128) -> Result<Self> {
        if q == 0 || p.signum() * q.signum() <= 0 {
            return Err(Error::InvalidInput(format!("rho^2 = {p}/{q} must be positive")));
        }
        Ok(Self::Rational(Q::new(p, q)))
    }

    /// rho^2 from rho, recognised as a fraction with denominator at most 1000
    /// when it matches to 1e-13 relative.
    pub fn from_rho(rho: f64) -> Result<Self> {
        Self::from_value(rho * rho)
    }

    pub fn from_value(r2: f64) -> Result<Self> {
        if !(r2 > 0.0 && r2.is_finite()) {
            return Err(Error::InvalidInput(format!("rho^2 = {r2} must be positive")));
        }
        for q in 1..=1000i128 {
            let p = (r2 * q as f64).round();
            if p >= 1.0 && (p / q as f64 - r2).abs() <= 1e-13 * r2 {
                return Ok(Self::Rational(Q::new(p as i128, q)));
            }
        }
        Ok(Self::Real(r2))
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            Self::Real(v) => *v,
        }
    }

    pub fn rho(&self) -> f64 {
        self.value().sqrt()
    }
}

/// Orientation-specific form of a degeneracy line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineKind {
    General,
    /// kappa_x constant; `allowed` when it is one of -1/2, 0, 1/2.
    Vertical { kappa_x: f64, allowed: bool },
    /// kappa_y constant.
    Horizontal { kappa_y: f64, allowed: bool },
}

/// Locus a kappa_x + b kappa_y = c of reduced Bloch vectors at which the light
/// lines of two modes coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyLine {
    pub q1: LightLineIndex,
    pub q2: LightLineIndex,
    pub rho2: AspectSquared,
    pub coeffs: [f64; 3],
    pub exact: Option<[Q; 3]>,
    pub kind: LineKind,
}

fn line_coeffs<T>(q1: LightLineIndex, q2: LightLineIndex, r2: T, lift: impl Fn(i64) -> T) -> [T; 3]
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let (n, m, n2, m2) = (q1.n, q1.m, q2.n, q2.m);
    let a = lift(-2) * r2 * lift(n - n2);
    let b = lift(2 * (m2 - m));
    let c = r2 * lift(n * n - n2 * n2) + lift(m * m - m2 * m2);
    [a, b, c]
}

/// Degeneracy line of the light lines q1 and q2 at aspect ratio rho.
pub fn degeneracy_line(q1: LightLineIndex, q2: LightLineIndex, rho2: AspectSquared) -> Result<DegeneracyLine> {
    if q1 == q2 {
        return Err(Error::IdenticalModes);
    }
    let (coeffs, exact) = match rho2 {
        AspectSquared::Rational(r) => {
            let e = line_coeffs(q1, q2, r, |v| Q::from(v as i128));
            (e.map(|v| v.to_f64().unwrap_or(f64::NAN)), Some(e))
        }
        AspectSquared::Real(r) => (line_coeffs(q1, q2, r, |v| v as f64), None),
    };
    let allowed = |v: f64| [-0.5, 0.0, 0.5].iter().any(|a| (v - a).abs() < 1e-15);
    let kind = if q1.m == q2.m {
        let kx = -0.5 * (q1.n + q2.n) as f64;
        LineKind::Vertical { kappa_x: kx, allowed: allowed(kx) }
    } else if q1.n == q2.n {
        let ky = -0.5 * (q1.m + q2.m) as f64;
        LineKind::Horizontal { kappa_y: ky, allowed: allowed(ky) }
    } else {
        LineKind::General
    };
    Ok(DegeneracyLine { q1, q2, rho2, coeffs, exact, kind })
}

impl DegeneracyLine {
    /// The part of the line inside the closed quadrant [0, 1/2]^2, as its two
    /// endpoints in reduced coordinates.
    pub fn clip_quadrant(&self) -> Option<(Vec2, Vec2)> {
        let [a, b, c] = self.coeffs;
        let mut pts: Vec<Vec2> = Vec::new();
        let mut add = |p: Vec2| {
            let inside = (-1e-12..=0.5 + 1e-12).contains(&p[0]) && (-1e-12..=0.5 + 1e-12).contains(&p[1]);
            if inside && !pts.iter().any(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-12) {
                pts.push([p[0].clamp(0.0, 0.5), p[1].clamp(0.0, 0.5)]);
            }
        };
        if b != 0.0 {
            for x in [0.0, 0.5] {
                add([x, (c - a * x) / b]);
            }
        }
        if a != 0.0 {
            for y in [0.0, 0.5] {
                add([(c - b * y) / a, y]);
            }
        }
        match pts.len() {
            0 => None,
            1 => Some((pts[0], pts[0])),
            _ => Some((pts[0], pts[1])),
        }
    }
}

/// K = k d_x / 2 pi on the light line of mode q at reduced Bloch vector kappa.
pub fn reduced_light_line(q: LightLineIndex, kappa: Vec2, rho2: f64) -> f64 {
    ((q.n as f64 + kappa[0]).powi(2) + (q.m as f64 + kappa[1]).powi(2) / rho2).sqrt()
}

/// Common point of three light lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleIntersection {
    pub sextet: [i64; 6],
    pub kappa: Vec2,
    /// Frequency for d_x = 1.
    pub k: f64,
    /// Exact (kappa_x, kappa_y, K^2) with K = k d_x / 2 pi.
    pub exact: Option<(Q, Q, Q)>,
    pub in_quadrant: bool,
    /// Number of light lines through the point.
    pub multiplicity: usize,
}

impl TripleIntersection {
    /// k as a surd times pi, for d_x = 1.
    pub fn k_radical(&self) -> Option<String> {
        self.exact.as_ref().and_then(|(_, _, k2)| pi_surd(k2))
    }

    pub fn modes(&self) -> [LightLineIndex; 3] {
        let s = self.sextet;
        [LightLineIndex::new(s[0], s[1]), LightLineIndex::new(s[2], s[3]), LightLineIndex::new(s[4], s[5])]
    }
}

struct TriplePoint<T> {
    kx: T,
    ky: T,
    k2: T,
}

fn triple_point<T>(s: [i64; 6], r2: T, lift: impl Fn(i64) -> T, is_zero: impl Fn(&T) -> bool) -> Option<TriplePoint<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let [n, m, n1, m1, n2, m2] = s;
    let dy = lift(2 * (m * (n2 - n1) + m1 * (n - n2) + m2 * (n1 - n)));
    if is_zero(&dy) {
        return None;
    }
    let dx = lift(2) * r2 * lift(m * (n2 - n1) + m1 * (n - n2) + m2 * (n1 - n));
    let nx = lift(m1 * (m2 * m2 - m * m) + m2 * (m * m - m1 * m1) + m * (m1 * m1 - m2 * m2))
        + r2 * lift(n1 * n1 * (m - m2) + n2 * n2 * (m1 - m) + n * n * (m2 - m1));
    let ny = lift(n * (m2 * m2 - m1 * m1) + n1 * (m * m - m2 * m2) + n2 * (m1 * m1 - m * m))
        + r2 * lift((n - n1) * (n - n2) * (n1 - n2));
    let kx = nx / dx;
    let ky = ny / dy;
    let a = lift(n) + kx;
    let b = lift(m) + ky;
    let k2 = a * a + b * b / r2;
    Some(TriplePoint { kx, ky, k2 })
}

fn in_quadrant_q(v: &Q) -> bool {
    !v.is_negative() && *v <= Q::new(1, 2)
}

/// Intersection of the degeneracy lines (q, q') and (q, q'') for the sextet
/// (n, m, n', m', n'', m'').
pub fn triple_intersection(sextet: [i64; 6], rho2: AspectSquared) -> Result<TripleIntersection> {
    let (kappa, k2, exact, inq) = match rho2 {
        AspectSquared::Rational(r) => {
            let p = triple_point(sextet, r, |v| Q::from(v as i128), |v| v.is_zero()).ok_or(Error::ParallelLines)?;
            let f = |v: &Q| v.to_f64().unwrap_or(f64::NAN);
            let inq = in_quadrant_q(&p.kx) && in_quadrant_q(&p.ky);
            ([f(&p.kx), f(&p.ky)], f(&p.k2), Some((p.kx, p.ky, p.k2)), inq)
        }
        AspectSquared::Real(r) => {
            let p = triple_point(sextet, r, |v| v as f64, |v| *v == 0.0).ok_or(Error::ParallelLines)?;
            let inq = (-1e-12..=0.5 + 1e-12).contains(&p.kx) && (-1e-12..=0.5 + 1e-12).contains(&p.ky);
            ([p.kx, p.ky], p.k2, None, inq)
        }
    };
    let mut t = TripleIntersection { sextet, kappa, k: 2.0 * PI * k2.sqrt(), exact, in_quadrant: inq, multiplicity: 3 };
    t.multiplicity = count_lines_through(&t, rho2);
    Ok(t)
}

/// Number of modes (n, m) whose light line passes through the point.
fn count_lines_through(t: &TripleIntersection, rho2: AspectSquared) -> usize {
    let r2 = rho2.value();
    let kk = t.k / (2.0 * PI);
    let nlo = (-kk - t.kappa[0]).floor() as i64 - 1;
    let nhi = (kk - t.kappa[0]).ceil() as i64 + 1;
    let rk = r2.sqrt() * kk;
    let mlo = (-rk - t.kappa[1]).floor() as i64 - 1;
    let mhi = (rk - t.kappa[1]).ceil() as i64 + 1;
    let mut count = 0;
    for n in nlo..=nhi {
        for m in mlo..=mhi {
            let on = match (&t.exact, rho2) {
                (Some((kx, ky, k2)), AspectSquared::Rational(r)) => {
                    let a = Q::from(n as i128) + kx;
                    let b = Q::from(m as i128) + ky;
                    a * a + b * b / r == *k2
                }
                _ => {
                    let v = reduced_light_line(LightLineIndex::new(n, m), t.kappa, r2);
                    (v - kk).abs() <= 1e-12 * kk.max(1.0)
                }
            };
            if on {
                count += 1;
            }
        }
    }
    count
}

/// Distinct triple points with k <= k_max (d_x = 1) in the closed first
/// quadrant of the zone, from modes with |n|, |m| <= index_bound.
pub fn enumerate_triples(rho2: AspectSquared, k_max: f64, index_bound: i64) -> Result<Vec<TripleIntersection>> {
    if index_bound < 1 {
        return Err(Error::InvalidInput("index_bound must be at least 1".into()));
    }
    let modes: Vec<LightLineIndex> = (-index_bound..=index_bound)
        .flat_map(|n| (-index_bound..=index_bound).map(move |m| LightLineIndex::new(n, m)))
        .collect();
    let kmax_red = k_max / (2.0 * PI);
    let found: Vec<Vec<TripleIntersection>> = (0..modes.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i + 1..modes.len() {
                for l in j + 1..modes.len() {
                    let (a, b, c) = (modes[i], modes[j], modes[l]);
                    let s = [a.n, a.m, b.n, b.m, c.n, c.m];
                    let Ok(t) = triple_point_only(s, rho2) else { continue };
                    if t.in_quadrant && t.k / (2.0 * PI) <= kmax_red * (1.0 + 1e-12) {
                        out.push(t);
                    }
                }
            }
            out
        })
        .collect();
    let mut seen: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let mut unique: Vec<TripleIntersection> = Vec::new();
    for t in found.into_iter().flatten() {
        let key = ((t.kappa[0] * 1e9).round() as i64, (t.kappa[1] * 1e9).round() as i64, (t.k * 1e9).round() as i64);
        if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
            e.insert(unique.len());
            unique.push(t);
        }
    }
    for t in unique.iter_mut() {
        t.multiplicity = count_lines_through(t, rho2);
    }
    unique.sort_by(|a, b| {
        a.k.total_cmp(&b.k).then(a.kappa[0].total_cmp(&b.kappa[0])).then(a.kappa[1].total_cmp(&b.kappa[1]))
    });
    Ok(unique)
}

/// Triple point without the multiplicity count.
fn triple_point_only(sextet: [i64; 6], rho2: AspectSquared) -> Result<TripleIntersection> {
    match rho2 {
        AspectSquared::Rational(r) => {
            let p = triple_point(sextet, r, |v| Q::from(v as i128), |v| v.is_zero()).ok_or(Error::ParallelLines)?;
            let f = |v: &Q| v.to_f64().unwrap_or(f64::NAN);
            Ok(TripleIntersection {
                sextet,
                kappa: [f(&p.kx), f(&p.ky)],
                k: 2.0 * PI * f(&p.k2).sqrt(),
                in_quadrant: in_quadrant_q(&p.kx) && in_quadrant_q(&p.ky),
                exact: Some((p.kx, p.ky, p.k2)),
                multiplicity: 3,
            })
        }
        AspectSquared::Real(r) => {
            let p = triple_point(sextet, r, |v| v as f64, |v| *v == 0.0).ok_or(Error::ParallelLines)?;
            Ok(TripleIntersection {
                sextet,
                kappa: [p.kx, p.ky],
                k: 2.0 * PI * p.k2.sqrt(),
                in_quadrant: (-1e-12..=0.5 + 1e-12).contains(&p.kx) && (-1e-12..=0.5 + 1e-12).contains(&p.ky),
                exact: None,
                multiplicity: 3,
            })
        }
    }
}

/// Writes 2 pi sqrt(v) as p sqrt(t) pi / q with t square-free.
pub fn pi_surd(v: &Q) -> Option<String> {
    if v.is_negative() {
        return None;
    }
    if v.is_zero() {
        return Some("0".into());
    }
    let (a, b) = (*v.numer(), *v.denom());
    let ab = a.checked_mul(b)?;
    let (s, t) = square_split(ab);
    let coef = Q::new(2 * s, b);
    let (p, q) = (*coef.numer(), *coef.denom());
    let mut out = String::new();
    if p != 1 {
        out.push_str(&p.to_string());
    }
    if t != 1 {
        out.push('√');
        out.push_str(&t.to_string());
    }
    out.push('π');
    if q != 1 {
        out.push('/');
        out.push_str(&q.to_string());
    }
    Some(out)
}

/// x = s^2 t with t square-free.
fn square_split(mut x: i128) -> (i128, i128) {
    let (mut s, mut t) = (1i128, 1i128);
    let mut p = 2i128;
    while p * p <= x {
        while x % (p * p) == 0 {
            x /= p * p;
            s *= p;
        }
        if x % p == 0 {
            x /= p;
            t *= p;
        }
        p += 1;
    }
    (s, t * x)
}

/// Whether a cone expansion describes a conical sheet or one of the two
/// circles bounding a distorted contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeRole {
    Inner,
    Outer,
    Cone,
}

impl std::fmt::Display for ConeRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConeRole::Inner => "inner",
            ConeRole::Outer => "outer",
            ConeRole::Cone => "cone",
        })
    }
}

/// r(dk) = alpha dk - beta dk^2 for one family of pair crossings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeExpansion {
    /// Least-squares radius coefficient.
    pub alpha: f64,
    /// Radius coefficient from the light-line slope, k_D / |e . Q|.
    pub alpha_exact: f64,
    pub beta: f64,
    /// Normalised group speed |v_g| / k = 2 |dk/dt| along the crossing ray.
    pub c: f64,
    /// DOS coefficient alpha_exact / (pi c).
    pub gamma: f64,
    pub role: ConeRole,
    /// Number of light-line pairs in the family.
    pub pairs: usize,
    /// Largest fit residual relative to the largest radius.
    pub residual: f64,
    /// Largest dk of the ladder used.
    pub dk_max: f64,
}

/// Crossing ray of two light lines through a degenerate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCrossing {
    pub lines: (LightLineIndex, LightLineIndex),
    /// Unit vector along which the two lines stay degenerate.
    pub direction: Vec2,
    /// e . Q_i at the degenerate point.
    pub b: f64,
}

impl PairCrossing {
    /// Distance from the degenerate point of the nearer crossing at
    /// k = k_d + dk, from s^2 + 2 b s - delta = 0 with delta = k^2 - k_d^2.
    pub fn radius(&self, k_d: f64, dk: f64) -> f64 {
        let delta = dk * (2.0 * k_d + dk);
        let b = self.b;
        (delta / (b + b.signum() * (b * b + delta).sqrt())).abs()
    }
}

/// Light lines through (k0, k_d) to 1e-9 relative.
pub fn degenerate_lines(lattice: &Lattice, k0: BlochVector, k_d: f64) -> Vec<LightLineIndex> {
    let (b1, b2) = lattice.reciprocal_basis();
    let cell = (b1[0] * b2[1] - b1[1] * b2[0]).abs();
    let n = ((k_d + norm(k0.as_array())) * norm(b1).max(norm(b2)) / cell).ceil() as i64 + 1;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            if (lattice.reciprocal_vector([i, j], k0).norm - k_d).abs() <= 1e-9 * k_d {
                out.push(LightLineIndex::new(i, j));
            }
        }
    }
    out
}

/// Pair crossings of the given lines about (k0, k_d). Antipodal pairs,
/// which separate as sqrt(dk) rather than linearly, are omitted.
pub fn pair_crossings(lattice: &Lattice, k0: BlochVector, k_d: f64, lines: &[LightLineIndex]) -> Vec<PairCrossing> {
    let qs: Vec<Vec2> = lines.iter().map(|l| lattice.reciprocal_vector(l.h(), k0).q).collect();
    let mut out = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let d = [qs[i][0] - qs[j][0], qs[i][1] - qs[j][1]];
            let dn = norm(d);
            let e = [-d[1] / dn, d[0] / dn];
            let b = dot(e, qs[i]);
            if b.abs() < 1e-9 * k_d {
                continue;
            }
            let dir = if b > 0.0 { e } else { [-e[0], -e[1]] };
            out.push(PairCrossing { lines: (lines[i], lines[j]), direction: dir, b: b.abs() });
        }
    }
    out
}

const FIT_RESIDUAL_BOUND: f64 = 1e-6;
const LADDER: usize = 10;

/// Least-squares alpha, beta of r = alpha dk - beta dk^2 with the largest
/// relative residual, over dk = dk_max j / LADDER.
fn fit_ladder(p: &PairCrossing, k_d: f64, dk_max: f64) -> (f64, f64, f64) {
    let (mut s22, mut s23, mut s33, mut s1r, mut s2r) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut data = Vec::with_capacity(LADDER);
    for j in 1..=LADDER {
        let dk = dk_max * j as f64 / LADDER as f64;
        let r = p.radius(k_d, dk);
        s22 += dk * dk;
        s23 += dk * dk * dk;
        s33 += dk.powi(4);
        s1r += dk * r;
        s2r += dk * dk * r;
        data.push((dk, r));
    }
    // Normal equations for (alpha, -beta).
    let det = s22 * s33 - s23 * s23;
    let alpha = (s1r * s33 - s2r * s23) / det;
    let nbeta = (s22 * s2r - s23 * s1r) / det;
    let rmax = data.iter().map(|d| d.1).fold(0.0, f64::max);
    let resid = data.iter().map(|&(dk, r)| (r - alpha * dk - nbeta * dk * dk).abs()).fold(0.0, f64::max) / rmax;
    (alpha, -nbeta, resid)
}

/// Cone expansions about the degenerate point (k0, k_d), one per family of
/// pair crossings with a common radius coefficient, ascending in alpha.
///
/// A family with as many pairs as there are degenerate lines is a conical
/// sheet; the remaining families pair up in order as the inner and outer
/// bounding circles of distorted contours.
pub fn cone_fit(lattice: &Lattice, k0: BlochVector, k_d: f64) -> Result<Vec<ConeExpansion>> {
    let lines = degenerate_lines(lattice, k0, k_d);
    if lines.len() < 2 {
        return Err(Error::InvalidInput(format!("k = {k_d} is not a degeneracy of two or more light lines")));
    }
    let mut crossings = pair_crossings(lattice, k0, k_d, &lines);
    crossings.sort_by(|a, b| b.b.total_cmp(&a.b));
    let mut groups: Vec<Vec<PairCrossing>> = Vec::new();
    for c in crossings {
        match groups.last_mut() {
            Some(g) if (g[0].b - c.b).abs() <= 1e-9 * k_d => g.push(c),
            _ => groups.push(vec![c]),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for g in &groups {
        let rep = &g[0];
        let mut dk_max = 1e-2;
        let (alpha, beta, residual) = loop {
            let fit = fit_ladder(rep, k_d, dk_max);
            if fit.2 <= FIT_RESIDUAL_BOUND {
                break fit;
            }
            if dk_max < 1e-4 {
                return Err(Error::FitResidual { residual: fit.2 });
            }
            dk_max *= 0.5;
        };
        let alpha_exact = k_d / rep.b;
        let c = 2.0 * rep.b / k_d;
        out.push(ConeExpansion {
            alpha,
            alpha_exact,
            beta,
            c,
            gamma: alpha_exact / (PI * c),
            role: ConeRole::Cone,
            pairs: g.len(),
            residual,
            dk_max,
        });
    }
    let mut pending: Option<usize> = None;
    for i in 0..out.len() {
        if out[i].pairs == lines.len() {
            continue;
        }
        match pending.take() {
            None => {
                out[i].role = ConeRole::Inner;
                pending = Some(i);
            }
            Some(_) => out[i].role = ConeRole::Outer,
        }
    }
    if pending.is_some() {
        log::warn!("unpaired bounding family at k = {k_d}");
    }
    Ok(out)
}

/// Leading DOS coefficient gamma = alpha / (pi c) of one cone.
pub fn analytic_dos(cone: &ConeExpansion) -> Result<f64> {
    if !(cone.alpha_exact > 0.0 && cone.c > 0.0) {
        return Err(Error::InvalidInput("analytic_dos needs alpha > 0 and c > 0".into()));
    }
    Ok(cone.alpha_exact / (PI * cone.c))
}

/// Proportionate distortion (outer - inner) / mean of a bounded contour.
pub fn distortion(inner: &ConeExpansion, outer: &ConeExpansion) -> f64 {
    (outer.alpha - inner.alpha) / (0.5 * (outer.alpha + inner.alpha))
}

/// The n-th degenerate frequency at Gamma of a triangular lattice whose
/// shell carries at least `min_lines` light lines.
pub fn triangular_gamma_degeneracy(lattice: &Lattice, min_lines: usize, n: usize) -> Result<f64> {
    if !lattice.is_triangular() {
        return Err(Error::InvalidInput("triangular lattice required".into()));
    }
    let d = lattice.d();
    // |K|^2 = (4 pi / (sqrt 3 d))^2 (h1^2 - h1 h2 + h2^2) over integer shells.
    let mut found = 0;
    for s in 1..10_000i64 {
        let mut count = 0;
        let r = (2.0 * (s as f64).sqrt()).ceil() as i64 + 1;
        for a in -r..=r {
            for b in -r..=r {
                if a * a - a * b + b * b == s {
                    count += 1;
                }
            }
        }
        if count >= min_lines.max(2) {
            found += 1;
            if found == n {
                return Ok(4.0 * PI / (3f64.sqrt() * d) * (s as f64).sqrt());
            }
        }
    }
    Err(Error::NoConvergence("shell not found".into()))
}

impl std::fmt::Display for LightLineIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.n, self.m)
    }
}

/// Exact value of a rational as f64.
pub fn q_to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
