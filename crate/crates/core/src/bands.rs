//! Band structure: pole-bracketed dispersion roots, band diagrams along
//! Brillouin-zone paths, band surfaces, isofrequency contours and the
//! numeric density of states.

use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::green::{self, BlochRatio};
use crate::lattice::{norm, BlochVector, Lattice, PathSample, Vec2};
use crate::latsum::{Parity, SpectralKernel, SumConfig};

/// Default massless tolerance, relative to k.
pub const DEFAULT_CLASS_TOL: f64 = 1e-4;
/// Poles closer than this (relative to k) are one degenerate light line.
pub const POLE_MERGE_TOL: f64 = 1e-9;
/// Bisection stops once the bracket is this narrow.
pub const ROOT_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandClass {
    Massless,
    Massive,
}

impl fmt::Display for BandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandClass::Massless => "massless",
            BandClass::Massive => "massive",
        })
    }
}

/// One dispersion root at fixed k0. `index` counts every root above k = 0,
/// massless roots once per independent mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRoot {
    pub index: usize,
    pub k: f64,
    pub class: BandClass,
}

/// A set of light lines meeting at one value |Q_h|.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleCluster {
    pub q: f64,
    pub members: Vec<[i64; 2]>,
}

impl PoleCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Groups the kernel's poles into degenerate clusters.
pub fn pole_clusters(kern: &SpectralKernel) -> Vec<PoleCluster> {
    let mut out: Vec<PoleCluster> = Vec::new();
    for p in kern.poles() {
        match out.last_mut() {
            Some(c) if p.q - c.q <= POLE_MERGE_TOL * p.q.max(1e-3) => c.members.push(p.h),
            _ => out.push(PoleCluster { q: p.q, members: vec![p.h] }),
        }
    }
    out
}

fn check_range(k_range: (f64, f64)) -> Result<()> {
    let (lo, hi) = k_range;
    if !(lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("k range ({lo}, {hi}) needs 0 < min and finite bounds")));
    }
    Ok(())
}

/// Sorted dispersion roots in [k_min, k_max], using the default massless
/// tolerance.
pub fn band_roots(k0: BlochVector, lattice: &Lattice, k_range: (f64, f64), cfg: &SumConfig) -> Result<Vec<BandRoot>> {
    band_roots_tol(k0, lattice, k_range, cfg, DEFAULT_CLASS_TOL)
}

/// As [`band_roots`] with the massless tolerance `class_tol` (relative to k).
pub fn band_roots_tol(
    k0: BlochVector,
    lattice: &Lattice,
    k_range: (f64, f64),
    cfg: &SumConfig,
    class_tol: f64,
) -> Result<Vec<BandRoot>> {
    check_range(k_range)?;
    if k_range.1 <= k_range.0 {
        return Ok(Vec::new());
    }
    let kern = SpectralKernel::new(lattice, k0, Parity::All, k_range.1, cfg)?;
    roots_from_kernel(&kern, k_range, class_tol)
}

/// Roots of a kernel's sum in the range. Between consecutive distinct poles
/// the sum increases strictly from -inf to +inf, so each such interval holds
/// one massive root; a cluster of m coincident poles carries m - 1 massless
/// roots.
pub fn roots_from_kernel(kern: &SpectralKernel, k_range: (f64, f64), class_tol: f64) -> Result<Vec<BandRoot>> {
    let (kmin, kmax) = k_range;
    let clusters = pole_clusters(kern);
    let mut out = Vec::new();
    let mut idx = 0usize;
    for (i, c) in clusters.iter().enumerate() {
        if c.q > kmax {
            break;
        }
        let m = c.multiplicity();
        if m >= 2 {
            if c.q >= kmin {
                for j in 0..m - 1 {
                    out.push(BandRoot { index: idx + j, k: c.q, class: BandClass::Massless });
                }
            }
            idx += m - 1;
        }
        let Some(next) = clusters.get(i + 1) else {
            return Err(Error::NoConvergence("no pole above the requested range".into()));
        };
        let (lo, hi) = (c.q, next.q);
        if hi <= kmin {
            idx += 1;
            continue;
        }
        let a = lo.max(kmin);
        let b = hi.min(kmax);
        let sa = if a == lo { -1.0 } else { kern.eval(a) };
        let sb = if b == hi { 1.0 } else { kern.eval(b) };
        if sa < 0.0 && sb > 0.0 {
            let k = bisect(kern, a, b)?;
            diagnose_interval(kern, lo, hi);
            let near_degenerate = |cl: &PoleCluster| cl.multiplicity() >= 2 && (k - cl.q).abs() < class_tol * k;
            let class = if near_degenerate(c) || near_degenerate(next) { BandClass::Massless } else { BandClass::Massive };
            out.push(BandRoot { index: idx, k, class });
            idx += 1;
        } else if sa >= 0.0 {
            // The interval's root lies below k_min.
            idx += 1;
        }
    }
    Ok(out)
}

fn bisect(kern: &SpectralKernel, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if kern.eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!("bisection did not close on [{lo}, {hi}]")))
}

/// Logs pole intervals whose sampled sign pattern is not monotone.
fn diagnose_interval(kern: &SpectralKernel, lo: f64, hi: f64) {
    if !log::log_enabled!(log::Level::Warn) {
        return;
    }
    let mut changes = 0;
    let mut prev = -1.0;
    for t in [0.2, 0.4, 0.6, 0.8] {
        let s = kern.eval(lo + t * (hi - lo)).signum();
        if s != prev {
            changes += 1;
        }
        prev = s;
    }
    if prev < 0.0 {
        changes += 1;
    }
    if changes > 1 {
        log::warn!("more than one sign change between poles {lo} and {hi}");
    }
}

/// Massless iff some light line lies within `class_tol` (absolute) of k.
pub fn classify_band(k0: BlochVector, k: f64, lattice: &Lattice, class_tol: f64) -> BandClass {
    let (b1, b2) = lattice.reciprocal_basis();
    let cell = (b1[0] * b2[1] - b1[1] * b2[0]).abs();
    let reach = k + class_tol + norm(k0.as_array());
    let n = (reach * norm(b1).max(norm(b2)) / cell).ceil() as i64 + 1;
    for i in -n..=n {
        for j in -n..=n {
            if (lattice.reciprocal_vector([i, j], k0).norm - k).abs() < class_tol {
                return BandClass::Massless;
            }
        }
    }
    BandClass::Massive
}

/// A root of the two-sublattice system of a triangular lattice written as
/// interlaced rectangular lattices, with its Bloch-ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterlacedRoot {
    pub k: f64,
    /// Sublattice combination whose sum vanishes.
    pub parity: Parity,
    pub ratio: BlochRatio,
}

impl InterlacedRoot {
    pub fn is_triangular_mode(&self) -> bool {
        self.ratio.pass
    }
}

/// Massive candidate roots of the interlaced representation of a triangular
/// lattice in the range, each tagged by the Bloch-ratio filter.
pub fn interlaced_roots(
    k0: BlochVector,
    lattice: &Lattice,
    k_range: (f64, f64),
    cfg: &SumConfig,
    ratio_tol: f64,
) -> Result<Vec<InterlacedRoot>> {
    check_range(k_range)?;
    let rect = lattice.interlaced_rectangular()?;
    let mut out = Vec::new();
    if k_range.1 <= k_range.0 {
        return Ok(out);
    }
    for parity in [Parity::Even, Parity::Odd] {
        let kern = SpectralKernel::new(&rect, k0, parity, k_range.1, cfg)?;
        for r in roots_from_kernel(&kern, k_range, DEFAULT_CLASS_TOL)? {
            if r.class == BandClass::Massive {
                let ratio = green::bloch_ratio(r.k, k0, lattice, cfg, ratio_tol)?;
                out.push(InterlacedRoot { k: r.k, parity, ratio });
            }
        }
    }
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(out)
}

/// A band-diagram row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub leg: usize,
    pub param: f64,
    pub k0: BlochVector,
    pub band_index: usize,
    pub k: f64,
    pub class: BandClass,
}

/// A light line |Q_h(k0)| crossing the range at a path sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightLinePoint {
    pub leg: usize,
    pub param: f64,
    pub k0: BlochVector,
    pub h: [i64; 2],
    pub k: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BandDiagram {
    pub points: Vec<BandPoint>,
    pub light_lines: Vec<LightLinePoint>,
}

/// Roots and light lines at every path sample.
///
/// Bands are labelled by their ordinal among all roots above k = 0 at each
/// sample, which joins sheets continuously everywhere except where they
/// touch.
pub fn band_diagram(path: &[PathSample], lattice: &Lattice, k_range: (f64, f64), cfg: &SumConfig) -> Result<BandDiagram> {
    check_range(k_range)?;
    if k_range.1 <= k_range.0 {
        return Ok(BandDiagram::default());
    }
    let per_sample: Vec<Result<(Vec<BandPoint>, Vec<LightLinePoint>)>> = path
        .par_iter()
        .map(|s| {
            let kern = SpectralKernel::new(lattice, s.k0, Parity::All, k_range.1, cfg)?;
            let roots = roots_from_kernel(&kern, k_range, DEFAULT_CLASS_TOL)?;
            let points = roots
                .iter()
                .map(|r| BandPoint { leg: s.leg, param: s.param, k0: s.k0, band_index: r.index, k: r.k, class: r.class })
                .collect();
            let lines = kern
                .poles()
                .iter()
                .filter(|p| p.q >= k_range.0 && p.q <= k_range.1)
                .map(|p| LightLinePoint { leg: s.leg, param: s.param, k0: s.k0, h: p.h, k: p.q })
                .collect();
            Ok((points, lines))
        })
        .collect();
    let mut out = BandDiagram::default();
    for r in per_sample {
        let (p, l) = r?;
        out.points.extend(p);
        out.light_lines.extend(l);
    }
    Ok(out)
}

/// Axis-aligned rectangle of Bloch vectors sampled at `nx` by `ny` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl SurfaceGrid {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::InvalidInput("surface grid needs at least 2 nodes per axis and increasing bounds".into()));
        }
        Ok(Self { x, y, nx, ny })
    }

    /// First quadrant of the Brillouin zone of a rectangular lattice.
    pub fn quadrant(lattice: &Lattice, n: usize) -> Result<Self> {
        Self::new((0.0, PI / lattice.dx()), (0.0, PI / lattice.dy()), n, n)
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y, self.ny)
    }
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Dispersion roots at the nodes of a grid, stored row by row in y.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSurface {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub k_range: (f64, f64),
    pub nodes: Vec<Vec<BandRoot>>,
}

impl BandSurface {
    pub fn nx(&self) -> usize {
        self.kx.len()
    }

    pub fn ny(&self) -> usize {
        self.ky.len()
    }

    pub fn node(&self, i: usize, j: usize) -> &[BandRoot] {
        &self.nodes[j * self.nx() + i]
    }

    /// k of band `band` at node (i, j), if it falls inside the range.
    pub fn sheet(&self, band: usize, i: usize, j: usize) -> Option<f64> {
        let roots = self.node(i, j);
        let first = roots.first()?.index;
        roots.get(band.checked_sub(first)?).map(|r| r.k)
    }

    /// Band indices present at some node.
    pub fn band_indices(&self) -> std::ops::Range<usize> {
        let lo = self.nodes.iter().filter_map(|n| n.first()).map(|r| r.index).min();
        let hi = self.nodes.iter().filter_map(|n| n.last()).map(|r| r.index).max();
        match (lo, hi) {
            (Some(a), Some(b)) => a..b + 1,
            _ => 0..0,
        }
    }
}

/// Roots at every node of the grid.
pub fn band_surface(grid: &SurfaceGrid, lattice: &Lattice, k_range: (f64, f64), cfg: &SumConfig) -> Result<BandSurface> {
    check_range(k_range)?;
    let (kx, ky) = (grid.xs(), grid.ys());
    let pts: Vec<BlochVector> = ky.iter().flat_map(|&y| kx.iter().map(move |&x| BlochVector::new(x, y))).collect();
    let nodes: Result<Vec<Vec<BandRoot>>> = pts.par_iter().map(|&k0| band_roots(k0, lattice, k_range, cfg)).collect();
    Ok(BandSurface { kx, ky, k_range, nodes: nodes? })
}

/// Central-difference gradient of band `band_index` in k0.
pub fn band_gradient(
    k0: BlochVector,
    band_index: usize,
    lattice: &Lattice,
    k_range: (f64, f64),
    cfg: &SumConfig,
    step: f64,
) -> Result<Vec2> {
    let at = |dx: f64, dy: f64| -> Result<f64> {
        let roots = band_roots(BlochVector::new(k0.x + dx, k0.y + dy), lattice, k_range, cfg)?;
        roots
            .iter()
            .find(|r| r.index == band_index)
            .map(|r| r.k)
            .ok_or_else(|| Error::InvalidInput(format!("band {band_index} leaves the range near k0 = ({}, {})", k0.x, k0.y)))
    };
    Ok([(at(step, 0.0)? - at(-step, 0.0)?) / (2.0 * step), (at(0.0, step)? - at(0.0, -step)?) / (2.0 * step)])
}

/// A contour polyline on one band sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub band: usize,
    pub points: Vec<Vec2>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoContour {
    pub k: f64,
    pub polylines: Vec<Polyline>,
}

/// Grid edge key: (horizontal?, i, j) for the edge leaving node (i, j).
type EdgeKey = (bool, usize, usize);

struct Segment {
    a: (EdgeKey, Vec2),
    b: (EdgeKey, Vec2),
    cell: (usize, usize),
}

/// Marching-squares segments of sheet `band` at `level`.
fn sheet_segments(s: &BandSurface, band: usize, level: f64) -> Vec<Segment> {
    let (nx, ny) = (s.nx(), s.ny());
    let mut segs = Vec::new();
    let val = |i: usize, j: usize| s.sheet(band, i, j).map(|k| k - level);
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (Some(f00), Some(f10), Some(f11), Some(f01)) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1))
            else {
                continue;
            };
            let (x0, x1, y0, y1) = (s.kx[i], s.kx[i + 1], s.ky[j], s.ky[j + 1]);
            let cross = |fa: f64, fb: f64| fa / (fa - fb);
            let pos = |f: f64| f >= 0.0;
            // Edges in order bottom, right, top, left.
            let mut hits: Vec<(EdgeKey, Vec2)> = Vec::with_capacity(4);
            if pos(f00) != pos(f10) {
                hits.push(((true, i, j), [x0 + cross(f00, f10) * (x1 - x0), y0]));
            }
            if pos(f10) != pos(f11) {
                hits.push(((false, i + 1, j), [x1, y0 + cross(f10, f11) * (y1 - y0)]));
            }
            if pos(f01) != pos(f11) {
                hits.push(((true, i, j + 1), [x0 + cross(f01, f11) * (x1 - x0), y1]));
            }
            if pos(f00) != pos(f01) {
                hits.push(((false, i, j), [x0, y0 + cross(f00, f01) * (y1 - y0)]));
            }
            match hits.len() {
                2 => segs.push(Segment { a: hits[0], b: hits[1], cell: (i, j) }),
                4 => {
                    // Saddle: the centre value decides which corners connect.
                    let centre = 0.25 * (f00 + f10 + f11 + f01);
                    let (p, q) = if pos(centre) == pos(f00) { ((0, 1), (2, 3)) } else { ((0, 3), (1, 2)) };
                    segs.push(Segment { a: hits[p.0], b: hits[p.1], cell: (i, j) });
                    segs.push(Segment { a: hits[q.0], b: hits[q.1], cell: (i, j) });
                }
                _ => {}
            }
        }
    }
    segs
}

/// Chains segments sharing grid edges into polylines.
fn chain(segs: &[Segment], band: usize) -> Vec<Polyline> {
    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (n, s) in segs.iter().enumerate() {
        by_edge.entry(s.a.0).or_default().push(n);
        by_edge.entry(s.b.0).or_default().push(n);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let other = |n: usize, e: EdgeKey| -> Option<usize> { by_edge[&e].iter().copied().find(|&m| m != n) };
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        // Walk backwards to an open end, if any, so chains start at a boundary.
        let mut first = start;
        let mut entry = segs[start].a.0;
        loop {
            match other(first, entry).filter(|&m| !used[m]) {
                Some(m) if m != start => {
                    entry = if segs[m].a.0 == entry { segs[m].b.0 } else { segs[m].a.0 };
                    first = m;
                }
                _ => break,
            }
        }
        let seg = &segs[first];
        let (mut pts, mut exit) = if seg.a.0 == entry { (vec![seg.a.1, seg.b.1], seg.b.0) } else { (vec![seg.b.1, seg.a.1], seg.a.0) };
        used[first] = true;
        let mut closed = false;
        let mut cur = first;
        while let Some(m) = other(cur, exit) {
            if used[m] {
                closed = m == first;
                break;
            }
            used[m] = true;
            let s = &segs[m];
            let (p, e) = if s.a.0 == exit { (s.b.1, s.b.0) } else { (s.a.1, s.a.0) };
            pts.push(p);
            exit = e;
            cur = m;
        }
        if closed {
            pts.push(pts[0]);
        }
        out.push(Polyline { band, points: pts, closed });
    }
    out
}

/// Isofrequency contours of every sheet at `level`, by marching squares
/// with linear interpolation along grid edges.
pub fn isofrequency(surface: &BandSurface, level: f64) -> IsoContour {
    let mut polylines = Vec::new();
    for b in surface.band_indices() {
        let segs = sheet_segments(surface, b, level);
        polylines.extend(chain(&segs, b));
    }
    IsoContour { k: level, polylines }
}

/// Numeric DOS with the bookkeeping of dropped contour pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DosEstimate {
    pub k: f64,
    pub value: f64,
    pub segments: usize,
    /// Segments whose difference stencil crossed a kink of the sheet.
    pub unresolved: usize,
}

/// N(k) = (2k / 4 pi^2) sum over contours of ds / |v_g| with
/// |v_g| = 2k |grad k|, over the part of k0 space covered by the surface.
pub fn dos_numeric(surface: &BandSurface, level: f64) -> DosEstimate {
    let nx = surface.nx();
    let mut total = 0.0;
    let mut segments = 0;
    let mut unresolved = 0;
    for b in surface.band_indices() {
        let kinked = kink_mask(surface, b);
        for seg in sheet_segments(surface, b, level) {
            segments += 1;
            let (i, j) = seg.cell;
            if kinked[j * nx + i] || kinked[j * nx + i + 1] || kinked[(j + 1) * nx + i] || kinked[(j + 1) * nx + i + 1] {
                unresolved += 1;
                continue;
            }
            let f = |a: usize, c: usize| surface.sheet(b, a, c).unwrap_or(f64::NAN);
            let (f00, f10, f01, f11) = (f(i, j), f(i + 1, j), f(i, j + 1), f(i + 1, j + 1));
            let (hx, hy) = (surface.kx[i + 1] - surface.kx[i], surface.ky[j + 1] - surface.ky[j]);
            let mid = [0.5 * (seg.a.1[0] + seg.b.1[0]), 0.5 * (seg.a.1[1] + seg.b.1[1])];
            let u = (mid[0] - surface.kx[i]) / hx;
            let v = (mid[1] - surface.ky[j]) / hy;
            // Gradient of the bilinear interpolant at the segment midpoint.
            let gx = ((f10 - f00) * (1.0 - v) + (f11 - f01) * v) / hx;
            let gy = ((f01 - f00) * (1.0 - u) + (f11 - f10) * u) / hy;
            let g = gx.hypot(gy);
            if !(g > 0.0) || !g.is_finite() {
                unresolved += 1;
                continue;
            }
            let ds = (seg.b.1[0] - seg.a.1[0]).hypot(seg.b.1[1] - seg.a.1[1]);
            total += ds / g;
        }
    }
    DosEstimate { k: level, value: total / (4.0 * PI * PI), segments, unresolved }
}

/// Nodes whose second difference along either axis is comparable to the
/// first difference implied by the full gradient, the signature of a kink.
fn kink_mask(s: &BandSurface, band: usize) -> Vec<bool> {
    let (nx, ny) = (s.nx(), s.ny());
    let mut mask = vec![false; nx * ny];
    for j in 1..ny.saturating_sub(1) {
        for i in 1..nx.saturating_sub(1) {
            let (Some(f), Some(l), Some(r), Some(d), Some(u)) = (
                s.sheet(band, i, j),
                s.sheet(band, i - 1, j),
                s.sheet(band, i + 1, j),
                s.sheet(band, i, j - 1),
                s.sheet(band, i, j + 1),
            ) else {
                continue;
            };
            let (hx, hy) = (s.kx[i + 1] - s.kx[i], s.ky[j + 1] - s.ky[j]);
            let g = ((r - l) / (2.0 * hx)).hypot((u - d) / (2.0 * hy));
            let second_x = (r - 2.0 * f + l).abs() / hx;
            let second_y = (u - 2.0 * f + d).abs() / hy;
            mask[j * nx + i] = second_x.max(second_y) > 0.5 * g + 1e-12;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latsum;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn triangular_gamma_first_root_and_index() {
        let tri = Lattice::triangular(1.0).unwrap();
        let cfg = SumConfig::default();
        let roots = band_roots(BlochVector::GAMMA, &tri, (3.0, 6.0), &cfg).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].index, 0);
        assert_eq!(roots[0].class, BandClass::Massive);
        assert!((roots[0].k - 4.2464).abs() < 1e-3);
    }

    #[test]
    fn interlaced_candidates_and_filter() {
        let tri = Lattice::triangular(1.0).unwrap();
        let cfg = SumConfig::default();
        let c = interlaced_roots(BlochVector::GAMMA, &tri, (3.0, 6.0), &cfg, green::DEFAULT_RATIO_TOL).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c[0].is_triangular_mode() && !c[1].is_triangular_mode());
        assert_eq!(c[0].parity, Parity::Even);
        let direct = band_roots(BlochVector::GAMMA, &tri, (3.0, 6.0), &cfg).unwrap();
        assert!((direct[0].k - c[0].k).abs() < 1e-9);
    }

    #[test]
    fn degenerate_light_lines_give_massless_roots() {
        let lat = Lattice::with_aspect(SQRT_2).unwrap();
        let cfg = SumConfig::default();
        let y = lat.symmetry_point("Y").unwrap().k0;
        let roots = band_roots(y, &lat, (6.0, 7.0), &cfg).unwrap();
        let target = 3.0 * PI / SQRT_2;
        let at: Vec<_> = roots.iter().filter(|r| (r.k - target).abs() < 1e-9).collect();
        assert_eq!(at.len(), 5);
        assert!(at.iter().all(|r| r.class == BandClass::Massless));
        let idx: Vec<usize> = at.iter().map(|r| r.index).collect();
        assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn index_offset_matches_full_range() {
        let lat = Lattice::rectangular(1.0, 1.3).unwrap();
        let cfg = SumConfig::default();
        let k0 = BlochVector::new(0.7, 0.3);
        let full = band_roots(k0, &lat, (0.01, 12.0), &cfg).unwrap();
        let part = band_roots(k0, &lat, (7.0, 12.0), &cfg).unwrap();
        let tail: Vec<_> = full.iter().filter(|r| r.k >= 7.0).copied().collect();
        assert_eq!(tail.len(), part.len());
        for (a, b) in tail.iter().zip(&part) {
            assert_eq!(a.index, b.index);
            assert!((a.k - b.k).abs() < 1e-9);
        }
        assert!(full.windows(2).all(|w| w[1].index == w[0].index + 1 && w[1].k >= w[0].k));
    }

    #[test]
    fn empty_ranges() {
        let lat = Lattice::square(1.0).unwrap();
        let cfg = SumConfig::default();
        let k0 = BlochVector::new(0.5, 0.2);
        let poles: Vec<f64> = SpectralKernel::new(&lat, k0, Parity::All, 10.0, &cfg).unwrap().poles().iter().map(|p| p.q).collect();
        let p = poles.iter().copied().find(|&q| q > 5.0).unwrap();
        let r = band_roots(k0, &lat, (p + 1e-6, p + 2e-6), &cfg).unwrap();
        assert!(r.is_empty());
        assert!(band_roots(k0, &lat, (5.0, 4.0), &cfg).unwrap().is_empty());
        assert!(band_roots(k0, &lat, (0.0, 4.0), &cfg).is_err());
    }

    #[test]
    fn classify_on_and_off_light_lines() {
        let lat = Lattice::rectangular(1.0, 1.5).unwrap();
        let k0 = BlochVector::new(0.4, 0.9);
        let q = lat.reciprocal_vector([1, -1], k0).norm;
        assert_eq!(classify_band(k0, q, &lat, 1e-4 * q), BandClass::Massless);
        let cfg = SumConfig::default();
        for r in band_roots(k0, &lat, (1.0, 9.0), &cfg).unwrap() {
            assert_eq!(classify_band(k0, r.k, &lat, 1e-4 * r.k), r.class);
        }
    }

    #[test]
    fn neutral_massive_alternation_near_y() {
        let lat = Lattice::with_aspect(SQRT_2).unwrap();
        let cfg = SumConfig::default();
        let y = lat.symmetry_point("Y").unwrap().k0;
        let m = lat.symmetry_point("M").unwrap().k0;
        let classes = |k0: BlochVector| -> Vec<BandClass> {
            band_roots(k0, &lat, (6.2, 7.2), &cfg).unwrap().iter().map(|r| r.class).collect()
        };
        let on_my = BlochVector::new(y.x + 0.15 * (m.x - y.x), y.y);
        let on_yg = BlochVector::new(0.0, 0.85 * y.y);
        use BandClass::*;
        assert_eq!(classes(on_my), vec![Massless, Massive, Massless, Massive, Massless]);
        assert_eq!(classes(on_yg), vec![Massive, Massless, Massive, Massless, Massive]);
    }

    #[test]
    fn diagram_emits_light_lines_and_global_labels() {
        let lat = Lattice::with_aspect(SQRT_2).unwrap();
        let cfg = SumConfig::default();
        let pts = ["G", "X"].map(|n| lat.symmetry_point(n).unwrap());
        let path = lat.bz_path(&pts, 6).unwrap();
        let d = band_diagram(&path, &lat, (8.0, 10.0), &cfg).unwrap();
        assert!(!d.points.is_empty() && !d.light_lines.is_empty());
        let end = path.last().unwrap().param;
        let x = d.points.iter().filter(|p| p.param == end);
        assert!(x.filter(|p| (p.k - 3.0 * PI).abs() < 1e-9).count() >= 1);
        assert!(band_diagram(&path, &lat, (8.0, 8.0), &cfg).unwrap().points.is_empty());
    }

    fn circle_surface(n: usize) -> BandSurface {
        // Synthetic sheet k = 1 + |k0|^2 on [-1, 1]^2.
        let grid = SurfaceGrid::new((-1.0, 1.0), (-1.0, 1.0), n, n).unwrap();
        let (kx, ky) = (grid.xs(), grid.ys());
        let mut nodes = Vec::new();
        for &y in &ky {
            for &x in &kx {
                nodes.push(vec![BandRoot { index: 3, k: 1.0 + x * x + y * y, class: BandClass::Massive }]);
            }
        }
        BandSurface { kx, ky, k_range: (0.5, 4.0), nodes }
    }

    #[test]
    fn contour_of_paraboloid_is_closed_circle() {
        let s = circle_surface(81);
        let c = isofrequency(&s, 1.25);
        assert_eq!(c.polylines.len(), 1);
        let p = &c.polylines[0];
        assert!(p.closed && p.band == 3);
        for v in &p.points {
            assert!((v[0].hypot(v[1]) - 0.5).abs() < 1e-3);
        }
        assert!(isofrequency(&s, 0.9).polylines.is_empty());
    }

    #[test]
    fn contour_vertices_reinterpolate_to_level() {
        let s = circle_surface(41);
        let level = 1.37;
        for p in isofrequency(&s, level).polylines {
            for v in &p.points {
                // Vertices lie on grid lines; linear interpolation of the
                // sheet along that line returns the level.
                let h = s.kx[1] - s.kx[0];
                let on_x = ((v[0] - s.kx[0]) / h).round() * h + s.kx[0];
                let t = if (v[0] - on_x).abs() < 1e-12 { v[1] } else { v[0] };
                let fixed = if (v[0] - on_x).abs() < 1e-12 { v[0] } else { v[1] };
                let i = (((t - s.kx[0]) / h).floor() as usize).min(s.nx() - 2);
                let (a, b) = (s.kx[i], s.kx[i + 1]);
                let f = |u: f64| 1.0 + u * u + fixed * fixed;
                let interp = f(a) + (f(b) - f(a)) * (t - a) / (b - a);
                assert!((interp - level).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dos_of_paraboloid() {
        // k = 1 + r^2: contour length 2 pi r, |grad k| = 2r, so N = 1/(4 pi).
        let s = circle_surface(201);
        let d = dos_numeric(&s, 1.3);
        assert!((d.value - 1.0 / (4.0 * PI)).abs() < 2e-3 / (4.0 * PI), "{}", d.value);
        assert_eq!(d.unresolved, 0);
        assert_eq!(dos_numeric(&s, 0.8).value, 0.0);
    }

    #[test]
    fn surface_mirror_symmetry() {
        let lat = Lattice::with_aspect(SQRT_2).unwrap();
        let cfg = SumConfig::default();
        let grid = SurfaceGrid::new((-1.5, 1.5), (0.2, 1.0), 5, 3).unwrap();
        let s = band_surface(&grid, &lat, (2.0, 5.0), &cfg).unwrap();
        for j in 0..3 {
            for i in 0..5 {
                let (a, b) = (s.node(i, j), s.node(4 - i, j));
                assert_eq!(a.len(), b.len());
                for (p, q) in a.iter().zip(b) {
                    assert_eq!(p.index, q.index);
                    assert!((p.k - q.k).abs() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn roots_bracket_sign_changes(kx in 0.0f64..3.1, ky in 0.0f64..2.2, rho in 1.0f64..2.0) {
            let lat = Lattice::with_aspect(rho).unwrap();
            let cfg = SumConfig::default();
            let k0 = BlochVector::new(kx, ky / rho);
            let kern = SpectralKernel::new(&lat, k0, Parity::All, 9.0, &cfg).unwrap();
            let roots = roots_from_kernel(&kern, (1.0, 9.0), DEFAULT_CLASS_TOL).unwrap();
            for r in &roots {
                let w = 5e-9;
                let (a, b) = (kern.eval(r.k - w), kern.eval(r.k + w));
                prop_assert!(a != b && (a < 0.0) != (b < 0.0) || r.class == BandClass::Massless);
            }
            let direct = latsum::spectral_dispersion_sum(5.0, k0, &lat, &cfg);
            if let Ok(v) = direct {
                prop_assert!((v - kern.eval(5.0)).abs() < 1e-8 * v.abs().max(1e-4));
            }
        }
    }
}
