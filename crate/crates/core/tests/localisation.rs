//! Localised cluster modes at rho = sqrt 2 and where they sit relative to
//! the band surfaces of the infinite lattice.

use std::f64::consts::{PI, SQRT_2};

use platonic_core::bands::{self, BandClass};
use platonic_core::cluster::{self, ClusterGeometry};
use platonic_core::latsum::SumConfig;
use platonic_core::{BlochVector, Lattice};

const FIRST_MODE: f64 = 3.069;
const SECOND_MODE: f64 = 4.4;

fn lattice() -> Lattice {
    Lattice::with_aspect(SQRT_2).unwrap()
}

fn first_band(lat: &Lattice, kx: f64, ky: f64) -> f64 {
    bands::band_roots(BlochVector::new(kx, ky), lat, (2.0, 4.0), &SumConfig::default()).unwrap()[0].k
}

/// Largest value of the first band on Gamma-X, by golden section.
fn gamma_x_saddle(lat: &Lattice) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.3 * PI, 0.95 * PI);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (first_band(lat, c, 0.0), first_band(lat, d, 0.0));
    while b - a > 1e-6 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = first_band(lat, c, 0.0);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = first_band(lat, d, 0.0);
        }
    }
    let x = 0.5 * (a + b);
    (x, first_band(lat, x, 0.0))
}

#[test]
fn first_mode_lies_below_first_surface_saddle() {
    let lat = lattice();
    let (x, ks) = gamma_x_saddle(&lat);
    // Maximum along Gamma-X, falling off towards Y: a saddle.
    assert!(first_band(&lat, x, 0.15) < ks);
    assert!(first_band(&lat, x - 0.15, 0.0) < ks && first_band(&lat, x + 0.15, 0.0) < ks);
    assert!((ks - 3.1538).abs() < 1e-2, "saddle at {ks}");
    assert!(FIRST_MODE < ks && ks - FIRST_MODE < 0.1);
}

#[test]
fn second_mode_lies_below_cone_vertex() {
    let lat = lattice();
    let roots = bands::band_roots(lat.gamma().k0, &lat, (4.0, 4.6), &SumConfig::default()).unwrap();
    let vertex = roots.iter().find(|r| r.class == BandClass::Massless).expect("massless root at Gamma");
    assert!((vertex.k - PI * SQRT_2).abs() < 1e-9);
    assert!(SECOND_MODE < vertex.k && vertex.k - SECOND_MODE < 0.1);
}

#[test]
fn localisation_regression() {
    let g = ClusterGeometry::rectangular(1.0, SQRT_2, 7).unwrap();
    for (k, dir, aniso) in [(FIRST_MODE, 90.0, 2.172371186), (SECOND_MODE, 0.0, 3.907032104)] {
        let loc = cluster::localization_metric(&cluster::solve_cluster(&g, k).unwrap()).unwrap();
        assert!((loc.direction_deg - dir).abs() < 1e-6, "k = {k}: {}", loc.direction_deg);
        assert!((loc.anisotropy / aniso - 1.0).abs() < 1e-6, "k = {k}: {}", loc.anisotropy);
    }
}

#[test]
fn forces_follow_the_localisation_axis() {
    // Share of |a|^2 on the pin column (m = 0) and pin row (n = 0) through the source.
    let g = ClusterGeometry::rectangular(1.0, SQRT_2, 7).unwrap();
    let share = |k: f64, on_line: fn((i64, i64)) -> bool| {
        let s = cluster::solve_cluster(&g, k).unwrap();
        let total: f64 = s.coefficients.iter().map(|a| a.norm_sqr()).sum();
        let line: f64 =
            g.labels.iter().zip(&s.coefficients).filter(|(l, _)| on_line(**l)).map(|(_, a)| a.norm_sqr()).sum();
        line / total
    };
    let column = |(m, _): (i64, i64)| m == 0;
    let row = |(_, n): (i64, i64)| n == 0;
    let uniform = 1.0 / 15.0;
    let (c1, r1) = (share(FIRST_MODE, column), share(FIRST_MODE, row));
    let (c2, r2) = (share(SECOND_MODE, column), share(SECOND_MODE, row));
    assert!(c1 > 2.0 * uniform && c1 > r1, "column {c1}, row {r1}");
    assert!(r2 > 5.0 * uniform && r2 > 3.0 * c2, "column {c2}, row {r2}");
}
