//! `platonic`: dispersion, Dirac-point and cluster computations for pinned
//! plates, written as CSV or JSON tables.

mod config;
mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use platonic_core::bands::{self, SurfaceGrid};
use platonic_core::cluster::{self, ClusterGeometry, ClusterOptions, FieldGrid, SourceConvention};
use platonic_core::green;
use platonic_core::lightlines::{self, AspectSquared};
use platonic_core::specfun::MAX_ORDER;
use platonic_core::{latsum, BlochVector, Error, Lattice, SumConfig};

use table::{Cell, Format, Table};

const MAX_GRID: usize = 4096;

#[derive(Parser)]
#[command(name = "platonic", version, about = "Flexural Bloch waves in pinned plates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band diagram along a path of symmetry points.
    Bands(BandsArgs),
    /// Band surface over a grid of Bloch vectors.
    Surface(SurfaceArgs),
    /// Isofrequency polylines of the band surface.
    Contours(ContoursArgs),
    /// Numerical density of states over a ladder of frequencies.
    Dos(DosArgs),
    /// Triple intersections of light lines for a rectangular aspect ratio.
    Triples(TriplesArgs),
    /// Cone expansions and DOS coefficients at a degenerate point.
    Cones(ConesArgs),
    /// Forced response of a finite rectangular cluster of pins.
    Cluster(ClusterArgs),
    /// Point values of the quasiperiodic or free-space Green's function.
    Greens(GreensArgs),
}

#[derive(Args, Serialize, Clone)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// key=value file read before the command-line flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Rectangular,
    Square,
    Triangular,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
struct LatticeArgs {
    #[arg(long, value_enum, default_value = "rectangular")]
    lattice: Family,
    /// Period d_x (the side d of a triangular lattice).
    #[arg(long, default_value_t = 1.0)]
    dx: f64,
    #[arg(long)]
    dy: Option<f64>,
    /// Aspect ratio d_y / d_x.
    #[arg(long)]
    rho: Option<f64>,
    /// Squared aspect ratio, as a number or a fraction p/q.
    #[arg(long)]
    rho_sq: Option<String>,
}

impl LatticeArgs {
    fn build(&self) -> Result<Lattice, Error> {
        let given = [self.dy.is_some(), self.rho.is_some(), self.rho_sq.is_some()].iter().filter(|b| **b).count();
        if given > 1 {
            return Err(Error::InvalidInput("give at most one of --dy, --rho, --rho-sq".into()));
        }
        match self.lattice {
            Family::Triangular | Family::Square if given > 0 => {
                Err(Error::InvalidInput("--dy, --rho and --rho-sq apply to rectangular lattices".into()))
            }
            Family::Triangular => Lattice::triangular(self.dx),
            Family::Square => Lattice::square(self.dx),
            Family::Rectangular => {
                let dy = if let Some(dy) = self.dy {
                    dy
                } else if let Some(r) = self.rho {
                    r * self.dx
                } else if let Some(s) = &self.rho_sq {
                    parse_aspect(s)?.rho() * self.dx
                } else {
                    self.dx
                };
                Lattice::rectangular(self.dx, dy)
            }
        }
    }
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
struct SumArgs {
    /// Length of the regularising shift; default 0.37 of the nearest-neighbour distance.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    zeta_angle: f64,
    /// Spectral box half-width H; adaptive when absent.
    #[arg(long)]
    spectral_cutoff: Option<usize>,
    /// Truncation target of the windowed accelerated sums.
    #[arg(long, default_value_t = latsum::DEFAULT_WINDOW_TOLERANCE)]
    window_tolerance: f64,
    #[arg(long, default_value_t = latsum::DEFAULT_MULTIPOLE_MAX)]
    multipole_max: usize,
    #[arg(long, default_value_t = 1e-6)]
    pole_guard: f64,
    #[arg(long, default_value_t = 1e-9)]
    tail_tolerance: f64,
}

impl SumArgs {
    fn build(&self, lattice: &Lattice) -> Result<SumConfig, Error> {
        if self.spectral_cutoff.is_some_and(|h| h > latsum::MAX_SPECTRAL_CUTOFF) {
            return Err(Error::InvalidInput(format!("--spectral-cutoff is at most {}", latsum::MAX_SPECTRAL_CUTOFF)));
        }
        if self.multipole_max + 3 > MAX_ORDER {
            return Err(Error::InvalidInput(format!("--multipole-max is at most {}", MAX_ORDER - 3)));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::InvalidInput("--tail-tolerance must be positive".into()));
        }
        let cfg = SumConfig {
            zeta: self.zeta,
            zeta_angle: self.zeta_angle,
            spectral_cutoff: self.spectral_cutoff,
            window_tolerance: self.window_tolerance,
            multipole_max: self.multipole_max,
            pole_guard: self.pole_guard,
            tail_tolerance: self.tail_tolerance,
        };
        cfg.validate(lattice)?;
        Ok(cfg)
    }
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct BandsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sums: SumArgs,
    /// Comma-separated symmetry points; G,X,M,Y,G (rectangular) or G,K,M,G (triangular).
    #[arg(long)]
    path: Option<String>,
    #[arg(long, default_value_t = 60)]
    samples: usize,
    #[arg(long, default_value_t = 0.05)]
    kmin: f64,
    #[arg(long, default_value_t = 10.0)]
    kmax: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
struct GridArgs {
    /// Nodes per axis; the quadrant of the zone unless bounds are given.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y_max: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    kmin: f64,
    #[arg(long, default_value_t = 10.0)]
    kmax: f64,
}

impl GridArgs {
    fn build(&self, lattice: &Lattice) -> Result<SurfaceGrid, Error> {
        let (nx, ny) = (self.nx.unwrap_or(self.n), self.ny.unwrap_or(self.n));
        if nx > MAX_GRID || ny > MAX_GRID {
            return Err(Error::InvalidInput(format!("grid is limited to {MAX_GRID} nodes per axis")));
        }
        let q = SurfaceGrid::quadrant(lattice, 2)?;
        SurfaceGrid::new(
            (self.x_min.unwrap_or(q.x.0), self.x_max.unwrap_or(q.x.1)),
            (self.y_min.unwrap_or(q.y.0), self.y_max.unwrap_or(q.y.1)),
            nx,
            ny,
        )
    }
}

#[derive(Args, Serialize, Clone)]
#[command(args_override_self = true)]
struct SurfaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sums: SumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Clone)]
#[command(args_override_self = true)]
struct ContoursArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sums: SumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    /// Comma-separated frequencies k.
    #[arg(long)]
    levels: String,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct DosArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sums: SumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    #[arg(long)]
    k_start: f64,
    #[arg(long)]
    k_stop: f64,
    #[arg(long, default_value_t = 21)]
    k_steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct TriplesArgs {
    /// Squared aspect ratio, as a number or a fraction p/q.
    #[arg(long)]
    rho_sq: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    /// Frequency bound for d_x = 1.
    #[arg(long, default_value_t = 10.0)]
    kmax: f64,
    /// Largest |n|, |m| of the light-line indices searched.
    #[arg(long, default_value_t = 4)]
    index_bound: i64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct ConesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    /// Symmetry point name.
    #[arg(long, default_value = "G")]
    point: String,
    /// Explicit Bloch vector, overriding --point.
    #[arg(long, allow_negative_numbers = true)]
    k0x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k0y: Option<f64>,
    /// Degenerate frequency. For triangular lattices at G it defaults to
    /// the --shell-th shell carrying at least --min-lines light lines.
    #[arg(long)]
    kd: Option<f64>,
    #[arg(long, default_value_t = 1)]
    shell: usize,
    #[arg(long, default_value_t = 6)]
    min_lines: usize,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Convention {
    Matrix,
    FixedSource,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct ClusterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[arg(long)]
    k: f64,
    /// Pins |m|, |n| <= half-width.
    #[arg(long, default_value_t = 7)]
    half_width: usize,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    source_m: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    source_n: i64,
    #[arg(long, value_enum, default_value = "matrix")]
    convention: Convention,
    #[arg(long, default_value_t = cluster::DEFAULT_CONDITION_BOUND)]
    condition_bound: f64,
    /// Displacement samples x,y,re,im,abs on a square grid.
    #[arg(long)]
    #[serde(skip)]
    field_output: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    field_n: usize,
    /// Half-width of the field grid; two periods beyond the cluster by default.
    #[arg(long)]
    field_extent: Option<f64>,
    /// direction_deg,anisotropy; next to --output as <output>.summary when absent.
    #[arg(long)]
    #[serde(skip)]
    summary_output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GreenKind {
    Quasiperiodic,
    Free,
}

#[derive(Args, Serialize, Clone)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct GreensArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sums: SumArgs,
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    k0x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    k0y: f64,
    #[arg(long, value_enum, default_value = "quasiperiodic")]
    kind: GreenKind,
    /// Semicolon-separated points x,y; a grid over [x-min, x-max] x [y-min, y-max] otherwise.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[arg(long, default_value_t = 11)]
    n: usize,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    y_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    y_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

/// Failure with its exit status.
enum Failure {
    Usage(String),
    Numerical(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => Failure::Usage(m),
            other => Failure::Numerical(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        match e {
            config::ConfigError::Io(..) => Failure::Io(e.to_string()),
            config::ConfigError::Syntax { .. } => Failure::Usage(e.to_string()),
        }
    }
}

fn error_record(kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({ "error": kind, "message": message, "exit_code": code }).to_string()
}

fn report(f: &Failure) -> i32 {
    let (kind, msg, code) = match f {
        Failure::Usage(m) => ("InvalidInput".to_string(), m.clone(), 2),
        Failure::Numerical(e) => (e.kind().to_string(), e.to_string(), 3),
        Failure::Io(m) => ("Io".to_string(), m.clone(), 1),
    };
    eprintln!("{}", error_record(&kind, &msg, code));
    code
}

/// Writes a table to `path` (or standard output) with its config sidecar.
fn emit<T: Serialize>(t: &Table, path: Option<&Path>, format: Format, command: &str, args: &T) -> Result<(), Failure> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            t.write(&mut lock, format)?;
            lock.flush()?;
        }
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            t.write(&mut w, format)?;
            w.flush()?;
            std::fs::write(config::sidecar_path(p), config::render(command, args))?;
        }
    }
    Ok(())
}

fn parse_aspect(s: &str) -> Result<AspectSquared, Error> {
    let bad = || Error::InvalidInput(format!("cannot read aspect ratio {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        AspectSquared::rational(p, q)
    } else {
        AspectSquared::from_value(s.trim().parse().map_err(|_| bad())?)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("cannot read number {v:?}"))))
        .collect()
}

fn bands_cmd(a: &BandsArgs) -> Result<(), Failure> {
    let lat = a.lattice.build()?;
    let cfg = a.sums.build(&lat)?;
    let default = if lat.is_triangular() { "G,K,M,G" } else { "G,X,M,Y,G" };
    let names = a.path.as_deref().unwrap_or(default);
    let pts = names.split(',').map(|n| lat.symmetry_point(n.trim())).collect::<Result<Vec<_>, _>>()?;
    let path = lat.bz_path(&pts, a.samples)?;
    let d = bands::band_diagram(&path, &lat, (a.kmin, a.kmax), &cfg)?;
    let mut t = Table::new(&["leg", "path_param", "k0x", "k0y", "band_index", "k", "classification"]);
    for p in &d.points {
        t.push(vec![p.leg.into(), p.param.into(), p.k0.x.into(), p.k0.y.into(), p.band_index.into(), p.k.into(), p.class.to_string().into()]);
    }
    for l in &d.light_lines {
        t.push(vec![
            l.leg.into(),
            l.param.into(),
            l.k0.x.into(),
            l.k0.y.into(),
            Cell::Empty,
            l.k.into(),
            format!("LL:{},{}", l.h[0], l.h[1]).into(),
        ]);
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "bands", a)
}

fn surface_of(lattice: &LatticeArgs, sums: &SumArgs, grid: &GridArgs) -> Result<bands::BandSurface, Failure> {
    let lat = lattice.build()?;
    let cfg = sums.build(&lat)?;
    let g = grid.build(&lat)?;
    Ok(bands::band_surface(&g, &lat, (grid.kmin, grid.kmax), &cfg)?)
}

fn surface_cmd(a: &SurfaceArgs) -> Result<(), Failure> {
    let s = surface_of(&a.lattice, &a.sums, &a.grid)?;
    let mut t = Table::new(&["i", "j", "k0x", "k0y", "band_index", "k"]);
    for j in 0..s.ny() {
        for i in 0..s.nx() {
            for r in s.node(i, j) {
                t.push(vec![i.into(), j.into(), s.kx[i].into(), s.ky[j].into(), r.index.into(), r.k.into()]);
            }
        }
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "surface", a)
}

fn contours_cmd(a: &ContoursArgs) -> Result<(), Failure> {
    let levels = parse_list(&a.levels)?;
    let s = surface_of(&a.lattice, &a.sums, &a.grid)?;
    let mut t = Table::new(&["level", "polyline_id", "vertex_index", "k0x", "k0y"]);
    for level in levels {
        let c = bands::isofrequency(&s, level);
        for (id, p) in c.polylines.iter().enumerate() {
            for (v, pt) in p.points.iter().enumerate() {
                t.push(vec![level.into(), id.into(), v.into(), pt[0].into(), pt[1].into()]);
            }
        }
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "contours", a)
}

fn dos_cmd(a: &DosArgs) -> Result<(), Failure> {
    if a.k_steps < 1 || a.k_steps > MAX_GRID {
        return Err(Failure::Usage(format!("--k-steps must lie in 1..={MAX_GRID}")));
    }
    let s = surface_of(&a.lattice, &a.sums, &a.grid)?;
    let mut t = Table::new(&["k", "dos"]);
    let mut unresolved = 0;
    for i in 0..a.k_steps {
        let k = if a.k_steps == 1 { a.k_start } else { a.k_start + (a.k_stop - a.k_start) * i as f64 / (a.k_steps - 1) as f64 };
        let d = bands::dos_numeric(&s, k);
        unresolved += d.unresolved;
        t.push(vec![k.into(), d.value.into()]);
    }
    if unresolved > 0 {
        eprintln!("note: {unresolved} contour segments crossed a kink of their sheet and were left out");
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "dos", a)
}

fn exact_or(v: Option<String>, x: f64) -> Cell {
    v.map(Cell::Text).unwrap_or(Cell::Num(x))
}

fn triples_cmd(a: &TriplesArgs) -> Result<(), Failure> {
    let rho2 = match (&a.rho_sq, a.rho) {
        (Some(s), None) => parse_aspect(s)?,
        (None, Some(r)) => AspectSquared::from_rho(r)?,
        _ => return Err(Failure::Usage("give exactly one of --rho-sq, --rho".into())),
    };
    if a.index_bound < 1 || a.index_bound > 64 {
        return Err(Failure::Usage("--index-bound must lie in 1..=64".into()));
    }
    let cat = lightlines::enumerate_triples(rho2, a.kmax, a.index_bound)?;
    let mut t = Table::new(&["sextet", "kappa_x", "kappa_y", "k", "multiplicity", "in_bz"]);
    for e in &cat {
        let s: Vec<String> = e.sextet.iter().map(|v| v.to_string()).collect();
        let (kx, ky) = match &e.exact {
            Some((x, y, _)) => (Some(x.to_string()), Some(y.to_string())),
            None => (None, None),
        };
        t.push(vec![
            s.join(",").into(),
            exact_or(kx, e.kappa[0]),
            exact_or(ky, e.kappa[1]),
            e.k_radical().map(|r| Cell::Text(format!("{}={r}", table::fmt_num(e.k)))).unwrap_or(Cell::Num(e.k)),
            e.multiplicity.into(),
            e.in_quadrant.into(),
        ]);
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "triples", a)
}

fn cones_cmd(a: &ConesArgs) -> Result<(), Failure> {
    let lat = a.lattice.build()?;
    let k0 = match (a.k0x, a.k0y) {
        (None, None) => lat.symmetry_point(&a.point)?.k0,
        (x, y) => BlochVector::new(x.unwrap_or(0.0), y.unwrap_or(0.0)),
    };
    let kd = match a.kd {
        Some(k) => k,
        None if lat.is_triangular() && k0 == BlochVector::GAMMA => {
            lightlines::triangular_gamma_degeneracy(&lat, a.min_lines, a.shell)?
        }
        None => return Err(Failure::Usage("--kd is required away from the triangular zone centre".into())),
    };
    let fits = lightlines::cone_fit(&lat, k0, kd)?;
    let mut t = Table::new(&["branch", "alpha", "beta", "c", "gamma"]);
    for (i, c) in fits.iter().enumerate() {
        t.push(vec![format!("{}-{}", c.role, i + 1).into(), c.alpha.into(), c.beta.into(), c.c.into(), lightlines::analytic_dos(c)?.into()]);
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "cones", a)
}

fn cluster_cmd(a: &ClusterArgs) -> Result<(), Failure> {
    let lat = a.lattice.build()?;
    if lat.is_triangular() {
        return Err(Failure::Usage("clusters are built on rectangular lattices".into()));
    }
    if a.half_width > 40 {
        return Err(Failure::Usage("--half-width is at most 40".into()));
    }
    if a.field_n < 1 || a.field_n > MAX_GRID {
        return Err(Failure::Usage(format!("--field-n must lie in 1..={MAX_GRID}")));
    }
    let g = ClusterGeometry::rectangular(lat.dx(), lat.dy(), a.half_width)?;
    let source = g
        .labels
        .iter()
        .position(|&l| l == (a.source_m, a.source_n))
        .ok_or_else(|| Failure::Usage(format!("no pin at ({}, {})", a.source_m, a.source_n)))?;
    let g = g.with_source(source)?;
    let opts = ClusterOptions {
        convention: match a.convention {
            Convention::Matrix => SourceConvention::Matrix,
            Convention::FixedSource => SourceConvention::FixedSource,
        },
        condition_bound: a.condition_bound,
    };
    let (sol, warning) = match cluster::solve_cluster_with(&g, a.k, &opts) {
        Ok(s) => (s, None),
        Err(Error::NearSingular { condition, solution }) => (*solution.clone(), Some(Error::NearSingular { condition, solution })),
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(&["m", "n", "x", "y", "re_a", "im_a", "abs_a"]);
    for ((l, p), c) in g.labels.iter().zip(&g.pins).zip(&sol.coefficients) {
        t.push(vec![l.0.into(), l.1.into(), p[0].into(), p[1].into(), c.re.into(), c.im.into(), c.norm().into()]);
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "cluster", a)?;

    let loc = cluster::localization_metric(&sol)?;
    let mut s = Table::new(&["direction_deg", "anisotropy"]);
    s.push(vec![loc.direction_deg.into(), loc.anisotropy.into()]);
    let summary = a.summary_output.clone().or_else(|| {
        a.out.output.as_ref().map(|p| {
            let mut n = p.as_os_str().to_owned();
            n.push(".summary");
            PathBuf::from(n)
        })
    });
    match summary {
        Some(p) => emit(&s, Some(&p), a.out.format, "cluster", a)?,
        None => {
            let mut buf = Vec::new();
            s.write(&mut buf, Format::Csv)?;
            eprint!("{}", String::from_utf8_lossy(&buf));
        }
    }

    if let Some(p) = &a.field_output {
        let ext = a.field_extent.unwrap_or((a.half_width as f64 + 2.0) * lat.dx().max(lat.dy()));
        let grid = FieldGrid { x: (-ext, ext), y: (-ext, ext), nx: a.field_n, ny: a.field_n };
        let mut f = Table::new(&["x", "y", "re", "im", "abs"]);
        for w in cluster::field_map(&sol, &grid)? {
            f.push(vec![w.x.into(), w.y.into(), w.w.re.into(), w.w.im.into(), w.w.norm().into()]);
        }
        emit(&f, Some(p), a.out.format, "cluster", a)?;
    }
    match warning {
        Some(e) => Err(Failure::Numerical(e)),
        None => Ok(()),
    }
}

fn greens_cmd(a: &GreensArgs) -> Result<(), Failure> {
    let lat = a.lattice.build()?;
    let cfg = a.sums.build(&lat)?;
    let pts: Vec<[f64; 2]> = match &a.points {
        Some(s) => s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let v = parse_list(p)?;
                if v.len() == 2 {
                    Ok([v[0], v[1]])
                } else {
                    Err(Error::InvalidInput(format!("point {p:?} needs two coordinates")))
                }
            })
            .collect::<Result<_, _>>()?,
        None => {
            if a.n < 1 || a.n > MAX_GRID {
                return Err(Failure::Usage(format!("--n must lie in 1..={MAX_GRID}")));
            }
            let c = |lo: f64, hi: f64, i: usize| if a.n == 1 { lo } else { lo + (hi - lo) * i as f64 / (a.n - 1) as f64 };
            (0..a.n).flat_map(|j| (0..a.n).map(move |i| (i, j))).map(|(i, j)| [c(a.x_min, a.x_max, i), c(a.y_min, a.y_max, j)]).collect()
        }
    };
    let k0 = BlochVector::new(a.k0x, a.k0y);
    let values: Vec<num_complex::Complex64> = match a.kind {
        GreenKind::Quasiperiodic => green::evaluate_green(&pts, a.k, k0, &lat, &cfg)?.into_iter().map(|e| e.value).collect(),
        GreenKind::Free => pts.iter().map(|p| green::free_green(p[0].hypot(p[1]), a.k)).collect::<Result<_, _>>()?,
    };
    let mut t = Table::new(&["x", "y", "re", "im"]);
    for (p, v) in pts.iter().zip(values) {
        t.push(vec![p[0].into(), p[1].into(), v.re.into(), v.im.into()]);
    }
    emit(&t, a.out.output.as_deref(), a.out.format, "greens", a)
}

/// Runs the command line and returns the process exit status.
pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match config::inject(argv) {
        Ok(a) => a,
        Err(e) => return report(&Failure::from(e)),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let r = match &cli.command {
        Command::Bands(a) => bands_cmd(a),
        Command::Surface(a) => surface_cmd(a),
        Command::Contours(a) => contours_cmd(a),
        Command::Dos(a) => dos_cmd(a),
        Command::Triples(a) => triples_cmd(a),
        Command::Cones(a) => cones_cmd(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::Greens(a) => greens_cmd(a),
    };
    match r {
        Ok(()) => 0,
        Err(f) => report(&f),
    }
}

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}
