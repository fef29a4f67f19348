//! Cell-centered grids on the unit square and scalar fields living on them.
//!
//! Values are stored row-major: cell `(i, j)` (column `i` along x, row `j` along
//! y) sits at index `j * nx + i` with center `((i + 1/2) hx, (j + 1/2) hy)`.
//! The Neumann Laplacian uses mirror ghost cells, so its discrete integral is
//! exactly zero.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least 3 cells per axis, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("field has {got} values, grid expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("unknown initial profile `{0}`")]
    UnknownBuiltin(String),
    #[error("malformed field CSV: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Grid, GridError> {
        if nx < 3 || ny < 3 {
            return Err(GridError::TooSmall { nx, ny });
        }
        Ok(Grid {
            nx,
            ny,
            hx: 1.0 / nx as f64,
            hy: 1.0 / ny as f64,
        })
    }

    pub fn square(n: usize) -> Result<Grid, GridError> {
        Grid::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area of one cell (all cells are equal).
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// `|Omega|`, always 1 for the unit square.
    pub fn domain_area(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }
}

/// Writes `sigma * Lap(src)` into `dst`, mirror ghosts on all four sides.
pub fn apply_laplacian(grid: &Grid, sigma: f64, src: &[f64], dst: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    debug_assert_eq!(src.len(), nx * ny);
    debug_assert_eq!(dst.len(), nx * ny);
    let cx = sigma / (grid.hx * grid.hx);
    let cy = sigma / (grid.hy * grid.hy);
    for j in 0..ny {
        let row = j * nx;
        let below = if j > 0 { row - nx } else { row };
        let above = if j + 1 < ny { row + nx } else { row };
        for i in 0..nx {
            let c = src[row + i];
            let w = if i > 0 { src[row + i - 1] } else { c };
            let e = if i + 1 < nx { src[row + i + 1] } else { c };
            let s = src[below + i];
            let n = src[above + i];
            dst[row + i] = cx * ((w - c) + (e - c)) + cy * ((s - c) + (n - c));
        }
    }
}

/// Cell-centered samples of a scalar function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Field {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Field {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Midpoint-rule inner product `hx hy sum f g`.
    pub fn dot(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.grid.cell_area()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Field as CSV: a `# nx=.. ny=.. t=..` header, then one line per grid row
    /// (`j = 0` first), 17 significant digits.
    pub fn to_csv(&self, t: f64) -> String {
        let mut out = String::with_capacity(self.values.len() * 25 + 64);
        writeln!(
            out,
            "# nx={} ny={} t={:.16e}",
            self.grid.nx, self.grid.ny, t
        )
        .unwrap();
        for row in self.values.chunks(self.grid.nx) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Field::to_csv`]; returns the field and its time stamp.
    pub fn from_csv(text: &str) -> Result<(Field, f64), GridError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| GridError::Parse("missing header".into()))?;
        let mut nx = None;
        let mut ny = None;
        let mut t = None;
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| GridError::Parse(format!("bad header entry `{kv}`")))?;
            let bad = |_| GridError::Parse(format!("bad header value `{kv}`"));
            match k {
                "nx" => nx = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "ny" => ny = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "t" => t = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let (Some(nx), Some(ny), Some(t)) = (nx, ny, t) else {
            return Err(GridError::Parse("header needs nx, ny and t".into()));
        };
        let grid = Grid::new(nx, ny)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let before = values.len();
            for tok in line.split(',') {
                values.push(
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| GridError::Parse(e.to_string()))?,
                );
            }
            if values.len() - before != nx {
                return Err(GridError::Parse(format!(
                    "row has {} entries, expected {nx}",
                    values.len() - before
                )));
            }
        }
        Ok((Field::new(grid, values)?, t))
    }

    /// Binary 8-bit PGM, values mapped affinely from `[lo, hi]` onto `0..=255`
    /// and clipped. The top image row is the largest `y`.
    pub fn to_pgm(&self, lo: f64, hi: f64) -> Vec<u8> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        let span = if hi > lo { hi - lo } else { 1.0 };
        for j in (0..ny).rev() {
            for i in 0..nx {
                let s = ((self.get(i, j) - lo) / span).clamp(0.0, 1.0);
                out.push((s * 255.0).round() as u8);
            }
        }
        out
    }
}

/// Sidecar text describing how a PGM produced by [`Field::to_pgm`] maps to values.
pub fn pgm_sidecar(grid: &Grid, lo: f64, hi: f64, t: f64) -> String {
    format!(
        "format=pgm-p5-8bit\nnx={}\nny={}\nt={t:.16e}\nvalue_min={lo:.16e}\nvalue_max={hi:.16e}\nmapping=affine-clipped\nrow_order=y-descending\n",
        grid.nx, grid.ny
    )
}

/// `sigma * Lap(f)` with homogeneous Neumann boundary.
pub fn laplacian_neumann(f: &Field, sigma: f64) -> Field {
    let mut out = Field::zeros(f.grid);
    apply_laplacian(&f.grid, sigma, &f.values, &mut out.values);
    out
}

/// Midpoint quadrature over the unit square.
pub fn integrate(f: &Field) -> f64 {
    f.grid.cell_area() * f.values.iter().sum::<f64>()
}

/// Built-in initial profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    /// `0.4 + 0.2 sin(3 pi x) cos(3 pi y)`.
    ReferenceV0,
    /// `1 - v0`.
    ReferenceU0,
    Constant(f64),
}

impl InitialProfile {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            InitialProfile::ReferenceV0 => fig2_v0(x, y),
            InitialProfile::ReferenceU0 => 1.0 - fig2_v0(x, y),
            InitialProfile::Constant(c) => c,
        }
    }
}

fn fig2_v0(x: f64, y: f64) -> f64 {
    0.4 + 0.2 * (3.0 * PI * x).sin() * (3.0 * PI * y).cos()
}

impl FromStr for InitialProfile {
    type Err = GridError;

    /// Accepts `reference-v0`, `reference-u0`, `constant(c)` and `constant:c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "reference-v0" => return Ok(InitialProfile::ReferenceV0),
            "reference-u0" => return Ok(InitialProfile::ReferenceU0),
            _ => {}
        }
        let arg = s
            .strip_prefix("constant(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("constant:"));
        match arg.map(|a| a.trim().parse::<f64>()) {
            Some(Ok(c)) if c.is_finite() => Ok(InitialProfile::Constant(c)),
            _ => Err(GridError::UnknownBuiltin(s.to_string())),
        }
    }
}

pub fn sample_initial(which: &InitialProfile, grid: Grid) -> Field {
    Field::from_fn(grid, |x, y| which.eval(x, y))
}
