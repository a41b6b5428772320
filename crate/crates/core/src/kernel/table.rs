use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::kernel_fourier;
use crate::error::{Error, Result};

/// Version of the on-disk table layout. Bump on any change to the format.
pub const TABLE_FORMAT_VERSION: u32 = 1;

const MAGIC: &str = "vortex-oam kernel table";

/// Uniform grid `start, start + h, ..., stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 2 || !(start < stop) || !(start >= 0.0) {
            return Err(Error::Table(format!(
                "grid needs count >= 2 and 0 <= start < stop (got {start}, {stop}, {count})"
            )));
        }
        Ok(Self { start, stop, count })
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.stop
        } else {
            self.start + i as f64 * self.step()
        }
    }

    /// Cell index `i` and fractional offset so that `x` lies in `[x_i, x_{i+1}]`.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x < self.start || x > self.stop {
            return None;
        }
        let t = (x - self.start) / self.step();
        let i = (t.floor() as usize).min(self.count - 2);
        Some((i, t - i as f64))
    }
}

/// Precomputed `K_λ(r′, q)` on a rectangular grid.
///
/// Exact-diagonal entries (`r′ = q`) are stored as `+inf`. Lookups within one
/// cell of the diagonal, or outside the grid, fall back to direct quadrature;
/// everywhere else the table interpolates bilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoefficientTable {
    pub lambda: i32,
    pub r_grid: GridSpec,
    pub q_grid: GridSpec,
    pub tol: f64,
    /// Row-major: `values[i * q_grid.count + j] = K_λ(r_i, q_j)`.
    pub values: Vec<f64>,
    pub split_diagonal: bool,
}

impl KernelCoefficientTable {
    /// Build the table; rows are computed in parallel, each entry is a pure
    /// function of its grid point so the result is schedule-independent.
    pub fn build(lambda: i32, r_grid: GridSpec, q_grid: GridSpec, tol: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..r_grid.count)
            .into_par_iter()
            .map(|i| {
                let r = r_grid.point(i);
                (0..q_grid.count)
                    .map(|j| {
                        let q = q_grid.point(j);
                        if (r - q).abs() < 1e-14 * r.max(q) || (r == 0.0 && q == 0.0) {
                            Ok(f64::INFINITY)
                        } else {
                            kernel_fourier(lambda, r, q, tol)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            lambda,
            r_grid,
            q_grid,
            tol,
            values: rows.into_iter().flatten().collect(),
            split_diagonal: true,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.q_grid.count + j]
    }

    /// `K_λ(r′, q)` from the table.
    pub fn interpolate(&self, r_prime: f64, q: f64) -> Result<f64> {
        let near_diagonal = (r_prime - q).abs() <= self.r_grid.step().max(self.q_grid.step());
        let located = self.r_grid.locate(r_prime).zip(self.q_grid.locate(q));
        match located {
            Some(((i, tr), (j, tq))) if !near_diagonal => {
                let v00 = self.get(i, j);
                let v01 = self.get(i, j + 1);
                let v10 = self.get(i + 1, j);
                let v11 = self.get(i + 1, j + 1);
                if [v00, v01, v10, v11].iter().all(|v| v.is_finite()) {
                    return Ok((1.0 - tr) * ((1.0 - tq) * v00 + tq * v01) + tr * ((1.0 - tq) * v10 + tq * v11));
                }
                kernel_fourier(self.lambda, r_prime, q, self.tol)
            }
            _ => kernel_fourier(self.lambda, r_prime, q, self.tol),
        }
    }

    fn data_block(&self) -> String {
        let mut out = String::new();
        for i in 0..self.r_grid.count {
            let row: Vec<String> = (0..self.q_grid.count)
                .map(|j| format!("{:.16e}", self.get(i, j)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Serialize as text: a magic line, `key = value` header lines
    /// (`format_version`, `code_version`, `lambda`, `tol`, `r_grid`, `q_grid`,
    /// `checksum`), a `values` marker, then one whitespace-separated row per
    /// `r′` grid point. The checksum is SHA-256 over the row lines.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let data = self.data_block();
        let digest = Sha256::digest(data.as_bytes());
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "format_version = {TABLE_FORMAT_VERSION}")?;
        writeln!(w, "code_version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "lambda = {}", self.lambda)?;
        writeln!(w, "tol = {:e}", self.tol)?;
        writeln!(
            w,
            "r_grid = {:.16e} {:.16e} {}",
            self.r_grid.start, self.r_grid.stop, self.r_grid.count
        )?;
        writeln!(
            w,
            "q_grid = {:.16e} {:.16e} {}",
            self.q_grid.start, self.q_grid.stop, self.q_grid.count
        )?;
        writeln!(w, "checksum = sha256:{}", hex_string(&digest))?;
        writeln!(w, "values")?;
        w.write_all(data.as_bytes())?;
        Ok(())
    }

    /// Parse a table, verifying the format version and checksum.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Table(format!("unexpected end of file before {what}")))?
                .map_err(Error::from)
        };
        if next_line("header")? != MAGIC {
            return Err(Error::Table("missing table header".into()));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = next_line(key)?;
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Table(format!("malformed line `{line}`")))?;
            if k != key {
                return Err(Error::Table(format!("expected `{key}`, found `{k}`")));
            }
            Ok(v.to_string())
        };
        let version: u32 = parse(&field("format_version")?)?;
        if version != TABLE_FORMAT_VERSION {
            return Err(Error::Table(format!(
                "unsupported format_version {version} (expected {TABLE_FORMAT_VERSION})"
            )));
        }
        let _code_version = field("code_version")?;
        let lambda: i32 = parse(&field("lambda")?)?;
        let tol: f64 = parse(&field("tol")?)?;
        let r_grid = parse_grid(&field("r_grid")?)?;
        let q_grid = parse_grid(&field("q_grid")?)?;
        let checksum = field("checksum")?;
        if next_line("values")? != "values" {
            return Err(Error::Table("missing `values` marker".into()));
        }
        let mut data = String::new();
        let mut values = Vec::with_capacity(r_grid.count * q_grid.count);
        for _ in 0..r_grid.count {
            let line = next_line("table row")?;
            for tok in line.split_whitespace() {
                values.push(parse::<f64>(tok)?);
            }
            data.push_str(&line);
            data.push('\n');
        }
        if values.len() != r_grid.count * q_grid.count {
            return Err(Error::Table(format!(
                "expected {} values, found {}",
                r_grid.count * q_grid.count,
                values.len()
            )));
        }
        let digest = format!("sha256:{}", hex_string(&Sha256::digest(data.as_bytes())));
        if digest != checksum {
            return Err(Error::Table("checksum mismatch".into()));
        }
        Ok(Self {
            lambda,
            r_grid,
            q_grid,
            tol,
            values,
            split_diagonal: true,
        })
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Table(format!("cannot parse `{s}`")))
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Table(format!("grid spec needs `start stop count`, got `{s}`")));
    }
    GridSpec::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
