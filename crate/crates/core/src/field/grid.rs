//! Grid-sampled dilatation fields and their text format.
//!
//! ```text
//! qfield v1 n=2 box=-1,-1,1,1 shape=3,3
//! 1 1 1
//! 1 2 1
//! 1 1 inf
//! ```
//!
//! `box` lists the n lower corner coordinates followed by the n upper corner
//! coordinates. Samples follow in row-major order (last axis fastest),
//! separated by any whitespace. `inf` marks an infinite sample; quadratures
//! that touch one fail rather than truncate.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::check_dim;
use crate::report::fmt_f64;

/// Interpolation visits 2ⁿ corners per evaluation.
pub const MAX_GRID_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = lo.len();
        check_dim(n)?;
        if n > MAX_GRID_DIM {
            return Err(Error::arg(format!("grid fields support n <= {MAX_GRID_DIM}, got {n}")));
        }
        if hi.len() != n || shape.len() != n {
            return Err(Error::arg("grid box and shape must all have n entries"));
        }
        for i in 0..n {
            if !(lo[i].is_finite() && hi[i].is_finite() && hi[i] > lo[i]) {
                return Err(Error::arg(format!(
                    "grid box axis {i} is empty: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            if shape[i] < 2 {
                return Err(Error::arg(format!("grid axis {i} needs at least 2 samples")));
            }
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::arg(format!(
                "grid expects {expected} samples, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::arg(format!("grid sample {v} is not in [0, inf]")));
        }
        Ok(GridField { lo, hi, shape, values })
    }

    /// Samples `f` on the lattice.
    pub fn from_fn<F>(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = lo.len();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut z = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            for axis in (0..n).rev() {
                let k = shape[axis];
                let idx = rem % k;
                rem /= k;
                z[axis] = lo[axis] + (hi[axis] - lo[axis]) * idx as f64 / (k - 1) as f64;
            }
            values.push(f(&z));
        }
        GridField::new(lo, hi, shape, values)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.shape[axis] - 1) as f64
    }

    /// Multilinear interpolation, clamped below at zero. Coordinates outside
    /// the box are clamped onto it; callers check containment first.
    /// Any infinite corner sample with nonzero weight makes the result infinite.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = [0usize; MAX_GRID_DIM];
        let mut frac = [0.0f64; MAX_GRID_DIM];
        for axis in 0..n {
            let k = self.shape[axis];
            let s = ((z[axis] - self.lo[axis]) / self.spacing(axis)).clamp(0.0, (k - 1) as f64);
            let i = (s.floor() as usize).min(k - 2);
            base[axis] = i;
            frac[axis] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for axis in 0..n {
                let bit = (corner >> axis) & 1;
                w *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * self.shape[axis] + base[axis] + bit;
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[flat];
            if v.is_infinite() {
                return f64::INFINITY;
            }
            acc += w * v;
        }
        acc.max(0.0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .by_ref()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("qfield") || tokens.next() != Some("v1") {
            return Err(Error::Parse(format!("bad grid header '{header}'")));
        }
        let (mut n, mut bx, mut shape) = (None, None, None);
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
            match key {
                "n" => {
                    n = Some(value.parse::<usize>().map_err(|_| {
                        Error::Parse(format!("bad dimension '{value}'"))
                    })?)
                }
                "box" => bx = Some(parse_list::<f64>(value)?),
                "shape" => shape = Some(parse_list::<usize>(value)?),
                _ => return Err(Error::Parse(format!("unknown header key '{key}'"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("grid header missing n=".into()))?;
        let bx = bx.ok_or_else(|| Error::Parse("grid header missing box=".into()))?;
        let shape = shape.ok_or_else(|| Error::Parse("grid header missing shape=".into()))?;
        if bx.len() != 2 * n || shape.len() != n {
            return Err(Error::Parse(format!(
                "grid header for n={n} needs {} box values and {n} shape entries",
                2 * n
            )));
        }
        let mut values = Vec::new();
        for tok in lines.flat_map(str::split_whitespace) {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad sample '{tok}'")))?;
            values.push(v);
        }
        GridField::new(bx[..n].to_vec(), bx[n..].to_vec(), shape, values).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Parse(m),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let bx: Vec<String> = self.lo.iter().chain(&self.hi).map(|v| fmt_f64(*v)).collect();
        let shape: Vec<String> = self.shape.iter().map(|k| k.to_string()).collect();
        let mut out = format!(
            "qfield v1 n={} box={} shape={}\n",
            self.dim(),
            join(&bx),
            join(&shape)
        );
        let row = self.shape[self.dim() - 1];
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk
                .iter()
                .map(|v| if v.is_infinite() { "inf".to_string() } else { fmt_f64(*v) })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad list entry '{t}'")))
        })
        .collect()
}
