//! Node values on a uniform rectangular grid, with CSV and binary storage.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Magic bytes opening the binary grid format.
pub const GRID_MAGIC: &[u8; 8] = b"MCFGRID1";

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `[-l, l]^2`.
    pub fn square(l: f64) -> Result<Self> {
        Self::new(-l, l, -l, l)
    }

    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        Rect {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
        }
    }
}

fn node_count(len: f64, h: f64) -> Result<usize> {
    let q = len / h;
    let n = q.round();
    if (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::Domain(format!("side {len} is not a multiple of h = {h}")));
    }
    Ok(n as usize + 1)
}

/// Row-major node values: index `j * nx + i` sits at `(x0 + i h, y0 + j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    nx: usize,
    ny: usize,
    h: f64,
    x0: f64,
    y0: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: Rect, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("spacing h = {h} must be positive")));
        }
        let nx = node_count(domain.x_max - domain.x_min, h)?;
        let ny = node_count(domain.y_max - domain.y_min, h)?;
        Self::from_parts(nx, ny, h, domain.x_min, domain.y_min, vec![0.0; nx * ny])
    }

    pub fn from_parts(nx: usize, ny: usize, h: f64, x0: f64, y0: f64, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(Error::Domain(format!(
                "grid {nx} x {ny} does not match {} values",
                values.len()
            )));
        }
        if !(h > 0.0) {
            return Err(Error::Domain(format!("spacing h = {h} must be positive")));
        }
        Ok(GridField {
            nx,
            ny,
            h,
            x0,
            y0,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_field<F: ScalarField + ?Sized>(domain: Rect, h: f64, f: &F) -> Result<Self> {
        let mut g = Self::zeros(domain, h)?;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let x = g.point(i, j);
                g.values[j * g.nx + i] = f.value(&x)?;
            }
        }
        Ok(g)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        [self.x0, self.y0]
    }

    pub fn domain(&self) -> Rect {
        Rect {
            x_min: self.x0,
            x_max: self.x0 + (self.nx - 1) as f64 * self.h,
            y_min: self.y0,
            y_max: self.y0 + (self.ny - 1) as f64 * self.h,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Distance from node `(i, j)` to the rim of the domain.
    pub fn rim_distance(&self, i: usize, j: usize) -> f64 {
        let k = i.min(j).min(self.nx - 1 - i).min(self.ny - 1 - j);
        k as f64 * self.h
    }

    /// Interior node indices in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny.saturating_sub(1)).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    /// Largest absolute value over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|self - other|` over nodes; grids must have equal shapes.
    pub fn max_diff(&self, other: &GridField) -> Result<f64> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::Domain("grid shapes differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// CSV `x1,x2,value`, rows in storage order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x1,x2,value")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.point(i, j);
                writeln!(w, "{},{},{}", p[0], p[1], self.get(i, j))?;
            }
        }
        Ok(())
    }

    /// Reads CSV written by [`GridField::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if n == 0 {
                if line != "x1,x2,value" {
                    return Err(Error::Io(format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Io(format!("line {}: expected 3 columns", n + 1)));
            }
            let mut vals = [0.0; 3];
            for (k, p) in parts.iter().enumerate() {
                vals[k] = p
                    .trim()
                    .parse()
                    .map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))?;
            }
            rows.push(vals);
        }
        if rows.len() < 4 {
            return Err(Error::Io("grid CSV needs at least 2 x 2 nodes".into()));
        }
        let (x0, y0) = (rows[0][0], rows[0][1]);
        let nx = rows.iter().take_while(|r| r[1] == y0).count();
        if nx < 2 || rows.len() % nx != 0 {
            return Err(Error::Io("grid CSV is not a full rectangle".into()));
        }
        let ny = rows.len() / nx;
        let h = rows[1][0] - x0;
        let g = Self::from_parts(nx, ny, h, x0, y0, rows.iter().map(|r| r[2]).collect())?;
        for (k, r) in rows.iter().enumerate() {
            let p = g.point(k % nx, k / nx);
            if (p[0] - r[0]).abs() > 1e-9 * (1.0 + r[0].abs())
                || (p[1] - r[1]).abs() > 1e-9 * (1.0 + r[1].abs())
            {
                return Err(Error::Io(format!("row {} is off the uniform grid", k + 2)));
            }
        }
        Ok(g)
    }

    /// Binary: magic, `u64 nx`, `u64 ny`, `f64 h`, `f64 x0`, `f64 y0`, then
    /// `nx * ny` values in storage order, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.ny as u64).to_le_bytes())?;
        for v in [self.h, self.x0, self.y0] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Io("not a grid file (bad magic)".into()));
        }
        let mut b = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let nx = next_u64(&mut r)? as usize;
        let ny = next_u64(&mut r)? as usize;
        let mut f = [0u8; 8];
        let mut next_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let h = next_f64(&mut r)?;
        let x0 = next_f64(&mut r)?;
        let y0 = next_f64(&mut r)?;
        let count = nx
            .checked_mul(ny)
            .filter(|&c| c <= 1 << 32)
            .ok_or_else(|| Error::Io(format!("implausible grid size {nx} x {ny}")))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(next_f64(&mut r)?);
        }
        Self::from_parts(nx, ny, h, x0, y0, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn dimensions_follow_domain() {
        let g = GridField::zeros(Rect::square(2.0).unwrap(), 0.5).unwrap();
        assert_eq!((g.nx(), g.ny()), (9, 9));
        assert_eq!(g.point(8, 8), [2.0, 2.0]);
        assert_eq!(g.interior().count(), 49);
        assert!(GridField::zeros(Rect::square(1.0).unwrap(), 0.3).is_err());
        assert_eq!(g.rim_distance(4, 4), 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let f = FnField(|x: &[f64]| x[0] * 0.1 + x[1].sin());
        let g = GridField::from_field(Rect::new(-1.0, 1.0, 0.0, 0.5).unwrap(), 0.25, &f).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!((back.nx(), back.ny()), (g.nx(), g.ny()));
    }

    #[test]
    fn binary_round_trip() {
        let f = FnField(|x: &[f64]| x[0] * x[1] - 3.0);
        let g = GridField::from_field(Rect::square(1.0).unwrap(), 0.1, &f).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], GRID_MAGIC);
        assert_eq!(buf.len(), 8 + 16 + 24 + 8 * g.values().len());
        let back = GridField::read_binary(&buf[..]).unwrap();
        assert_eq!(back, g);
        assert!(GridField::read_binary(&b"NOTAGRID"[..]).is_err());
    }
}
