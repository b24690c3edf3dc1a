//! Nested uniform Cartesian meshes and cell-averaged fields.
//!
//! A [`Grid`] at level `l` has `n_k = 2^l * n_k^0` cells per axis, so the cell
//! width halves with every level and every coarse cell is the union of `2^d`
//! fine cells. A [`Field`] stores `N` conserved components per cell in
//! row-major cell order (the first axis varies slowest), with the components
//! of one cell contiguous.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Adiabatic constant of the Euler system.
pub const GAMMA: f64 = 1.4;

/// Uniform Cartesian mesh on a box in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    base_cells: [usize; 2],
    level: u32,
}

impl Grid {
    /// Level-0 grid on the unit box `[0,1]^dim` with `base_cells` per axis.
    pub fn unit(dim: usize, base_cells: usize) -> Result<Self> {
        Self::with_box(dim, [0.0; 2], [1.0; 2], [base_cells; 2])
    }

    pub fn with_box(
        dim: usize,
        lower: [f64; 2],
        upper: [f64; 2],
        base_cells: [usize; 2],
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!("grid dimension {dim} not in {{1,2}}")));
        }
        for axis in 0..dim {
            if base_cells[axis] == 0 {
                return Err(Error::InvalidArgument("grid needs at least one cell per axis".into()));
            }
            if !(upper[axis] > lower[axis]) || !lower[axis].is_finite() || !upper[axis].is_finite() {
                return Err(Error::InvalidArgument(format!("empty domain on axis {axis}")));
            }
        }
        let mut base = base_cells;
        let mut lo = lower;
        let mut hi = upper;
        if dim == 1 {
            base[1] = 1;
            lo[1] = 0.0;
            hi[1] = 1.0;
        }
        Ok(Self { dim, lower: lo, upper: hi, base_cells: base, level: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    /// The same domain refined to `level`.
    pub fn at_level(&self, level: u32) -> Self {
        Self { level, ..*self }
    }

    pub fn base(&self) -> Self {
        self.at_level(0)
    }

    pub fn coarser(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(Error::CoarsestLevel);
        }
        Ok(self.at_level(self.level - 1))
    }

    pub fn finer(&self) -> Self {
        self.at_level(self.level + 1)
    }

    /// Cells along `axis`; always 1 for the unused axis of a 1D grid.
    pub fn cells(&self, axis: usize) -> usize {
        if axis >= self.dim {
            1
        } else {
            self.base_cells[axis] << self.level
        }
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.cells(0), self.cells(1)]
    }

    pub fn num_cells(&self) -> usize {
        self.cells(0) * self.cells(1)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Cell width along `axis` at this level.
    pub fn dx(&self, axis: usize) -> f64 {
        self.extent(axis) / self.cells(axis) as f64
    }

    /// Level-0 cell width along the first axis.
    pub fn dx0(&self) -> f64 {
        self.extent(0) / self.base_cells[0] as f64
    }

    /// Smallest cell width over the active axes.
    pub fn min_dx(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).fold(f64::INFINITY, f64::min)
    }

    /// `Δx^d`: the measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cells(1) + j
    }

    pub fn midpoint(&self, i: usize, j: usize) -> [f64; 2] {
        let x = self.lower[0] + (i as f64 + 0.5) * self.dx(0);
        let y = if self.dim == 2 { self.lower[1] + (j as f64 + 0.5) * self.dx(1) } else { 0.0 };
        [x, y]
    }

    /// Cell boundary coordinates along `axis`, computed from integer indices.
    pub fn boundaries(&self, axis: usize) -> Vec<f64> {
        let n = self.cells(axis);
        (0..=n)
            .map(|k| self.lower[axis] + self.extent(axis) * (k as f64 / n as f64))
            .collect()
    }

    /// Same domain and base resolution, ignoring the level.
    pub fn same_family(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.lower == other.lower
            && self.upper == other.upper
            && self.base_cells == other.base_cells
    }
}

/// Cell averages of an `N`-component state on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    ncomp: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if ncomp == 0 {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        if values.len() != ncomp * grid.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, expected {} x {}",
                values.len(),
                ncomp,
                grid.num_cells()
            )));
        }
        Ok(Self { grid, ncomp, values })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        Self { grid, ncomp, values: vec![0.0; ncomp * grid.num_cells()] }
    }

    pub fn constant(grid: Grid, state: &[f64]) -> Self {
        let mut values = Vec::with_capacity(state.len() * grid.num_cells());
        for _ in 0..grid.num_cells() {
            values.extend_from_slice(state);
        }
        Self { grid, ncomp: state.len(), values }
    }

    /// Builds a field by evaluating `f` at every cell midpoint.
    pub fn from_midpoints<F>(grid: Grid, ncomp: usize, mut f: F) -> Result<Self>
    where
        F: FnMut([f64; 2], &mut [f64]) -> Result<()>,
    {
        let mut field = Self::zeros(grid, ncomp);
        for i in 0..grid.cells(0) {
            for j in 0..grid.cells(1) {
                let idx = grid.index(i, j);
                f(grid.midpoint(i, j), &mut field.values[idx * ncomp..(idx + 1) * ncomp])?;
            }
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
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

    #[inline]
    pub fn cell(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    #[inline]
    pub fn cell_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    /// Values of component `c`, in cell order.
    pub fn component(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(c).step_by(self.ncomp).copied()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `Σ u Δx^d` per component.
    pub fn integral(&self) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        (0..self.ncomp).map(|c| self.component(c).sum::<f64>() * vol).collect()
    }

    /// Conservative averaging onto the next coarser level.
    pub fn restrict(&self) -> Result<Field> {
        let coarse_grid = self.grid.coarser()?;
        let n = self.ncomp;
        let mut out = Field::zeros(coarse_grid, n);
        let d = self.grid.dim();
        let children = if d == 1 { 2.0 } else { 4.0 };
        for ci in 0..coarse_grid.cells(0) {
            for cj in 0..coarse_grid.cells(1) {
                let cidx = coarse_grid.index(ci, cj);
                let target = &mut out.values[cidx * n..(cidx + 1) * n];
                let jrange = if d == 1 { 0..1 } else { 2 * cj..2 * cj + 2 };
                for fi in 2 * ci..2 * ci + 2 {
                    for fj in jrange.clone() {
                        let fidx = self.grid.index(fi, fj);
                        for (t, v) in target.iter_mut().zip(self.cell(fidx)) {
                            *t += v;
                        }
                    }
                }
                for t in target.iter_mut() {
                    *t /= children;
                }
            }
        }
        Ok(out)
    }

    /// Replaces each coarse cell by the value of its first child, i.e. the
    /// child with the smallest index on every axis.
    pub fn inject(&self) -> Result<Field> {
        let coarse_grid = self.grid.coarser()?;
        let n = self.ncomp;
        let mut out = Field::zeros(coarse_grid, n);
        let d = self.grid.dim();
        for ci in 0..coarse_grid.cells(0) {
            for cj in 0..coarse_grid.cells(1) {
                let fj = if d == 1 { 0 } else { 2 * cj };
                let fidx = self.grid.index(2 * ci, fj);
                let cidx = coarse_grid.index(ci, cj);
                out.cell_mut(cidx).copy_from_slice(self.cell(fidx));
            }
        }
        Ok(out)
    }

    /// Piecewise-constant injection onto the next finer level.
    pub fn prolong(&self) -> Field {
        let fine_grid = self.grid.finer();
        let n = self.ncomp;
        let d = self.grid.dim();
        let mut out = Field::zeros(fine_grid, n);
        for fi in 0..fine_grid.cells(0) {
            for fj in 0..fine_grid.cells(1) {
                let cj = if d == 1 { 0 } else { fj / 2 };
                let cidx = self.grid.index(fi / 2, cj);
                let fidx = fine_grid.index(fi, fj);
                out.cell_mut(fidx).copy_from_slice(self.cell(cidx));
            }
        }
        out
    }

    /// Prolongs or restricts until the field lives on `level`.
    pub fn to_level(&self, level: u32) -> Result<Field> {
        let mut f = self.clone();
        while f.grid.level() < level {
            f = f.prolong();
        }
        while f.grid.level() > level {
            f = f.restrict()?;
        }
        Ok(f)
    }

    /// Writes the field in the `mvmc-field v1` text format.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        let n = if g.dim() == 1 {
            format!("{}", g.cells(0))
        } else {
            format!("{},{}", g.cells(0), g.cells(1))
        };
        writeln!(
            out,
            "mvmc-field v1 d={} n={} N={} level={} dx0={}",
            g.dim(),
            n,
            self.ncomp,
            g.level(),
            g.dx0()
        )?;
        let mut line = String::new();
        for idx in 0..g.num_cells() {
            line.clear();
            for (c, v) in self.cell(idx).iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                write!(line, "{v}").expect("write to String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Parses the `mvmc-field v1` format. The domain is reconstructed as the
    /// box anchored at the origin with extent `n_k * dx0 / 2^level` per axis.
    pub fn read_from<R: BufRead>(input: R) -> Result<Field> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty input".into()))??;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("mvmc-field") || tokens.next() != Some("v1") {
            return Err(Error::Format(format!("bad header: {header}")));
        }
        let (mut dim, mut cells, mut ncomp, mut level, mut dx0) = (None, None, None, None, None);
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header token {tok}")))?;
            let bad = || Error::Format(format!("bad value for {key}: {val}"));
            match key {
                "d" => dim = Some(val.parse::<usize>().map_err(|_| bad())?),
                "n" => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        val.split(',').map(str::parse).collect();
                    cells = Some(parsed.map_err(|_| bad())?);
                }
                "N" => ncomp = Some(val.parse::<usize>().map_err(|_| bad())?),
                "level" => level = Some(val.parse::<u32>().map_err(|_| bad())?),
                "dx0" => dx0 = Some(val.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(Error::Format(format!("unknown header key {key}"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("header missing {k}"));
        let dim = dim.ok_or_else(|| missing("d"))?;
        let cells = cells.ok_or_else(|| missing("n"))?;
        let ncomp = ncomp.ok_or_else(|| missing("N"))?;
        let level = level.ok_or_else(|| missing("level"))?;
        let dx0 = dx0.ok_or_else(|| missing("dx0"))?;
        if cells.len() != dim {
            return Err(Error::Format("n does not match d".into()));
        }
        let mut base = [1usize; 2];
        let mut upper = [1.0; 2];
        for axis in 0..dim {
            let n = cells[axis];
            if n == 0 || n % (1usize << level) != 0 {
                return Err(Error::Format(format!("n={n} not a multiple of 2^{level}")));
            }
            base[axis] = n >> level;
            upper[axis] = base[axis] as f64 * dx0;
        }
        let grid = Grid::with_box(dim, [0.0; 2], upper, base)?.at_level(level);
        let mut values = Vec::with_capacity(ncomp * grid.num_cells());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for v in line.split(',') {
                values.push(
                    v.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad value {v}")))?,
                );
            }
            if values.len() - before != ncomp {
                return Err(Error::Format(format!("row has {} values, expected {ncomp}", values.len() - before)));
            }
        }
        Field::new(grid, ncomp, values).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Conserved variables of the two-dimensional Euler system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub density: f64,
    pub momentum: [f64; 2],
    pub energy: f64,
}

/// Primitive variables `(ρ, w, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub density: f64,
    pub velocity: [f64; 2],
    pub pressure: f64,
}

impl EulerState {
    pub fn from_primitive(density: f64, velocity: [f64; 2], pressure: f64, gamma: f64) -> Result<Self> {
        if !(density > 0.0) || !(pressure > 0.0) || !velocity.iter().all(|w| w.is_finite()) {
            return Err(Error::NonphysicalState);
        }
        let kinetic = 0.5 * density * (velocity[0] * velocity[0] + velocity[1] * velocity[1]);
        Ok(Self {
            density,
            momentum: [density * velocity[0], density * velocity[1]],
            energy: pressure / (gamma - 1.0) + kinetic,
        })
    }

    pub fn from_slice(u: &[f64]) -> Self {
        Self { density: u[0], momentum: [u[1], u[2]], energy: u[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.density, self.momentum[0], self.momentum[1], self.energy]
    }

    pub fn pressure(&self, gamma: f64) -> f64 {
        let m2 = self.momentum[0] * self.momentum[0] + self.momentum[1] * self.momentum[1];
        (gamma - 1.0) * (self.energy - 0.5 * m2 / self.density)
    }

    pub fn to_primitive(&self, gamma: f64) -> Result<Primitive> {
        if !(self.density > 0.0) {
            return Err(Error::NonphysicalState);
        }
        let pressure = self.pressure(gamma);
        if !(pressure > 0.0) {
            return Err(Error::NonphysicalState);
        }
        Ok(Primitive {
            density: self.density,
            velocity: [self.momentum[0] / self.density, self.momentum[1] / self.density],
            pressure,
        })
    }
}
