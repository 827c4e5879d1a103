//! Space-time samples of a potential on a uniform 1-D or 2-D grid.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const FIELD_MAGIC: &[u8; 4] = b"GFLD";
pub const FIELD_VERSION: u32 = 1;
pub const FIELD_CSV_SCHEMA: &str = "grid_field/1";

/// `n` uniform samples `lo, lo + h, …` with `h = (hi − lo)/(n − 1)`, or with
/// `h = (hi − lo)/n` and the right end excluded when `periodic`.
pub fn uniform_axis<T: Scalar>(lo: T, hi: T, n: usize, periodic: bool) -> Result<Vec<T>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "axis needs n >= 2 and hi > lo, got n = {n}, [{lo}, {hi}]"
        )));
    }
    let cells = if periodic { n } else { n - 1 };
    let h = (hi - lo) / T::from_count(cells);
    Ok((0..n).map(|j| lo + h * T::from_count(j)).collect())
}

/// `φ(tₖ, ·)` on a tensor grid. Frame `k` stores `nx·ny` values with the
/// `y` index running fastest (`ny = 1` in 1-D).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField<T> {
    pub x: Vec<T>,
    pub y: Option<Vec<T>>,
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
}

fn spacing<T: Scalar>(axis: &[T]) -> T {
    axis[1] - axis[0]
}

fn check_axis<T: Scalar>(axis: &[T], name: &str) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidArgument(format!("axis {name} needs at least two samples")));
    }
    let h = spacing(axis);
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("axis {name} must be increasing")));
    }
    let tol = T::tol(1e-9) * h;
    for w in axis.windows(2) {
        if ((w[1] - w[0]) - h).abs() > tol * (T::one() + w[1].abs() / h) {
            return Err(Error::InvalidArgument(format!("axis {name} is not uniform")));
        }
    }
    Ok(())
}

impl<T: Scalar> GridField<T> {
    pub fn new(x: Vec<T>, y: Option<Vec<T>>, times: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        check_axis(&x, "x")?;
        if let Some(y) = &y {
            check_axis(y, "y")?;
        }
        let f = GridField { x, y, times, values };
        if f.values.len() != f.times.len() {
            return Err(Error::InvalidArgument("one frame per time sample required".into()));
        }
        let cells = f.nx() * f.ny();
        if f.values.iter().any(|v| v.len() != cells) {
            return Err(Error::InvalidArgument(format!("frames must hold {cells} values")));
        }
        Ok(f)
    }

    pub fn dimension(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.as_ref().map_or(1, Vec::len)
    }

    pub fn dx(&self) -> T {
        spacing(&self.x)
    }

    pub fn value(&self, k: usize, i: usize, j: usize) -> T {
        self.values[k][i * self.ny() + j]
    }

    /// Frame at the last stored time.
    pub fn last(&self) -> &[T] {
        self.values.last().map_or(&[], Vec::as_slice)
    }

    /// Largest difference quotient between axis neighbours in frame `k`.
    pub fn lipschitz(&self, k: usize) -> T {
        let (nx, ny) = (self.nx(), self.ny());
        let v = &self.values[k];
        let hx = self.dx();
        let mut lip = T::zero();
        for i in 0..nx {
            for j in 0..ny {
                let here = v[i * ny + j];
                if i + 1 < nx {
                    lip = lip.max((v[(i + 1) * ny + j] - here).abs() / hx);
                }
                if let Some(y) = &self.y {
                    if j + 1 < ny {
                        lip = lip.max((v[i * ny + j + 1] - here).abs() / spacing(y));
                    }
                }
            }
        }
        lip
    }

    pub fn min_max(&self, k: usize) -> (T, T) {
        self.values[k]
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Checks that every stored frame keeps the initial Lipschitz constant
    /// up to `slack`.
    pub fn check_lipschitz(&self, lip0: T, slack: T) -> Result<()> {
        for k in 0..self.times.len() {
            let lip = self.lipschitz(k);
            if lip > lip0 + slack {
                return Err(Error::BoundViolation {
                    what: "grid Lipschitz constant",
                    value: lip.as_f64(),
                    bound: (lip0 + slack).as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Checks `lo − slack ≤ φ ≤ hi + slack` on every frame.
    pub fn check_bounds(&self, lo: T, hi: T, slack: T) -> Result<()> {
        for k in 0..self.times.len() {
            let (a, b) = self.min_max(k);
            if a < lo - slack {
                return Err(Error::BoundViolation {
                    what: "field lower bound",
                    value: a.as_f64(),
                    bound: lo.as_f64(),
                });
            }
            if b > hi + slack {
                return Err(Error::BoundViolation {
                    what: "field upper bound",
                    value: b.as_f64(),
                    bound: hi.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Sup-norm distance between frames `k` of two fields on the same grid.
    pub fn sup_distance(&self, other: &Self, k: usize) -> T {
        self.values[k]
            .iter()
            .zip(&other.values[k])
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// CSV with columns `t,x[,y],value` after a `# schema=grid_field/1` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema={FIELD_CSV_SCHEMA}")?;
        if let Some(y) = &self.y {
            writeln!(out, "t,x,y,value")?;
            for (k, t) in self.times.iter().enumerate() {
                for (i, x) in self.x.iter().enumerate() {
                    for (j, yj) in y.iter().enumerate() {
                        writeln!(out, "{t},{x},{yj},{}", self.value(k, i, j))?;
                    }
                }
            }
        } else {
            writeln!(out, "t,x,value")?;
            for (k, t) in self.times.iter().enumerate() {
                for (i, x) in self.x.iter().enumerate() {
                    writeln!(out, "{t},{x},{}", self.value(k, i, 0))?;
                }
            }
        }
        Ok(())
    }

    /// Binary dump, all little-endian:
    ///
    /// ```text
    /// b"GFLD"  u32 version  u32 dims  u64 nt  u64 nx  u64 ny
    /// f64 times[nt]  f64 x[nx]  f64 y[ny] (2-D only)
    /// f64 values[nt][nx][ny]
    /// ```
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(FIELD_MAGIC)?;
        out.write_u32::<LittleEndian>(FIELD_VERSION)?;
        out.write_u32::<LittleEndian>(self.dimension() as u32)?;
        out.write_u64::<LittleEndian>(self.times.len() as u64)?;
        out.write_u64::<LittleEndian>(self.nx() as u64)?;
        out.write_u64::<LittleEndian>(self.ny() as u64)?;
        let axes = self.times.iter().chain(&self.x).chain(self.y.iter().flatten());
        for &v in axes.chain(self.values.iter().flatten()) {
            out.write_f64::<LittleEndian>(v.as_f64())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format("not a grid field dump".into()));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != FIELD_VERSION {
            return Err(Error::Format(format!("unsupported grid field version {version}")));
        }
        let dims = input.read_u32::<LittleEndian>()?;
        if dims != 1 && dims != 2 {
            return Err(Error::Format(format!("bad dimension {dims}")));
        }
        let nt = input.read_u64::<LittleEndian>()? as usize;
        let nx = input.read_u64::<LittleEndian>()? as usize;
        let ny = input.read_u64::<LittleEndian>()? as usize;
        if dims == 1 && ny != 1 {
            return Err(Error::Format("1-D dump with ny != 1".into()));
        }
        let mut read = |n: usize| -> Result<Vec<T>> {
            (0..n)
                .map(|_| Ok(T::lit(input.read_f64::<LittleEndian>()?)))
                .collect()
        };
        let times = read(nt)?;
        let x = read(nx)?;
        let y = if dims == 2 { Some(read(ny)?) } else { None };
        let values = (0..nt).map(|_| read(nx * ny)).collect::<Result<_>>()?;
        GridField::new(x, y, times, values)
    }
}
