//! Uniform time grids, complex envelopes and temporal mode projection.
//!
//! Every integral in the crate goes through [`trapezoid`], so quadrature
//! error is O(dt²) and behaves identically across modules.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Grids whose start/step agree to this relative tolerance are considered identical.
const GRID_MATCH_TOL: f64 = 1e-9;

/// Uniform time axis in units of 1/κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_points: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(invalid("grid start must be finite"));
        }
        if n_points < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(Self { t_start, dt, n_points })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.time(k))
    }

    /// Index of the grid point at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.dt;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k as usize >= self.n_points {
            return None;
        }
        Some(k as usize)
    }

    /// Sub-grid over the index range `r` (must hold at least 2 points).
    pub fn slice(&self, r: Range<usize>) -> Result<Self> {
        if r.end > self.n_points || r.end < r.start + 2 {
            return Err(invalid(format!(
                "sub-range {r:?} does not fit a grid of {} points",
                self.n_points
            )));
        }
        Self::new(self.time(r.start), self.dt, r.end - r.start)
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        let scale = self.dt.max(1.0);
        self.n_points == other.n_points
            && (self.dt - other.dt).abs() <= GRID_MATCH_TOL * self.dt
            && (self.t_start - other.t_start).abs() <= GRID_MATCH_TOL * scale
    }

    pub(crate) fn check_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(invalid(format!("{what}: grids differ ({self:?} vs {other:?})")))
        }
    }
}

/// Builds the grid `t_start, t_start + dt, ...` reaching `t_end`.
///
/// When `(t_end - t_start) / dt` is not an integer the point count is rounded
/// up, so the last point lies in `[t_end, t_end + dt)`.
pub fn make_grid(t_start: f64, t_end: f64, dt: f64) -> Result<TimeGrid> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(invalid(format!("need t_end > t_start, got [{t_start}, {t_end}]")));
    }
    let steps = (t_end - t_start) / dt;
    if steps > 1e8 {
        return Err(invalid(format!("grid would need {steps:.3e} steps (limit 1e8)")));
    }
    let nearest = steps.round();
    let steps = if (steps - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        steps.ceil()
    };
    TimeGrid::new(t_start, dt, steps as usize + 1)
}

/// Composite trapezoidal rule over uniformly spaced samples.
pub fn trapezoid<T>(dt: f64, samples: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    match samples {
        [] | [_] => T::default(),
        [first, inner @ .., last] => {
            let interior = inner.iter().fold(T::default(), |acc, &x| acc + x);
            (interior + (*first + *last) * 0.5) * dt
        }
    }
}

/// Complex field amplitude sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl Envelope {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(invalid(format!(
                "envelope has {} samples for a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(k) = samples.iter().position(|z| !z.is_finite()) {
            return Err(invalid(format!("non-finite sample at index {k}")));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self { grid, samples: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_real(grid: TimeGrid, samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(grid, samples.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    /// Samples `f(t)` on every grid point.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&z| z * c).collect() }
    }

    pub fn restrict(&self, r: Range<usize>) -> Result<Self> {
        let grid = self.grid.slice(r.clone())?;
        Ok(Self { grid, samples: self.samples[r].to_vec() })
    }

    /// Restriction onto the time span of `sub`, which must be aligned with this grid.
    pub fn restrict_to(&self, sub: &TimeGrid) -> Result<Self> {
        let start = self
            .grid
            .index_of(sub.t_start())
            .filter(|_| (sub.dt() - self.grid.dt).abs() <= GRID_MATCH_TOL * self.grid.dt)
            .ok_or_else(|| invalid("sub-grid is not aligned with the envelope grid"))?;
        self.restrict(start..start + sub.len())
    }

    /// Same samples, reversed in time: `e'(t_k) = e(t_{n-1-k})`.
    pub fn time_reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { grid: self.grid, samples }
    }

    /// Moves the samples onto another grid with the same shape.
    pub fn regridded(&self, grid: TimeGrid) -> Result<Self> {
        Self::new(grid, self.samples.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Writes `t,re,im` rows with 15 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im"])?;
        for (t, z) in self.grid.times().zip(&self.samples) {
            w.write_record([fmt_num(t), fmt_num(z.re), fmt_num(z.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

/// Normalized temporal mode `u₀(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    envelope: Envelope,
}

impl ModeFunction {
    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn grid(&self) -> &TimeGrid {
        self.envelope.grid()
    }

    pub fn time_reversed_on(&self, grid: TimeGrid) -> Result<Self> {
        Ok(Self { envelope: self.envelope.time_reversed().regridded(grid)? })
    }
}

/// Projection of a field onto a temporal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitude(pub Complex64);

impl ModeAmplitude {
    pub fn value(&self) -> Complex64 {
        self.0
    }
}

/// `√2·a0·sech(t − t0)`, the input field that fills the cavity as `a0·sech(t − t0)`.
pub fn sech_input(a0: f64, t0: f64, grid: TimeGrid) -> Envelope {
    let amp = std::f64::consts::SQRT_2 * a0;
    Envelope {
        grid,
        samples: grid.times().map(|t| Complex64::new(amp * sech(t - t0), 0.0)).collect(),
    }
}

#[inline]
pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

pub fn l2_norm_sq(e: &Envelope) -> f64 {
    let dens: Vec<f64> = e.samples.iter().map(|z| z.norm_sqr()).collect();
    trapezoid(e.grid.dt, &dens)
}

pub fn normalize_mode(e: &Envelope) -> Result<ModeFunction> {
    let norm_sq = l2_norm_sq(e);
    if !(norm_sq > 0.0) {
        return Err(Error::DegenerateInput("cannot normalize a zero-norm envelope".into()));
    }
    Ok(ModeFunction { envelope: e.scaled(Complex64::new(1.0 / norm_sq.sqrt(), 0.0)) })
}

/// `∫ u*(t) A(t) dt`.
pub fn project(u: &ModeFunction, a: &Envelope) -> Result<ModeAmplitude> {
    u.grid().check_same(a.grid(), "project")?;
    let integrand: Vec<Complex64> =
        u.envelope.samples.iter().zip(&a.samples).map(|(u, a)| u.conj() * a).collect();
    Ok(ModeAmplitude(trapezoid(a.grid.dt, &integrand)))
}
