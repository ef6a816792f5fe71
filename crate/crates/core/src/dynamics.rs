//! Mean-field cavity–oscillator dynamics.
//!
//! ```text
//! ȧ = −(κ + iδ(t))·a + g(t)·b + √(2κ)·A_in
//! ḃ = −(γ + iΔ(t))·b − g(t)·a
//! ```
//!
//! The oscillator reservoir is vacuum, so its input drops out of the mean
//! equations. Integration is fixed-step RK4 with controls linearly
//! interpolated at half steps.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;

use crate::design::{time_reversed_readout_with, ControlSchedule, Design, HoldMode, MemoryParams, Phase};
use crate::error::{invalid, Error, Result};
use crate::signal::{fmt_num, trapezoid, Envelope};

/// `dt · (fastest rate in the schedule)` may not exceed this.
pub const STEP_RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolTiming {
    /// Pulse arrival time.
    pub t0: f64,
    /// Storage time between the end of writing and the start of reading.
    pub t_hold: f64,
    /// Nominal input duration (the sech width).
    pub t_input: f64,
}

impl ProtocolTiming {
    pub fn new(t0: f64, t_hold: f64) -> Result<Self> {
        if !t0.is_finite() || !(t_hold >= 0.0) || !t_hold.is_finite() {
            return Err(invalid(format!("invalid timing t0 = {t0}, T = {t_hold}")));
        }
        Ok(Self { t0, t_hold, t_input: 1.0 })
    }

    /// A memory, rather than a delay line, stores for longer than the input lasts.
    pub fn is_memory_regime(&self) -> bool {
        self.t_hold > self.t_input
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub a: Envelope,
    pub b: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub trajectory: StateTrajectory,
    pub a_in: Envelope,
    pub a_out: Envelope,
    pub schedule: ControlSchedule,
    pub timing: ProtocolTiming,
    pub params: MemoryParams,
}

#[derive(Clone, Copy)]
struct Controls {
    g: f64,
    delta: f64,
    big_delta: f64,
    drive: Complex64,
}

impl Controls {
    fn at(schedule: &ControlSchedule, a_in: &[Complex64], k: usize) -> Self {
        Self {
            g: schedule.coupling()[k],
            delta: schedule.cavity_detuning()[k],
            big_delta: schedule.oscillator_detuning()[k],
            drive: a_in[k],
        }
    }

    fn midpoint(self, o: Self) -> Self {
        Self {
            g: 0.5 * (self.g + o.g),
            delta: 0.5 * (self.delta + o.delta),
            big_delta: 0.5 * (self.big_delta + o.big_delta),
            drive: 0.5 * (self.drive + o.drive),
        }
    }
}

#[inline]
fn rhs(p: &MemoryParams, c: Controls, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let da = -Complex64::new(p.kappa, c.delta) * a + c.g * b + (2.0 * p.kappa).sqrt() * c.drive;
    let db = -Complex64::new(p.gamma, c.big_delta) * b - c.g * a;
    (da, db)
}

fn check_resolution(p: &MemoryParams, s: &ControlSchedule, r: Range<usize>) -> Result<()> {
    let dt = s.grid().dt();
    let peak = |v: &[f64]| v[r.clone()].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let candidates = [
        ("kappa", p.kappa),
        ("g", peak(s.coupling())),
        ("delta", peak(s.cavity_detuning())),
        ("Delta", peak(s.oscillator_detuning())),
    ];
    let (control, rate) = candidates.into_iter().fold(("kappa", 0.0), |best, c| if c.1 > best.1 { c } else { best });
    if dt * rate > STEP_RESOLUTION * (1.0 + 1e-12) {
        return Err(Error::Stiffness { control, rate, dt, required_dt: STEP_RESOLUTION / rate });
    }
    Ok(())
}

/// RK4 over sample indices `r` (inclusive endpoints `r.start ..= r.end - 1`),
/// starting from `a[r.start]`, `b[r.start]`.
fn sweep(p: &MemoryParams, s: &ControlSchedule, drive: &[Complex64], r: Range<usize>, a: &mut [Complex64], b: &mut [Complex64]) {
    let dt = s.grid().dt();
    let (mut ya, mut yb) = (a[r.start], b[r.start]);
    let mut c0 = Controls::at(s, drive, r.start);
    for k in r.start..r.end.saturating_sub(1) {
        let c1 = Controls::at(s, drive, k + 1);
        let ch = c0.midpoint(c1);
        let (ka1, kb1) = rhs(p, c0, ya, yb);
        let (ka2, kb2) = rhs(p, ch, ya + 0.5 * dt * ka1, yb + 0.5 * dt * kb1);
        let (ka3, kb3) = rhs(p, ch, ya + 0.5 * dt * ka2, yb + 0.5 * dt * kb2);
        let (ka4, kb4) = rhs(p, c1, ya + dt * ka3, yb + dt * kb3);
        ya += dt / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        yb += dt / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
        a[k + 1] = ya;
        b[k + 1] = yb;
        c0 = c1;
    }
}

/// Integrates the equations of motion across the whole schedule.
pub fn integrate(
    params: MemoryParams,
    schedule: &ControlSchedule,
    a_in: &Envelope,
    a_init: Complex64,
    b_init: Complex64,
) -> Result<StateTrajectory> {
    let grid = *schedule.grid();
    grid.check_same(a_in.grid(), "integrate")?;
    check_resolution(&params, schedule, 0..grid.len())?;
    let n = grid.len();
    let mut a = vec![Complex64::default(); n];
    let mut b = vec![Complex64::default(); n];
    a[0] = a_init;
    b[0] = b_init;
    sweep(&params, schedule, a_in.samples(), 0..n, &mut a, &mut b);
    Ok(StateTrajectory { a: Envelope::new(grid, a)?, b: Envelope::new(grid, b)? })
}

/// Runs write, decoupled hold and time-reversed read for input scale `a0`.
pub fn run_protocol(params: MemoryParams, design: &Design, timing: ProtocolTiming, a0: Complex64) -> Result<ProtocolResult> {
    run_protocol_with(params, design, timing, a0, HoldMode::Decoupled)
}

pub fn run_protocol_with(
    params: MemoryParams,
    design: &Design,
    timing: ProtocolTiming,
    a0: Complex64,
    hold: HoldMode,
) -> Result<ProtocolResult> {
    if (design.kappa() - params.kappa).abs() > 1e-12 * params.kappa {
        return Err(invalid(format!(
            "design assumes kappa = {}, memory has kappa = {}",
            design.kappa(),
            params.kappa
        )));
    }
    if (design.t0() - timing.t0).abs() > 1e-9 {
        return Err(invalid(format!(
            "design is synchronised to t0 = {}, timing says {}",
            design.t0(),
            timing.t0
        )));
    }
    if !a0.is_finite() {
        return Err(invalid("input amplitude must be finite"));
    }
    let schedule = time_reversed_readout_with(design, timing.t_hold, hold)?;
    let grid = *schedule.grid();
    let n = grid.len();
    let n_write = design.write_schedule().grid().len();
    let end_write = n_write - 1;
    let start_read = schedule.range(Phase::Read).start.max(end_write);

    let scale = (2.0 * params.kappa).sqrt() * a0;
    let mut drive = vec![Complex64::default(); n];
    for (k, a) in design.a_target().samples().iter().enumerate() {
        drive[k] = scale * a;
    }

    check_resolution(&params, &schedule, 0..n_write)?;
    check_resolution(&params, &schedule, start_read..n)?;
    let mut a = vec![Complex64::default(); n];
    let mut b = vec![Complex64::default(); n];
    sweep(&params, &schedule, &drive, 0..n_write, &mut a, &mut b);

    match hold {
        HoldMode::Decoupled => {
            let (a_hold, b_hold) = (a[end_write], b[end_write]);
            let cavity_rate = Complex64::new(params.kappa, 0.0);
            let oscillator_rate = Complex64::new(params.gamma, 0.0);
            for k in end_write + 1..=start_read {
                let t = grid.time(k) - grid.time(end_write);
                a[k] = a_hold * (-cavity_rate * t).exp();
                b[k] = b_hold * (-oscillator_rate * t).exp();
            }
        }
        HoldMode::Detuned { .. } => {
            check_resolution(&params, &schedule, end_write..start_read + 1)?;
            sweep(&params, &schedule, &drive, end_write..start_read + 1, &mut a, &mut b);
        }
    }
    sweep(&params, &schedule, &drive, start_read..n, &mut a, &mut b);

    let root = (2.0 * params.kappa).sqrt();
    let out: Vec<Complex64> = a.iter().zip(&drive).map(|(a, d)| root * a - d).collect();
    Ok(ProtocolResult {
        trajectory: StateTrajectory { a: Envelope::new(grid, a)?, b: Envelope::new(grid, b)? },
        a_in: Envelope::new(grid, drive)?,
        a_out: Envelope::new(grid, out)?,
        schedule,
        timing,
        params,
    })
}

/// Peak output during write and hold, relative to the input peak.
pub fn vacuum_output_residual(result: &ProtocolResult) -> Result<f64> {
    let peak = result.a_in.max_abs();
    if !(peak > 0.0) {
        return Err(Error::DegenerateInput("input field is identically zero".into()));
    }
    let before_read = result.schedule.range(Phase::Read).start;
    let worst = result.a_out.samples()[..before_read].iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(worst / peak)
}

impl ProtocolResult {
    fn index(&self, t: f64) -> usize {
        self.a_in.grid().index_of(t).expect("protocol boundaries lie on the grid")
    }

    /// Grid index where the write phase ends (`t = 0`).
    pub fn write_end(&self) -> usize {
        self.index(0.0)
    }

    /// Grid index where the read phase starts (`t = T_hold`).
    pub fn read_start(&self) -> usize {
        self.index(self.timing.t_hold)
    }

    /// `max_read |A_out(t) − sign·A_in(T − t)| / max|A_in|`.
    pub fn mirror_deviation(&self, sign: f64) -> f64 {
        let n = self.a_in.len();
        let (inp, out) = (self.a_in.samples(), self.a_out.samples());
        let worst = (self.read_start()..n).map(|k| (out[k] - sign * inp[n - 1 - k]).norm()).fold(0.0, f64::max);
        worst / self.a_in.max_abs()
    }

    /// `max_read ||A_out(t)| − |A_in(T − t)|| / max|A_in|`.
    pub fn shape_deviation(&self) -> f64 {
        let n = self.a_in.len();
        let (inp, out) = (self.a_in.samples(), self.a_out.samples());
        let worst = (self.read_start()..n).map(|k| (out[k].norm() - inp[n - 1 - k].norm()).abs()).fold(0.0, f64::max);
        worst / self.a_in.max_abs()
    }

    /// `∫|A_in|²` over the write window.
    pub fn input_energy(&self) -> f64 {
        let e: Vec<f64> = self.a_in.samples()[..=self.write_end()].iter().map(|z| z.norm_sqr()).collect();
        trapezoid(self.a_in.grid().dt(), &e)
    }

    /// `|b|²` at the start of the hold.
    pub fn stored_energy(&self) -> f64 {
        self.trajectory.b.samples()[self.write_end()].norm_sqr()
    }

    /// `∫|A_out|²` over the read window.
    pub fn output_energy(&self) -> f64 {
        let e: Vec<f64> = self.a_out.samples()[self.read_start()..].iter().map(|z| z.norm_sqr()).collect();
        trapezoid(self.a_out.grid().dt(), &e)
    }

    /// Writes the full trajectory with the controls, one row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t", "re(Ain)", "im(Ain)", "re(a)", "im(a)", "re(b)", "im(b)", "re(Aout)", "im(Aout)", "g", "delta", "Delta",
        ])?;
        let s = &self.schedule;
        for (k, t) in self.a_in.grid().times().enumerate() {
            let (i, a, b, o) = (
                self.a_in.samples()[k],
                self.trajectory.a.samples()[k],
                self.trajectory.b.samples()[k],
                self.a_out.samples()[k],
            );
            w.write_record([
                fmt_num(t),
                fmt_num(i.re),
                fmt_num(i.im),
                fmt_num(a.re),
                fmt_num(a.im),
                fmt_num(b.re),
                fmt_num(b.im),
                fmt_num(o.re),
                fmt_num(o.im),
                fmt_num(s.coupling()[k]),
                fmt_num(s.cavity_detuning()[k]),
                fmt_num(s.oscillator_detuning()[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
