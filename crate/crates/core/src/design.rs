//! Inverse design of coupling and detuning waveforms.
//!
//! A schedule is mode matched when the cavity output stays in vacuum during
//! the write phase, i.e. `A_out = √(2κ)·a − A_in = 0`. Given the cavity
//! trajectory `a(t)` that condition fixes the controls. All write schedules
//! end at `t = 0`; readout is the time mirror of the write phase about
//! `T_hold / 2`.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::signal::{fmt_num, sech, trapezoid, Envelope, TimeGrid};

/// Minimum lead of the write window before the pulse peak, in pulse widths.
pub const MIN_LEAD: f64 = 8.0;
/// Default limit on how far past the pulse peak a detuning write may extend.
pub const DETUNING_WRITE_CAP: f64 = 6.0;
/// Controls are only solved where `|a| > CAVITY_FLOOR · max|a|`.
pub const CAVITY_FLOOR: f64 = 1e-6;
/// Largest negative `b²` (relative to `max a²`) still treated as round-off.
pub const B_SQ_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryParams {
    pub kappa: f64,
    pub gamma: f64,
}

impl MemoryParams {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { kappa, gamma })
    }

    /// κ = 1 units with oscillator damping `gamma_over_kappa`.
    pub fn lossy(gamma_over_kappa: f64) -> Result<Self> {
        Self::new(1.0, gamma_over_kappa)
    }
}

impl Default for MemoryParams {
    fn default() -> Self {
        Self { kappa: 1.0, gamma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Write,
    Hold,
    Read,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Write => "write",
            Phase::Hold => "hold",
            Phase::Read => "read",
        }
    }
}

/// What the controls do while the memory holds its state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HoldMode {
    /// `g = δ = Δ = 0`.
    #[default]
    Decoupled,
    /// `g = 1`, `δ = 0`, oscillator pushed off resonance by a constant `Δ`.
    Detuned { oscillator_detuning: f64 },
}

/// Sampled controls `g(t)`, `δ(t)`, `Δ(t)` plus the write/hold/read partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    grid: TimeGrid,
    coupling: Vec<f64>,
    cavity_detuning: Vec<f64>,
    oscillator_detuning: Vec<f64>,
    write: Range<usize>,
    hold: Range<usize>,
    read: Range<usize>,
}

impl ControlSchedule {
    pub fn new(
        grid: TimeGrid,
        coupling: Vec<f64>,
        cavity_detuning: Vec<f64>,
        oscillator_detuning: Vec<f64>,
        write: Range<usize>,
        hold: Range<usize>,
        read: Range<usize>,
    ) -> Result<Self> {
        let n = grid.len();
        for (name, v) in [("g", &coupling), ("delta", &cavity_detuning), ("Delta", &oscillator_detuning)] {
            if v.len() != n {
                return Err(invalid(format!("control {name} has {} samples for {n} grid points", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("control {name} has non-finite samples")));
            }
        }
        if write.start != 0 || write.end != hold.start || hold.end != read.start || read.end != n {
            return Err(invalid(format!(
                "phases {write:?}/{hold:?}/{read:?} do not partition 0..{n}"
            )));
        }
        Ok(Self { grid, coupling, cavity_detuning, oscillator_detuning, write, hold, read })
    }

    /// Schedule consisting of a single write phase.
    pub fn write_only(grid: TimeGrid, coupling: Vec<f64>, cavity_detuning: Vec<f64>, oscillator_detuning: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, coupling, cavity_detuning, oscillator_detuning, 0..n, n..n, n..n)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }
    pub fn cavity_detuning(&self) -> &[f64] {
        &self.cavity_detuning
    }
    pub fn oscillator_detuning(&self) -> &[f64] {
        &self.oscillator_detuning
    }
    pub fn range(&self, phase: Phase) -> Range<usize> {
        match phase {
            Phase::Write => self.write.clone(),
            Phase::Hold => self.hold.clone(),
            Phase::Read => self.read.clone(),
        }
    }

    pub fn phase_at(&self, k: usize) -> Phase {
        if self.write.contains(&k) {
            Phase::Write
        } else if self.hold.contains(&k) {
            Phase::Hold
        } else {
            Phase::Read
        }
    }

    /// Writes `t,g,delta,Delta,phase` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "g", "delta", "Delta", "phase"])?;
        for (k, t) in self.grid.times().enumerate() {
            w.write_record([
                fmt_num(t),
                fmt_num(self.coupling[k]),
                fmt_num(self.cavity_detuning[k]),
                fmt_num(self.oscillator_detuning[k]),
                self.phase_at(k).label().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Variable-coupling write design (δ = Δ = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDesign {
    pub schedule: ControlSchedule,
    /// Designed cavity amplitude `a(t)` for unit input scale.
    pub a_target: Envelope,
    /// Designed oscillator amplitude `b(t)`.
    pub b_target: Envelope,
    /// Pulse arrival time the schedule is synchronised to.
    pub t0: f64,
    pub kappa: f64,
}

/// Variable-detuning write design for the sech pulse (`g = κ = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningDesign {
    pub schedule: ControlSchedule,
    pub a_target: Envelope,
    /// Real part of the designed oscillator amplitude.
    pub b1: Envelope,
    /// Imaginary part of the designed oscillator amplitude.
    pub b2: Envelope,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Coupling(CouplingDesign),
    Detuning(DetuningDesign),
}

impl Design {
    pub fn write_schedule(&self) -> &ControlSchedule {
        match self {
            Design::Coupling(d) => &d.schedule,
            Design::Detuning(d) => &d.schedule,
        }
    }

    pub fn a_target(&self) -> &Envelope {
        match self {
            Design::Coupling(d) => &d.a_target,
            Design::Detuning(d) => &d.a_target,
        }
    }

    pub fn t0(&self) -> f64 {
        match self {
            Design::Coupling(d) => d.t0,
            Design::Detuning(d) => d.t0,
        }
    }

    /// Cavity damping the design was solved for.
    pub fn kappa(&self) -> f64 {
        match self {
            Design::Coupling(d) => d.kappa,
            Design::Detuning(_) => 1.0,
        }
    }
}

impl From<CouplingDesign> for Design {
    fn from(d: CouplingDesign) -> Self {
        Design::Coupling(d)
    }
}

impl From<DetuningDesign> for Design {
    fn from(d: DetuningDesign) -> Self {
        Design::Detuning(d)
    }
}

/// Write-phase grid ending exactly at `t = 0` and starting at least `lead`
/// before the pulse peak `t0`.
pub fn write_grid(t0: f64, lead: f64, dt: f64) -> Result<TimeGrid> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let span = lead - t0;
    if !(span > 0.0) || !span.is_finite() {
        return Err(invalid(format!("pulse at t0 = {t0} leaves no write window before t = 0")));
    }
    let steps = span / dt;
    let steps = if (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0) { steps.round() } else { steps.ceil() };
    if steps > 1e8 {
        return Err(invalid(format!("write window needs {steps:.3e} steps (limit 1e8)")));
    }
    TimeGrid::new(-steps * dt, dt, steps as usize + 1)
}

fn check_lead(t0: f64, grid: &TimeGrid) -> Result<()> {
    if grid.t_start() > t0 - MIN_LEAD + 1e-9 {
        return Err(invalid(format!(
            "grid starts at {} but must start by t0 - {MIN_LEAD} = {}",
            grid.t_start(),
            t0 - MIN_LEAD
        )));
    }
    Ok(())
}

fn real_env(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Envelope {
    Envelope::from_real(grid, grid.times().map(f)).expect("closed forms are finite on a valid grid")
}

/// Closed-form coupling for `a = sech(t − t0)`: `g = −sech(t − t0)`,
/// `b = e^{t−t0}·sech(t − t0)`. Independent of the pulse amplitude.
pub fn design_coupling_sech(t0: f64, grid: TimeGrid) -> Result<CouplingDesign> {
    check_lead(t0, &grid)?;
    let n = grid.len();
    let coupling = grid.times().map(|t| -sech(t - t0)).collect();
    // e^τ·sech τ = 2 / (1 + e^{−2τ}) avoids overflow for large τ.
    let b = |t: f64| 2.0 / (1.0 + (-2.0 * (t - t0)).exp());
    Ok(CouplingDesign {
        schedule: ControlSchedule::write_only(grid, coupling, vec![0.0; n], vec![0.0; n])?,
        a_target: real_env(grid, |t| sech(t - t0)),
        b_target: real_env(grid, b),
        t0,
        kappa: 1.0,
    })
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
fn derivative(f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    let h = 12.0 * dt;
    (0..n)
        .map(|k| match k {
            0 => (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h,
            1 => (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h,
            k if k == n - 2 => {
                (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / h
            }
            k if k == n - 1 => {
                (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / h
            }
            k => (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / h,
        })
        .collect()
}

/// Running integral `∫_{t_0}^{t_k} f` by the trapezoidal rule with the
/// Euler–Maclaurin end correction, which lifts it to O(dt⁴).
fn cumulative_integral(f: &[f64], df: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * dt * (f[k - 1] + f[k]);
        out.push(acc - dt * dt / 12.0 * (df[k] - df[0]));
    }
    out
}

/// Coupling schedule for an arbitrary real, non-negative cavity envelope.
///
/// With `A_in = √(2κ)·a` and no oscillator loss the write dynamics reduce to
/// `g·b = ȧ − κa` and `ḃ = −g·a`, so
/// `b²(t) = 2κ∫a² − a²(t) + a²(start)` and `g = (ȧ − κa)/b`.
pub fn design_coupling_general(a_desired: &Envelope, params: MemoryParams, grid: TimeGrid) -> Result<CouplingDesign> {
    grid.check_same(a_desired.grid(), "design_coupling_general")?;
    if grid.len() < 5 {
        return Err(invalid("need at least 5 grid points to differentiate the envelope"));
    }
    if !a_desired.is_real() {
        return Err(Error::UnsupportedInput("cavity envelope must be purely real".into()));
    }
    let a: Vec<f64> = a_desired.samples().iter().map(|z| z.re).collect();
    let peak = a.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateInput("cavity envelope is identically zero".into()));
    }
    if a.iter().any(|&x| x < -1e-12 * peak) {
        return Err(Error::UnsupportedInput("cavity envelope changes sign".into()));
    }
    if a[0] > CAVITY_FLOOR * peak {
        return Err(Error::UnsupportedInput(format!(
            "cavity envelope must start empty: a(start) = {:.3e} of peak",
            a[0] / peak
        )));
    }

    let dt = grid.dt();
    let kappa = params.kappa;
    let a_dot = derivative(&a, dt);
    let a_sq: Vec<f64> = a.iter().map(|x| x * x).collect();
    let a_sq_dot: Vec<f64> = a.iter().zip(&a_dot).map(|(x, dx)| 2.0 * x * dx).collect();
    let integral = cumulative_integral(&a_sq, &a_sq_dot, dt);

    let mut b = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let b_sq = 2.0 * kappa * integral[k] - a_sq[k] + a_sq[0];
        if b_sq < -B_SQ_SLACK * peak * peak {
            return Err(Error::DesignInfeasible(format!(
                "b² = {b_sq:.3e} at t = {:.4}: the envelope rises faster than the cavity can absorb",
                grid.time(k)
            )));
        }
        b.push(b_sq.max(0.0).sqrt());
    }

    let mut coupling: Vec<Option<f64>> = a
        .iter()
        .zip(&a_dot)
        .zip(&b)
        .map(|((&a, &da), &b)| (a > CAVITY_FLOOR * peak && b > 0.0).then(|| (da - kappa * a) / b))
        .collect();
    if coupling.iter().all(Option::is_none) {
        return Err(Error::DegenerateInput("no sample carries enough cavity amplitude".into()));
    }
    hold_nearest(&mut coupling);
    let coupling: Vec<f64> = coupling.into_iter().map(|g| g.unwrap()).collect();

    let n = grid.len();
    let t0 = grid.time(a.iter().enumerate().fold(0, |best, (k, &x)| if x > a[best] { k } else { best }));
    Ok(CouplingDesign {
        schedule: ControlSchedule::write_only(grid, coupling, vec![0.0; n], vec![0.0; n])?,
        a_target: a_desired.clone(),
        b_target: Envelope::from_real(grid, b)?,
        t0,
        kappa,
    })
}

/// Fills gaps with the nearest defined value (ties resolved toward earlier samples).
fn hold_nearest(v: &mut [Option<f64>]) {
    let n = v.len();
    let mut prev: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut last = None;
    for k in 0..n {
        if let Some(x) = v[k] {
            last = Some((k, x));
        }
        prev[k] = last;
    }
    let mut next = None;
    for k in (0..n).rev() {
        if let Some(x) = v[k] {
            next = Some((k, x));
            continue;
        }
        v[k] = match (prev[k], next) {
            (Some((i, x)), Some((j, y))) => Some(if k - i <= j - k { x } else { y }),
            (Some((_, x)), None) | (None, Some((_, x))) => Some(x),
            (None, None) => None,
        };
    }
}

/// Closed-form detunings for the sech pulse with `g = κ = 1`:
/// `δ = e^τ tanh τ`, `Δ = e^{−τ} tanh τ + sech τ`, `τ = t − t0`.
pub fn design_detuning_sech(t0: f64, grid: TimeGrid) -> Result<DetuningDesign> {
    design_detuning_sech_capped(t0, grid, DETUNING_WRITE_CAP)
}

pub fn design_detuning_sech_capped(t0: f64, grid: TimeGrid, cap: f64) -> Result<DetuningDesign> {
    let reach = grid.t_end() - t0;
    if reach > cap + 1e-9 {
        return Err(invalid(format!(
            "detuning write window reaches {reach:.3} widths past the pulse peak (cap {cap})"
        )));
    }
    let n = grid.len();
    let tau = |t: f64| t - t0;
    let cavity: Vec<f64> = grid.times().map(|t| tau(t).exp() * tau(t).tanh()).collect();
    let oscillator: Vec<f64> =
        grid.times().map(|t| (-tau(t)).exp() * tau(t).tanh() + sech(tau(t))).collect();
    Ok(DetuningDesign {
        schedule: ControlSchedule::write_only(grid, vec![1.0; n], cavity, oscillator)?,
        a_target: real_env(grid, |t| sech(tau(t))),
        b1: real_env(grid, |t| -tau(t).exp() * sech(tau(t)).powi(2)),
        b2: real_env(grid, |t| tau(t).exp() * sech(tau(t)) * tau(t).tanh()),
        t0,
    })
}

/// Full write/hold/read schedule with a decoupled hold.
pub fn time_reversed_readout(design: &Design, t_hold: f64) -> Result<ControlSchedule> {
    time_reversed_readout_with(design, t_hold, HoldMode::Decoupled)
}

/// Appends a hold of length `t_hold` and a read phase that mirrors the write
/// phase about `t_hold / 2`: `g_read(t) = g(T − t)`, `(δ, Δ)_read(t) = −(δ, Δ)(T − t)`.
pub fn time_reversed_readout_with(design: &Design, t_hold: f64, hold: HoldMode) -> Result<ControlSchedule> {
    if !(t_hold >= 0.0) || !t_hold.is_finite() {
        return Err(invalid(format!("hold time must be non-negative, got {t_hold}")));
    }
    let w = design.write_schedule();
    let wg = *w.grid();
    let n_write = wg.len();
    if wg.index_of(0.0) != Some(n_write - 1) {
        return Err(invalid(format!("write phase must end at t = 0, ends at {}", wg.t_end())));
    }
    let dt = wg.dt();
    let steps = t_hold / dt;
    let hold_steps = steps.round();
    if (steps - hold_steps).abs() > 1e-6 {
        return Err(invalid(format!("hold time {t_hold} is not a multiple of dt = {dt}")));
    }
    let hold_steps = hold_steps as usize;
    let n = 2 * n_write - 1 + hold_steps;
    let grid = TimeGrid::new(wg.t_start(), dt, n)?;

    let (write, hold_r, read) = if hold_steps > 0 {
        (0..n_write, n_write..n_write + hold_steps - 1, n_write + hold_steps - 1..n)
    } else {
        (0..n_write - 1, n_write - 1..n_write - 1, n_write - 1..n)
    };

    let (hold_g, hold_delta, hold_big) = match hold {
        HoldMode::Decoupled => (0.0, 0.0, 0.0),
        HoldMode::Detuned { oscillator_detuning } => (1.0, 0.0, oscillator_detuning),
    };
    let mut g = vec![hold_g; n];
    let mut delta = vec![hold_delta; n];
    let mut big = vec![hold_big; n];
    for k in write.clone() {
        g[k] = w.coupling[k];
        delta[k] = w.cavity_detuning[k];
        big[k] = w.oscillator_detuning[k];
    }
    for k in read.clone() {
        let m = n - 1 - k;
        g[k] = w.coupling[m];
        delta[k] = -w.cavity_detuning[m];
        big[k] = -w.oscillator_detuning[m];
    }
    ControlSchedule::new(grid, g, delta, big, write, hold_r, read)
}

/// Largest `|Im|` of the two write-phase residuals
/// `(ḃ₁ + a)b₁ + ḃ₂b₂` scaled by `|b|²`; zero for an exact detuning design.
pub fn detuning_consistency(design: &DetuningDesign) -> f64 {
    let dt = design.schedule.grid().dt();
    let re = |e: &Envelope| e.samples().iter().map(|z| z.re).collect::<Vec<_>>();
    let (a, b1, b2) = (re(&design.a_target), re(&design.b1), re(&design.b2));
    let (db1, db2) = (derivative(&b1, dt), derivative(&b2, dt));
    (0..a.len())
        .map(|k| {
            let mag = b1[k] * b1[k] + b2[k] * b2[k];
            ((db1[k] + a[k]) * b1[k] + db2[k] * b2[k]).abs() / mag.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// `|(ȧ − g·b)/a − κ|` on samples with `|a| > CAVITY_FLOOR · max|a|`.
pub fn coupling_residual(design: &CouplingDesign) -> f64 {
    let dt = design.schedule.grid().dt();
    let a: Vec<f64> = design.a_target.samples().iter().map(|z| z.re).collect();
    let b: Vec<f64> = design.b_target.samples().iter().map(|z| z.re).collect();
    let da = derivative(&a, dt);
    let peak = a.iter().cloned().fold(0.0, f64::max);
    let g = design.schedule.coupling();
    (0..a.len())
        .filter(|&k| a[k] > CAVITY_FLOOR * peak)
        .map(|k| ((da[k] - g[k] * b[k]) / a[k] - design.kappa).abs())
        .fold(0.0, f64::max)
}

/// `b` at the end of the write window from the energy balance `2κ∫a² − a² + a²(start)`.
pub fn stored_energy(design: &CouplingDesign) -> f64 {
    let a: Vec<f64> = design.a_target.samples().iter().map(|z| z.re * z.re).collect();
    let dt = design.schedule.grid().dt();
    2.0 * design.kappa * trapezoid(dt, &a) - a[a.len() - 1] + a[0]
}

impl DetuningDesign {
    /// Designed oscillator amplitude `b = b₁ + i·b₂`.
    pub fn b(&self) -> Vec<Complex64> {
        self.b1.samples().iter().zip(self.b2.samples()).map(|(x, y)| Complex64::new(x.re, y.re)).collect()
    }
}
