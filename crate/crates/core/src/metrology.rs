//! Retrieval efficiency and quantum-memory fidelity benchmarks.
//!
//! The memory acts on the stored mode as a beam splitter with intensity
//! transmissivity `η` mixing in a vacuum reservoir. Closed-form fidelities
//! for inputs of at most one or two photons are checked against a direct
//! Fock-space simulation of that channel averaged over Haar-random states.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::ProtocolResult;
use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};
use crate::signal::{fmt_num, normalize_mode, project, ModeAmplitude, ModeFunction};

/// Samples per Monte Carlo work unit; each unit draws from its own stream.
const HAAR_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    /// `√η_M = |a_out / a_in|`.
    pub amplitude_efficiency: f64,
    /// `η_M`.
    pub intensity_efficiency: f64,
    pub in_amplitude: ModeAmplitude,
    pub out_amplitude: ModeAmplitude,
}

/// Projects the input onto `in_mode` and the output onto `expected_out_mode`.
/// Each mode lives on the sub-grid of the window it is measured over.
pub fn efficiency(result: &ProtocolResult, expected_out_mode: &ModeFunction, in_mode: &ModeFunction) -> Result<EfficiencyReport> {
    let a_in = project(in_mode, &result.a_in.restrict_to(in_mode.grid())?)?;
    let a_out = project(expected_out_mode, &result.a_out.restrict_to(expected_out_mode.grid())?)?;
    if a_in.value().norm() < 1e-12 {
        return Err(Error::DegenerateInput("input has no overlap with the input mode".into()));
    }
    let amp = (a_out.value() / a_in.value()).norm();
    let eta = amp * amp;
    if eta > 1.0 + 1e-6 {
        return Err(invalid(format!("retrieval efficiency {eta} exceeds unity")));
    }
    Ok(EfficiencyReport {
        amplitude_efficiency: amp.min(1.0),
        intensity_efficiency: eta.min(1.0),
        in_amplitude: a_in,
        out_amplitude: a_out,
    })
}

/// Input mode over the write window and its time mirror over the read window.
pub fn protocol_modes(result: &ProtocolResult) -> Result<(ModeFunction, ModeFunction)> {
    let write = result.a_in.restrict(0..result.write_end() + 1)?;
    let in_mode = normalize_mode(&write)?;
    let read_grid = *result.a_out.restrict(result.read_start()..result.a_out.len())?.grid();
    let out_mode = in_mode.time_reversed_on(read_grid)?;
    Ok((in_mode, out_mode))
}

/// Efficiency measured against the time-reversed input mode.
pub fn protocol_efficiency(result: &ProtocolResult) -> Result<EfficiencyReport> {
    let (in_mode, out_mode) = protocol_modes(result)?;
    efficiency(result, &out_mode, &in_mode)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("efficiency must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

fn check_n_bar(n_bar: f64) -> Result<()> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(invalid(format!("mean photon number must be non-negative, got {n_bar}")));
    }
    Ok(())
}

/// Mean fidelity for a Gaussian ensemble of coherent states: `1/[1 + n̄(1 − √η)²]`.
pub fn coherent_fidelity(eta: f64, n_bar: f64) -> Result<f64> {
    check_eta(eta)?;
    check_n_bar(n_bar)?;
    Ok(1.0 / (1.0 + n_bar * (1.0 - eta.sqrt()).powi(2)))
}

/// Best measure-and-prepare fidelity for the same ensemble: `(1 + n̄)/(2n̄ + 1)`.
pub fn classical_coherent_bound(n_bar: f64) -> Result<f64> {
    check_n_bar(n_bar)?;
    Ok((1.0 + n_bar) / (2.0 * n_bar + 1.0))
}

/// Efficiency at which [`coherent_fidelity`] meets [`classical_coherent_bound`].
pub fn qm_efficiency_threshold(n_bar: f64) -> Result<f64> {
    check_n_bar(n_bar)?;
    Ok((1.0 - (1.0 / (n_bar + 1.0)).sqrt()).powi(2))
}

/// Haar-averaged fidelity through the loss channel for states of at most
/// `n_m ∈ {1, 2}` photons.
pub fn bounded_fidelity(eta: f64, n_m: u32) -> Result<f64> {
    check_eta(eta)?;
    let r = eta.sqrt();
    match n_m {
        1 => Ok((eta + 2.0 * r + 3.0) / 6.0),
        2 => Ok((eta * eta + 2.0 * eta * r + 3.0 * eta + 2.0 * r + 4.0) / 12.0),
        _ => Err(invalid(format!("closed-form fidelity is only known for n_m = 1, 2 (got {n_m})"))),
    }
}

/// Cloning limit `2/(n_m + 2)` for states of `n_m + 1` levels.
pub fn clone_bound(n_m: u32) -> Result<f64> {
    if n_m < 1 {
        return Err(invalid("photon-number bound must be at least 1"));
    }
    Ok(2.0 / (n_m as f64 + 2.0))
}

/// Efficiency at which [`bounded_fidelity`] reaches the cloning bound, by bisection.
pub fn bounded_fidelity_threshold(n_m: u32) -> Result<f64> {
    let target = clone_bound(n_m)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if bounded_fidelity(lo, n_m)? >= target {
        return Ok(0.0);
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if bounded_fidelity(mid, n_m)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pure state over Fock levels `|0⟩..|n_m⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    coefficients: Vec<Complex64>,
}

impl FockState {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(invalid("state needs at least one level"));
        }
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self { coefficients })
    }

    /// `|n⟩` in a space of `levels` levels.
    pub fn number(n: usize, levels: usize) -> Result<Self> {
        if n >= levels {
            return Err(invalid(format!("|{n}⟩ does not fit in {levels} levels")));
        }
        let mut c = vec![Complex64::default(); levels];
        c[n] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    /// Haar-random state: a normalized vector of i.i.d. complex Gaussians.
    pub fn haar<R: rand::Rng + ?Sized>(n_m: usize, rng: &mut R) -> Self {
        let mut c = haar_vector(n_m + 1, rng);
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        c.iter_mut().for_each(|z| *z /= norm);
        Self { coefficients: c }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn max_photons(&self) -> usize {
        self.coefficients.len() - 1
    }
}

fn haar_vector<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Amplitudes `ψ[m][k]` of `|m⟩_out ⊗ |k⟩_reservoir` after a beam splitter of
/// transmissivity `eta` acts on `state ⊗ |0⟩`; `k` photons went to the reservoir.
fn beam_splitter(state: &FockState, eta: f64) -> Vec<Vec<Complex64>> {
    let levels = state.coefficients.len();
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let mut joint = vec![vec![Complex64::default(); levels]; levels];
    for (n, &c) in state.coefficients.iter().enumerate() {
        for k in 0..=n {
            let amp = binomial(n, k).sqrt() * t.powi((n - k) as i32) * r.powi(k as i32);
            joint[n - k][k] += c * amp;
        }
    }
    joint
}

/// Output density matrix of the vacuum-reservoir loss channel, obtained by
/// tracing the reflected port out of the beam-splitter output.
pub fn loss_channel(state: &FockState, eta: f64) -> Result<DMatrix<Complex64>> {
    check_eta(eta)?;
    let joint = beam_splitter(state, eta);
    let d = joint.len();
    Ok(DMatrix::from_fn(d, d, |m, mp| (0..d).map(|k| joint[m][k] * joint[mp][k].conj()).sum()))
}

/// `⟨ψ| loss_channel(ψ, η) |ψ⟩`.
pub fn channel_fidelity(state: &FockState, eta: f64) -> f64 {
    let joint = beam_splitter(state, eta);
    let d = joint.len();
    (0..d)
        .map(|k| (0..d).map(|m| state.coefficients[m].conj() * joint[m][k]).sum::<Complex64>().norm_sqr())
        .sum()
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

pub fn haar_average_fidelity(eta: f64, n_m: usize, n_samples: usize, seed: u64) -> Result<Estimate> {
    haar_average_fidelity_with(eta, n_m, n_samples, seed, Execution::default())
}

/// Haar-averaged channel fidelity. Work is cut into fixed chunks, each with its
/// own ChaCha stream derived from `seed`, so the estimate does not depend on
/// the execution mode or worker count.
pub fn haar_average_fidelity_with(eta: f64, n_m: usize, n_samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
    check_eta(eta)?;
    if n_samples < 1000 {
        return Err(invalid(format!("need at least 1000 samples, got {n_samples}")));
    }
    if n_m < 1 {
        return Err(invalid("photon-number bound must be at least 1"));
    }
    let chunks: Vec<(u64, usize)> = (0..n_samples.div_ceil(HAAR_CHUNK))
        .map(|i| (i as u64, HAAR_CHUNK.min(n_samples - i * HAAR_CHUNK)))
        .collect();
    let partial = par::map(&chunks, exec, |&(stream, len)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..len).fold((0.0, 0.0), |(s, s2), _| {
            let f = channel_fidelity(&FockState::haar(n_m, &mut rng), eta);
            (s + f, s2 + f * f)
        })
    });
    let (sum, sum_sq) = partial.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(Estimate { mean, std_err: (var / n).sqrt(), samples: n_samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdicts {
    pub coherent: bool,
    pub bounded_1: bool,
    pub bounded_2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub eta: f64,
    pub n_bar: f64,
    pub f_coherent: f64,
    pub f_classical_coherent: f64,
    pub eta_threshold: f64,
    pub f1: f64,
    pub f2: f64,
    pub clone_bound_1: f64,
    pub clone_bound_2: f64,
    pub verdicts: Verdicts,
}

pub fn fidelity_report(eta: f64, n_bar: f64) -> Result<FidelityReport> {
    let f_coherent = coherent_fidelity(eta, n_bar)?;
    let f_classical_coherent = classical_coherent_bound(n_bar)?;
    let (f1, f2) = (bounded_fidelity(eta, 1)?, bounded_fidelity(eta, 2)?);
    let (clone_bound_1, clone_bound_2) = (clone_bound(1)?, clone_bound(2)?);
    Ok(FidelityReport {
        eta,
        n_bar,
        f_coherent,
        f_classical_coherent,
        eta_threshold: qm_efficiency_threshold(n_bar)?,
        f1,
        f2,
        clone_bound_1,
        clone_bound_2,
        verdicts: Verdicts {
            coherent: f_coherent > f_classical_coherent,
            bounded_1: f1 > clone_bound_1,
            bounded_2: f2 > clone_bound_2,
        },
    })
}

pub(crate) fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl FidelityReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "eta", "n_bar", "F_coherent", "F_classical_coherent", "eta_threshold", "F1", "F2", "clone_bound_1",
        "clone_bound_2", "verdict_coherent", "verdict_n1", "verdict_n2", "sqrt_eta",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            fmt_num(self.eta),
            fmt_num(self.n_bar),
            fmt_num(self.f_coherent),
            fmt_num(self.f_classical_coherent),
            fmt_num(self.eta_threshold),
            fmt_num(self.f1),
            fmt_num(self.f2),
            fmt_num(self.clone_bound_1),
            fmt_num(self.clone_bound_2),
            pass_fail(self.verdicts.coherent).into(),
            pass_fail(self.verdicts.bounded_1).into(),
            pass_fail(self.verdicts.bounded_2).into(),
            fmt_num(self.eta.sqrt()),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        w.write_record(self.csv_fields())?;
        w.flush()?;
        Ok(())
    }

    /// Aligned plain-text summary.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, name: &str, value: f64, bound: Option<f64>, ok: Option<bool>| {
            let bound = bound.map(|b| format!("{b:>10.4}")).unwrap_or_else(|| format!("{:>10}", "-"));
            let ok = ok.map(pass_fail).unwrap_or("");
            s.push_str(&format!("{name:<28}{value:>10.4}{bound}  {ok}\n"));
        };
        s.push_str(&format!("{:<28}{:>10}{:>10}  {}\n", "quantity", "value", "bound", "verdict"));
        row(&mut s, "amplitude efficiency", self.eta.sqrt(), None, None);
        row(&mut s, "intensity efficiency", self.eta, Some(self.eta_threshold), Some(self.eta > self.eta_threshold));
        row(&mut s, &format!("F coherent (n = {})", self.n_bar), self.f_coherent, Some(self.f_classical_coherent), Some(self.verdicts.coherent));
        row(&mut s, "F bounded (n_m = 1)", self.f1, Some(self.clone_bound_1), Some(self.verdicts.bounded_1));
        row(&mut s, "F bounded (n_m = 2)", self.f2, Some(self.clone_bound_2), Some(self.verdicts.bounded_2));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn coherent_fidelity_examples() {
        assert_eq!(coherent_fidelity(1.0, 37.0).unwrap(), 1.0);
        assert_abs_diff_eq!(coherent_fidelity(0.0, 20.0).unwrap(), 1.0 / 21.0, epsilon = 1e-15);
        assert_eq!(coherent_fidelity(0.3, 0.0).unwrap(), 1.0);
        assert!(coherent_fidelity(1.2, 1.0).is_err());
        assert!(coherent_fidelity(0.5, -1.0).is_err());
    }

    #[test]
    fn classical_bound_examples() {
        assert_abs_diff_eq!(classical_coherent_bound(20.0).unwrap(), 21.0 / 41.0, epsilon = 1e-15);
        assert!((classical_coherent_bound(20.0).unwrap() - 0.512).abs() < 1e-3);
        assert_eq!(classical_coherent_bound(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(classical_coherent_bound(1e6).unwrap(), 0.5, epsilon = 1e-6);
        assert!(classical_coherent_bound(-1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert!((qm_efficiency_threshold(20.0).unwrap() - 0.611).abs() < 1e-3);
        assert_eq!(qm_efficiency_threshold(0.0).unwrap(), 0.0);
        assert!(qm_efficiency_threshold(-2.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n: f64 = rng.gen_range(0.0..100.0);
            let f = coherent_fidelity(qm_efficiency_threshold(n).unwrap(), n).unwrap();
            assert_abs_diff_eq!(f, classical_coherent_bound(n).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn bounded_fidelity_examples() {
        assert_eq!(bounded_fidelity(1.0, 1).unwrap(), 1.0);
        assert_eq!(bounded_fidelity(1.0, 2).unwrap(), 1.0);
        assert_abs_diff_eq!(bounded_fidelity(0.0, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bounded_fidelity(0.0, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bounded_fidelity(0.25, 2).unwrap(), 6.0625 / 12.0, epsilon = 1e-15);
        assert!(matches!(bounded_fidelity(0.5, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn clone_bound_examples() {
        assert_eq!(clone_bound(2).unwrap(), 0.5);
        assert_abs_diff_eq!(clone_bound(1).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(clone_bound(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fidelities_are_monotone() {
        let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            assert!(coherent_fidelity(w[1], 20.0).unwrap() > coherent_fidelity(w[0], 20.0).unwrap());
            for n_m in [1, 2] {
                assert!(bounded_fidelity(w[1], n_m).unwrap() > bounded_fidelity(w[0], n_m).unwrap());
            }
        }
    }

    #[test]
    fn loss_channel_examples() {
        let psi = FockState::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let rho = loss_channel(&psi, 1.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = psi.coefficients()[i] * psi.coefficients()[j].conj();
                assert!((rho[(i, j)] - want).norm() < 1e-15);
            }
        }
        let rho = loss_channel(&psi, 0.0).unwrap();
        assert!((rho[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(rho.iter().skip(1).all(|z| z.norm() < 1e-15));

        let one = FockState::number(1, 2).unwrap();
        let rho = loss_channel(&one, 0.5).unwrap();
        assert_abs_diff_eq!(rho[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn fock_state_validation() {
        assert!(FockState::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
        assert!(FockState::new(vec![]).is_err());
        assert!(FockState::number(3, 3).is_err());
    }

    fn state_strategy() -> impl Strategy<Value = FockState> {
        (1usize..5, any::<u64>()).prop_map(|(n_m, seed)| FockState::haar(n_m, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    proptest! {
        #[test]
        fn loss_channel_is_a_valid_state(psi in state_strategy(), eta in 0.0..=1.0f64) {
            let rho = loss_channel(&psi, eta).unwrap();
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
            prop_assert!((&rho - rho.adjoint()).norm() < 1e-12);
            let eig = nalgebra::SymmetricEigen::new(rho.clone());
            prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
            // photon number never increases
            let mean_in: f64 = psi.coefficients().iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum();
            let mean_out: f64 = (0..rho.nrows()).map(|n| n as f64 * rho[(n, n)].re).sum();
            prop_assert!((mean_out - eta * mean_in).abs() < 1e-10);
            let f = channel_fidelity(&psi, eta);
            let direct = psi.coefficients().iter().enumerate().map(|(i, ci)| {
                psi.coefficients().iter().enumerate().map(|(j, cj)| ci.conj() * rho[(i, j)] * cj).sum::<Complex64>()
            }).sum::<Complex64>();
            prop_assert!((f - direct.re).abs() < 1e-12);
        }

        #[test]
        fn loss_channels_compose(psi in state_strategy(), e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64) {
            // second channel applied to the mixed output, one Kraus branch at a time
            let rho1 = loss_channel(&psi, e1).unwrap();
            let eig = nalgebra::SymmetricEigen::new(rho1);
            let d = psi.coefficients().len();
            let mut composed = DMatrix::<Complex64>::zeros(d, d);
            for (i, &p) in eig.eigenvalues.iter().enumerate() {
                if p <= 1e-14 { continue; }
                let v: Vec<Complex64> = eig.eigenvectors.column(i).iter().cloned().collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let branch = FockState::new(v.iter().map(|z| z / norm).collect()).unwrap();
                composed += loss_channel(&branch, e2).unwrap() * Complex64::new(p, 0.0);
            }
            let direct = loss_channel(&psi, e1 * e2).unwrap();
            prop_assert!((composed - direct).norm() < 1e-10);
        }
    }

    #[test]
    fn haar_oracle_endpoints() {
        let est = haar_average_fidelity(1.0, 2, 2000, 3).unwrap();
        assert_abs_diff_eq!(est.mean, 1.0, epsilon = 1e-12);
        assert!(est.std_err < 1e-12);
        assert!(haar_average_fidelity(0.5, 1, 10, 3).is_err());
    }

    #[test]
    fn haar_oracle_matches_closed_form() {
        for (n_m, eta) in [(1u32, 0.5), (2, 0.25)] {
            let est = haar_average_fidelity(eta, n_m as usize, 100_000, 11).unwrap();
            let want = bounded_fidelity(eta, n_m).unwrap();
            assert!((est.mean - want).abs() < 3.0 * est.std_err, "n_m={n_m}: {est:?} vs {want}");
        }
        assert_abs_diff_eq!(bounded_fidelity(0.5, 1).unwrap(), 0.81904, epsilon = 1e-5);
    }

    #[test]
    fn haar_oracle_is_deterministic_across_modes() {
        let a = haar_average_fidelity_with(0.3, 2, 20_000, 99, Execution::Sequential).unwrap();
        let b = haar_average_fidelity_with(0.3, 2, 20_000, 99, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = haar_average_fidelity_with(0.3, 2, 20_000, 100, Execution::Sequential).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn report_examples() {
        let r = fidelity_report(0.871f64.powi(2), 20.0).unwrap();
        assert!((r.f_coherent - 0.75).abs() < 0.005, "{}", r.f_coherent);
        assert!(r.verdicts.coherent);
        let r = fidelity_report(0.23, 20.0).unwrap();
        assert!((r.f2 - 0.4936).abs() < 1e-3, "{}", r.f2);
        assert!(!r.verdicts.bounded_2);
        let r = fidelity_report(1.0, 20.0).unwrap();
        assert!(r.verdicts.coherent && r.verdicts.bounded_1 && r.verdicts.bounded_2);
        assert!(r.table().contains("PASS"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn two_photon_threshold_root() {
        let root = bounded_fidelity_threshold(2).unwrap();
        assert_abs_diff_eq!(bounded_fidelity(root, 2).unwrap(), 0.5, epsilon = 1e-12);
        assert!(root > 0.23 && root < 0.25, "{root}");
    }
}
