//! Two-mode reduced dynamics of a pair of emitters after eliminating the
//! lattice through the self-energy.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, initial_state, IntegratorConfig};
use crate::model::{assemble_hamiltonian, CouplingPoint, SystemSpec};
use crate::selfenergy::{sigma_matrix, Branch, SelfEnergyResult};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Threshold on `|Im Σ| / g²` below which the pair counts as decoherence free.
pub const DFI_TOLERANCE: f64 = 1e-8;

/// `g² / (sqrt(t_R t_L) · bandwidth)` above which the reduced model is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveHamiltonian2 {
    pub m: [[Complex64; 2]; 2],
}

impl EffectiveHamiltonian2 {
    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    /// `exp(-i H t)` in closed form. With `H = τ + K`, `K` traceless and
    /// `K² = δ²`, the exponential is `e^{-iτt} (cos δt - i sin(δt)/δ K)`.
    pub fn propagator(&self, t: f64) -> [[Complex64; 2]; 2] {
        let [[a, b], [c, d]] = self.m;
        let tau = (a + d) / 2.0;
        let half = (a - d) / 2.0;
        let delta = (half * half + b * c).sqrt();
        let x = delta * t;
        let sinc_t = if x.norm() < 1e-4 { t * (1.0 - x * x / 6.0) } else { x.sin() / delta };
        let cos = x.cos();
        let phase = (-I * tau * t).exp();
        let k = [[half, b], [c, -half]];
        let mut u = [[Complex64::default(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { cos } else { Complex64::default() };
                u[i][j] = phase * (id - I * sinc_t * k[i][j]);
            }
        }
        u
    }
}

/// `[[Δ_b + Σ_b, Σ_bc], [Σ_cb, Δ_c + Σ_c]]`.
pub fn effective_hamiltonian(pair: &SelfEnergyResult, detunings: [f64; 2]) -> Result<EffectiveHamiltonian2> {
    let missing = || Error::InvalidArgument("pair self-energies required".into());
    let c = pair.c.ok_or_else(missing)?;
    let bc = pair.bc.ok_or_else(missing)?;
    let cb = pair.cb.ok_or_else(missing)?;
    Ok(EffectiveHamiltonian2 { m: [[detunings[0] + pair.b, bc], [cb, detunings[1] + c]] })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<[Complex64; 2]>,
}

impl ReducedTrajectory {
    pub fn population(&self, mode: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|u| u[mode].norm_sqr()).collect()
    }
}

pub fn reduced_evolution(h: &EffectiveHamiltonian2, initial: [Complex64; 2], times: &[f64]) -> ReducedTrajectory {
    let amplitudes = times
        .iter()
        .map(|&t| {
            let u = h.propagator(t);
            [u[0][0] * initial[0] + u[0][1] * initial[1], u[1][0] * initial[0] + u[1][1] * initial[1]]
        })
        .collect();
    ReducedTrajectory { times: times.to_vec(), amplitudes }
}

/// First interior local maximum of a sampled series, as `(time, value)`.
pub fn first_peak(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    (1..values.len().saturating_sub(1))
        .find(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .map(|i| (times[i], values[i]))
}

/// First sample that is the maximum of the window `[t - half_width, t + half_width]`,
/// as `(time, value)`. Ripples shorter than the window are skipped.
pub fn first_dominant_peak(times: &[f64], values: &[f64], half_width: f64) -> Option<(f64, f64)> {
    let n = values.len().min(times.len());
    (1..n.saturating_sub(1))
        .filter(|&i| times[i] - times[0] >= half_width && times[n - 1] - times[i] >= half_width)
        .find(|&i| {
            (0..n)
                .filter(|&k| (times[k] - times[i]).abs() <= half_width)
                .all(|k| values[k] <= values[i])
        })
        .map(|i| (times[i], values[i]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DfiReport {
    pub is_dfi: bool,
    /// `Σ_bc / Σ_cb`.
    pub nonreciprocity_ratio: Complex64,
    /// `sqrt(Σ_bc Σ_cb)`.
    pub omega: Complex64,
    /// Exchange period `π / Re Ω`.
    pub period: f64,
    pub sigma: SelfEnergyResult,
    pub hamiltonian: EffectiveHamiltonian2,
    pub warnings: Vec<String>,
}

/// Interleaved pair geometry: `b` at `N, N + D''`, `c` at `N + D', N + D' + D''`
/// with `0 < D' < D''`. Returns `(D', D'')`.
pub fn braided_separations(spec: &SystemSpec) -> Result<(i64, i64)> {
    let unsupported = || Error::Unsupported("two emitters with interleaved two-point couplings required".into());
    let [b, c] = spec.emitters.as_slice() else {
        return Err(unsupported());
    };
    let ([b0, b1], [c0, c1]) = (b.couplings.as_slice(), c.couplings.as_slice()) else {
        return Err(unsupported());
    };
    let (d1, d2) = (c0.site - b0.site, b1.site - b0.site);
    if d1 <= 0 || d2 <= d1 || c1.site - c0.site != d2 {
        return Err(unsupported());
    }
    Ok((d1, d2))
}

pub fn dfi_report(spec: &SystemSpec) -> Result<DfiReport> {
    braided_separations(spec)?;
    let lat = &spec.lattice;
    let (t_r, t_l) = (lat.t_r(), lat.t_l());
    let detunings = [spec.emitters[0].detuning, spec.emitters[1].detuning];
    let sigma = pair_sigma(spec, Complex64::new(detunings[0], 0.0))?;
    let g2 = spec
        .emitters
        .iter()
        .flat_map(|e| e.couplings.iter().map(|c| c.strength * c.strength))
        .fold(0.0, f64::max);
    let (bc, cb) = (sigma.bc.unwrap(), sigma.cb.unwrap());
    let is_dfi = [sigma.b, sigma.c.unwrap(), bc, cb].iter().all(|s| s.im.abs() < DFI_TOLERANCE * g2);
    let omega = (bc * cb).sqrt();
    let mut warnings = Vec::new();
    let j = (t_r * t_l).sqrt();
    if g2 / (j * 4.0 * j) > WEAK_COUPLING_LIMIT {
        warnings.push(format!(
            "weak-coupling condition violated: g^2/(J*4J) = {} > {WEAK_COUPLING_LIMIT}",
            g2 / (4.0 * j * j)
        ));
    }
    Ok(DfiReport {
        is_dfi,
        nonreciprocity_ratio: bc / cb,
        omega,
        period: std::f64::consts::PI / omega.re,
        hamiltonian: effective_hamiltonian(&sigma, detunings)?,
        sigma,
        warnings,
    })
}

fn pair_sigma(spec: &SystemSpec, z: Complex64) -> Result<SelfEnergyResult> {
    let lat = &spec.lattice;
    let sets: Vec<&[CouplingPoint]> = spec.emitters.iter().map(|e| e.couplings.as_slice()).collect();
    let s = sigma_matrix(z, &sets, lat.t_r(), lat.t_l())?;
    let branch = if z.im > 0.0 { Branch::Regular } else { Branch::Retarded };
    Ok(SelfEnergyResult { b: s[0][0], c: Some(s[1][1]), bc: Some(s[0][1]), cb: Some(s[1][0]), branch })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub max_deviation: f64,
    pub times: Vec<f64>,
    /// `[P_b, P_c]` from the full lattice simulation.
    pub full: [Vec<f64>; 2],
    /// `[P_b, P_c]` from the reduced model.
    pub reduced: [Vec<f64>; 2],
}

/// Runs the full lattice and the reduced two-mode model from the same
/// initial excitation and reports `max |P_full - P_reduced|` over both emitters.
pub fn compare_full_vs_reduced(spec: &SystemSpec, times: &[f64], excited: &str) -> Result<Comparison> {
    if spec.emitters.len() != 2 {
        return Err(Error::Unsupported("exactly two emitters required".into()));
    }
    let e = spec.emitter_index(excited)?;
    let h = assemble_hamiltonian(spec)?;
    let mut cfg = IntegratorConfig::new(crate::evolution::Method::adaptive(), times.to_vec());
    cfg.record_fields = false;
    let traj = evolve(&h, &initial_state(spec, excited)?, &cfg)?;
    let labels = [spec.emitters[0].label.as_str(), spec.emitters[1].label.as_str()];
    let full = [traj.population(labels[0])?, traj.population(labels[1])?];

    let detunings = [spec.emitters[0].detuning, spec.emitters[1].detuning];
    let h2 = effective_hamiltonian(&pair_sigma(spec, Complex64::new(detunings[e], 0.0))?, detunings)?;
    let mut u0 = [Complex64::default(); 2];
    u0[e] = Complex64::new(1.0, 0.0);
    let red = reduced_evolution(&h2, u0, times);
    let reduced = [red.population(0), red.population(1)];
    let max_deviation = (0..2)
        .flat_map(|k| full[k].iter().zip(&reduced[k]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    Ok(Comparison { max_deviation, times: times.to_vec(), full, reduced })
}
