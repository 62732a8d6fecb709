//! Time evolution of the single-excitation amplitudes, `i du/dt = H u`.
//!
//! The non-Hermitian lattice can amplify the state by hundreds of decades, so
//! amplitudes are stored together with an accumulated natural-log scale `L`:
//! the physical amplitude is `e^L` times the stored one. Whenever the stored
//! 2-norm leaves `[1/threshold, threshold]` it is renormalized and `L` absorbs
//! the factor.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Boundary, HamiltonianOperator, SystemSpec};

const LOG10_MAX: f64 = 308.0;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub log_scale: f64,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes, log_scale: 0.0 }
    }

    pub fn stored_norm(&self) -> f64 {
        norm2(&self.amplitudes)
    }

    /// Natural log of the physical 2-norm.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.stored_norm().ln()
    }

    /// Physical amplitudes `e^L u`; entries overflow to infinity when `L` is large.
    pub fn physical(&self) -> Vec<Complex64> {
        let s = self.log_scale.exp();
        self.amplitudes.iter().map(|a| a * s).collect()
    }

    /// Divides by the stored norm and moves the factor into `log_scale`.
    pub fn renormalize(&mut self) {
        let n = self.stored_norm();
        if n > 0.0 && n.is_finite() {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
            self.log_scale += n.ln();
        }
    }
}

/// Unit excitation on the emitter with the given label.
pub fn initial_state(spec: &SystemSpec, excited: &str) -> Result<StateVector> {
    let e = spec.emitter_index(excited)?;
    let mut amps = vec![Complex64::default(); spec.dimension()];
    amps[spec.lattice.sites + e] = Complex64::new(1.0, 0.0);
    Ok(StateVector::new(amps))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4 { dt: f64 },
    /// Dormand-Prince 5(4) pair with step-size control and dense output.
    Dopri5 { rtol: f64, atol: f64 },
}

impl Method {
    pub const DEFAULT_RTOL: f64 = 1e-9;
    pub const DEFAULT_ATOL: f64 = 1e-12;

    pub fn adaptive() -> Self {
        Method::Dopri5 { rtol: Self::DEFAULT_RTOL, atol: Self::DEFAULT_ATOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Stored-norm bound that triggers renormalization.
    pub rescale_threshold: f64,
    pub sample_times: Vec<f64>,
    /// Record per-site intensities at every sample.
    pub record_fields: bool,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub const DEFAULT_SAMPLES: usize = 2000;

    pub fn new(method: Method, sample_times: Vec<f64>) -> Self {
        Self {
            method,
            rescale_threshold: 50f64.exp(),
            sample_times,
            record_fields: false,
            max_steps: 50_000_000,
        }
    }

    /// Adaptive integration sampled on `samples` uniform points over `[0, t_max]`.
    pub fn adaptive(t_max: f64, samples: usize) -> Self {
        Self::new(Method::adaptive(), uniform_grid(t_max, samples))
    }

    pub fn fixed(dt: f64, t_max: f64, samples: usize) -> Self {
        Self::new(Method::Rk4 { dt }, uniform_grid(t_max, samples))
    }

    pub fn with_fields(mut self, record: bool) -> Self {
        self.record_fields = record;
        self
    }

    pub fn with_rescale_threshold(mut self, threshold: f64) -> Self {
        self.rescale_threshold = threshold;
        self
    }

    pub fn t_max(&self) -> f64 {
        self.sample_times.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidIntegrator(m.to_string()));
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => return bad("dt must be positive"),
            Method::Dopri5 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                return bad("rtol and atol must be positive")
            }
            _ => {}
        }
        if !(self.rescale_threshold > 1.0) {
            return bad("rescale threshold must exceed 1");
        }
        match self.sample_times.first() {
            None => return bad("sample grid is empty"),
            Some(&t0) if t0 != 0.0 => return bad("sample grid must start at t = 0"),
            _ => {}
        }
        if self.sample_times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return bad("sample times must be finite and strictly increasing");
        }
        Ok(())
    }
}

/// `samples` points spaced uniformly over `[0, t_max]` (a single point when `t_max = 0`).
pub fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
    if samples < 2 || t_max <= 0.0 {
        return vec![0.0];
    }
    let n = samples - 1;
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// Stored emitter amplitudes, `[sample][emitter]`.
    pub emitter_amplitudes: Vec<Vec<Complex64>>,
    pub log_scale: Vec<f64>,
    pub stored_norm: Vec<f64>,
    /// Stored site intensities `|u_n|^2`, `[sample][site]`, when recorded.
    pub fields: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
    pub final_state: StateVector,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn emitter_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `ln P` of an emitter at every sample.
    pub fn ln_population(&self, label: &str) -> Result<Vec<f64>> {
        let e = self.emitter_index(label)?;
        Ok(self
            .emitter_amplitudes
            .iter()
            .zip(&self.log_scale)
            .map(|(a, l)| 2.0 * l + a[e].norm_sqr().ln())
            .collect())
    }

    /// Linear population `P = e^{2L}|u|^2`; overflows to infinity if out of range.
    pub fn population(&self, label: &str) -> Result<Vec<f64>> {
        Ok(self.ln_population(label)?.into_iter().map(f64::exp).collect())
    }

    /// `ln` of the physical state norm at every sample.
    pub fn ln_norm(&self) -> Vec<f64> {
        self.stored_norm.iter().zip(&self.log_scale).map(|(n, l)| l + n.ln()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observable {
    Population(String),
    Intensity(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// `None` where the linear value would overflow.
    pub linear: Vec<Option<f64>>,
    pub log10: Vec<f64>,
}

impl Series {
    pub fn overflowed(&self) -> bool {
        self.linear.iter().any(Option::is_none)
    }
}

fn series_from_ln(name: String, ln_values: impl Iterator<Item = f64>) -> Series {
    let log10: Vec<f64> = ln_values.map(|v| v / std::f64::consts::LN_10).collect();
    let linear = log10
        .iter()
        .map(|&l| if l > LOG10_MAX { None } else { Some(10f64.powf(l)) })
        .collect();
    Series { name, linear, log10 }
}

/// Physical populations and intensities, in linear and log10 form.
pub fn extract_observables(traj: &Trajectory, request: &[Observable]) -> Result<Vec<Series>> {
    if request.is_empty() {
        return Err(Error::EmptyRequest);
    }
    request
        .iter()
        .map(|obs| match obs {
            Observable::Population(label) => {
                let ln = traj.ln_population(label)?;
                Ok(series_from_ln(format!("P_{label}"), ln.into_iter()))
            }
            Observable::Intensity(site) => {
                let fields = traj
                    .fields
                    .as_ref()
                    .ok_or_else(|| Error::NotRecorded("site intensities".into()))?;
                if fields.first().is_some_and(|f| *site >= f.len()) {
                    return Err(Error::InvalidArgument(format!("site {site} out of range")));
                }
                let ln = fields.iter().zip(&traj.log_scale).map(|(f, l)| 2.0 * l + f[*site].ln());
                Ok(series_from_ln(format!("I_{site}"), ln))
            }
        })
        .collect()
}

/// Multiplies lattice amplitude `n` by `β^(-n)`, mapping the lattice onto a
/// Hermitian chain with hopping `sqrt(t_R t_L)`. Emitter amplitudes are left as is.
pub fn gauge_transform(s: &StateVector, beta: f64, sites: usize) -> StateVector {
    let ln_beta = beta.ln();
    let mut out = s.clone();
    for (n, a) in out.amplitudes.iter_mut().take(sites).enumerate() {
        *a *= (-(n as f64) * ln_beta).exp();
    }
    out
}

/// Light-cone check: warns when a signal moving at twice the largest hopping
/// could reach a lattice edge from any coupling point within `t_max`.
pub fn light_cone_guard(spec: &SystemSpec, t_max: f64) -> Option<String> {
    let lat = &spec.lattice;
    let sites: Vec<usize> = spec
        .emitters
        .iter()
        .flat_map(|e| e.couplings.iter().filter(|c| c.site >= 0).map(|c| c.site as usize))
        .collect();
    guard(lat.sites, lat.t_r(), lat.t_l(), lat.boundary, &sites, t_max)
}

pub(crate) fn light_cone_guard_operator(h: &HamiltonianOperator, t_max: f64) -> Option<String> {
    let sites: Vec<usize> =
        (0..h.emitter_count()).flat_map(|e| h.couplings(e).iter().map(|(n, _)| *n)).collect();
    guard(h.sites(), h.t_r(), h.t_l(), h.boundary(), &sites, t_max)
}

fn guard(m: usize, t_r: f64, t_l: f64, boundary: Boundary, sites: &[usize], t_max: f64) -> Option<String> {
    if t_max <= 0.0 || sites.is_empty() {
        return None;
    }
    let reach = 2.0 * t_r.abs().max(t_l.abs()) * t_max;
    let distance = match boundary {
        Boundary::Open => sites.iter().map(|&n| n.min(m - 1 - n)).min().unwrap_or(0),
        // on a ring the emitted field meets itself after half a circumference
        Boundary::Periodic => m / 2,
    };
    (reach >= distance as f64).then(|| {
        format!(
            "light cone reaches the lattice boundary: 2*max|t|*t_max = {reach} >= edge distance {distance}"
        )
    })
}

/// Integrates `i du/dt = H u` from `s0` and samples on `cfg.sample_times`.
pub fn evolve(h: &HamiltonianOperator, s0: &StateVector, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if s0.amplitudes.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: s0.amplitudes.len() });
    }
    let mut rec = Recorder::new(h, cfg);
    if let Some(w) = light_cone_guard_operator(h, cfg.t_max()) {
        rec.traj.warnings.push(w);
    }
    let mut state = s0.clone();
    rec.push(&state.amplitudes, state.log_scale);
    match cfg.method {
        Method::Rk4 { dt } => rk4(h, &mut state, cfg, dt, &mut rec)?,
        Method::Dopri5 { rtol, atol } => dopri5(h, &mut state, cfg, rtol, atol, &mut rec)?,
    }
    let mut traj = rec.traj;
    traj.final_state = state;
    Ok(traj)
}

struct Recorder {
    sites: usize,
    traj: Trajectory,
}

impl Recorder {
    fn new(h: &HamiltonianOperator, cfg: &IntegratorConfig) -> Self {
        let n = cfg.sample_times.len();
        Self {
            sites: h.sites(),
            traj: Trajectory {
                times: Vec::with_capacity(n),
                labels: h.labels().to_vec(),
                emitter_amplitudes: Vec::with_capacity(n),
                log_scale: Vec::with_capacity(n),
                stored_norm: Vec::with_capacity(n),
                fields: cfg.record_fields.then(|| Vec::with_capacity(n)),
                warnings: Vec::new(),
                final_state: StateVector::new(Vec::new()),
                accepted_steps: 0,
                rejected_steps: 0,
            },
        }
    }

    fn push(&mut self, y: &[Complex64], log_scale: f64) {
        let t = &mut self.traj;
        // filled from the sample grid once integration finishes
        t.times.push(f64::NAN);
        t.emitter_amplitudes.push(y[self.sites..].to_vec());
        t.log_scale.push(log_scale);
        t.stored_norm.push(norm2(y));
        if let Some(f) = t.fields.as_mut() {
            f.push(y[..self.sites].iter().map(|a| a.norm_sqr()).collect());
        }
    }

    fn next(&self) -> usize {
        self.traj.times.len()
    }
}

fn finalize_times(rec: &mut Recorder, cfg: &IntegratorConfig) {
    let n = rec.traj.times.len();
    rec.traj.times.copy_from_slice(&cfg.sample_times[..n]);
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|a| a.re.is_finite() && a.im.is_finite())
}

fn rescale(state: &mut StateVector, threshold: f64, extra: &mut [&mut Vec<Complex64>]) {
    let n = state.stored_norm();
    if n > threshold || (n < 1.0 / threshold && n > 0.0) {
        let inv = 1.0 / n;
        state.amplitudes.iter_mut().for_each(|a| *a *= inv);
        for v in extra.iter_mut() {
            v.iter_mut().for_each(|a| *a *= inv);
        }
        state.log_scale += n.ln();
    }
}

fn rk4(
    h: &HamiltonianOperator,
    state: &mut StateVector,
    cfg: &IntegratorConfig,
    dt: f64,
    rec: &mut Recorder,
) -> Result<()> {
    let dim = h.dim();
    let mut k1 = vec![Complex64::default(); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut steps = 0usize;
    let mut t = 0.0;
    for w in cfg.sample_times.windows(2) {
        let span = w[1] - w[0];
        let n_sub = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let step = span / n_sub as f64;
        for i in 0..n_sub {
            let y = &state.amplitudes;
            h.apply_generator(y, &mut k1);
            axpy_into(&mut tmp, y, 0.5 * step, &k1);
            h.apply_generator(&tmp, &mut k2);
            axpy_into(&mut tmp, y, 0.5 * step, &k2);
            h.apply_generator(&tmp, &mut k3);
            axpy_into(&mut tmp, y, step, &k3);
            h.apply_generator(&tmp, &mut k4);
            let c = step / 6.0;
            for j in 0..dim {
                state.amplitudes[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * c;
            }
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::StepLimit { max_steps: cfg.max_steps, time: t });
            }
            if !all_finite(&state.amplitudes) {
                let last_good = cfg.sample_times[rec.next() - 1];
                return Err(Error::NonFinite { time: w[0] + (i + 1) as f64 * step, last_good });
            }
            rescale(state, cfg.rescale_threshold, &mut []);
        }
        t = w[1];
        rec.push(&state.amplitudes, state.log_scale);
    }
    rec.traj.accepted_steps = steps;
    finalize_times(rec, cfg);
    Ok(())
}

fn axpy_into(out: &mut [Complex64], y: &[Complex64], a: f64, k: &[Complex64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

// Dormand-Prince 5(4) tableau with Hairer's continuous extension.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn dopri5(
    h: &HamiltonianOperator,
    state: &mut StateVector,
    cfg: &IntegratorConfig,
    rtol: f64,
    atol: f64,
    rec: &mut Recorder,
) -> Result<()> {
    let dim = h.dim();
    let zero = Complex64::default();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![zero; dim]).collect();
    let mut tmp = vec![zero; dim];
    let mut y1 = vec![zero; dim];
    let mut cont: Vec<Vec<Complex64>> = (0..5).map(|_| vec![zero; dim]).collect();

    let t_end = cfg.t_max();
    let mut t = 0.0;
    let rho = h.norm_bound().max(1e-12);
    let first_gap = cfg.sample_times.get(1).copied().unwrap_or(t_end);
    let mut step = (0.05 / rho).min(first_gap).max(1e-14);
    let mut fac_max = 10.0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    h.apply_generator(&state.amplitudes, &mut k[0]);

    while rec.next() < cfg.sample_times.len() {
        if accepted + rejected > cfg.max_steps {
            return Err(Error::StepLimit { max_steps: cfg.max_steps, time: t });
        }
        let last = t + step >= t_end;
        if last {
            step = t_end - t;
        }
        let y = &state.amplitudes;
        {
            let (k1, rest) = k.split_first_mut().unwrap();
            let k1 = &*k1;
            for j in 0..dim {
                tmp[j] = y[j] + k1[j] * (step * A21);
            }
            h.apply_generator(&tmp, &mut rest[0]);
            for j in 0..dim {
                tmp[j] = y[j] + (k1[j] * A31 + rest[0][j] * A32) * step;
            }
            h.apply_generator(&tmp, &mut rest[1]);
            for j in 0..dim {
                tmp[j] = y[j] + (k1[j] * A41 + rest[0][j] * A42 + rest[1][j] * A43) * step;
            }
            h.apply_generator(&tmp, &mut rest[2]);
            for j in 0..dim {
                tmp[j] = y[j]
                    + (k1[j] * A51 + rest[0][j] * A52 + rest[1][j] * A53 + rest[2][j] * A54) * step;
            }
            h.apply_generator(&tmp, &mut rest[3]);
            for j in 0..dim {
                tmp[j] = y[j]
                    + (k1[j] * A61 + rest[0][j] * A62 + rest[1][j] * A63 + rest[2][j] * A64 + rest[3][j] * A65)
                        * step;
            }
            h.apply_generator(&tmp, &mut rest[4]);
            for j in 0..dim {
                y1[j] = y[j]
                    + (k1[j] * A71 + rest[1][j] * A73 + rest[2][j] * A74 + rest[3][j] * A75 + rest[4][j] * A76)
                        * step;
            }
            h.apply_generator(&y1, &mut rest[5]);
        }

        let scale_ref = y.iter().chain(y1.iter()).map(|a| a.norm()).fold(0.0, f64::max);
        let mut acc = 0.0;
        for j in 0..dim {
            let e = (k[0][j] * E1 + k[2][j] * E3 + k[3][j] * E4 + k[4][j] * E5 + k[5][j] * E6 + k[6][j] * E7)
                * step;
            let sc = atol * scale_ref + rtol * y[j].norm().max(y1[j].norm());
            if sc > 0.0 {
                acc += (e.norm() / sc).powi(2);
            }
        }
        let err = (acc / dim as f64).sqrt();

        if !err.is_finite() {
            if !all_finite(&y1) {
                let last_good = cfg.sample_times[rec.next() - 1];
                return Err(Error::NonFinite { time: t + step, last_good });
            }
            step *= 0.2;
            rejected += 1;
            continue;
        }

        if err <= 1.0 {
            accepted += 1;
            let t_new = t + step;
            // dense output coefficients before the state is overwritten
            let need_dense = cfg.sample_times[rec.next()] < t_new && !last;
            if need_dense || cfg.sample_times[rec.next()..].iter().any(|&s| s < t_new) {
                for j in 0..dim {
                    let ydiff = y1[j] - y[j];
                    let bspl = k[0][j] * step - ydiff;
                    cont[0][j] = y[j];
                    cont[1][j] = ydiff;
                    cont[2][j] = bspl;
                    cont[3][j] = ydiff - k[6][j] * step - bspl;
                    cont[4][j] = (k[0][j] * D1
                        + k[2][j] * D3
                        + k[3][j] * D4
                        + k[4][j] * D5
                        + k[5][j] * D6
                        + k[6][j] * D7)
                        * step;
                }
                while rec.next() < cfg.sample_times.len() && cfg.sample_times[rec.next()] < t_new {
                    let theta = (cfg.sample_times[rec.next()] - t) / step;
                    let theta1 = 1.0 - theta;
                    for j in 0..dim {
                        tmp[j] = cont[0][j]
                            + (cont[1][j] + (cont[2][j] + (cont[3][j] + cont[4][j] * theta1) * theta) * theta1)
                                * theta;
                    }
                    rec.push(&tmp, state.log_scale);
                }
            }
            std::mem::swap(&mut state.amplitudes, &mut y1);
            k.swap(0, 6);
            t = t_new;
            if !all_finite(&state.amplitudes) {
                let last_good = cfg.sample_times[rec.next() - 1];
                return Err(Error::NonFinite { time: t, last_good });
            }
            if last || (rec.next() < cfg.sample_times.len() && cfg.sample_times[rec.next()] == t) {
                while rec.next() < cfg.sample_times.len() && cfg.sample_times[rec.next()] <= t {
                    rec.push(&state.amplitudes, state.log_scale);
                }
            }
            {
                let (first, _) = k.split_first_mut().unwrap();
                rescale(state, cfg.rescale_threshold, &mut [first]);
            }
            if last {
                break;
            }
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, fac_max);
            step *= fac;
            fac_max = 10.0;
        } else {
            rejected += 1;
            step *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            fac_max = 1.0;
        }
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { time: t });
        }
    }
    rec.traj.accepted_steps = accepted;
    rec.traj.rejected_steps = rejected;
    finalize_times(rec, cfg);
    Ok(())
}
