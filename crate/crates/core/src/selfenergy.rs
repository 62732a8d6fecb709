//! Self-energies of emitters coupled to the infinite lattice.
//!
//! The lattice propagator between sites `m` and `n` is `β^(m-n) G_|m-n|(z)`,
//! where `G_d` is the propagator of the Hermitian chain with hopping
//! `J = sqrt(t_R t_L)`. `G_d` is evaluated by residues: with `y` the root of
//! `J y^2 - z y + J = 0` inside the unit circle, `G_d = -y^|d| / (J (y - 1/y))`.
//! On the real axis inside the band the retarded limit `z = Δ + i0+` is taken.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CouplingPoint;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Contour deformation depth used by [`sigma_numeric`].
const CONTOUR_DEPTH: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `Im z > 0`; the root inside the unit circle is unique.
    Regular,
    /// `z` on the real axis inside the band, evaluated as `z + i0+`.
    Retarded,
    /// `z` on the real axis outside the band.
    OutsideBand,
}

/// A single emitter coupled at two sites `D` apart, strengths `g_N` and `g_N'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfEnergyQuery {
    pub z: Complex64,
    pub g_n: f64,
    pub g_np: f64,
    pub separation: u32,
    pub t_r: f64,
    pub t_l: f64,
}

impl SelfEnergyQuery {
    /// Matched giant emitter: `g_N' = g_N β^(-D)`.
    pub fn matched(z: Complex64, g_n: f64, separation: u32, t_r: f64, t_l: f64) -> Result<Self> {
        let beta = beta(t_r, t_l)?;
        Ok(Self { z, g_n, g_np: g_n * beta.powi(-(separation as i32)), separation, t_r, t_l })
    }

    pub fn small(z: Complex64, g: f64, t_r: f64, t_l: f64) -> Self {
        Self { z, g_n: g, g_np: 0.0, separation: 0, t_r, t_l }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelfEnergyResult {
    /// `Σ_b`, or the only value for a single emitter.
    pub b: Complex64,
    pub c: Option<Complex64>,
    pub bc: Option<Complex64>,
    pub cb: Option<Complex64>,
    pub branch: Branch,
}

impl SelfEnergyResult {
    fn single(b: Complex64, branch: Branch) -> Self {
        Self { b, c: None, bc: None, cb: None, branch }
    }

    pub fn decay_rate(&self) -> f64 {
        -2.0 * self.b.im
    }

    pub fn lamb_shift(&self) -> f64 {
        self.b.re
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rates {
    pub decay_rate: f64,
    pub lamb_shift: f64,
    /// `Σ_bc / Σ_cb` for pairs; `None` when `Σ_cb = 0`.
    pub nonreciprocity_ratio: Option<Complex64>,
    pub decay_free: bool,
}

pub fn rates(res: &SelfEnergyResult) -> Rates {
    let nonreciprocity_ratio = match (res.bc, res.cb) {
        (Some(bc), Some(cb)) if cb != Complex64::default() => Some(bc / cb),
        _ => None,
    };
    Rates {
        decay_rate: res.decay_rate(),
        lamb_shift: res.lamb_shift(),
        nonreciprocity_ratio,
        decay_free: res.decay_rate().abs() <= 1e-12,
    }
}

fn beta(t_r: f64, t_l: f64) -> Result<f64> {
    if !(t_r > 0.0) {
        return Err(Error::NonPositiveRightHopping { t_r });
    }
    if !(t_l > 0.0) {
        return Err(Error::UndefinedBeta { t_l });
    }
    Ok((t_r / t_l).sqrt())
}

/// `Δ + iε` with the default `ε = 1e-6 sqrt(t_R t_L)`.
pub fn zero_plus(delta: f64, t_r: f64, t_l: f64) -> Complex64 {
    Complex64::new(delta, 1e-6 * (t_r * t_l).abs().sqrt())
}

/// Root of `J y^2 - z y + J = 0` with `|y| < 1`, or its retarded limit.
fn inner_root(z: Complex64, j: f64) -> Result<(Complex64, Branch)> {
    if z.im < 0.0 {
        return Err(Error::InvalidArgument(format!("Im z = {} must be non-negative", z.im)));
    }
    if z.im == 0.0 {
        let x = z.re;
        if x.abs() < 2.0 * j {
            let root = (4.0 * j * j - x * x).sqrt();
            return Ok((Complex64::new(x, -root) / (2.0 * j), Branch::Retarded));
        }
        if x.abs() == 2.0 * j {
            return Err(Error::BranchAmbiguous { re: z.re, im: z.im });
        }
        let big = (x + x.signum() * (x * x - 4.0 * j * j).sqrt()) / (2.0 * j);
        return Ok((Complex64::new(1.0 / big, 0.0), Branch::OutsideBand));
    }
    let s = (z * z - 4.0 * j * j).sqrt();
    let (a, b) = ((z + s) / (2.0 * j), (z - s) / (2.0 * j));
    let big = if a.norm() >= b.norm() { a } else { b };
    Ok((1.0 / big, Branch::Regular))
}

/// Propagator `G_d(z)` of the Hermitian chain with hopping `J`.
pub fn chain_green(z: Complex64, d: u64, j: f64) -> Result<Complex64> {
    let (y, _) = inner_root(z, j)?;
    Ok(-y.powu(d as u32) / (j * (y - 1.0 / y)))
}

/// Lattice propagator `<m|(z - H)^-1|n> = β^(m-n) G_|m-n|(z)`.
pub fn propagator(z: Complex64, m: i64, n: i64, t_r: f64, t_l: f64) -> Result<Complex64> {
    let beta = beta(t_r, t_l)?;
    let j = (t_r * t_l).sqrt();
    let d = m - n;
    Ok(beta.powf(d as f64) * chain_green(z, d.unsigned_abs(), j)?)
}

fn sigma_between(
    z: Complex64,
    rows: &[CouplingPoint],
    cols: &[CouplingPoint],
    t_r: f64,
    t_l: f64,
) -> Result<(Complex64, Branch)> {
    let beta = beta(t_r, t_l)?;
    let j = (t_r * t_l).sqrt();
    let (y, branch) = inner_root(z, j)?;
    let g0 = -1.0 / (j * (y - 1.0 / y));
    let mut sum = Complex64::default();
    for a in rows {
        for b in cols {
            let d = a.site - b.site;
            sum += a.strength * b.strength * beta.powf(d as f64) * g0 * y.powu(d.unsigned_abs() as u32);
        }
    }
    Ok((sum, branch))
}

/// Full self-energy matrix `Σ_{αα'} = Σ g_m g_n β^(m-n) G_|m-n|(z)` for a set of emitters.
pub fn sigma_matrix(
    z: Complex64,
    emitters: &[&[CouplingPoint]],
    t_r: f64,
    t_l: f64,
) -> Result<Vec<Vec<Complex64>>> {
    emitters
        .iter()
        .map(|row| emitters.iter().map(|col| Ok(sigma_between(z, row, col, t_r, t_l)?.0)).collect())
        .collect()
}

pub fn sigma_giant(q: &SelfEnergyQuery) -> Result<SelfEnergyResult> {
    let c = giant_couplings(q);
    let (s, branch) = sigma_between(q.z, &c, &c, q.t_r, q.t_l)?;
    Ok(SelfEnergyResult::single(s, branch))
}

fn giant_couplings(q: &SelfEnergyQuery) -> Vec<CouplingPoint> {
    vec![CouplingPoint::new(0, q.g_n), CouplingPoint::new(q.separation as i64, q.g_np)]
}

/// Closed form of `Σ_b(0 + i0+)` for a two-point emitter.
pub fn sigma_resonant(g_n: f64, g_np: f64, separation: u32, t_r: f64, t_l: f64) -> Result<SelfEnergyResult> {
    let beta = beta(t_r, t_l)?;
    let j = (t_r * t_l).sqrt();
    let d = separation as i32;
    let phase = (-I).powi(d);
    let s = -I / (2.0 * j) * (g_n * g_n + g_np * g_np + phase * g_n * g_np * (beta.powi(d) + beta.powi(-d)));
    Ok(SelfEnergyResult::single(s, Branch::Retarded))
}

/// Two emitters with interleaved matched couplings: `b` at `N, N + D''` and
/// `c` at `N + D', N + D' + D''`, each far coupling reduced by `β^(-D'')`.
pub fn pair_geometry(g_n: f64, d_prime: u32, d_dprime: u32, beta: f64) -> [Vec<CouplingPoint>; 2] {
    let (d1, d2) = (d_prime as i64, d_dprime as i64);
    let far = g_n * beta.powi(-(d_dprime as i32));
    [
        vec![CouplingPoint::new(0, g_n), CouplingPoint::new(d2, far)],
        vec![CouplingPoint::new(d1, g_n), CouplingPoint::new(d1 + d2, far)],
    ]
}

fn pair_result(z: Complex64, geometry: &[Vec<CouplingPoint>; 2], t_r: f64, t_l: f64) -> Result<SelfEnergyResult> {
    let [b, c] = geometry;
    let (sb, branch) = sigma_between(z, b, b, t_r, t_l)?;
    Ok(SelfEnergyResult {
        b: sb,
        c: Some(sigma_between(z, c, c, t_r, t_l)?.0),
        bc: Some(sigma_between(z, b, c, t_r, t_l)?.0),
        cb: Some(sigma_between(z, c, b, t_r, t_l)?.0),
        branch,
    })
}

/// Braided pair (`D' = 1`, `D'' = 2`) evaluated exactly at `z`.
pub fn sigma_pair_braided(z: Complex64, g_n: f64, t_r: f64, t_l: f64) -> Result<SelfEnergyResult> {
    let beta = beta(t_r, t_l)?;
    pair_result(z, &pair_geometry(g_n, 1, 2, beta), t_r, t_l)
}

/// Interleaved pair evaluated exactly at `z` for arbitrary separations.
pub fn sigma_pair_exact(
    z: Complex64,
    g_n: f64,
    d_prime: u32,
    d_dprime: u32,
    t_r: f64,
    t_l: f64,
) -> Result<SelfEnergyResult> {
    let beta = beta(t_r, t_l)?;
    pair_result(z, &pair_geometry(g_n, d_prime, d_dprime, beta), t_r, t_l)
}

/// Resonant exchange couplings of an interleaved pair from the two nearest-path
/// closed form, `Σ_bc ∝ β^(-D')` and `Σ_cb ∝ β^(D'-2D'')` times
/// `((-i)^D' - i^D') / (2iJ)`. Exact for `D'' ≡ 2 (mod 4)` with `D' < D''`,
/// where the remaining paths cancel; [`sigma_pair_exact`] covers other cases.
pub fn sigma_pair_general(
    g_n: f64,
    d_prime: u32,
    d_dprime: u32,
    t_r: f64,
    t_l: f64,
) -> Result<SelfEnergyResult> {
    let beta = beta(t_r, t_l)?;
    let j = (t_r * t_l).sqrt();
    let (d1, d2) = (d_prime as i32, d_dprime as i32);
    let bracket = ((-I).powi(d1) - I.powi(d1)) / (2.0 * I * j);
    let g2 = g_n * g_n;
    Ok(SelfEnergyResult {
        b: Complex64::default(),
        c: Some(Complex64::default()),
        bc: Some(g2 * beta.powi(-d1) * bracket),
        cb: Some(g2 * beta.powi(d1 - 2 * d2) * bracket),
        branch: Branch::Retarded,
    })
}

/// Quadrature oracle for `Σ` between two coupling sets, independent of the
/// residue evaluation. The Brillouin-zone mode sum is taken along the
/// deformed contour `k = s + iδ sin s`, on which `z - 2J cos k` keeps a
/// positive imaginary part, so the trapezoid rule converges geometrically.
pub fn sigma_numeric_between(
    z: Complex64,
    rows: &[CouplingPoint],
    cols: &[CouplingPoint],
    t_r: f64,
    t_l: f64,
    mode_count: usize,
) -> Result<Complex64> {
    let beta = beta(t_r, t_l)?;
    let j = (t_r * t_l).sqrt();
    if mode_count == 0 {
        return Err(Error::InvalidArgument("mode_count must be positive".into()));
    }
    if z.im < 0.0 || (z.im == 0.0 && z.re.abs() <= 2.0 * j) {
        return Err(Error::SingularContour { re: z.re });
    }
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .flat_map(|a| cols.iter().map(move |b| (a, b)))
        .map(|(a, b)| {
            let d = (a.site - b.site) as f64;
            (a.strength * b.strength * beta.powf(d), d)
        })
        .collect();
    let n = mode_count as f64;
    let mut sum = Complex64::default();
    for i in 0..mode_count {
        let s = 2.0 * std::f64::consts::PI * i as f64 / n;
        let k = Complex64::new(s, CONTOUR_DEPTH * s.sin());
        let dk = Complex64::new(1.0, CONTOUR_DEPTH * s.cos());
        let form: Complex64 = pairs.iter().map(|&(w, d)| w * (I * k * d).exp()).sum();
        sum += form * dk / (z - 2.0 * j * k.cos());
    }
    Ok(sum / n)
}

pub fn sigma_numeric(z: Complex64, couplings: &[CouplingPoint], t_r: f64, t_l: f64, mode_count: usize) -> Result<Complex64> {
    sigma_numeric_between(z, couplings, couplings, t_r, t_l, mode_count)
}
