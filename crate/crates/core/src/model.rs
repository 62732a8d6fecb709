//! System specification and single-excitation Hamiltonian assembly.
//!
//! The lattice Hamiltonian is
//!
//! ```text
//! H = sum_n ( t_R a†_{n+1} a_n + t_L a†_n a_{n+1} ) - i Γ_loss sum_n a†_n a_n
//!     + sum_e Δ_e b_e† b_e + sum_e sum_p g_p ( b_e† a_{n_p} + h.c. )
//! ```
//!
//! with `t_R = ν + γ` and `t_L = ν - γ`. The `t_R` term moves amplitude from
//! site `n` to `n + 1`, so for `γ > 0` the lattice amplifies right-moving
//! fields. Amplitudes are ordered lattice first (`0..M`) and then emitters in
//! declaration order.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    #[serde(rename = "OBC")]
    Open,
    #[serde(rename = "PBC")]
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub nu: f64,
    pub gamma: f64,
    pub onsite_loss: f64,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn open(sites: usize, nu: f64, gamma: f64) -> Self {
        Self { sites, nu, gamma, onsite_loss: 0.0, boundary: Boundary::Open }
    }

    pub fn with_loss(mut self, loss: f64) -> Self {
        self.onsite_loss = loss;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn t_r(&self) -> f64 {
        self.nu + self.gamma
    }

    pub fn t_l(&self) -> f64 {
        self.nu - self.gamma
    }

    /// `sqrt(t_R / t_L)`, defined only in the convectively unstable regime.
    pub fn beta(&self) -> Result<f64> {
        let t_l = self.t_l();
        if t_l > 0.0 && self.t_r() > 0.0 {
            Ok((self.t_r() / t_l).sqrt())
        } else {
            Err(Error::UndefinedBeta { t_l })
        }
    }

    /// Geometric-mean hopping `sqrt(t_R t_L)` of the gauge-equivalent chain.
    pub fn mean_hopping(&self) -> Result<f64> {
        let t_l = self.t_l();
        if t_l > 0.0 {
            Ok((self.t_r() * t_l).sqrt())
        } else {
            Err(Error::UndefinedBeta { t_l })
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.sites < 3 {
            out.push(Violation::new("lattice.M", "lattice needs at least 3 sites"));
        }
        for (name, v) in [("lattice.nu", self.nu), ("lattice.gamma", self.gamma), ("lattice.loss", self.onsite_loss)] {
            if !v.is_finite() {
                out.push(Violation::new(name, "value must be finite"));
            }
        }
        if !(self.t_r() > 0.0) {
            out.push(Violation::new("lattice", "t_R = nu + gamma must be positive"));
        }
        if self.onsite_loss < 0.0 {
            out.push(Violation::new("lattice.loss", "on-site loss must be non-negative"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub site: i64,
    pub strength: f64,
}

impl CouplingPoint {
    pub fn new(site: i64, strength: f64) -> Self {
        Self { site, strength }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub label: String,
    pub detuning: f64,
    pub couplings: Vec<CouplingPoint>,
}

impl EmitterSpec {
    pub fn new(label: impl Into<String>, couplings: Vec<CouplingPoint>) -> Self {
        Self { label: label.into(), detuning: 0.0, couplings }
    }

    /// Emitter coupled at a single site.
    pub fn small(label: impl Into<String>, site: i64, g: f64) -> Self {
        Self::new(label, vec![CouplingPoint::new(site, g)])
    }

    /// Two-point emitter at `site` and `site + separation`.
    pub fn giant(label: impl Into<String>, site: i64, g: f64, separation: i64, g_far: f64) -> Self {
        Self::new(
            label,
            vec![CouplingPoint::new(site, g), CouplingPoint::new(site + separation, g_far)],
        )
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub lattice: LatticeSpec,
    pub emitters: Vec<EmitterSpec>,
}

impl SystemSpec {
    pub fn new(lattice: LatticeSpec, emitters: Vec<EmitterSpec>) -> Self {
        Self { lattice, emitters }
    }

    pub fn emitter_index(&self, label: &str) -> Result<usize> {
        self.emitters
            .iter()
            .position(|e| e.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dimension(&self) -> usize {
        self.lattice.sites + self.emitters.len()
    }
}

/// One problem found by [`validate_spec`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Collects every problem with `spec`; an empty list means the spec is valid.
pub fn validate_spec(spec: &SystemSpec) -> Vec<Violation> {
    let mut out = spec.lattice.violations();
    let m = spec.lattice.sites as i64;
    let mut labels = HashSet::new();
    for (e, em) in spec.emitters.iter().enumerate() {
        let path = format!("emitters[{e}]");
        if !labels.insert(em.label.as_str()) {
            out.push(Violation::new(format!("{path}.label"), format!("duplicate label {:?}", em.label)));
        }
        if !em.detuning.is_finite() {
            out.push(Violation::new(format!("{path}.detuning"), "value must be finite"));
        }
        if em.couplings.is_empty() {
            out.push(Violation::new(format!("{path}.couplings"), "at least one coupling point required"));
        }
        let mut sites = HashSet::new();
        for (p, c) in em.couplings.iter().enumerate() {
            let cpath = format!("{path}.couplings[{p}]");
            if c.site < 0 || c.site >= m {
                out.push(Violation::new(format!("{cpath}.site"), format!("site out of range: {}", c.site)));
            }
            if !sites.insert(c.site) {
                out.push(Violation::new(format!("{cpath}.site"), format!("duplicate coupling site {}", c.site)));
            }
            if !c.strength.is_finite() {
                out.push(Violation::new(format!("{cpath}.strength"), "strength must be finite"));
            } else if c.strength < 0.0 {
                out.push(Violation::new(format!("{cpath}.strength"), "strength must be non-negative"));
            }
        }
        if em.couplings.windows(2).any(|w| w[1].site <= w[0].site) && sites.len() == em.couplings.len() {
            out.push(Violation::new(format!("{path}.couplings"), "coupling sites must be strictly increasing"));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    ConvectivelyUnstable,
    TransitionPoint,
    AbsolutelyUnstable,
    Stable,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::ConvectivelyUnstable => "convectively unstable",
            Regime::TransitionPoint => "transition point",
            Regime::AbsolutelyUnstable => "absolutely unstable",
            Regime::Stable => "stable",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedParameters {
    pub t_r: f64,
    pub t_l: f64,
    pub beta: Option<f64>,
    pub regime: Regime,
}

pub fn derive_parameters(lattice: &LatticeSpec) -> Result<DerivedParameters> {
    let t_r = lattice.t_r();
    if !(t_r > 0.0) {
        return Err(Error::NonPositiveRightHopping { t_r });
    }
    Ok(DerivedParameters {
        t_r,
        t_l: lattice.t_l(),
        beta: lattice.beta().ok(),
        regime: classify_regime(lattice)?,
    })
}

/// Stable when the periodic spectrum lies in the closed lower half-plane,
/// otherwise the sign of `t_L` picks the unstable branch.
pub fn classify_regime(lattice: &LatticeSpec) -> Result<Regime> {
    let t_r = lattice.t_r();
    if !(t_r > 0.0) {
        return Err(Error::NonPositiveRightHopping { t_r });
    }
    let max_growth = 2.0 * lattice.gamma.abs() - lattice.onsite_loss;
    let t_l = lattice.t_l();
    Ok(if max_growth <= 0.0 {
        Regime::Stable
    } else if t_l == 0.0 {
        Regime::TransitionPoint
    } else if t_l < 0.0 {
        Regime::AbsolutelyUnstable
    } else {
        Regime::ConvectivelyUnstable
    })
}

/// Far-to-near coupling ratio `β^(-D)` that restores conventional interference.
pub fn matching_ratio(beta: f64, separation: u32) -> f64 {
    beta.powi(-(separation as i32))
}

/// Sparse single-excitation operator: tridiagonal lattice block bordered by
/// emitter rows and columns.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianOperator {
    sites: usize,
    t_r: f64,
    t_l: f64,
    onsite: Complex64,
    boundary: Boundary,
    labels: Vec<String>,
    detunings: Vec<f64>,
    couplings: Vec<Vec<(usize, f64)>>,
}

pub fn assemble_hamiltonian(spec: &SystemSpec) -> Result<HamiltonianOperator> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let lat = &spec.lattice;
    Ok(HamiltonianOperator {
        sites: lat.sites,
        t_r: lat.t_r(),
        t_l: lat.t_l(),
        onsite: Complex64::new(0.0, -lat.onsite_loss),
        boundary: lat.boundary,
        labels: spec.emitters.iter().map(|e| e.label.clone()).collect(),
        detunings: spec.emitters.iter().map(|e| e.detuning).collect(),
        couplings: spec
            .emitters
            .iter()
            .map(|e| e.couplings.iter().map(|c| (c.site as usize, c.strength)).collect())
            .collect(),
    })
}

impl HamiltonianOperator {
    pub fn dim(&self) -> usize {
        self.sites + self.labels.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn emitter_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn t_r(&self) -> f64 {
        self.t_r
    }

    pub fn t_l(&self) -> f64 {
        self.t_l
    }

    pub fn onsite(&self) -> Complex64 {
        self.onsite
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    /// Coupling points `(site, g)` of emitter `e`.
    pub fn couplings(&self, e: usize) -> &[(usize, f64)] {
        &self.couplings[e]
    }

    pub fn emitter_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let m = self.sites;
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let (t_r, t_l, d) = (self.t_r, self.t_l, self.onsite);
        out[0] = d * x[0] + x[1] * t_l;
        for n in 1..m - 1 {
            out[n] = d * x[n] + x[n - 1] * t_r + x[n + 1] * t_l;
        }
        out[m - 1] = d * x[m - 1] + x[m - 2] * t_r;
        if self.boundary == Boundary::Periodic {
            out[0] += x[m - 1] * t_r;
            out[m - 1] += x[0] * t_l;
        }
        for (e, points) in self.couplings.iter().enumerate() {
            let b = x[m + e];
            let mut acc = b * self.detunings[e];
            for &(n, g) in points {
                out[n] += b * g;
                acc += x[n] * g;
            }
            out[m + e] = acc;
        }
    }

    /// `-i H x`, the right-hand side of the Schrödinger equation.
    pub fn apply_generator(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.apply(x, out);
        for v in out.iter_mut() {
            *v = Complex64::new(v.im, -v.re);
        }
    }

    /// Matrix element `H[row][col]`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let m = self.sites;
        let zero = Complex64::new(0.0, 0.0);
        match (row < m, col < m) {
            (true, true) => {
                let mut v = zero;
                if row == col {
                    v += self.onsite;
                }
                if row == col + 1 {
                    v += self.t_r;
                }
                if col == row + 1 {
                    v += self.t_l;
                }
                if self.boundary == Boundary::Periodic {
                    if row == 0 && col == m - 1 {
                        v += self.t_r;
                    }
                    if row == m - 1 && col == 0 {
                        v += self.t_l;
                    }
                }
                v
            }
            (false, true) => self.coupling_at(row - m, col),
            (true, false) => self.coupling_at(col - m, row),
            (false, false) => {
                if row == col {
                    Complex64::new(self.detunings[row - m], 0.0)
                } else {
                    zero
                }
            }
        }
    }

    fn coupling_at(&self, e: usize, site: usize) -> Complex64 {
        let g: f64 = self.couplings[e].iter().filter(|(n, _)| *n == site).map(|(_, g)| g).sum();
        Complex64::new(g, 0.0)
    }

    /// Row-major dense copy; intended for small systems.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let lattice = self.onsite.norm() + self.t_r.abs() + self.t_l.abs();
        let mut bound = lattice + self.couplings.iter().flatten().map(|(_, g)| g.abs()).sum::<f64>();
        for (e, points) in self.couplings.iter().enumerate() {
            let row = self.detunings[e].abs() + points.iter().map(|(_, g)| g.abs()).sum::<f64>();
            bound = bound.max(row);
        }
        bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_spec() -> SystemSpec {
        let beta = 3f64.sqrt();
        SystemSpec::new(
            LatticeSpec::open(1000, 10.0, 5.0),
            vec![EmitterSpec::giant("b", 500, 1.0, 2, matching_ratio(beta, 2))],
        )
    }

    #[test]
    fn derived_parameters_fig1() {
        let p = derive_parameters(&LatticeSpec::open(1000, 10.0, 5.0)).unwrap();
        assert_eq!((p.t_r, p.t_l), (15.0, 5.0));
        assert!((p.beta.unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.regime, Regime::ConvectivelyUnstable);
    }

    #[test]
    fn derived_parameters_hermitian_limit() {
        let p = derive_parameters(&LatticeSpec::open(10, 10.0, 0.0)).unwrap();
        assert_eq!((p.t_r, p.t_l, p.beta), (10.0, 10.0, Some(1.0)));
    }

    #[test]
    fn derived_parameters_absolutely_unstable() {
        let p = derive_parameters(&LatticeSpec::open(10, 20.0, 20.5)).unwrap();
        assert_eq!((p.t_r, p.t_l, p.beta), (40.5, -0.5, None));
        assert_eq!(p.regime, Regime::AbsolutelyUnstable);
    }

    #[test]
    fn rejects_non_positive_right_hopping() {
        assert!(matches!(
            derive_parameters(&LatticeSpec::open(10, -1.0, 0.5)),
            Err(Error::NonPositiveRightHopping { .. })
        ));
    }

    #[test]
    fn regime_examples() {
        let c = |nu, gamma, loss| classify_regime(&LatticeSpec::open(10, nu, gamma).with_loss(loss)).unwrap();
        assert_eq!(c(10.0, 5.0, 0.0), Regime::ConvectivelyUnstable);
        assert_eq!(c(20.0, 20.0, 0.0), Regime::TransitionPoint);
        assert_eq!(c(10.0, 5.0, 10.0), Regime::Stable);
        assert_eq!(c(10.0, 10.1, 20.2), Regime::Stable);
        assert_eq!(c(20.0, 20.5, 0.0), Regime::AbsolutelyUnstable);
    }

    #[test]
    fn matching_ratio_examples() {
        assert!((matching_ratio(3f64.sqrt(), 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(matching_ratio(1.7, 0), 1.0);
        assert!((matching_ratio(2f64.sqrt(), 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bare_chain_matrix() {
        let spec = SystemSpec::new(LatticeSpec::open(3, 1.0, 0.5), vec![]);
        let h = assemble_hamiltonian(&spec).unwrap().to_dense();
        let c = |re| Complex64::new(re, 0.0);
        assert_eq!(h[1][0], c(1.5));
        assert_eq!(h[2][1], c(1.5));
        assert_eq!(h[0][1], c(0.5));
        assert_eq!(h[1][2], c(0.5));
        assert!((0..3).all(|i| h[i][i] == c(0.0)));
        assert_eq!(h[0][2], c(0.0));
        assert_eq!(h[2][0], c(0.0));
    }

    #[test]
    fn border_entries_are_symmetric() {
        let spec = SystemSpec::new(
            LatticeSpec::open(5, 10.0, 5.0),
            vec![EmitterSpec::giant("b", 1, 1.0, 2, 1.0 / 3.0)],
        );
        let h = assemble_hamiltonian(&spec).unwrap();
        assert_eq!(h.entry(5, 1).re, 1.0);
        assert_eq!(h.entry(1, 5).re, 1.0);
        assert_eq!(h.entry(5, 3).re, 1.0 / 3.0);
        assert_eq!(h.entry(3, 5).re, 1.0 / 3.0);
    }

    #[test]
    fn periodic_corners() {
        let spec = SystemSpec::new(LatticeSpec::open(4, 2.0, 1.0).with_boundary(Boundary::Periodic), vec![]);
        let h = assemble_hamiltonian(&spec).unwrap();
        assert_eq!(h.entry(0, 3).re, 3.0);
        assert_eq!(h.entry(3, 0).re, 1.0);
        let obc = assemble_hamiltonian(&SystemSpec::new(LatticeSpec::open(4, 2.0, 1.0), vec![])).unwrap();
        assert_eq!(obc.entry(0, 3).re, 0.0);
    }

    #[test]
    fn validation_reports() {
        assert!(validate_spec(&fig1_spec()).is_empty());

        let mut bad = fig1_spec();
        bad.emitters[0].couplings[0].site = -1;
        let v = validate_spec(&bad);
        assert!(v.iter().any(|x| x.message.contains("site out of range")), "{v:?}");

        let mut dup = fig1_spec();
        dup.emitters.push(EmitterSpec::small("b", 100, 1.0));
        let v = validate_spec(&dup);
        assert!(v.iter().any(|x| x.message.contains("duplicate label")), "{v:?}");

        let mut same_site = fig1_spec();
        same_site.emitters[0].couplings[1].site = 500;
        assert!(matches!(assemble_hamiltonian(&same_site), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn apply_matches_dense() {
        let spec = SystemSpec::new(
            LatticeSpec::open(7, 1.3, 0.4).with_loss(0.2).with_boundary(Boundary::Periodic),
            vec![
                EmitterSpec::giant("b", 1, 0.7, 3, 0.2).with_detuning(0.1),
                EmitterSpec::small("c", 5, 0.3),
            ],
        );
        let h = assemble_hamiltonian(&spec).unwrap();
        let dense = h.to_dense();
        let x: Vec<Complex64> = (0..h.dim()).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.1)).collect();
        let mut y = vec![Complex64::default(); h.dim()];
        h.apply(&x, &mut y);
        for i in 0..h.dim() {
            let want: Complex64 = (0..h.dim()).map(|j| dense[i][j] * x[j]).sum();
            assert!((want - y[i]).norm() < 1e-13);
        }
    }
}
