//! Built-in scenarios reproducing the figure families. Every run is an
//! ordinary [`ScenarioConfig`], so a preset can be dumped, edited and rerun.

use crate::config::{
    AnalysisConfig, CouplingConfig, EmitterConfig, HyperbolicConfig, IntegratorSpec, LatticeConfig, OutputsConfig,
    ScenarioConfig, SimulationConfig,
};
use crate::run::Command;
use skinbath::Boundary;

#[derive(Clone, Debug, PartialEq)]
pub struct PresetRun {
    pub name: String,
    pub command: Command,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub id: &'static str,
    pub description: &'static str,
    pub runs: Vec<PresetRun>,
}

pub const PRESET_IDS: [&str; 13] = [
    "fig1b", "fig1c", "fig2a", "fig2b", "fig3a", "fig3c", "fig4a", "fig4b", "fig4c", "fig4d", "figS1", "figS2",
    "figS3",
];

const M: usize = 1000;
const N: i64 = (M / 2) as i64;

fn lattice(m: usize, nu: f64, gamma: f64, loss: f64) -> LatticeConfig {
    LatticeConfig { m, nu, gamma, loss, boundary: Boundary::Open }
}

fn emitter(label: &str, points: &[(i64, f64)]) -> EmitterConfig {
    EmitterConfig {
        label: label.into(),
        detuning: 0.0,
        couplings: points.iter().map(|&(site, strength)| CouplingConfig { site, strength }).collect(),
    }
}

fn scenario(lattice: LatticeConfig, emitters: Vec<EmitterConfig>, t_max: f64, samples: usize) -> ScenarioConfig {
    ScenarioConfig {
        lattice,
        emitters,
        simulation: SimulationConfig { t_max, samples, ..SimulationConfig::default() },
        outputs: OutputsConfig::default(),
        analysis: AnalysisConfig::default(),
    }
}

fn beta(nu: f64, gamma: f64) -> f64 {
    ((nu + gamma) / (nu - gamma)).sqrt()
}

fn run(name: impl Into<String>, command: Command, config: ScenarioConfig) -> PresetRun {
    PresetRun { name: name.into(), command, config }
}

/// Giant emitter `b` at `N` and `N + d` on an `M = 1000` lattice.
fn giant_run(name: impl Into<String>, nu: f64, gamma: f64, loss: f64, d: i64, g_far: f64, t_max: f64) -> PresetRun {
    let cfg = scenario(lattice(M, nu, gamma, loss), vec![emitter("b", &[(N, 1.0), (N + d, g_far)])], t_max, 401);
    run(name, Command::Simulate, cfg)
}

/// Braided pair: `b` at `N, N + 2`, `c` at `N + 1, N + 3`, far couplings `β^-2`.
pub fn braided_pair(nu: f64, gamma: f64, t_max: f64, samples: usize, initial: &str) -> ScenarioConfig {
    let far = beta(nu, gamma).powi(-2);
    let mut cfg = scenario(
        lattice(M, nu, gamma, 0.0),
        vec![emitter("b", &[(N, 1.0), (N + 2, far)]), emitter("c", &[(N + 1, 1.0), (N + 3, far)])],
        t_max,
        samples,
    );
    cfg.simulation.initial = Some(initial.into());
    cfg
}

fn dfi_family(nu: f64, gamma: f64, t_max: f64) -> Vec<PresetRun> {
    let samples = (t_max * 10.0) as usize + 1;
    vec![
        run("excite_b", Command::Simulate, braided_pair(nu, gamma, t_max, samples, "b")),
        run("excite_c", Command::Simulate, braided_pair(nu, gamma, t_max, samples, "c")),
        run("reduced", Command::Dfi, braided_pair(nu, gamma, t_max, samples, "b")),
    ]
}

fn unstable_family(gamma: f64) -> Vec<PresetRun> {
    [0.0, 0.5, 1.0]
        .iter()
        .map(|&g2| {
            let mut r = giant_run(format!("g2_{g2}"), 20.0, gamma, 0.0, 2, g2, 10.0);
            r.config.simulation.samples = 1001;
            r
        })
        .collect()
}

fn stable_run(name: impl Into<String>, gamma: f64, d: i64, g_far: f64) -> PresetRun {
    giant_run(name, 10.0, gamma, 2.0 * gamma, d, g_far, 20.0)
}

fn bound_state_run(name: &str, m: usize, emitters: Vec<EmitterConfig>) -> PresetRun {
    run(name, Command::Boundstate, scenario(lattice(m, 20.0, 10.0, 0.0), emitters, 40.0, 401))
}

/// The braided pair has no state pinned at zero; its bound states sit near the
/// exchange frequencies `±1/(β t_R)`.
fn braided_bound_state_run() -> PresetRun {
    let (nu, gamma) = (20.0, 10.0);
    let b = beta(nu, gamma);
    let far = b.powi(-2);
    let mut cfg = scenario(
        lattice(501, nu, gamma, 0.0),
        vec![emitter("b", &[(249, 1.0), (251, far)]), emitter("c", &[(250, 1.0), (252, far)])],
        40.0,
        401,
    );
    cfg.analysis.boundstate.target = Some(1.0 / (b * (nu + gamma)));
    run("braided", Command::Boundstate, cfg)
}

fn hyperbolic_run(kappa: f64) -> PresetRun {
    let mut cfg = scenario(lattice(20, 10.0, 5.0, 0.0), vec![emitter("b", &[(8, 1.0), (10, 1.0)])], 40.0, 401);
    cfg.analysis.hyperbolic = HyperbolicConfig { kappa: Some(kappa), ..HyperbolicConfig::default() };
    run(format!("kappa_{kappa}"), Command::Hyperbolic, cfg)
}

pub fn preset(id: &str) -> Option<Preset> {
    let b2 = beta(10.0, 5.0).powi(-2);
    let (description, runs): (&'static str, Vec<PresetRun>) = match id {
        "fig1b" => (
            "matched and mismatched D = 2 giant emitter, convectively unstable lattice",
            vec![
                giant_run("nu10_matched", 10.0, 5.0, 0.0, 2, b2, 40.0),
                giant_run("nu10_ratio0.9", 10.0, 5.0, 0.0, 2, 0.9 * b2, 40.0),
                giant_run("nu10_ratio1.1", 10.0, 5.0, 0.0, 2, 1.1 * b2, 40.0),
                giant_run("nu20_matched", 20.0, 10.0, 0.0, 2, beta(20.0, 10.0).powi(-2), 40.0),
            ],
        ),
        "fig1c" => (
            "matched giant emitters with D = 2, 4, 6 and the small-emitter reference",
            std::iter::once(run(
                "small",
                Command::Simulate,
                scenario(lattice(M, 10.0, 5.0, 0.0), vec![emitter("b", &[(N, 1.0)])], 40.0, 401),
            ))
            .chain([2, 4, 6].iter().map(|&d| {
                giant_run(format!("D{d}"), 10.0, 5.0, 0.0, d, beta(10.0, 5.0).powi(-(d as i32)), 40.0)
            }))
            .collect(),
        ),
        "fig2a" => ("braided pair, nonreciprocal exchange with reference 1/3", dfi_family(20.0, 10.0, 340.0)),
        "fig2b" => ("braided pair, nonreciprocal exchange with reference 1/2", dfi_family(15.0, 5.0, 200.0)),
        "fig3a" => ("giant emitter in the absolutely unstable regime", unstable_family(20.5)),
        "fig3c" => ("giant emitter at the transition point t_L = 0", unstable_family(20.0)),
        "fig4a" => (
            "periodic spectra with and without on-site loss",
            vec![
                run("lossless", Command::Spectrum, scenario(lattice(M, 10.0, 5.0, 0.0), vec![], 40.0, 401)),
                run("lossy", Command::Spectrum, scenario(lattice(M, 10.0, 5.0, 10.0), vec![], 40.0, 401)),
            ],
        ),
        "fig4b" => (
            "stable lattice, coupling separation D = 1, 2, 3",
            (1..=3).map(|d| stable_run(format!("D{d}"), 5.0, d, 1.0)).collect(),
        ),
        "fig4c" => (
            "stable lattice, far coupling 0.5, 1, 2",
            [0.5, 1.0, 2.0].iter().map(|&g| stable_run(format!("g_far_{g}"), 5.0, 2, g)).collect(),
        ),
        "fig4d" => (
            "stable lattice, gamma on both sides of t_L = 0",
            [5.0, 9.9, 10.1, 15.0].iter().map(|&g| stable_run(format!("gamma_{g}"), g, 2, 1.0)).collect(),
        ),
        "figS1" => (
            "hidden bound state profiles",
            vec![
                bound_state_run("small", 501, vec![emitter("b", &[(249, 1.0)])]),
                bound_state_run("giant_D2", 501, vec![emitter("b", &[(249, 1.0), (251, beta(20.0, 10.0).powi(-2))])]),
                bound_state_run("giant_D4", 501, vec![emitter("b", &[(249, 1.0), (253, beta(20.0, 10.0).powi(-4))])]),
                braided_bound_state_run(),
            ],
        ),
        "figS2" => (
            "small emitter and lattice intensities on both sides of the absolute instability",
            [19.5, 20.5]
                .iter()
                .map(|&gamma| {
                    let mut cfg =
                        scenario(lattice(M, 20.0, gamma, 0.0), vec![emitter("b", &[(N, 1.0)])], 10.0, 101);
                    cfg.simulation.record_fields = true;
                    run(format!("gamma_{gamma}"), Command::Simulate, cfg)
                })
                .collect(),
        ),
        "figS3" => ("pseudosphere surfaces for kappa = 2 and 1", vec![hyperbolic_run(2.0), hyperbolic_run(1.0)]),
        _ => return None,
    };
    let id = PRESET_IDS.iter().find(|&&p| p == id)?;
    Some(Preset { id, description, runs })
}

/// Fixed-step variant of a config, useful for bit-reproducible reruns.
pub fn with_fixed_step(mut cfg: ScenarioConfig, dt: f64) -> ScenarioConfig {
    cfg.simulation.integrator = IntegratorSpec { method: crate::config::MethodName::Rk4, dt: Some(dt), rtol: None, atol: None };
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for id in PRESET_IDS {
            let p = preset(id).unwrap_or_else(|| panic!("{id}"));
            assert!(!p.runs.is_empty());
            for r in &p.runs {
                r.config.validate().unwrap_or_else(|e| panic!("{id}/{}: {e}", r.name));
                if r.command == Command::Simulate {
                    r.config.integrator_config().unwrap();
                    r.config.initial_label().unwrap();
                }
            }
        }
        assert!(preset("fig9").is_none());
    }

    #[test]
    fn braided_geometry() {
        let cfg = braided_pair(20.0, 10.0, 10.0, 11, "c");
        let sites: Vec<i64> = cfg.emitters.iter().flat_map(|e| e.couplings.iter().map(|c| c.site)).collect();
        assert_eq!(sites, vec![500, 502, 501, 503]);
        assert!((cfg.emitters[0].couplings[1].strength - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cfg.initial_label().unwrap(), "c");
    }
}
