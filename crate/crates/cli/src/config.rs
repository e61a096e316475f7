//! Experiment configuration. TOML, unknown keys rejected, every field
//! required.

use std::fmt;
use std::path::Path;

use modlab::freefield::{Poincare2, Region2, SpectralCutoff, TestFunction2};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Subspace,
    Fock,
    Freefield,
    Modloc,
    All,
}

impl Kind {
    pub fn includes(self, other: Kind) -> bool {
        self == Kind::All || self == other
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Subspace => "subspace",
            Kind::Fock => "fock",
            Kind::Freefield => "freefield",
            Kind::Modloc => "modloc",
            Kind::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub output_dir: String,
    pub subspace: SubspaceConfig,
    pub fock: FockConfig,
    pub freefield: FreefieldConfig,
    pub modloc: ModlocConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceConfig {
    /// Instances cycle through complex dimensions `1..=d`.
    pub d: usize,
    pub instances: usize,
    /// Every `fixed_part_every`-th instance carries a nonzero `K ∩ K′`.
    pub fixed_part_every: usize,
    pub flow_times: Vec<f64>,
    pub tol: f64,
    pub fiber_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    pub sym_max_d: usize,
    pub sym_max_level: usize,
    pub sym_instances: usize,
    pub sym_tol: f64,
    pub coherent_max_d: usize,
    pub coherent_cutoff: usize,
    pub coherent_instances: usize,
    pub overlap_tol: f64,
    pub gamma_tol: f64,
    pub weyl_cutoff: usize,
    /// Levels compared between the matrix exponential and the closed form.
    pub weyl_level: usize,
    pub weyl_ladder: Vec<usize>,
    pub weyl_tol: f64,
    pub fiber_theta: f64,
    pub sq_cutoff: usize,
    pub sq_samples: usize,
    pub sq_t: f64,
    pub sq_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub f: BumpSpec,
    pub g: BumpSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: f64,
    pub width: f64,
    pub freq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub theta_max: f64,
    pub n_points: usize,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.theta_max, self.n_points)
    }
}

impl Resolution {
    /// `n` or `theta_max:n`; a bare `n` keeps `default_theta`.
    pub fn parse(s: &str, default_theta: f64) -> Result<Self, String> {
        let s = s.trim();
        let (theta, n) = match s.split_once(':') {
            Some((t, n)) => (t.trim().parse::<f64>().map_err(|e| format!("{s}: {e}"))?, n),
            None => (default_theta, s),
        };
        let n_points = n.trim().parse::<usize>().map_err(|e| format!("{s}: {e}"))?;
        Ok(Self { theta_max: theta, n_points })
    }

    /// Neither coordinate decreases and at least one grows.
    pub fn refines(&self, coarser: &Resolution) -> bool {
        self.theta_max >= coarser.theta_max
            && self.n_points >= coarser.n_points
            && (self.theta_max > coarser.theta_max || self.n_points > coarser.n_points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreefieldConfig {
    pub mass: f64,
    pub theta_max: f64,
    pub n_points: usize,
    pub ladder: Vec<Resolution>,
    pub spectral_cap: f64,
    pub spectral_floor: f64,
    pub tail_threshold_log10: f64,
    pub spacelike: Vec<PairSpec>,
    pub timelike: Vec<PairSpec>,
    pub locality_tol: f64,
    pub timelike_min: f64,
    pub covariance_bumps: Vec<BumpSpec>,
    pub boost: f64,
    pub translation: [f64; 2],
    pub boost_tol: f64,
    pub translation_tol: f64,
    /// Right-wedge bumps (wedge at the origin).
    pub bw_bumps: Vec<BumpSpec>,
    pub bw_tol: f64,
    /// Left-wedge bumps (wedge at the origin).
    pub left_bumps: Vec<BumpSpec>,
    pub tail_growth_decades: f64,
    pub borchers_alpha: f64,
    pub borchers_times: Vec<f64>,
    pub borchers_probes: Vec<GaussianSpec>,
    pub borchers_tol: f64,
    /// Monotone-within factor for refinement ladders.
    pub refinement_slack: f64,
}

impl FreefieldConfig {
    pub fn resolution(&self) -> Resolution {
        Resolution { theta_max: self.theta_max, n_points: self.n_points }
    }

    pub fn cutoff(&self) -> SpectralCutoff {
        SpectralCutoff {
            cap: self.spectral_cap,
            floor: self.spectral_floor,
            threshold_log10: self.tail_threshold_log10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RegionSpec {
    RightWedge([f64; 2]),
    LeftWedge([f64; 2]),
    DoubleCone { center: [f64; 2], radius: f64 },
}

impl RegionSpec {
    pub fn region(&self) -> Region2 {
        match *self {
            RegionSpec::RightWedge(a) => Region2::right_wedge(a),
            RegionSpec::LeftWedge(a) => Region2::left_wedge(a),
            RegionSpec::DoubleCone { center, radius } => Region2::double_cone(center, radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolBump {
    pub center: [f64; 2],
    pub radius: f64,
    pub region: RegionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupElementSpec {
    pub rapidity: f64,
    pub translation: [f64; 2],
    pub reflect: bool,
}

impl GroupElementSpec {
    pub fn element(&self) -> Poincare2 {
        Poincare2 { rapidity: self.rapidity, translation: self.translation, reflect: self.reflect }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleConeSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModlocConfig {
    pub mass: f64,
    pub theta_max: f64,
    pub n_points: usize,
    pub apexes: Vec<[f64; 2]>,
    pub pool: Vec<PoolBump>,
    pub fixed_tol: f64,
    pub modular_t: f64,
    pub group_elements: Vec<GroupElementSpec>,
    pub net_tol: f64,
    pub double_cone: DoubleConeSpec,
    pub double_cone_tol: f64,
    pub direct_sum_masses: Vec<f64>,
    pub direct_sum_wedge: RegionSpec,
    pub direct_sum_tol: f64,
}

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::field("<document>", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::field(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |path: &str, v: f64| -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::field(path, format!("tolerance must be positive, got {v}")))
            }
        };
        let nonempty = |path: &str, n: usize| -> Result<(), ConfigError> {
            if n == 0 {
                Err(ConfigError::field(path, "must not be empty"))
            } else {
                Ok(())
            }
        };
        let s = &self.subspace;
        positive("subspace.tol", s.tol)?;
        positive("subspace.fiber_tol", s.fiber_tol)?;
        if s.d == 0 {
            return Err(ConfigError::field("subspace.d", "must be at least 1"));
        }
        if s.fixed_part_every == 0 {
            return Err(ConfigError::field("subspace.fixed_part_every", "must be at least 1"));
        }
        nonempty("subspace.flow_times", s.flow_times.len())?;

        let f = &self.fock;
        positive("fock.sym_tol", f.sym_tol)?;
        positive("fock.overlap_tol", f.overlap_tol)?;
        positive("fock.gamma_tol", f.gamma_tol)?;
        positive("fock.weyl_tol", f.weyl_tol)?;
        positive("fock.sq_tol", f.sq_tol)?;
        for (path, v) in [
            ("fock.sym_max_d", f.sym_max_d),
            ("fock.sym_max_level", f.sym_max_level),
            ("fock.coherent_max_d", f.coherent_max_d),
            ("fock.coherent_cutoff", f.coherent_cutoff),
        ] {
            if v == 0 {
                return Err(ConfigError::field(path, "must be at least 1"));
            }
        }
        if f.weyl_level > f.weyl_cutoff {
            return Err(ConfigError::field("fock.weyl_level", "must not exceed fock.weyl_cutoff"));
        }
        if f.weyl_ladder.len() < 2 || f.weyl_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::field("fock.weyl_ladder", "needs at least two strictly increasing cutoffs"));
        }
        if !(f.fiber_theta > 0.0 && f.fiber_theta < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::field("fock.fiber_theta", "must lie in (0, π/2)"));
        }

        let ff = &self.freefield;
        positive("freefield.locality_tol", ff.locality_tol)?;
        positive("freefield.timelike_min", ff.timelike_min)?;
        positive("freefield.boost_tol", ff.boost_tol)?;
        positive("freefield.translation_tol", ff.translation_tol)?;
        positive("freefield.bw_tol", ff.bw_tol)?;
        positive("freefield.tail_growth_decades", ff.tail_growth_decades)?;
        positive("freefield.borchers_tol", ff.borchers_tol)?;
        positive("freefield.spectral_floor", ff.spectral_floor)?;
        if !(ff.spectral_cap > 1.0) {
            return Err(ConfigError::field("freefield.spectral_cap", "must exceed 1"));
        }
        if !(ff.refinement_slack >= 1.0) {
            return Err(ConfigError::field("freefield.refinement_slack", "must be at least 1"));
        }
        check_ladder("freefield.ladder", &ff.ladder)?;
        nonempty("freefield.bw_bumps", ff.bw_bumps.len())?;
        nonempty("freefield.left_bumps", ff.left_bumps.len())?;
        nonempty("freefield.borchers_probes", ff.borchers_probes.len())?;
        nonempty("freefield.covariance_bumps", ff.covariance_bumps.len())?;
        let plane = Region2::double_cone([0.0, 0.0], 1e6);
        for (name, list) in [("spacelike", &ff.spacelike), ("timelike", &ff.timelike)] {
            for (i, p) in list.iter().enumerate() {
                for (side, b) in [("f", p.f), ("g", p.g)] {
                    bump(&format!("freefield.{name}[{i}].{side}"), b, &plane)?;
                }
            }
        }
        let rw = Region2::right_wedge([0.0, 0.0]);
        let lw = Region2::left_wedge([0.0, 0.0]);
        for (i, b) in ff.bw_bumps.iter().enumerate() {
            bump(&format!("freefield.bw_bumps[{i}]"), *b, &rw)?;
        }
        for (i, b) in ff.covariance_bumps.iter().enumerate() {
            bump(&format!("freefield.covariance_bumps[{i}]"), *b, &rw)?;
        }
        for (i, b) in ff.left_bumps.iter().enumerate() {
            bump(&format!("freefield.left_bumps[{i}]"), *b, &lw)?;
        }

        let m = &self.modloc;
        positive("modloc.fixed_tol", m.fixed_tol)?;
        positive("modloc.net_tol", m.net_tol)?;
        positive("modloc.double_cone_tol", m.double_cone_tol)?;
        positive("modloc.direct_sum_tol", m.direct_sum_tol)?;
        nonempty("modloc.apexes", m.apexes.len())?;
        nonempty("modloc.pool", m.pool.len())?;
        for (i, p) in m.pool.iter().enumerate() {
            bump(
                &format!("modloc.pool[{i}]"),
                BumpSpec { center: p.center, radius: p.radius },
                &p.region.region(),
            )?;
        }
        if m.direct_sum_masses.is_empty() || m.direct_sum_masses.iter().any(|&x| !(x > 0.0)) {
            return Err(ConfigError::field("modloc.direct_sum_masses", "needs positive masses"));
        }
        if !m.direct_sum_wedge.region().is_wedge() {
            return Err(ConfigError::field("modloc.direct_sum_wedge", "must be a wedge"));
        }
        if !(m.double_cone.radius > 0.0) {
            return Err(ConfigError::field("modloc.double_cone.radius", "must be positive"));
        }
        Ok(())
    }

    /// Test functions of the modloc pool.
    pub fn pool(&self) -> Vec<TestFunction2> {
        self.modloc
            .pool
            .iter()
            .map(|p| TestFunction2::bump(p.center, p.radius, p.region.region()).expect("validated"))
            .collect()
    }
}

fn bump(path: &str, b: BumpSpec, region: &Region2) -> Result<TestFunction2, ConfigError> {
    TestFunction2::bump(b.center, b.radius, region.clone())
        .map_err(|e| ConfigError::field(path, e.to_string()))
}

/// Each entry refines the previous one.
pub fn check_ladder(path: &str, ladder: &[Resolution]) -> Result<(), ConfigError> {
    if ladder.is_empty() {
        return Err(ConfigError::field(path, "must not be empty"));
    }
    for (i, w) in ladder.windows(2).enumerate() {
        if !w[1].refines(&w[0]) {
            return Err(ConfigError::field(
                format!("{path}[{}]", i + 1),
                format!("{} does not refine {}", w[1], w[0]),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default_config();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = DEFAULT_CONFIG.replace("[fock]\n", "[fock]\nsurprise = 1\n");
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Field { path, message }) => {
                assert!(path == "fock" || path == "fock.surprise", "{path}");
                assert!(message.contains("surprise"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let text = DEFAULT_CONFIG.replace("bw_tol = 1e-3", "bw_tol = 0.0");
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Field { path, .. }) => assert_eq!(path, "freefield.bw_tol"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolution_parsing_and_order() {
        let a = Resolution::parse("16384", 8.0).unwrap();
        let b = Resolution::parse("8:32768", 7.0).unwrap();
        assert_eq!(a, Resolution { theta_max: 8.0, n_points: 16384 });
        assert!(b.refines(&a));
        assert!(!a.refines(&a));
        assert!(!Resolution::parse("7:65536", 8.0).unwrap().refines(&a));
        assert!(Resolution::parse("x", 8.0).is_err());
    }
}
