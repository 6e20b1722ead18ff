//! Experiment configurations, runs and diagnostics.

mod presets;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling::{AlphaWeights, CattaneoCoupling};
use crate::engine::{BoundaryCondition, Simulation, SimulationSetup};
use crate::error::{Error, Result};
use crate::graph::{Network, NetworkDoc};
use crate::models::{ModelKind, ModelParams, PhysicalParams};

pub use presets::{preset, preset_interval_riemann, preset_large_network, preset_tripod, PRESETS};

/// A model together with its node coupling variant. Written as
/// `kinetic`, `half-moment`, `keller-segel`, `cattaneo`,
/// `cattaneo:density-continuity` or `cattaneo:alpha-transmission[=w]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub cattaneo: CattaneoCoupling,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            cattaneo: CattaneoCoupling::default(),
        }
    }

    pub fn all() -> Vec<ModelSpec> {
        ModelKind::ALL.into_iter().map(ModelSpec::new).collect()
    }

    /// File-name friendly label, unique per model and variant.
    pub fn label(&self) -> String {
        self.to_string()
            .replace(':', "-")
            .replace(['=', '[', ']', ','], "_")
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if self.kind != ModelKind::Cattaneo {
            return Ok(());
        }
        match &self.cattaneo {
            CattaneoCoupling::KineticDerived => Ok(()),
            CattaneoCoupling::DensityContinuity => f.write_str(":density-continuity"),
            CattaneoCoupling::AlphaTransmission(AlphaWeights::Uniform(w)) => {
                write!(f, ":alpha-transmission={w:?}")
            }
            CattaneoCoupling::AlphaTransmission(AlphaWeights::Matrix(m)) => {
                let entries: Vec<String> = m.iter().map(|w| format!("{w:?}")).collect();
                write!(f, ":alpha-transmission=[{}]", entries.join(","))
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, variant) = match s.split_once(':') {
            Some((k, v)) => (k, Some(v)),
            None => (s, None),
        };
        let kind: ModelKind = kind.parse()?;
        let cattaneo = match (kind, variant) {
            (_, None) | (ModelKind::Cattaneo, Some("kinetic-derived")) => {
                CattaneoCoupling::KineticDerived
            }
            (ModelKind::Cattaneo, Some("density-continuity")) => {
                CattaneoCoupling::DensityContinuity
            }
            (ModelKind::Cattaneo, Some(v)) if v.starts_with("alpha-transmission") => {
                let weights = match v["alpha-transmission".len()..].strip_prefix('=') {
                    None if v.len() == "alpha-transmission".len() => AlphaWeights::default(),
                    None => return Err(Error::Config(format!("unknown coupling '{v}'"))),
                    Some(w) if w.starts_with('[') => AlphaWeights::Matrix(
                        serde_json::from_str(w)
                            .map_err(|e| Error::Config(format!("transmission weights: {e}")))?,
                    ),
                    Some(w) => AlphaWeights::Uniform(
                        w.parse()
                            .map_err(|_| Error::Config(format!("transmission weight '{w}'")))?,
                    ),
                };
                CattaneoCoupling::AlphaTransmission(weights)
            }
            (_, Some(v)) => {
                return Err(Error::Config(format!(
                    "model '{}' has no coupling variant '{v}'",
                    kind.name()
                )))
            }
        };
        Ok(ModelSpec { kind, cattaneo })
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.to_string()
    }
}

/// Where the network comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    /// A network document on disk, relative to the config file.
    File {
        file: PathBuf,
    },
    Inline(NetworkDoc),
}

/// Constant value on `[from, to)` of an edge, in edge coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    pub value: f64,
}

/// Piecewise constant initial profile, sampled at cell centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Segments(Vec<Segment>),
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(0.0)
    }
}

impl Profile {
    pub fn sample(&self, cells: usize, dx: f64) -> Vec<f64> {
        (0..cells)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                match self {
                    Profile::Constant(c) => *c,
                    Profile::Segments(s) => s
                        .iter()
                        .rev()
                        .find(|s| s.from <= x && x < s.to)
                        .map_or(0.0, |s| s.value),
                }
            })
            .collect()
    }
}

/// Initial data of one edge; unlisted edges start at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeInitial {
    /// Edge id.
    pub edge: usize,
    #[serde(default)]
    pub rho: Profile,
    #[serde(default)]
    pub m: Profile,
}

/// Condition at a degree-1 node, by node id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub node: usize,
    pub condition: BoundaryCondition,
}

fn default_snapshots() -> usize {
    50
}

fn default_velocities() -> usize {
    50
}

fn default_safety() -> f64 {
    0.9
}

fn default_epsilon() -> f64 {
    1.0
}

/// One experiment: a network, a set of models and their shared settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: NetworkSource,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub physical: PhysicalParams,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Relaxation speed; `None` picks each model's default.
    #[serde(default)]
    pub phi: Option<f64>,
    /// Uniform target cell width; `None` keeps the network's cell counts.
    #[serde(default)]
    pub dx: Option<f64>,
    pub t_end: f64,
    /// Number of evenly spaced output times after t = 0.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_velocities")]
    pub velocities: usize,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub boundaries: Vec<BoundarySpec>,
    #[serde(default)]
    pub initial: Vec<EdgeInitial>,
}

impl ScenarioConfig {
    /// Read a JSON config; a network file path is taken relative to it.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let NetworkSource::File { file } = &mut config.network {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The network with the requested resolution applied.
    pub fn network(&self) -> Result<Network> {
        let net = match &self.network {
            NetworkSource::Inline(doc) => Network::from_doc(doc)?,
            NetworkSource::File { file } => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| Error::io(file.display().to_string(), e))?;
                Network::parse(&text)?
            }
        };
        match self.dx {
            Some(dx) => net.with_cell_width(dx),
            None => Ok(net),
        }
    }

    /// Validated parameters of one model.
    pub fn params(&self, kind: ModelKind) -> Result<ModelParams> {
        ModelParams::new(kind, self.physical, self.epsilon, self.phi)
    }

    /// Check everything that does not need a run.
    pub fn validate(&self) -> Result<Network> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        if self.snapshots == 0 {
            return Err(Error::Config("at least one snapshot is required".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        for m in &self.models {
            self.params(m.kind)?;
        }
        let net = self.network()?;
        for b in &self.boundaries {
            net.node_index(b.node)?;
        }
        for init in &self.initial {
            net.edge_index(init.edge)?;
        }
        Ok(net)
    }

    /// Initial `(ρ, m)` per edge on `net`.
    pub fn initial_data(&self, net: &Network) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let mut rho: Vec<Vec<f64>> = net.edges().iter().map(|e| vec![0.0; e.cells]).collect();
        let mut m = rho.clone();
        for init in &self.initial {
            let e = net.edge_index(init.edge)?;
            let edge = &net.edges()[e];
            let dx = edge.length / edge.cells as f64;
            rho[e] = init.rho.sample(edge.cells, dx);
            m[e] = init.m.sample(edge.cells, dx);
        }
        Ok((rho, m))
    }

    /// Engine input for one model.
    pub fn setup(&self, model: &ModelSpec, net: &Network) -> Result<SimulationSetup> {
        let (rho0, m0) = self.initial_data(net)?;
        let boundaries = self
            .boundaries
            .iter()
            .map(|b| Ok((net.node_index(b.node)?, b.condition)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SimulationSetup {
            network: net.clone(),
            kind: model.kind,
            params: self.params(model.kind)?,
            velocities: self.velocities,
            cattaneo: model.cattaneo.clone(),
            boundaries,
            cfl_safety: self.cfl_safety,
            rho0,
            m0,
        })
    }

    /// Output times `T k / snapshots`, ending exactly at `T`.
    pub fn output_times(&self) -> Vec<f64> {
        let n = self.snapshots;
        (0..=n)
            .map(|k| {
                if k == n {
                    self.t_end
                } else {
                    self.t_end * k as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Named per-cell columns of one edge at one time; the first is ρ.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSnapshot {
    pub columns: Vec<(&'static str, Vec<f64>)>,
    pub m: Vec<f64>,
}

impl EdgeSnapshot {
    pub fn density(&self) -> &[f64] {
        &self.columns[0].1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub edges: Vec<EdgeSnapshot>,
}

impl Snapshot {
    pub fn densities(&self) -> Vec<&[f64]> {
        self.edges.iter().map(EdgeSnapshot::density).collect()
    }
}

/// Output of one model.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub model: ModelSpec,
    pub dt: f64,
    pub steps: u64,
    /// `(t, total mass)` at every output time.
    pub mass: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
    /// Smallest `f±` seen after any step (kinetic model only).
    pub min_distribution: Option<f64>,
}

impl ModelRun {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a run has snapshots")
    }

    pub fn final_mass(&self) -> f64 {
        self.mass.last().expect("a run has mass samples").1
    }
}

/// L1 distance between the final densities of two runs.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDistance {
    pub a: String,
    pub b: String,
    pub l1: f64,
}

#[derive(Clone, Debug)]
pub struct RunDiagnostics {
    pub network: Network,
    /// Cell width per edge.
    pub dx: Vec<f64>,
    pub runs: Vec<ModelRun>,
    pub distances: Vec<PairDistance>,
}

impl RunDiagnostics {
    pub fn run_of(&self, kind: ModelKind) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.model.kind == kind)
    }

    pub fn distance(&self, a: &str, b: &str) -> Option<f64> {
        self.distances
            .iter()
            .find(|d| (d.a == a && d.b == b) || (d.a == b && d.b == a))
            .map(|d| d.l1)
    }
}

fn snapshot(sim: &Simulation) -> Snapshot {
    let edges = (0..sim.network().edges().len())
        .map(|e| EdgeSnapshot {
            columns: sim.edge_state(e).columns(sim.velocity_grid()),
            m: sim.chemoattractant(e).to_vec(),
        })
        .collect();
    Snapshot {
        time: sim.time(),
        edges,
    }
}

/// Run one model of the scenario on `net`.
pub fn run_model(config: &ScenarioConfig, model: &ModelSpec, net: &Network) -> Result<ModelRun> {
    let mut sim = Simulation::new(config.setup(model, net)?)?;
    let track = model.kind == ModelKind::Kinetic;
    let mut min_f = sim.min_kinetic_distribution();
    let mut mass = vec![(0.0, sim.total_mass())];
    let mut snapshots = vec![snapshot(&sim)];
    for &t in &config.output_times()[1..] {
        if track {
            while sim.time() < t {
                if t - sim.time() <= sim.dt() * (1.0 + 1e-10) {
                    sim.advance_to(t)?;
                } else {
                    sim.step()?;
                }
                min_f = min_f
                    .zip(sim.min_kinetic_distribution())
                    .map(|(a, b)| a.min(b));
            }
        } else {
            sim.advance_to(t)?;
        }
        mass.push((sim.time(), sim.total_mass()));
        snapshots.push(snapshot(&sim));
    }
    Ok(ModelRun {
        model: model.clone(),
        dt: sim.dt(),
        steps: sim.steps(),
        mass,
        snapshots,
        min_distribution: min_f,
    })
}

/// Run every model of the scenario and compare the final densities.
pub fn run(config: &ScenarioConfig) -> Result<RunDiagnostics> {
    let net = config.validate()?;
    let dx: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| e.length / e.cells as f64)
        .collect();
    let runs = config
        .models
        .iter()
        .map(|m| run_model(config, m, &net))
        .collect::<Result<Vec<_>>>()?;
    let mut distances = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            distances.push(PairDistance {
                a: a.model.to_string(),
                b: b.model.to_string(),
                l1: network_l1_distance(
                    &a.final_snapshot().densities(),
                    &b.final_snapshot().densities(),
                    &dx,
                )?,
            });
        }
    }
    Ok(RunDiagnostics {
        network: net,
        dx,
        runs,
        distances,
    })
}

/// Largest cell-wise density difference at `t_end` between two unit edges
/// joined at a degree-2 node and the single interval `[0, 2]`, both with
/// `cells` cells per unit length and Riemann data ρ = 1 on `[0, 1)`. With
/// `reversed` the second edge points into the joint.
pub fn one_to_one_difference(
    model: &ModelSpec,
    params: ModelParams,
    velocities: usize,
    cells: usize,
    t_end: f64,
    reversed: bool,
) -> Result<f64> {
    use crate::graph::EdgeSpec;
    let line = Network::new(
        &[0, 1],
        &[EdgeSpec {
            id: 0,
            from: 0,
            to: 1,
            length: 2.0,
            cells: 2 * cells,
        }],
    )?;
    let second = if reversed {
        EdgeSpec {
            id: 1,
            from: 2,
            to: 1,
            length: 1.0,
            cells,
        }
    } else {
        EdgeSpec {
            id: 1,
            from: 1,
            to: 2,
            length: 1.0,
            cells,
        }
    };
    let split = Network::new(
        &[0, 1, 2],
        &[
            EdgeSpec {
                id: 0,
                from: 0,
                to: 1,
                length: 1.0,
                cells,
            },
            second,
        ],
    )?;
    let make = |network: Network, rho0: Vec<Vec<f64>>| {
        let m0 = rho0.iter().map(|r| vec![0.0; r.len()]).collect();
        Simulation::new(SimulationSetup {
            network,
            kind: model.kind,
            params,
            velocities,
            cattaneo: model.cattaneo.clone(),
            boundaries: Vec::new(),
            cfl_safety: 0.9,
            rho0,
            m0,
        })
    };
    let mut whole = make(line, vec![[vec![1.0; cells], vec![0.0; cells]].concat()])?;
    let mut parts = make(split, vec![vec![1.0; cells], vec![0.0; cells]])?;
    whole.advance_to(t_end)?;
    parts.advance_to(t_end)?;
    let w = whole.density(0);
    let mut tail = parts.density(1);
    if reversed {
        tail.reverse();
    }
    let joined = [parts.density(0), tail].concat();
    Ok(w.iter()
        .zip(&joined)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `Σ_edges Σ_cells ρ_i Δx`.
pub fn total_mass(densities: &[&[f64]], dx: &[f64]) -> f64 {
    densities
        .iter()
        .zip(dx)
        .map(|(rho, dx)| rho.iter().sum::<f64>() * dx)
        .sum()
}

/// `Σ |a_i - b_i| Δx` on one edge.
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "fields on {} and {} cells",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx)
}

/// [`l1_distance`] summed over edges.
pub fn network_l1_distance(a: &[&[f64]], b: &[&[f64]], dx: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != dx.len() {
        return Err(Error::DimensionMismatch(
            "fields on different networks".into(),
        ));
    }
    a.iter()
        .zip(b)
        .zip(dx)
        .map(|((a, b), &dx)| l1_distance(a, b, dx))
        .sum()
}
