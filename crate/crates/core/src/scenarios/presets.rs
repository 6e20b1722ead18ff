//! Built-in experiments.

use super::{
    BoundarySpec, EdgeInitial, ModelSpec, NetworkSource, Profile, ScenarioConfig, Segment,
};
use crate::engine::BoundaryCondition;
use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, Network, NetworkDoc};
use crate::models::{ModelKind, PhysicalParams};

/// Reconstructed 23-node, 31-edge network: a 5 x 3 grid of junctions with
/// edge lengths 0.5, 1 and one diagonal of length √2, plus eight stubs of
/// length 0.5 ending in open nodes.
const LARGE_NETWORK: &str = include_str!("../../data/large_network.json");

pub const PRESETS: [&str; 3] = ["interval", "tripod", "large"];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "interval" => Ok(preset_interval_riemann()),
        "tripod" => Ok(preset_tripod()),
        "large" => Ok(preset_large_network()),
        other => Err(Error::Config(format!(
            "unknown preset '{other}', expected one of {}",
            PRESETS.join(", ")
        ))),
    }
}

fn inline(net: &Network) -> NetworkSource {
    NetworkSource::Inline(net.to_doc())
}

fn base(name: &str, network: NetworkSource, models: Vec<ModelSpec>, t_end: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        network,
        models,
        physical: PhysicalParams::default(),
        epsilon: 1.0,
        phi: None,
        dx: None,
        t_end,
        snapshots: 50,
        velocities: 50,
        cfl_safety: 0.9,
        boundaries: Vec::new(),
        initial: Vec::new(),
    }
}

/// Riemann problem on `[0, 2]`: ρ = 1 on `[0, 1)`, closed ends.
pub fn preset_interval_riemann() -> ScenarioConfig {
    let net = Network::new(
        &[0, 1],
        &[EdgeSpec {
            id: 0,
            from: 0,
            to: 1,
            length: 2.0,
            cells: 400,
        }],
    )
    .expect("valid interval");
    let mut c = base("interval", inline(&net), ModelSpec::all(), 0.2);
    c.initial = vec![EdgeInitial {
        edge: 0,
        rho: Profile::Segments(vec![Segment {
            from: 0.0,
            to: 1.0,
            value: 1.0,
        }]),
        m: Profile::Constant(0.0),
    }];
    c
}

/// Three unit edges leaving one junction with densities 1, 2 and 3.
pub fn preset_tripod() -> ScenarioConfig {
    let edges: Vec<EdgeSpec> = (0..3)
        .map(|e| EdgeSpec {
            id: e,
            from: 0,
            to: e + 1,
            length: 1.0,
            cells: 50,
        })
        .collect();
    let net = Network::new(&[0, 1, 2, 3], &edges).expect("valid tripod");
    let mut c = base(
        "tripod",
        inline(&net),
        vec![ModelSpec::new(ModelKind::Kinetic)],
        0.3,
    );
    c.initial = (0..3)
        .map(|e| EdgeInitial {
            edge: e,
            rho: Profile::Constant((e + 1) as f64),
            m: Profile::Constant(0.0),
        })
        .collect();
    c
}

/// The large network with inflow of density 1 at every open end and
/// density 1 on the stubs.
pub fn preset_large_network() -> ScenarioConfig {
    let doc: NetworkDoc = serde_json::from_str(LARGE_NETWORK).expect("bundled network parses");
    let net = Network::from_doc(&doc).expect("bundled network is valid");
    let mut c = base("large", NetworkSource::Inline(doc), ModelSpec::all(), 30.0);
    c.velocities = 20;
    for node in net.nodes().iter().filter(|n| n.degree() == 1) {
        c.boundaries.push(BoundarySpec {
            node: node.id,
            condition: BoundaryCondition::Inflow(1.0),
        });
        c.initial.push(EdgeInitial {
            edge: net.edges()[node.incident[0].edge].id,
            rho: Profile::Constant(1.0),
            m: Profile::Constant(0.0),
        });
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::total_mass;

    fn initial_mass(c: &ScenarioConfig) -> f64 {
        let net = c.network().unwrap();
        let (rho, m) = c.initial_data(&net).unwrap();
        assert!(m.iter().flatten().all(|&x| x == 0.0));
        let dx: Vec<f64> = net
            .edges()
            .iter()
            .map(|e| e.length / e.cells as f64)
            .collect();
        let refs: Vec<&[f64]> = rho.iter().map(Vec::as_slice).collect();
        total_mass(&refs, &dx)
    }

    #[test]
    fn interval_preset() {
        let c = preset_interval_riemann();
        c.validate().unwrap();
        let net = c.network().unwrap();
        assert_eq!(net.edges()[0].cells, 400);
        let (rho, _) = c.initial_data(&net).unwrap();
        assert_eq!(rho[0][100], 1.0); // x = 0.5025
        assert_eq!(rho[0][300], 0.0);
        assert!((initial_mass(&c) - 1.0).abs() < 1e-14);
        assert_eq!((c.t_end, c.velocities, c.snapshots), (0.2, 50, 50));
        assert_eq!(c.models.len(), 4);
        assert!(c.boundaries.is_empty());
        // halving the width keeps the Riemann data exact
        let mut fine = c.clone();
        fine.dx = Some(0.0025);
        assert!((initial_mass(&fine) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tripod_preset() {
        let c = preset_tripod();
        let net = c.validate().unwrap();
        assert_eq!(net.edges().len(), 3);
        assert_eq!(net.nodes()[0].degree(), 3);
        assert!(net
            .edges()
            .iter()
            .all(|e| (e.length / e.cells as f64 - 0.02).abs() < 1e-15));
        assert!((initial_mass(&c) - 6.0).abs() < 1e-13);
        assert_eq!(c.t_end, 0.3);
    }

    #[test]
    fn large_preset() {
        let c = preset_large_network();
        let net = c.validate().unwrap();
        assert_eq!((net.edges().len(), net.nodes().len()), (31, 23));
        assert_eq!(net.nodes().iter().map(|n| n.degree()).max(), Some(5));
        for e in net.edges() {
            let expected = match e.cells {
                15 => 0.5,
                30 => 1.0,
                42 => 2f64.sqrt(),
                n => panic!("unexpected cell count {n}"),
            };
            assert!((e.length - expected).abs() < 1e-15);
        }
        assert_eq!(c.boundaries.len(), 8);
        assert!(c
            .boundaries
            .iter()
            .all(|b| b.condition == BoundaryCondition::Inflow(1.0)));
        assert!((initial_mass(&c) - 4.0).abs() < 1e-13);
        assert_eq!(c.velocities, 20);
    }

    #[test]
    fn preset_lookup() {
        for name in PRESETS {
            assert_eq!(preset(name).unwrap().name, name);
        }
        assert!(matches!(preset("star"), Err(Error::Config(_))));
    }
}
