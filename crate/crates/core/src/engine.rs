//! Time stepping of one model on a whole network.
//!
//! One step of length `h`:
//! 1. chemoattractant: node balance, then the explicit step with the old ρ;
//! 2. flux-limited gradient m̄ from the new m;
//! 3. node solves supplying ghost states (or node fluxes for Keller-Segel),
//!    then transport on every edge;
//! 4. relaxation, with neighbour values across degree-2 nodes exchanged
//!    between the two phases;
//! 5. a finiteness check.
//!
//! Degree-2 nodes join their two edges into a continuous line: stencils in
//! the relaxation sources and in m̄ reach across them. Degree-1 nodes are
//! open ends with either a mirror (zero flux) or a prescribed inflow.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::{
    kinetic_coupling_matrix, kinetic_inflow_state, node_gradients, solve_node_chemo,
    solve_node_keller_segel, CattaneoCoupling, CharacteristicNodeSolver, KineticNodeSolver,
};
use crate::error::{Error, Result};
use crate::graph::{reflect, EdgeEnd, Incidence, Network};
use crate::hyperbolic::{cfl_dt, EdgeGrid, LinearHyperbolicSystem};
use crate::models::stencil::{flux_limited_gradient_with, Halo, Neighbor};
use crate::models::{
    cattaneo, chemo, half_moment, init_from_density, keller_segel, kinetic, ChemoEdgeState,
    EdgeModelState, ModelKind, ModelParams, VelocityGrid,
};

/// Condition at a degree-1 node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Reflecting end; no mass crosses it.
    #[default]
    Neumann,
    /// Cells enter with the equilibrium of the given density.
    Inflow(f64),
}

/// Everything needed to start a run.
#[derive(Clone, Debug)]
pub struct SimulationSetup {
    pub network: Network,
    pub kind: ModelKind,
    pub params: ModelParams,
    pub velocities: usize,
    pub cattaneo: CattaneoCoupling,
    /// Conditions at degree-1 nodes, by node index; unlisted ends are Neumann.
    pub boundaries: Vec<(usize, BoundaryCondition)>,
    pub cfl_safety: f64,
    /// Initial cell densities per edge.
    pub rho0: Vec<Vec<f64>>,
    /// Initial chemoattractant per edge.
    pub m0: Vec<Vec<f64>>,
}

enum Transport {
    Kinetic(kinetic::KineticTransport),
    Moment(LinearHyperbolicSystem),
    Parabolic,
}

enum Junction {
    Kinetic(KineticNodeSolver),
    Moment(CharacteristicNodeSolver),
    Parabolic,
}

enum NodeHandler {
    Open {
        at: Incidence,
        bc: BoundaryCondition,
        moment: Option<CharacteristicNodeSolver>,
    },
    Junction {
        edges: Vec<Incidence>,
        solver: Junction,
    },
}

/// The cell across a degree-2 node and its centre distance.
#[derive(Clone, Copy, Debug)]
struct Across {
    edge: usize,
    cell: usize,
    distance: f64,
}

pub struct Simulation {
    net: Network,
    kind: ModelKind,
    params: ModelParams,
    vgrid: VelocityGrid,
    cattaneo: CattaneoCoupling,
    dx: Vec<f64>,
    states: Vec<EdgeModelState>,
    chemo: Vec<ChemoEdgeState>,
    transport: Transport,
    nodes: Vec<NodeHandler>,
    across: Vec<[Option<Across>; 2]>,
    dt: f64,
    time: f64,
    steps: u64,
}

fn end_slot(end: EdgeEnd) -> usize {
    match end {
        EdgeEnd::Start => 0,
        EdgeEnd::End => 1,
    }
}

fn end_cell(cells: usize, end: EdgeEnd) -> usize {
    match end {
        EdgeEnd::Start => 0,
        EdgeEnd::End => cells - 1,
    }
}

impl Simulation {
    pub fn new(setup: SimulationSetup) -> Result<Self> {
        let SimulationSetup {
            network: net,
            kind,
            params,
            velocities,
            cattaneo,
            boundaries,
            cfl_safety,
            rho0,
            m0,
        } = setup;
        params.validate_phi(kind)?;
        let vgrid = VelocityGrid::new(velocities)?;
        let ne = net.edges().len();
        if ne == 0 {
            return Err(Error::EmptyInput("network has no edges"));
        }
        if rho0.len() != ne || m0.len() != ne {
            return Err(Error::DimensionMismatch(format!(
                "initial data for {} / {} edges, network has {ne}",
                rho0.len(),
                m0.len()
            )));
        }
        let mut dx = Vec::with_capacity(ne);
        let mut states = Vec::with_capacity(ne);
        let mut chemo_states = Vec::with_capacity(ne);
        for (e, edge) in net.edges().iter().enumerate() {
            let grid = EdgeGrid::new(edge.length, edge.cells)?;
            if rho0[e].len() != edge.cells || m0[e].len() != edge.cells {
                return Err(Error::DimensionMismatch(format!(
                    "edge {}: initial data must have {} cells",
                    edge.id, edge.cells
                )));
            }
            let state = init_from_density(&rho0[e], kind, &vgrid).map_err(|err| match err {
                Error::NegativeDensity { value, .. } => Error::NegativeDensity {
                    edge: edge.id,
                    value,
                },
                other => other,
            })?;
            dx.push(grid.dx);
            states.push(state);
            if m0[e].iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edge {}: non-finite chemoattractant",
                    edge.id
                )));
            }
            chemo_states.push(ChemoEdgeState { m: m0[e].clone() });
        }

        let transport = match kind {
            ModelKind::Kinetic => {
                Transport::Kinetic(kinetic::KineticTransport::new(&vgrid, params.phi)?)
            }
            ModelKind::Cattaneo => Transport::Moment(cattaneo::transport_system(params.phi)?),
            ModelKind::HalfMoment => Transport::Moment(half_moment::transport_system(params.phi)?),
            ModelKind::KellerSegel => Transport::Parabolic,
        };

        let mut bc_of = vec![None; net.nodes().len()];
        for &(node, bc) in &boundaries {
            let n = net.node(node)?;
            if n.degree() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "boundary condition on node {} of degree {}",
                    n.id,
                    n.degree()
                )));
            }
            if let BoundaryCondition::Inflow(rho) = bc {
                if !(rho >= 0.0 && rho.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "inflow density {rho} at node {}",
                        n.id
                    )));
                }
            }
            bc_of[node] = Some(bc);
        }

        let mut nodes = Vec::with_capacity(net.nodes().len());
        for (idx, node) in net.nodes().iter().enumerate() {
            let handler = if node.degree() == 1 {
                let bc = bc_of[idx].unwrap_or_default();
                let moment = match (&transport, bc) {
                    (Transport::Moment(sys), BoundaryCondition::Inflow(_)) => {
                        let eps = params.epsilon;
                        let g = match kind {
                            ModelKind::HalfMoment => DMatrix::from_row_slice(
                                2,
                                4,
                                &[1.0, 0.0, eps, 0.0, 0.0, eps, 0.0, 1.0],
                            ),
                            _ => DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                        };
                        Some(CharacteristicNodeSolver::new(sys, 1, g, node.id)?)
                    }
                    _ => None,
                };
                NodeHandler::Open {
                    at: node.incident[0],
                    bc,
                    moment,
                }
            } else {
                let a = kinetic_coupling_matrix(node.degree())?;
                let solver = match &transport {
                    Transport::Kinetic(_) => Junction::Kinetic(KineticNodeSolver::new(
                        &a,
                        params.epsilon,
                        params.phi,
                        node.id,
                    )?),
                    Transport::Moment(sys) => Junction::Moment(match kind {
                        ModelKind::HalfMoment => {
                            CharacteristicNodeSolver::half_moment(sys, &a, params.epsilon, node.id)?
                        }
                        _ => CharacteristicNodeSolver::cattaneo(
                            sys,
                            &cattaneo,
                            &a,
                            params.epsilon,
                            node.id,
                        )?,
                    }),
                    Transport::Parabolic => Junction::Parabolic,
                };
                NodeHandler::Junction {
                    edges: node.incident.clone(),
                    solver,
                }
            };
            nodes.push(handler);
        }

        let mut across = vec![[None, None]; ne];
        for (e, slots) in across.iter_mut().enumerate() {
            for end in [EdgeEnd::Start, EdgeEnd::End] {
                if let Some(other) = net.continuation(e, end) {
                    let cells = net.edges()[other.edge].cells;
                    slots[end_slot(end)] = Some(Across {
                        edge: other.edge,
                        cell: end_cell(cells, other.end),
                        distance: 0.5 * (dx[e] + dx[other.edge]),
                    });
                }
            }
        }

        let dt = stable_dt(kind, &params, &transport, &dx, cfl_safety)?;
        Ok(Simulation {
            net,
            kind,
            params,
            vgrid,
            cattaneo,
            dx,
            states,
            chemo: chemo_states,
            transport,
            nodes,
            across,
            dt,
            time: 0.0,
            steps: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cattaneo_coupling(&self) -> &CattaneoCoupling {
        &self.cattaneo
    }

    pub fn velocity_grid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    /// The global time step.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn cell_width(&self, edge: usize) -> f64 {
        self.dx[edge]
    }

    pub fn edge_state(&self, edge: usize) -> &EdgeModelState {
        &self.states[edge]
    }

    pub fn chemoattractant(&self, edge: usize) -> &[f64] {
        &self.chemo[edge].m
    }

    pub fn density(&self, edge: usize) -> Vec<f64> {
        self.states[edge].density(&self.vgrid)
    }

    pub fn densities(&self) -> Vec<Vec<f64>> {
        (0..self.states.len()).map(|e| self.density(e)).collect()
    }

    /// `Σ_edges Σ_cells ρ_i Δx`.
    pub fn total_mass(&self) -> f64 {
        (0..self.states.len())
            .map(|e| self.density(e).iter().sum::<f64>() * self.dx[e])
            .sum()
    }

    /// Smallest `f± = r ± εj` over the network (kinetic model only).
    pub fn min_kinetic_distribution(&self) -> Option<f64> {
        let eps = self.params.epsilon;
        self.states
            .iter()
            .map(|s| match s {
                EdgeModelState::Kinetic(k) => Some(k.min_distribution(eps)),
                _ => None,
            })
            .try_fold(f64::INFINITY, |m, x| x.map(|x| m.min(x)))
    }

    /// One step of the global length `dt`.
    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.dt)
    }

    /// Step until `t`, shortening the last step to land on it exactly.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("target time {t}")));
        }
        while self.time < t {
            let rest = t - self.time;
            if rest <= self.dt * (1.0 + 1e-10) {
                self.step_by(rest)?;
                self.time = t;
            } else {
                self.step_by(self.dt)?;
            }
        }
        Ok(())
    }

    fn step_by(&mut self, h: f64) -> Result<()> {
        if !(h > 0.0 && h <= self.dt * (1.0 + 1e-10)) {
            return Err(Error::InvalidParameter(format!(
                "step {h} outside (0, {}]",
                self.dt
            )));
        }
        let rho = self.densities();
        self.chemo_step(&rho, h)?;
        let mbar = self.limited_gradients();
        match self.kind {
            ModelKind::KellerSegel => self.keller_segel_step(&mbar, h)?,
            _ => {
                self.transport_step(h)?;
                self.relax(&mbar, h);
            }
        }
        self.time += h;
        self.steps += 1;
        for (e, (s, c)) in self.states.iter().zip(&self.chemo).enumerate() {
            if !s.all_finite() || c.m.iter().any(|m| !m.is_finite()) {
                return Err(Error::Unstable {
                    step: self.steps,
                    time: self.time,
                    edge: self.net.edges()[e].id,
                });
            }
        }
        Ok(())
    }

    /// Physical flux through each end face, from node balances of the
    /// first-cell values `value(edge, cell)`. `node_flux` maps a junction's
    /// first values and widths to local-frame fluxes into each edge.
    fn end_fluxes(
        &self,
        value: impl Fn(usize, usize) -> f64,
        mut node_flux: impl FnMut(&[Incidence], &[f64], &[f64]) -> Result<Vec<f64>>,
        mut open_flux: impl FnMut(Incidence, BoundaryCondition, f64, f64) -> f64,
    ) -> Result<Vec<[f64; 2]>> {
        let mut fluxes = vec![[0.0; 2]; self.states.len()];
        for handler in &self.nodes {
            match handler {
                NodeHandler::Open { at, bc, .. } => {
                    let cell = end_cell(self.net.edges()[at.edge].cells, at.end);
                    let local = open_flux(*at, *bc, value(at.edge, cell), self.dx[at.edge]);
                    fluxes[at.edge][end_slot(at.end)] = at.end.sign() * local;
                }
                NodeHandler::Junction { edges, .. } => {
                    let first: Vec<f64> = edges
                        .iter()
                        .map(|i| value(i.edge, end_cell(self.net.edges()[i.edge].cells, i.end)))
                        .collect();
                    let widths: Vec<f64> = edges.iter().map(|i| self.dx[i.edge]).collect();
                    let local = node_flux(edges, &first, &widths)?;
                    for (i, f) in edges.iter().zip(local) {
                        fluxes[i.edge][end_slot(i.end)] = i.end.sign() * f;
                    }
                }
            }
        }
        Ok(fluxes)
    }

    fn chemo_step(&mut self, rho: &[Vec<f64>], h: f64) -> Result<()> {
        let d = self.params.diffusivity;
        let chemo = &self.chemo;
        let fluxes = self.end_fluxes(
            |e, i| chemo[e].m[i],
            |_, first, widths| Ok(solve_node_chemo(first, widths, d)?.fluxes),
            |_, _, _, _| 0.0,
        )?;
        for (e, c) in self.chemo.iter_mut().enumerate() {
            chemo::chemo_step(c, &rho[e], &self.params, h, self.dx[e], fluxes[e])?;
        }
        Ok(())
    }

    fn halo(&self, e: usize, value: impl Fn(usize, usize) -> f64) -> Halo {
        let pick = |a: Option<Across>| {
            a.map(|a| Neighbor {
                value: value(a.edge, a.cell),
                distance: a.distance,
            })
        };
        Halo {
            left: pick(self.across[e][0]),
            right: pick(self.across[e][1]),
        }
    }

    fn limited_gradients(&self) -> Vec<Vec<f64>> {
        (0..self.chemo.len())
            .map(|e| {
                let halo = self.halo(e, |e2, i| self.chemo[e2].m[i]);
                flux_limited_gradient_with(&self.chemo[e].m, self.dx[e], halo)
            })
            .collect()
    }

    fn keller_segel_step(&mut self, mbar: &[Vec<f64>], h: f64) -> Result<()> {
        let (lambda, alpha) = (self.params.lambda, self.params.alpha);
        let c = keller_segel::diffusivity(&self.params);
        let d = self.params.diffusivity;
        let rho: Vec<&[f64]> = self
            .states
            .iter()
            .map(|s| match s {
                EdgeModelState::KellerSegel(k) => k.rho.as_slice(),
                _ => unreachable!("Keller-Segel step on a hyperbolic state"),
            })
            .collect();
        let chemo = &self.chemo;
        let net = &self.net;
        let fluxes = self.end_fluxes(
            |e, i| rho[e][i],
            |edges, first, widths| {
                if let [a, b] = edges {
                    // an interior face of the line running from edge a into b
                    let ca = end_cell(net.edges()[a.edge].cells, a.end);
                    let cb = end_cell(net.edges()[b.edge].cells, b.end);
                    let m_face =
                        0.5 * (-a.end.sign() * mbar[a.edge][ca] + b.end.sign() * mbar[b.edge][cb]);
                    let dist = 0.5 * (widths[0] + widths[1]);
                    let f = keller_segel::face_flux(&self.params, first[0], first[1], m_face, dist);
                    return Ok(vec![-f, f]);
                }
                let m_first: Vec<f64> = edges
                    .iter()
                    .map(|i| chemo[i.edge].m[end_cell(net.edges()[i.edge].cells, i.end)])
                    .collect();
                let m_star = solve_node_chemo(&m_first, widths, d)?.value;
                let g = node_gradients(&m_first, widths, m_star);
                let node = net.edges()[edges[0].edge].node_at(edges[0].end);
                Ok(solve_node_keller_segel(first, &g, widths, lambda, alpha, node)?.fluxes)
            },
            |_, bc, first, width| match bc {
                BoundaryCondition::Neumann => 0.0,
                // m is reflected at open ends, so the drift vanishes there
                BoundaryCondition::Inflow(rho_b) => -c * (first - rho_b) * 2.0 / width,
            },
        )?;
        for (e, s) in self.states.iter_mut().enumerate() {
            if let EdgeModelState::KellerSegel(k) = s {
                keller_segel::keller_segel_step(
                    k,
                    &mbar[e],
                    &self.params,
                    h,
                    self.dx[e],
                    fluxes[e],
                )?;
            }
        }
        Ok(())
    }

    /// Physical state of the cell at an edge end, flattened (kinetic: one
    /// `(r, j)` pair per velocity).
    fn trace(&self, at: Incidence) -> Vec<f64> {
        let i = end_cell(self.net.edges()[at.edge].cells, at.end);
        match &self.states[at.edge] {
            EdgeModelState::Kinetic(s) => {
                (0..s.velocity_count()).flat_map(|k| s.pair(k, i)).collect()
            }
            EdgeModelState::Cattaneo(s) => s.cell(i).to_vec(),
            EdgeModelState::HalfMoment(s) => s.cell(i).to_vec(),
            EdgeModelState::KellerSegel(s) => vec![s.rho[i]],
        }
    }

    fn parity(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::Kinetic => kinetic::PARITY.repeat(self.vgrid.count()),
            ModelKind::Cattaneo => cattaneo::PARITY.to_vec(),
            ModelKind::HalfMoment => half_moment::PARITY.to_vec(),
            ModelKind::KellerSegel => vec![1.0],
        }
    }

    /// Ghost states beyond every edge end, in the physical frame.
    fn ghosts(&self) -> Result<Vec<[Vec<f64>; 2]>> {
        let parity = self.parity();
        let to_local = |at: Incidence, mut u: Vec<f64>| {
            if at.end == EdgeEnd::End {
                reflect(&mut u, &parity);
            }
            u
        };
        let mut ghosts = vec![[Vec::new(), Vec::new()]; self.states.len()];
        for handler in &self.nodes {
            match handler {
                NodeHandler::Open { at, bc, moment } => {
                    let trace = self.trace(*at);
                    let ghost = match bc {
                        BoundaryCondition::Neumann => {
                            let mut g = trace;
                            reflect(&mut g, &parity);
                            g
                        }
                        BoundaryCondition::Inflow(rho_b) => {
                            let local = to_local(*at, trace);
                            let state = match (self.kind, moment) {
                                (ModelKind::Kinetic, _) => local
                                    .chunks(2)
                                    .flat_map(|p| {
                                        kinetic_inflow_state(
                                            [p[0], p[1]],
                                            0.5 * rho_b,
                                            self.params.epsilon,
                                            self.params.phi,
                                        )
                                    })
                                    .collect(),
                                (ModelKind::HalfMoment, Some(s)) => {
                                    s.solve_affine(&local, Some(&[*rho_b, 0.5 * rho_b]))?
                                }
                                (_, Some(s)) => s.solve_affine(&local, Some(&[*rho_b]))?,
                                (_, None) => unreachable!("inflow without a boundary solver"),
                            };
                            to_local(*at, state)
                        }
                    };
                    ghosts[at.edge][end_slot(at.end)] = ghost;
                }
                NodeHandler::Junction { edges, solver } => {
                    let locals: Vec<Vec<f64>> = edges
                        .iter()
                        .map(|&at| to_local(at, self.trace(at)))
                        .collect();
                    let states: Vec<Vec<f64>> = match solver {
                        Junction::Kinetic(s) => {
                            let pairs: Vec<Vec<[f64; 2]>> = locals
                                .iter()
                                .map(|u| u.chunks(2).map(|p| [p[0], p[1]]).collect())
                                .collect();
                            let refs: Vec<&[[f64; 2]]> =
                                pairs.iter().map(|p| p.as_slice()).collect();
                            s.solve(&refs)?
                                .into_iter()
                                .map(|v| v.into_iter().flatten().collect())
                                .collect()
                        }
                        Junction::Moment(s) => {
                            let flat: Vec<f64> = locals.concat();
                            let dim = locals[0].len();
                            s.solve(&flat)?.chunks(dim).map(<[f64]>::to_vec).collect()
                        }
                        Junction::Parabolic => unreachable!("parabolic junction in transport"),
                    };
                    for (&at, state) in edges.iter().zip(states) {
                        ghosts[at.edge][end_slot(at.end)] = to_local(at, state);
                    }
                }
            }
        }
        Ok(ghosts)
    }

    fn transport_step(&mut self, h: f64) -> Result<()> {
        let ghosts = self.ghosts()?;
        for (e, s) in self.states.iter_mut().enumerate() {
            let [left, right] = &ghosts[e];
            let dx = self.dx[e];
            match (s, &self.transport) {
                (EdgeModelState::Kinetic(k), Transport::Kinetic(tr)) => {
                    let pairs = |g: &[f64]| -> Vec<[f64; 2]> {
                        g.chunks(2).map(|p| [p[0], p[1]]).collect()
                    };
                    kinetic::kinetic_transport(k, tr, h, dx, &pairs(left), &pairs(right))?;
                }
                (EdgeModelState::Cattaneo(p), Transport::Moment(sys)) => {
                    cattaneo::p1_transport(
                        p,
                        sys,
                        h,
                        dx,
                        [left[0], left[1]],
                        [right[0], right[1]],
                    )?;
                }
                (EdgeModelState::HalfMoment(m), Transport::Moment(sys)) => {
                    let l = [left[0], left[1], left[2], left[3]];
                    let r = [right[0], right[1], right[2], right[3]];
                    half_moment::hm_transport(m, sys, h, dx, l, r)?;
                }
                _ => unreachable!("state and transport kinds disagree"),
            }
        }
        Ok(())
    }

    fn relax(&mut self, mbar: &[Vec<f64>], h: f64) {
        let ne = self.states.len();
        match self.kind {
            ModelKind::Kinetic => {
                let mut rhos = Vec::with_capacity(ne);
                for s in &mut self.states {
                    if let EdgeModelState::Kinetic(k) = s {
                        rhos.push(kinetic::relax_even(k, &self.params, &self.vgrid, h));
                    }
                }
                let nv = self.vgrid.count();
                let halos: Vec<Vec<Halo>> = (0..ne)
                    .map(|e| {
                        (0..nv)
                            .map(|k| {
                                self.halo(e, |e2, i| match &self.states[e2] {
                                    EdgeModelState::Kinetic(s) => s.r_row(k)[i],
                                    _ => unreachable!(),
                                })
                            })
                            .collect()
                    })
                    .collect();
                for (e, s) in self.states.iter_mut().enumerate() {
                    if let EdgeModelState::Kinetic(k) = s {
                        kinetic::relax_odd(
                            k,
                            &rhos[e],
                            &mbar[e],
                            &self.params,
                            &self.vgrid,
                            h,
                            self.dx[e],
                            &halos[e],
                        );
                    }
                }
            }
            ModelKind::Cattaneo => {
                let halos: Vec<Halo> = (0..ne)
                    .map(|e| {
                        self.halo(e, |e2, i| match &self.states[e2] {
                            EdgeModelState::Cattaneo(s) => s.rho[i],
                            _ => unreachable!(),
                        })
                    })
                    .collect();
                for (e, s) in self.states.iter_mut().enumerate() {
                    if let EdgeModelState::Cattaneo(p) = s {
                        cattaneo::p1_relax(p, &mbar[e], &self.params, h, self.dx[e], halos[e]);
                    }
                }
            }
            ModelKind::HalfMoment => {
                for s in &mut self.states {
                    if let EdgeModelState::HalfMoment(m) = s {
                        half_moment::relax_q_hat(m, &self.params, h);
                    }
                }
                let hm = |e2: usize| match &self.states[e2] {
                    EdgeModelState::HalfMoment(s) => s,
                    _ => unreachable!(),
                };
                let halos: Vec<[Halo; 2]> = (0..ne)
                    .map(|e| {
                        [
                            self.halo(e, |e2, i| hm(e2).q_hat[i]),
                            self.halo(e, |e2, i| -hm(e2).rho[i] + 6.0 * hm(e2).q_hat[i]),
                        ]
                    })
                    .collect();
                for (e, s) in self.states.iter_mut().enumerate() {
                    if let EdgeModelState::HalfMoment(m) = s {
                        half_moment::relax_fluxes(
                            m,
                            &mbar[e],
                            &self.params,
                            h,
                            self.dx[e],
                            halos[e],
                        );
                    }
                }
            }
            ModelKind::KellerSegel => {}
        }
    }
}

/// Global step from transport speeds, the chemoattractant diffusivity and,
/// for Keller-Segel, its diffusion and drift.
fn stable_dt(
    kind: ModelKind,
    params: &ModelParams,
    transport: &Transport,
    dx: &[f64],
    safety: f64,
) -> Result<f64> {
    let grids: Vec<EdgeGrid> = dx.iter().map(|&dx| EdgeGrid { cells: 1, dx }).collect();
    let systems: Vec<&LinearHyperbolicSystem> = match transport {
        Transport::Kinetic(tr) => vec![tr.fastest()],
        Transport::Moment(sys) => vec![sys],
        Transport::Parabolic => Vec::new(),
    };
    let mut coeffs = vec![params.diffusivity];
    if kind == ModelKind::KellerSegel {
        coeffs.push(keller_segel::diffusivity(params));
    }
    let mut dt = cfl_dt(&systems, &grids, &coeffs, safety)?;
    if kind == ModelKind::KellerSegel && params.alpha > 0.0 {
        let speed = params.alpha * keller_segel::diffusivity(params);
        let dx_min = dx.iter().copied().fold(f64::INFINITY, f64::min);
        dt = dt.min(safety * dx_min / speed);
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSpec;
    use crate::models::PhysicalParams;

    fn setup(
        net: Network,
        kind: ModelKind,
        eps: f64,
        rho0: Vec<Vec<f64>>,
        physical: PhysicalParams,
    ) -> SimulationSetup {
        let m0 = rho0.iter().map(|r| vec![0.0; r.len()]).collect();
        SimulationSetup {
            network: net,
            kind,
            params: ModelParams::new(kind, physical, eps, None).unwrap(),
            velocities: 8,
            cattaneo: CattaneoCoupling::default(),
            boundaries: Vec::new(),
            cfl_safety: 0.9,
            rho0,
            m0,
        }
    }

    fn tripod(cells: usize) -> Network {
        let edges: Vec<EdgeSpec> = (0..3)
            .map(|e| EdgeSpec {
                id: e,
                from: 0,
                to: e + 1,
                length: 1.0,
                cells,
            })
            .collect();
        Network::new(&[0, 1, 2, 3], &edges).unwrap()
    }

    fn tripod_data(cells: usize) -> Vec<Vec<f64>> {
        (0..3).map(|e| vec![(e + 1) as f64; cells]).collect()
    }

    #[test]
    fn zero_data_stays_zero() {
        for kind in ModelKind::ALL {
            let s = setup(
                tripod(10),
                kind,
                0.5,
                vec![vec![0.0; 10]; 3],
                Default::default(),
            );
            let mut sim = Simulation::new(s).unwrap();
            sim.advance_to(0.05).unwrap();
            for e in 0..3 {
                assert!(sim.density(e).iter().all(|&r| r == 0.0), "{kind}");
                assert!(sim.chemoattractant(e).iter().all(|&m| m == 0.0));
            }
        }
    }

    #[test]
    fn tripod_mass_is_conserved() {
        for kind in ModelKind::ALL {
            for eps in [1.0, 0.1] {
                let s = setup(tripod(20), kind, eps, tripod_data(20), Default::default());
                let mut sim = Simulation::new(s).unwrap();
                let m0 = sim.total_mass();
                assert!((m0 - 6.0).abs() < 1e-13);
                sim.advance_to(0.1).unwrap();
                assert!((sim.total_mass() - m0).abs() <= 1e-12 * m0, "{kind} {eps}");
            }
        }
    }

    #[test]
    fn advance_to_lands_on_target() {
        let s = setup(
            tripod(10),
            ModelKind::Cattaneo,
            0.5,
            tripod_data(10),
            Default::default(),
        );
        let mut sim = Simulation::new(s).unwrap();
        let dt = sim.dt();
        sim.advance_to(3.5 * dt).unwrap();
        assert_eq!(sim.time(), 3.5 * dt);
        assert_eq!(sim.steps(), 4);
        sim.advance_to(3.5 * dt).unwrap();
        assert_eq!(sim.steps(), 4);
    }

    fn riemann(cells: usize) -> Vec<f64> {
        (0..cells)
            .map(|i| if 2 * i < cells { 1.0 } else { 0.0 })
            .collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    // two unit edges through a degree-2 node reproduce the interval [0, 2]
    fn check_one_to_one(kind: ModelKind, reversed: bool) {
        let n = 40;
        let line = Network::new(
            &[0, 1],
            &[EdgeSpec {
                id: 0,
                from: 0,
                to: 1,
                length: 2.0,
                cells: 2 * n,
            }],
        )
        .unwrap();
        let second = if reversed {
            EdgeSpec {
                id: 1,
                from: 2,
                to: 1,
                length: 1.0,
                cells: n,
            }
        } else {
            EdgeSpec {
                id: 1,
                from: 1,
                to: 2,
                length: 1.0,
                cells: n,
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
                    cells: n,
                },
                second,
            ],
        )
        .unwrap();
        let rho = riemann(2 * n);
        let mut right = rho[n..].to_vec();
        if reversed {
            right.reverse();
        }
        let physical = PhysicalParams::default();
        let mut a = Simulation::new(setup(line, kind, 0.5, vec![rho.clone()], physical)).unwrap();
        let mut b = Simulation::new(setup(
            split,
            kind,
            0.5,
            vec![rho[..n].to_vec(), right],
            physical,
        ))
        .unwrap();
        assert_eq!(a.dt(), b.dt());
        a.advance_to(0.1).unwrap();
        b.advance_to(0.1).unwrap();
        let whole = a.density(0);
        let mut tail = b.density(1);
        let mut m_tail = b.chemoattractant(1).to_vec();
        if reversed {
            tail.reverse();
            m_tail.reverse();
        }
        let d = max_diff(&whole[..n], &b.density(0)).max(max_diff(&whole[n..], &tail));
        assert!(d <= 1e-12, "{kind} reversed={reversed}: {d}");
        let m = a.chemoattractant(0);
        let dm = max_diff(&m[..n], b.chemoattractant(0)).max(max_diff(&m[n..], &m_tail));
        assert!(dm <= 1e-12, "{kind} chemo: {dm}");
    }

    #[test]
    fn one_to_one_matches_interval() {
        for kind in ModelKind::ALL {
            check_one_to_one(kind, false);
            check_one_to_one(kind, true);
        }
    }

    #[test]
    fn inflow_adds_mass() {
        let net = Network::new(
            &[0, 1],
            &[EdgeSpec {
                id: 0,
                from: 0,
                to: 1,
                length: 1.0,
                cells: 20,
            }],
        )
        .unwrap();
        for kind in ModelKind::ALL {
            let mut s = setup(
                net.clone(),
                kind,
                0.5,
                vec![vec![0.0; 20]],
                Default::default(),
            );
            s.boundaries = vec![(0, BoundaryCondition::Inflow(1.0))];
            let mut sim = Simulation::new(s).unwrap();
            sim.advance_to(0.2).unwrap();
            let rho = sim.density(0);
            assert!(sim.total_mass() > 0.0, "{kind}");
            assert!(rho[0] > rho[19], "{kind}");
            assert!(
                rho.iter().all(|&r| (-1e-12..=1.0 + 1e-12).contains(&r)),
                "{kind} {rho:?}"
            );
        }
    }

    #[test]
    fn boundary_on_junction_is_rejected() {
        let mut s = setup(
            tripod(5),
            ModelKind::Kinetic,
            1.0,
            tripod_data(5),
            Default::default(),
        );
        s.boundaries = vec![(0, BoundaryCondition::Inflow(1.0))];
        assert!(matches!(
            Simulation::new(s),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn kinetic_tripod_stays_nonnegative() {
        let physical = PhysicalParams::default();
        let s = setup(
            tripod(20),
            ModelKind::Kinetic,
            1.0,
            tripod_data(20),
            physical,
        );
        let mut sim = Simulation::new(s).unwrap();
        for _ in 0..50 {
            sim.step().unwrap();
            assert!(sim.min_kinetic_distribution().unwrap() >= -1e-13);
        }
    }
}
