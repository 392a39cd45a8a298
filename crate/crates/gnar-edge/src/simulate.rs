//! Random-graph generators, innovation models and the process simulator,
//! plus the named simulation regimes used by the experiment harness.
//!
//! Everything here is deterministic per seed: generators consume draws in
//! documented order (latent node variables first, then ordered pairs
//! lexicographically; the simulator draws sampler state, then the initial
//! columns time-major, then one innovation column per generated time point).

use std::sync::Arc;

use ndarray::{s, Array2};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnar::{GnarCoefficients, GnarEdgeSpec};
use crate::graph::{DirectedGraph, EdgeNeighborhoods};
use crate::panel::EdgePanel;

/// Absolute value beyond which a simulated series counts as overflowed.
const OVERFLOW_LIMIT: f64 = 1e12;

/// Graph family selector for the standard 20-node recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModel {
    Er,
    Sbm,
    Rdp,
}

/// Uniform G(n, m): exactly `m` distinct directed edges sampled without
/// replacement from the ordered-pair slots.
pub fn gen_er_m(n: usize, m: usize, self_loops: bool, seed: u64) -> Result<DirectedGraph> {
    let slots = if self_loops { n * n } else { n.saturating_mul(n.saturating_sub(1)) };
    if m > slots {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("{m} edges requested but only {slots} slots exist"),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..slots).collect();
    for i in 0..m {
        let j = rng.gen_range(i..slots);
        ids.swap(i, j);
    }
    let edges = ids[..m].iter().map(|&sid| decode_slot(sid, n, self_loops)).collect();
    DirectedGraph::new(n, edges)
}

fn decode_slot(slot: usize, n: usize, self_loops: bool) -> (u32, u32) {
    if self_loops {
        ((slot / n) as u32, (slot % n) as u32)
    } else {
        let i = slot / (n - 1);
        let j0 = slot % (n - 1);
        let j = j0 + usize::from(j0 >= i);
        (i as u32, j as u32)
    }
}

/// Independent-coin G(n, p) over ordered pairs in lexicographic order.
pub fn gen_er_p(n: usize, p: f64, self_loops: bool, seed: u64) -> Result<DirectedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter { name: "p", reason: format!("{p} outside [0, 1]") });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            if i == j && !self_loops {
                continue;
            }
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Stochastic block model: nodes take blocks in order (`block_sizes[0]`
/// nodes in block 0, and so on) and each ordered pair draws independently
/// with probability `probs[block(i)][block(j)]`.
pub fn gen_sbm(block_sizes: &[usize], probs: &[Vec<f64>], self_loops: bool, seed: u64) -> Result<DirectedGraph> {
    let b = block_sizes.len();
    if b == 0 {
        return Err(Error::InvalidParameter { name: "block_sizes", reason: "no blocks".into() });
    }
    if probs.len() != b || probs.iter().any(|row| row.len() != b) {
        return Err(Error::InvalidParameter {
            name: "probs",
            reason: format!("need a {b} x {b} matrix"),
        });
    }
    if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidParameter { name: "probs", reason: "entries outside [0, 1]".into() });
    }
    let n: usize = block_sizes.iter().sum();
    let mut block = Vec::with_capacity(n);
    for (idx, &size) in block_sizes.iter().enumerate() {
        block.extend(std::iter::repeat(idx).take(size));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j && !self_loops {
                continue;
            }
            if rng.gen_bool(probs[block[i]][block[j]]) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Random dot product graph on the quarter circle: latent positions
/// `x_i = radius * (cos t_i, sin t_i)` with angles uniform on `[0, pi/2]`,
/// and each ordered pair `(i, j)`, `i != j`, draws an edge with probability
/// `<x_i, x_j> = radius^2 cos(t_i - t_j)`, which the quarter-circle
/// restriction keeps in `[0, radius^2]`.
pub fn gen_rdp(n: usize, radius: f64, seed: u64) -> Result<DirectedGraph> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::InvalidParameter { name: "radius", reason: format!("{radius} outside (0, 1]") });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * std::f64::consts::FRAC_PI_2).collect();
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = r2 * (theta[i] - theta[j]).cos();
            if rng.gen_bool(p) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Reproducible graph construction recipe, serialisable into regime
/// manifests. Recipes never place self loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphRecipe {
    ErdosRenyiEdges { n: usize, m: usize },
    ErdosRenyiProb { n: usize, p: f64 },
    StochasticBlock { block_sizes: Vec<usize>, probs: Vec<Vec<f64>> },
    RandomDotProduct { n: usize, radius: f64 },
}

impl GraphRecipe {
    /// G(n, m) recipe with `m` chosen to hit a target density on the
    /// loop-free slot count.
    pub fn er_density(n: usize, density: f64) -> Self {
        let m = (density * (n * (n - 1)) as f64).round() as usize;
        GraphRecipe::ErdosRenyiEdges { n, m }
    }

    pub fn generate(&self, seed: u64) -> Result<DirectedGraph> {
        match self {
            GraphRecipe::ErdosRenyiEdges { n, m } => gen_er_m(*n, *m, false, seed),
            GraphRecipe::ErdosRenyiProb { n, p } => gen_er_p(*n, *p, false, seed),
            GraphRecipe::StochasticBlock { block_sizes, probs } => gen_sbm(block_sizes, probs, false, seed),
            GraphRecipe::RandomDotProduct { n, radius } => gen_rdp(*n, *radius, seed),
        }
    }
}

/// The 20-node graph setups used by the moderate regimes.
pub fn standard_recipe(model: GraphModel) -> GraphRecipe {
    match model {
        GraphModel::Er => GraphRecipe::ErdosRenyiEdges { n: 20, m: 168 },
        GraphModel::Sbm => GraphRecipe::StochasticBlock {
            block_sizes: vec![10, 10],
            probs: vec![vec![0.7, 0.1], vec![0.2, 0.7]],
        },
        GraphModel::Rdp => GraphRecipe::RandomDotProduct { n: 20, radius: 0.7 },
    }
}

/// Innovation distribution for the simulator.
///
/// `TimeEquicorrelated` gives each edge a Gaussian vector over time with
/// pairwise correlation `rho` between any two time points, independent
/// across edges, via the shared-factor form
/// `u_e(t) = sigma (sqrt(rho) z_e + sqrt(1 - rho) z_{e,t})`.
/// `EdgeEquicorrelated` applies the same construction across edges within
/// each time point instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InnovationModel {
    /// i.i.d. N(0, sigma^2); `sigma = 0` is the degenerate noiseless case.
    Gaussian { sigma: f64 },
    /// i.i.d. Student t with `df` degrees of freedom, used raw (variance
    /// df / (df - 2)) unless `rescale` divides it back to unit variance.
    StudentT { df: f64, rescale: bool },
    TimeEquicorrelated { rho: f64, sigma: f64 },
    EdgeEquicorrelated { rho: f64, sigma: f64 },
}

impl Default for InnovationModel {
    fn default() -> Self {
        InnovationModel::Gaussian { sigma: 1.0 }
    }
}

impl InnovationModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationModel::Gaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter { name: "sigma", reason: format!("{sigma} is not a finite value >= 0") });
                }
            }
            InnovationModel::StudentT { df, .. } => {
                if !(df > 2.0) {
                    return Err(Error::InvalidParameter { name: "df", reason: format!("{df} must exceed 2") });
                }
            }
            InnovationModel::TimeEquicorrelated { rho, sigma }
            | InnovationModel::EdgeEquicorrelated { rho, sigma } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::InvalidParameter { name: "rho", reason: format!("{rho} outside [0, 1)") });
                }
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter { name: "sigma", reason: format!("{sigma} is not a finite value >= 0") });
                }
            }
        }
        Ok(())
    }
}

enum SamplerState {
    Gaussian { sigma: f64 },
    StudentT { dist: StudentT<f64>, scale: f64 },
    TimeEquicorrelated { shared: Vec<f64>, idio: f64, sigma: f64 },
    EdgeEquicorrelated { shared_w: f64, idio: f64, sigma: f64 },
}

impl SamplerState {
    fn new(model: &InnovationModel, k: usize, rng: &mut ChaCha12Rng) -> Result<Self> {
        model.validate()?;
        Ok(match *model {
            InnovationModel::Gaussian { sigma } => SamplerState::Gaussian { sigma },
            InnovationModel::StudentT { df, rescale } => SamplerState::StudentT {
                dist: StudentT::new(df)
                    .map_err(|e| Error::InvalidParameter { name: "df", reason: e.to_string() })?,
                scale: if rescale { ((df - 2.0) / df).sqrt() } else { 1.0 },
            },
            InnovationModel::TimeEquicorrelated { rho, sigma } => {
                let shared: Vec<f64> = (0..k)
                    .map(|_| rho.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                SamplerState::TimeEquicorrelated { shared, idio: (1.0 - rho).sqrt(), sigma }
            }
            InnovationModel::EdgeEquicorrelated { rho, sigma } => {
                SamplerState::EdgeEquicorrelated { shared_w: rho.sqrt(), idio: (1.0 - rho).sqrt(), sigma }
            }
        })
    }

    fn fill_column(&self, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        match self {
            SamplerState::Gaussian { sigma } => {
                for u in out.iter_mut() {
                    *u = sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            SamplerState::StudentT { dist, scale } => {
                for u in out.iter_mut() {
                    *u = scale * dist.sample(rng);
                }
            }
            SamplerState::TimeEquicorrelated { shared, idio, sigma } => {
                for (u, z0) in out.iter_mut().zip(shared) {
                    *u = sigma * (z0 + idio * rng.sample::<f64, _>(StandardNormal));
                }
            }
            SamplerState::EdgeEquicorrelated { shared_w, idio, sigma } => {
                let z0: f64 = rng.sample(StandardNormal);
                for u in out.iter_mut() {
                    *u = sigma * (shared_w * z0 + idio * rng.sample::<f64, _>(StandardNormal));
                }
            }
        }
    }
}

/// Simulates the process on a fixed graph. The first `max_lag` columns are
/// i.i.d. standard normal, later columns follow the model recursion plus
/// innovations; `burn_in` extra leading columns are generated and dropped.
/// Any value beyond 1e12 in magnitude aborts with the first offending time
/// index (relative to the returned panel).
pub fn simulate_gnar_edge(
    graph: &Arc<DirectedGraph>,
    spec: &GnarEdgeSpec,
    coeffs: &GnarCoefficients,
    t_len: usize,
    innovation: &InnovationModel,
    burn_in: usize,
    seed: u64,
) -> Result<EdgePanel> {
    spec.validate()?;
    let k = graph.edge_count();
    coeffs.conforms_to(spec, k)?;
    let lag = spec.max_lag;
    if t_len <= lag {
        return Err(Error::SeriesTooShort { t: t_len, min: lag + 1 });
    }
    let neigh = EdgeNeighborhoods::build(graph, spec.max_stage());
    let total = burn_in + t_len;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sampler = SamplerState::new(innovation, k, &mut rng)?;

    let mut values = Array2::zeros((k, total));
    for t in 0..lag {
        for e in 0..k {
            values[(e, t)] = rng.sample::<f64, _>(StandardNormal);
        }
    }

    let max_stage = spec.max_stage();
    let mut averages: Vec<Array2<f64>> = (0..max_stage).map(|_| Array2::zeros((k, total))).collect();
    let mut col = vec![0.0; k];
    let fill_averages = |values: &Array2<f64>, averages: &mut Vec<Array2<f64>>, col: &mut Vec<f64>, t: usize| {
        for (e, slot) in col.iter_mut().enumerate() {
            *slot = values[(e, t)];
        }
        for r in 1..=max_stage {
            for e in 0..k {
                averages[r - 1][(e, t)] = neigh.stage_average(r, e as u32, col);
            }
        }
    };
    for t in 0..lag {
        fill_averages(&values, &mut averages, &mut col, t);
    }

    let mut noise = vec![0.0; k];
    for t in lag..total {
        sampler.fill_column(&mut rng, &mut noise);
        for e in 0..k {
            let mut v = coeffs.intercept + noise[e];
            for l in 1..=lag {
                v += coeffs.alphas.get(e, l - 1) * values[(e, t - l)];
                for r in 1..=spec.neighbor_stages[l - 1] {
                    v += coeffs.betas[l - 1][r - 1] * averages[r - 1][(e, t - l)];
                }
            }
            if !v.is_finite() || v.abs() > OVERFLOW_LIMIT {
                return Err(Error::SimulationOverflow { t: t.saturating_sub(burn_in) });
            }
            values[(e, t)] = v;
        }
        fill_averages(&values, &mut averages, &mut col, t);
    }

    let out = if burn_in == 0 { values } else { values.slice(s![.., burn_in..]).to_owned() };
    EdgePanel::new(Arc::clone(graph), out, None)
}

/// A named, fully specified simulation setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRegime {
    pub name: String,
    pub spec: GnarEdgeSpec,
    pub coefficients: GnarCoefficients,
    pub t_len: usize,
    pub graph: GraphRecipe,
    pub innovation: InnovationModel,
    pub replications: usize,
}

impl SimulationRegime {
    /// Draws one graph-plus-panel pair. The replication seed feeds a master
    /// generator whose first two outputs become the graph seed and the
    /// simulation seed.
    pub fn simulate_one(&self, seed: u64) -> Result<(Arc<DirectedGraph>, EdgePanel)> {
        let mut master = ChaCha12Rng::seed_from_u64(seed);
        let graph_seed = master.next_u64();
        let sim_seed = master.next_u64();
        let graph = Arc::new(self.graph.generate(graph_seed)?);
        let panel = simulate_gnar_edge(
            &graph,
            &self.spec,
            &self.coefficients,
            self.t_len,
            &self.innovation,
            0,
            sim_seed,
        )?;
        Ok((graph, panel))
    }
}

fn moderate_regime(name: &str, max_lag: usize, stages: Vec<usize>, alphas: Vec<f64>, betas: Vec<Vec<f64>>) -> SimulationRegime {
    SimulationRegime {
        name: name.to_string(),
        spec: GnarEdgeSpec::global(max_lag, stages).unwrap(),
        coefficients: GnarCoefficients::global(alphas, betas),
        t_len: 200,
        graph: GraphRecipe::ErdosRenyiEdges { n: 20, m: 168 },
        innovation: InnovationModel::default(),
        replications: 50,
    }
}

fn large_regime(name: &str, stages: Vec<usize>, betas: Vec<Vec<f64>>) -> SimulationRegime {
    SimulationRegime {
        name: name.to_string(),
        spec: GnarEdgeSpec::global(4, stages).unwrap(),
        coefficients: GnarCoefficients::global(vec![-0.6, -0.4, -0.2, -0.1], betas),
        t_len: 90,
        graph: GraphRecipe::ErdosRenyiEdges { n: 86, m: 6858 },
        innovation: InnovationModel::default(),
        replications: 50,
    }
}

/// All built-in regimes: `regime1` through `regime5` on the 20-node setup
/// (swap graphs with [`standard_recipe`]) and `large1`, `large2` on the
/// dense 86-node graph.
pub fn builtin_regimes() -> Vec<SimulationRegime> {
    vec![
        moderate_regime("regime1", 1, vec![1], vec![0.2], vec![vec![0.3]]),
        moderate_regime("regime2", 1, vec![2], vec![0.2], vec![vec![0.3, 0.4]]),
        moderate_regime(
            "regime3",
            3,
            vec![1, 1, 1],
            vec![0.2, 0.4, -0.6],
            vec![vec![0.2], vec![0.1], vec![-0.2]],
        ),
        moderate_regime(
            "regime4",
            3,
            vec![2, 2, 2],
            vec![0.2, 0.4, -0.6],
            vec![vec![0.3, 0.1], vec![0.1, 0.1], vec![-0.2, 0.3]],
        ),
        moderate_regime(
            "regime5",
            3,
            vec![2, 0, 0],
            vec![0.2, 0.4, -0.6],
            vec![vec![0.3, 0.4], vec![], vec![]],
        ),
        large_regime("large1", vec![1, 1, 1, 1], vec![vec![0.2], vec![0.1], vec![0.3], vec![0.05]]),
        large_regime(
            "large2",
            vec![2, 2, 2, 2],
            vec![vec![0.4, -0.4], vec![0.3, -0.4], vec![0.5, -0.3], vec![0.05, -0.1]],
        ),
    ]
}

pub fn regime(name: &str) -> Result<SimulationRegime> {
    builtin_regimes()
        .into_iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::UnknownRegime(name.to_string()))
}
