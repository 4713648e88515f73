//! Trial generators for the detection-power experiments.
//!
//! Every trial is one window of 2n observations whose first half always
//! follows the null distribution; with probability `change_present_prob`
//! the second half follows the alternative. Graph-valued scenarios reduce
//! structure change to distribution change on vectors: random-graph
//! connectivity is observed as the per-node degree vector (d entries),
//! structural rewiring as the 0/1 vector of d(d-1)/2 edge indicators.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{build_graph, GraphKind, Observation, ObservationWindow};
use crate::rng::{derive_seed, stream_rng, tag};

/// The experiment families.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Null N(0, I_d); alternative N(delta, I_d).
    GaussMeanShift { delta: Vec<f64> },
    /// Null N(0, I_d); alternative N(0, scale * I_d).
    GaussVarShift { scale: f64 },
    /// Null U(0,1)^d; alternative U(s, 1+s)^d with s = d^(-1/3).
    UniformMeanShift,
    /// Null U(0,1)^d; alternative 2 U(-1/4, 3/4)^d: same mean, 4x variance.
    UniformVarShift,
    /// Erdos-Renyi graph on d nodes, observed as the per-node degree
    /// vector; connect probability p0 before the change, p1 after.
    ErConnectivityShift { p0: f64, p1: f64 },
    /// Edge indicators of a `from`-kind graph built on a fresh uniform
    /// planar cloud of d nodes each step; `to`-kind after the change.
    /// Qualitative demo only; the complete graph yields constant vectors.
    GraphTypeChange { from: GraphKind, to: GraphKind },
}

impl ScenarioKind {
    /// Default mean shift: every coordinate moves by d^(-1/3), so the
    /// shift gets harder per coordinate as the dimension grows.
    pub fn gauss_mean_default(d: usize) -> Self {
        let shift = 1.0 / (d as f64).cbrt();
        ScenarioKind::GaussMeanShift {
            delta: vec![shift; d],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::GaussMeanShift { .. } => "gauss_mean",
            ScenarioKind::GaussVarShift { .. } => "gauss_var",
            ScenarioKind::UniformMeanShift => "uniform_mean",
            ScenarioKind::UniformVarShift => "uniform_var",
            ScenarioKind::ErConnectivityShift { .. } => "er_connectivity",
            ScenarioKind::GraphTypeChange { .. } => "graph_type",
        }
    }
}

/// A fully specified experiment: change family plus sizes and seeding.
/// For graph-valued kinds, `d` is the number of nodes, not the dimension
/// of the observation vectors (see [`Scenario::observation_dim`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub change_present_prob: f64,
}

/// One generated trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub window: ObservationWindow,
    pub change: bool,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, n: usize, d: usize, trials: usize, seed: u64) -> Result<Self> {
        let s = Scenario {
            kind,
            n,
            d,
            trials,
            seed,
            change_present_prob: 0.5,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain("window half-length must be at least 2"));
        }
        if self.trials == 0 {
            return Err(Error::domain("need at least one trial"));
        }
        if !(0.0..=1.0).contains(&self.change_present_prob) {
            return Err(Error::domain("change_present_prob must lie in [0,1]"));
        }
        match &self.kind {
            ScenarioKind::GaussMeanShift { delta } => {
                if delta.len() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        got: delta.len(),
                    });
                }
                if delta.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("shift vector must be finite"));
                }
                if self.d == 0 {
                    return Err(Error::domain("dimension must be positive"));
                }
            }
            ScenarioKind::GaussVarShift { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::domain("variance scale must be positive"));
                }
                if self.d == 0 {
                    return Err(Error::domain("dimension must be positive"));
                }
            }
            ScenarioKind::UniformMeanShift | ScenarioKind::UniformVarShift => {
                if self.d == 0 {
                    return Err(Error::domain("dimension must be positive"));
                }
            }
            ScenarioKind::ErConnectivityShift { p0, p1 } => {
                if !(*p0 > 0.0 && *p0 < 1.0) {
                    return Err(Error::domain("p0 must lie in (0,1)"));
                }
                if !(0.0..=1.0).contains(p1) {
                    return Err(Error::domain("p1 must lie in [0,1]"));
                }
                if self.d < 2 {
                    return Err(Error::domain("graphs need at least 2 nodes"));
                }
            }
            ScenarioKind::GraphTypeChange { from, to } => {
                if from == to {
                    return Err(Error::domain("graph-type change needs two distinct kinds"));
                }
                if self.d < 3 {
                    return Err(Error::domain("graph-type clouds need at least 3 nodes"));
                }
            }
        }
        Ok(())
    }

    /// Length of each observation vector: d for point data and for
    /// connectivity (degree) summaries, d(d-1)/2 for edge-indicator data.
    pub fn observation_dim(&self) -> usize {
        match self.kind {
            ScenarioKind::GraphTypeChange { .. } => self.d * (self.d - 1) / 2,
            _ => self.d,
        }
    }

    fn draw<R: Rng>(&self, changed: bool, rng: &mut R) -> Observation {
        let values = match &self.kind {
            ScenarioKind::GaussMeanShift { delta } => (0..self.d)
                .map(|c| {
                    let z: f64 = StandardNormal.sample(rng);
                    if changed {
                        z + delta[c]
                    } else {
                        z
                    }
                })
                .collect(),
            ScenarioKind::GaussVarShift { scale } => {
                let sd = if changed { scale.sqrt() } else { 1.0 };
                (0..self.d)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z * sd
                    })
                    .collect()
            }
            ScenarioKind::UniformMeanShift => {
                let shift = if changed {
                    1.0 / (self.d as f64).cbrt()
                } else {
                    0.0
                };
                (0..self.d).map(|_| rng.gen::<f64>() + shift).collect()
            }
            ScenarioKind::UniformVarShift => (0..self.d)
                .map(|_| {
                    let u = rng.gen::<f64>();
                    if changed {
                        // 2 U(-1/4, 3/4) spans (-1/2, 3/2) with mean 1/2.
                        2.0 * (u - 0.25)
                    } else {
                        u
                    }
                })
                .collect(),
            ScenarioKind::ErConnectivityShift { p0, p1 } => {
                // Observation = per-node degree vector. Raw edge indicators
                // would carry no cross-segment distance signal at p0 = 1/2:
                // the expected Hamming distance p0(1-p1) + (1-p0)p1 = 1/2
                // regardless of p1. Degrees concentrate the shift into d
                // coordinates with mean step (d-1)(p1-p0).
                let p = if changed { *p1 } else { *p0 };
                let mut degree = vec![0.0; self.d];
                for i in 0..self.d {
                    for j in (i + 1)..self.d {
                        if rng.gen_bool(p) {
                            degree[i] += 1.0;
                            degree[j] += 1.0;
                        }
                    }
                }
                degree
            }
            ScenarioKind::GraphTypeChange { from, to } => {
                let kind = if changed { *to } else { *from };
                let cloud: Vec<Observation> = (0..self.d)
                    .map(|_| {
                        Observation::new(vec![rng.gen::<f64>(), rng.gen::<f64>()])
                            .expect("uniform coordinates are finite")
                    })
                    .collect();
                let g = build_graph(&cloud, kind).expect("cloud graphs build");
                let mut bits = vec![0.0; self.d * (self.d - 1) / 2];
                for e in &g.edges {
                    bits[pair_index(e.i, e.j, self.d)] = 1.0;
                }
                bits
            }
        };
        Observation::new(values).expect("generators produce finite values")
    }

    /// Generates one labeled trial window, deterministically in
    /// (scenario, seed, trial_index). The label is drawn first so that a
    /// fixed trial keeps its label when only the change family's
    /// parameters move.
    pub fn generate(&self, trial_index: u64) -> Result<TrialData> {
        self.validate()?;
        let mut rng = stream_rng(derive_seed(self.seed, tag::TRIALS), trial_index);
        let change = rng.gen_bool(self.change_present_prob);
        let mut pts = Vec::with_capacity(2 * self.n);
        for _ in 0..self.n {
            pts.push(self.draw(false, &mut rng));
        }
        for _ in 0..self.n {
            pts.push(self.draw(change, &mut rng));
        }
        Ok(TrialData {
            window: ObservationWindow::new(pts, 0)?,
            change,
        })
    }

    /// A no-change stream from the null distribution, for calibration.
    pub fn training_stream(&self, len: usize) -> Result<Vec<Observation>> {
        self.validate()?;
        if len == 0 {
            return Err(Error::domain("training stream must be non-empty"));
        }
        let mut rng = stream_rng(derive_seed(self.seed, tag::TRAINING), 0);
        Ok((0..len).map(|_| self.draw(false, &mut rng)).collect())
    }

    /// An H1 stream that switches from null to alternative at
    /// `change_at`, for online-delay experiments. The trial index selects
    /// an independent stream.
    pub fn shifted_stream(&self, len: usize, change_at: usize, trial_index: u64) -> Result<Vec<Observation>> {
        self.validate()?;
        let mut rng = stream_rng(derive_seed(self.seed, tag::TRIALS), trial_index);
        Ok((0..len)
            .map(|i| self.draw(i >= change_at, &mut rng))
            .collect())
    }
}

/// Upper-triangle flat index of the pair (i, j), i < j, over m nodes.
fn pair_index(i: usize, j: usize, m: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + j - i - 1
}
