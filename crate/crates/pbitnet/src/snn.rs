//! Discrete-time stochastic integrate-and-fire dynamics on a delayed weighted
//! multigraph.
//!
//! Per step, every integrating vertex accumulates
//! `u★ = u + Σ_e W_e · X^{src(e), t−delay(e)}`, fires with probability
//! `P(u★) = ½(1 + erf((u★ − ½)/σ))`, and quenches its residual through the
//! saturation map `S(u) = γ tanh(u/γ)`: `u ← S(u★ − X)`.
//!
//! Input and unit vertices are non-integrating emitters: inputs replay the
//! externally supplied trains, unit vertices emit 1 every step.  Delays are
//! measured so an edge of delay `s ≥ 1` delivers the spike emitted at `t−s`
//! into the update at `t`; the history buffer starts zero-filled.
//!
//! At `σ = 0` the activation is the pointwise limit of the erf form: 0 below
//! threshold, 1 above, and ½ exactly at threshold (a fair coin).  Circuit
//! weights are designed so steady-state potentials avoid the threshold
//! exactly; the coin convention only matters in degenerate configurations.

use rand::Rng;

use crate::{Error, Result};

/// Shared neuron parameters; the firing threshold is fixed at ½.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Noise SD of the activation, `σ ≥ 0`.
    pub sigma: f64,
    /// Saturation parameter, `γ ≥ 0` (`γ = 0` resets residuals each cycle).
    pub gamma: f64,
}

pub const U_THR: f64 = 0.5;

/// One synaptic connection; multi-edges (same endpoints, any delays) allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    /// Delay in steps, `≥ 1`.
    pub delay: usize,
    pub weight: f64,
}

/// Static description of a network.
#[derive(Debug, Clone, Default)]
pub struct NetworkSpec {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    /// Vertices that emit `X = 1` every step (constant current source).
    pub unit_vertices: Vec<usize>,
    /// Externally driven vertices, in the order of the supplied trains.
    pub input_vertices: Vec<usize>,
    /// Vertices read out by the harness.
    pub output_vertices: Vec<usize>,
    /// Optional semantic labels, one per vertex.
    pub labels: Vec<String>,
}

impl NetworkSpec {
    /// Validates endpoints, delays, and the no-incoming-edge rule for sources.
    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            if e.src >= self.vertex_count || e.dst >= self.vertex_count {
                return Err(Error::Construction(format!(
                    "edge {}→{} out of range",
                    e.src, e.dst
                )));
            }
            if e.delay == 0 {
                return Err(Error::Construction("zero delay edge".into()));
            }
            if self.input_vertices.contains(&e.dst) || self.unit_vertices.contains(&e.dst) {
                return Err(Error::Construction(format!(
                    "source vertex {} has an incoming edge",
                    e.dst
                )));
            }
        }
        Ok(())
    }

    pub fn max_delay(&self) -> usize {
        self.edges.iter().map(|e| e.delay).max().unwrap_or(1)
    }

    /// Plain-text edge-list dump: role header plus `src dst delay weight` lines.
    pub fn to_text(&self) -> String {
        let fmt_ids = |ids: &[usize]| {
            ids.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str(&format!("# vertices {}\n", self.vertex_count));
        out.push_str(&format!("# inputs {}\n", fmt_ids(&self.input_vertices)));
        out.push_str(&format!("# units {}\n", fmt_ids(&self.unit_vertices)));
        out.push_str(&format!("# outputs {}\n", fmt_ids(&self.output_vertices)));
        if !self.labels.is_empty() {
            out.push_str(&format!("# labels {}\n", self.labels.join(" ")));
        }
        out.push_str(&format!("# edges {}\n", self.edges.len()));
        for e in &self.edges {
            out.push_str(&format!("{} {} {} {:.15}\n", e.src, e.dst, e.delay, e.weight));
        }
        out
    }
}

/// Mutable simulation state: residual potentials plus a spike-history ring.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub u: Vec<f64>,
    /// Ring of recent spike vectors; `history[(head − s) mod depth]` is `X^{·, t−s}`.
    history: Vec<Vec<u8>>,
    head: usize,
    pub t: usize,
}

impl NetworkState {
    pub fn new(spec: &NetworkSpec) -> Self {
        let depth = spec.max_delay() + 1;
        Self {
            u: vec![0.0; spec.vertex_count],
            history: vec![vec![0u8; spec.vertex_count]; depth],
            head: 0,
            t: 0,
        }
    }

    /// Back to the initial state: `u = 0`, empty history.
    pub fn reset(&mut self) {
        self.u.iter_mut().for_each(|v| *v = 0.0);
        self.history.iter_mut().for_each(|h| h.iter_mut().for_each(|x| *x = 0));
        self.head = 0;
        self.t = 0;
    }

    fn past(&self, s: usize) -> &[u8] {
        // The newest row sits at `head`, so delay s reads `head − (s − 1)`.
        let depth = self.history.len();
        &self.history[(self.head + depth + 1 - s) % depth]
    }
}

/// Firing probability `P = ½(1 + erf((u − ½)/σ))`, with the step limit at σ=0.
pub fn activation(u: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if u < U_THR {
            0.0
        } else if u > U_THR {
            1.0
        } else {
            0.5
        }
    } else {
        0.5 * (1.0 + erf((u - U_THR) / sigma))
    }
}

/// Saturation `S(u) = γ tanh(u/γ)`; identically 0 at γ = 0.
pub fn saturate(u: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma * (u / gamma).tanh()
    }
}

/// `t`-fold composition `Sᵗ(u₀)`.
pub fn iterate_saturation(u0: f64, gamma: f64, t: usize) -> f64 {
    let mut u = u0;
    for _ in 0..t {
        u = saturate(u, gamma);
    }
    u
}

/// Pre-compiled per-source fan-out for fast stepping.
struct Compiled {
    /// `fanout[delay][src]` = list of `(dst, weight)`.
    fanout: Vec<Vec<Vec<(usize, f64)>>>,
    is_source: Vec<bool>,
}

fn compile(spec: &NetworkSpec) -> Compiled {
    let maxd = spec.max_delay();
    let mut fanout = vec![vec![Vec::new(); spec.vertex_count]; maxd + 1];
    for e in &spec.edges {
        fanout[e.delay][e.src].push((e.dst, e.weight));
    }
    let mut is_source = vec![false; spec.vertex_count];
    for &v in spec.input_vertices.iter().chain(&spec.unit_vertices) {
        is_source[v] = true;
    }
    Compiled { fanout, is_source }
}

/// A reusable stepper owning the compiled wiring.
pub struct Engine {
    spec: NetworkSpec,
    compiled: Compiled,
    params: NeuronParams,
    scratch: Vec<f64>,
}

impl Engine {
    pub fn new(spec: NetworkSpec, params: NeuronParams) -> Result<Self> {
        spec.validate()?;
        let compiled = compile(&spec);
        let scratch = vec![0.0; spec.vertex_count];
        Ok(Self {
            spec,
            compiled,
            params,
            scratch,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Advances one step.  `ext` supplies the spikes of the input vertices for
    /// this step; the returned vector is the full spike raster row `X^t`.
    pub fn step(
        &mut self,
        state: &mut NetworkState,
        ext: &[u8],
        rng: &mut impl Rng,
    ) -> Result<Vec<u8>> {
        if ext.len() != self.spec.input_vertices.len() {
            return Err(Error::ExtInputMismatch {
                expected: self.spec.input_vertices.len(),
                got: ext.len(),
            });
        }
        let nv = self.spec.vertex_count;
        let ustar = &mut self.scratch;
        for i in 0..nv {
            ustar[i] = state.u[i];
        }
        let maxd = self.spec.max_delay();
        for d in 1..=maxd {
            let past = state.past(d);
            for src in 0..nv {
                if past[src] != 0 {
                    for &(dst, w) in &self.compiled.fanout[d][src] {
                        ustar[dst] += w;
                    }
                }
            }
        }
        let mut x = vec![0u8; nv];
        for (k, &v) in self.spec.input_vertices.iter().enumerate() {
            x[v] = ext[k];
        }
        for &v in &self.spec.unit_vertices {
            x[v] = 1;
        }
        let (sigma, gamma) = (self.params.sigma, self.params.gamma);
        for i in 0..nv {
            if self.compiled.is_source[i] {
                continue;
            }
            let p = activation(ustar[i], sigma);
            let fired = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.gen::<f64>() < p
            };
            x[i] = fired as u8;
            state.u[i] = saturate(ustar[i] - fired as u8 as f64, gamma);
        }
        let depth = state.history.len();
        state.head = (state.head + 1) % depth;
        let head = state.head;
        state.history[head].copy_from_slice(&x);
        state.t += 1;
        Ok(x)
    }

    /// Runs `T` steps from `state`, returning the full raster (row per step).
    pub fn run(
        &mut self,
        state: &mut NetworkState,
        trains: &[Vec<u8>],
        rng: &mut impl Rng,
    ) -> Result<Vec<Vec<u8>>> {
        let mut raster = Vec::with_capacity(trains.len());
        for ext in trains {
            raster.push(self.step(state, ext, rng)?);
        }
        Ok(raster)
    }
}

/// Drives a single neuron through one edge of the given total weight with an
/// i.i.d. Bernoulli(`nu_in`) input; returns the empirical output rate.
pub fn rate_response(
    total_weight: f64,
    nu_in: f64,
    gamma: f64,
    sigma: f64,
    t_steps: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let spec = NetworkSpec {
        vertex_count: 2,
        edges: vec![Edge {
            src: 0,
            dst: 1,
            delay: 1,
            weight: total_weight,
        }],
        unit_vertices: vec![],
        input_vertices: vec![0],
        output_vertices: vec![1],
        labels: vec![],
    };
    let mut engine = Engine::new(spec, NeuronParams { sigma, gamma })?;
    let mut state = NetworkState::new(engine.spec());
    let mut fired = 0usize;
    for _ in 0..t_steps {
        let inp = (rng.gen::<f64>() < nu_in) as u8;
        let x = engine.step(&mut state, &[inp], rng)?;
        fired += x[1] as usize;
    }
    Ok(fired as f64 / t_steps as f64)
}

/// Error function via the standard series/continued-fraction split — accurate
/// to ~1e-12 on the range used here.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x > 6.0 {
        return 1.0;
    }
    if x < 2.0 {
        // Taylor series: erf(x) = 2/√π Σ (−1)ⁿ x^{2n+1} / (n!(2n+1))
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0f64;
        while term.abs() > 1e-17 * sum.abs() + 1e-300 {
            n += 1.0;
            term *= -x2 / n;
            sum += term / (2.0 * n + 1.0);
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        // Continued fraction for erfc.
        let x2 = x * x;
        let mut f = 0.0;
        for k in (1..=60).rev() {
            f = (k as f64 / 2.0) / (x + f);
        }
        let erfc = (-x2).exp() / ((x + f) * std::f64::consts::PI.sqrt());
        1.0 - erfc
    }
}
