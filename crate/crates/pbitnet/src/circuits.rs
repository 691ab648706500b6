//! Wiring of the 1-qubit gate circuit (§4.1 / Fig. 1) and the CNOT circuit
//! (§4.2 / Fig. 2) from the published weight matrices and feedback rules.
//!
//! The figures of the source are unavailable, so the wiring is a
//! reconstruction from the text.  Fixed choices (see the builders):
//!
//! - each stage is one step deep; η-doubles place inhibition/excitation at
//!   relative delays (1, 2) off the triggering spike;
//! - the 1-qubit gate projection runs through a one-hot layer of four gate
//!   nodes receiving `G[y,z]/τ_avr` at delays `1…τ_avr` from the event nodes,
//!   followed by the dense-code readout `W_Π` into `A′, B′`.  Feeding the
//!   outputs directly with the composite `W_Π·G` (the literal reading of the
//!   caption) caps the reachable fidelity at the product-of-marginals limit
//!   (≈0.90 pooled) and is strictly worse for every tested setting;
//! - gate-layer η-doubles use direction-dependent delays (1 for "up" edges, 2
//!   for "down", self included).  With symmetric delays the layer has an exact
//!   exchange symmetry for degenerate drives (e.g. the equator states at
//!   φ = ±π/2) and deterministically locks into synchronized firing at σ = 0;
//!   the asymmetric delays break that symmetry and remove the worst-case
//!   fidelity collapse;
//! - CNOT partial projections use the context-restricted composite rows
//!   `Σ_{y: o(y)=1, ctx(y)=m} G[y,·]` rather than the full row of `W_Π·G`
//!   (which over-counts across contexts), with the marginal-driven η-double
//!   veto on mismatched contexts;
//! - outputs `A′, D′` of the CNOT are logical copies of the inputs with
//!   harness-side alignment.
//!
//! The printed `W_nor` carries a unit-column entry of 1, which would bias the
//! residuals even in nominal one-spike operation; the self-consistent form
//! `c = −¼S(−1)(1 − ΣX)` (and `−(9/16)S(−1)(1 − ΣX)` for stage II) is wired
//! instead, with the printed variant behind [`CircuitParams::printed_wnor`].

use nalgebra::DMatrix;

use crate::povm::GateOperator;
use crate::snn::{saturate, Edge, NetworkSpec};
use crate::{Error, Result};

/// Parameters shared by both builders.
#[derive(Debug, Clone, Copy)]
pub struct CircuitParams {
    /// Synaptic averaging length `τ_avr ≥ 1`.
    pub tau_avr: usize,
    /// Inhibition level of the gate-layer η-doubles (1-qubit) or the context
    /// veto (CNOT); the paired excitation is `−S(−η)`.
    pub eta: f64,
    /// Lateral η-doubles inside the embedding blocks.  At σ = 0 the embedding
    /// margins absorb any `η ≤ ½` without changing a single spike, and above
    /// ≈0.7 the inhibition breaks the winner-take-all margin, so this stays 0
    /// in the reference configuration.
    pub eta_embed: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Compatibility switch: wire the normalization exactly as printed
    /// (unit-column weight 1) instead of the self-consistent form.
    pub printed_wnor: bool,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            tau_avr: 2,
            eta: 0.0,
            eta_embed: 0.0,
            gamma: 1.0,
            sigma: 0.0,
            printed_wnor: false,
        }
    }
}

/// How one output pbit of a wired circuit is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputBit {
    /// Read the spike of this vertex.
    Vertex(usize),
    /// Logical copy of this input pbit, shifted by the alignment latency.
    CopyOfInput(usize),
}

/// A gate circuit ready for simulation.
#[derive(Debug, Clone)]
pub struct WiredCircuit {
    pub spec: NetworkSpec,
    /// Qubit count (1 or 2); the circuit has `2n` input and output pbits.
    pub n: usize,
    /// Transient steps excluded from estimation windows.
    pub tau_gate: usize,
    /// Output spikes at step `t` belong to the input event at `t − k_align`.
    pub k_align: usize,
    /// One entry per output pbit, most significant first.
    pub outputs: Vec<OutputBit>,
}

/// The printed 4×3 embedding matrix `W_Π⁻¹` (rows = events 00,01,10,11;
/// columns = first pbit, second pbit, unit).
pub const W_PI_INV: [[f64; 3]; 4] = [
    [-1.0, -1.0, 1.0],
    [-1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, -1.0],
];

/// Eq. (7): `[W_rec]^i_j = −S([M]^i_j − δ^i_j)`, where `M^i_j` is the steady
/// potential of embedding node `i` when event `j` is active (the affine
/// composition of the projection and embedding including the unit column).
///
/// `w_embed` is `m×(k+1)` with the unit column last; `w_proj` is `k×m` mapping
/// one-hot events to the dense code.  Entries of `M − I` must lie in `{0, −1}`
/// or the wiring is inconsistent.
pub fn rectification_weights(
    w_embed: &DMatrix<f64>,
    w_proj: &DMatrix<f64>,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let m = w_embed.nrows();
    let k = w_embed.ncols() - 1;
    if w_proj.nrows() != k || w_proj.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: w_proj.nrows(),
        });
    }
    let mut w_rec = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            let mut pot = w_embed[(i, k)]; // unit column
            for b in 0..k {
                pot += w_embed[(i, b)] * w_proj[(b, j)];
            }
            let shifted = pot - if i == j { 1.0 } else { 0.0 };
            if (shifted.abs() > 1e-12) && ((shifted + 1.0).abs() > 1e-12) {
                return Err(Error::Construction(format!(
                    "rectification potential {shifted} at ({i},{j}) outside {{0,−1}}"
                )));
            }
            w_rec[(i, j)] = -saturate(shifted, gamma);
        }
    }
    Ok(w_rec)
}

/// Additive normalization: `delta = strength·(1 − Σᵢ spikes)`, sent evenly to
/// all target nodes.
pub fn normalization_correction(spikes: &[u8], strength: f64) -> f64 {
    let total: u8 = spikes.iter().sum();
    strength * (1.0 - total as f64)
}

/// Appends the one-qubit embedding block: `W_Π⁻¹` from two pbit inputs plus
/// the unit vertex into four event nodes, the rectifying self-feedback of
/// Eq. (7), the additive normalization, and symmetric lateral η-doubles.
fn wire_embedding_block(
    edges: &mut Vec<Edge>,
    in1: usize,
    in2: usize,
    unit: usize,
    ev_base: usize,
    params: &CircuitParams,
) {
    let sr = -saturate(-1.0, params.gamma); // −S(−1)
    for z in 0..4usize {
        let ev = ev_base + z;
        edges.push(Edge { src: in1, dst: ev, delay: 1, weight: W_PI_INV[z][0] });
        edges.push(Edge { src: in2, dst: ev, delay: 1, weight: W_PI_INV[z][1] });
        if W_PI_INV[z][2] != 0.0 {
            edges.push(Edge { src: unit, dst: ev, delay: 1, weight: W_PI_INV[z][2] });
        }
        // W_rec: the only −1 potential sits on the complement event (00↔11, 01↔10).
        edges.push(Edge { src: ev_base + (3 - z), dst: ev, delay: 1, weight: sr });
        // Normalization c = −¼S(−1)(1 − ΣX).  The unit reference is delayed
        // one extra step so the constant 1 and the event-spike count refer to
        // the same past step; otherwise the first transient step injects a
        // spurious +sr/4 whose residual decays only asymptotically.
        let unit_w = if params.printed_wnor { 1.0 } else { sr / 4.0 };
        edges.push(Edge { src: unit, dst: ev, delay: 2, weight: unit_w });
        for j in 0..4usize {
            edges.push(Edge { src: ev_base + j, dst: ev, delay: 1, weight: -sr / 4.0 });
        }
    }
    if params.eta_embed > 0.0 {
        let exc = -saturate(-params.eta_embed, params.gamma);
        for z in 0..4usize {
            for j in 0..4usize {
                if j != z {
                    edges.push(Edge {
                        src: ev_base + z,
                        dst: ev_base + j,
                        delay: 1,
                        weight: -params.eta_embed,
                    });
                    edges.push(Edge {
                        src: ev_base + z,
                        dst: ev_base + j,
                        delay: 2,
                        weight: exc,
                    });
                }
            }
        }
    }
}

/// Builds the 1-qubit gate circuit for a 4×4 gate operator.
///
/// Vertices: `A, B, unit, ev_00…ev_11, g_00…g_11, A′, B′` (13 total; the
/// source counts 10 by aggregating the normalization bookkeeping — reported
/// as a diagnostic, not asserted).
pub fn build_one_qubit_circuit(g: &GateOperator, params: &CircuitParams) -> Result<WiredCircuit> {
    if g.entries.nrows() != 4 || g.entries.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: g.entries.nrows(),
        });
    }
    if params.tau_avr < 1 {
        return Err(Error::Construction("tau_avr must be ≥ 1".into()));
    }
    let (a_in, b_in, unit) = (0usize, 1usize, 2usize);
    let ev = 3usize; // ev_base
    let gate = 7usize; // gate-layer base
    let (a_out, b_out) = (11usize, 12usize);
    let mut edges = Vec::new();

    wire_embedding_block(&mut edges, a_in, b_in, unit, ev, params);

    // Gate layer: event z drives gate node y with G[y,z], averaged over τ_avr.
    for y in 0..4usize {
        for z in 0..4usize {
            let w = g.entries[(y, z)];
            if w.abs() > 1e-14 {
                for d in 1..=params.tau_avr {
                    edges.push(Edge {
                        src: ev + z,
                        dst: gate + y,
                        delay: d,
                        weight: w / params.tau_avr as f64,
                    });
                }
            }
        }
    }

    // Gate-layer η-doubles with direction-dependent delays (see module docs).
    if params.eta > 0.0 {
        let exc = -saturate(-params.eta, params.gamma);
        for y in 0..4usize {
            for j in 0..4usize {
                let d = if j >= y { 1 } else { 2 };
                edges.push(Edge { src: gate + y, dst: gate + j, delay: d, weight: -params.eta });
                edges.push(Edge { src: gate + y, dst: gate + j, delay: d + 1, weight: exc });
            }
        }
    }

    // Dense-code readout W_Π: A′ ← {g_10, g_11}, B′ ← {g_01, g_11}.
    for (src, dst) in [(gate + 2, a_out), (gate + 3, a_out), (gate + 1, b_out), (gate + 3, b_out)]
    {
        edges.push(Edge { src, dst, delay: 1, weight: 1.0 });
    }

    let labels = vec![
        "A", "B", "unit", "ev_00", "ev_01", "ev_10", "ev_11", "g_00", "g_01", "g_10", "g_11",
        "A'", "B'",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let spec = NetworkSpec {
        vertex_count: 13,
        edges,
        unit_vertices: vec![unit],
        input_vertices: vec![a_in, b_in],
        output_vertices: vec![a_out, b_out],
        labels,
    };
    spec.validate()?;
    Ok(WiredCircuit {
        spec,
        n: 1,
        tau_gate: 4 + params.tau_avr,
        // input t → events t+1 → gate layer t+2 (freshest averaging slot)
        // → outputs t+3, independent of τ_avr.
        k_align: 3,
        outputs: vec![OutputBit::Vertex(a_out), OutputBit::Vertex(b_out)],
    })
}

/// pbit values (A,B,C,D) of the 2-qubit event `y` (A most significant).
#[inline]
pub fn event_bits(y: usize) -> (usize, usize, usize, usize) {
    ((y >> 3) & 1, (y >> 2) & 1, (y >> 1) & 1, y & 1)
}

/// The (A,D) context of event `y`, as `2A + D`.
#[inline]
pub fn ad_context(y: usize) -> usize {
    let (a, _, _, d) = event_bits(y);
    2 * a + d
}

/// Builds the CNOT circuit.
///
/// Vertices: inputs `A,B,C,D`, `unit`, stage-I marginal blocks for the pairs
/// `{A,D}` and `{B,C}` (4+4 event nodes), the 16-node joint embedding, 8
/// partial-projection nodes `(o, m)` with `o ∈ {B′, C′}` and `m` an (A,D)
/// context, and the two output relays.  `A′, D′` are logical copies of the
/// inputs (alignment handled by the harness).
pub fn build_cnot_circuit(g_cnot: &GateOperator, params: &CircuitParams) -> Result<WiredCircuit> {
    if g_cnot.entries.nrows() != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: g_cnot.entries.nrows(),
        });
    }
    if params.tau_avr < 1 {
        return Err(Error::Construction("tau_avr must be ≥ 1".into()));
    }
    let (a_in, b_in, c_in, d_in, unit) = (0usize, 1, 2, 3, 4);
    let marg_ad = 5usize; // 4 nodes, m = 2A + D
    let marg_bc = 9usize; // 4 nodes, b = 2B + C
    let joint = 13usize; // 16 nodes, (m, b) at joint + 4m + b
    let partial = 29usize; // 8 nodes, (o, m) at partial + 4o + m
    let (b_relay, c_relay) = (37usize, 38usize);
    let jn = |m: usize, b: usize| joint + 4 * m + b;
    let mut edges = Vec::new();
    let sr = -saturate(-1.0, params.gamma);

    // Stage I: the marginal pairs are {A,D} and {B,C}, not the natural order.
    wire_embedding_block(&mut edges, a_in, d_in, unit, marg_ad, params);
    wire_embedding_block(&mut edges, b_in, c_in, unit, marg_bc, params);

    // Stage II: joint node (m,b) is an AND of the two marginals at threshold ½.
    for m in 0..4usize {
        for b in 0..4usize {
            let dst = jn(m, b);
            edges.push(Edge { src: marg_ad + m, dst, delay: 1, weight: 1.0 });
            edges.push(Edge { src: marg_bc + b, dst, delay: 1, weight: 1.0 });
            // Unit bias delayed to co-arrive with the first marginal spikes.
            edges.push(Edge { src: unit, dst, delay: 2, weight: -1.0 });
            // W_rec,II: potential −1 exactly on pairs sharing no marginal.
            for m2 in 0..4usize {
                for b2 in 0..4usize {
                    if m2 != m && b2 != b {
                        edges.push(Edge { src: jn(m2, b2), dst, delay: 1, weight: sr });
                    }
                }
            }
            // Normalization with coefficient 9/16 = 2⁻⁴ Σ_j |W_rec,II|ⁱⱼ / S(−1).
            // Joint spikes first appear two steps after the inputs, so the
            // unit reference of the stage-II normalization lags by three.
            let unit_w = if params.printed_wnor { 1.0 } else { 9.0 * sr / 16.0 };
            edges.push(Edge { src: unit, dst, delay: 3, weight: unit_w });
            for m2 in 0..4usize {
                for b2 in 0..4usize {
                    edges.push(Edge { src: jn(m2, b2), dst, delay: 1, weight: -9.0 * sr / 16.0 });
                }
            }
        }
    }

    // Joint node (m,b) holds the event with (A,D) = m and (B,C) = b.
    let y_of = |m: usize, b: usize| {
        let (a, d) = (m >> 1, m & 1);
        let (bb, c) = (b >> 1, b & 1);
        4 * (2 * a + bb) + (2 * c + d)
    };

    // Partial projections (o, m): context-restricted composite rows of G_CNOT,
    // averaged over τ_avr, plus the marginal-driven η-double veto.
    for o in 0..2usize {
        for mctx in 0..4usize {
            let dst = partial + 4 * o + mctx;
            for m in 0..4usize {
                for b in 0..4usize {
                    let z = y_of(m, b);
                    let mut w = 0.0;
                    for y in 0..16usize {
                        let (_, bbit, cbit, _) = event_bits(y);
                        let obit = if o == 0 { bbit } else { cbit };
                        if obit == 1 && ad_context(y) == mctx {
                            w += g_cnot.entries[(y, z)];
                        }
                    }
                    if w.abs() > 1e-12 {
                        for d in 1..=params.tau_avr {
                            edges.push(Edge {
                                src: jn(m, b),
                                dst,
                                delay: d,
                                weight: w / params.tau_avr as f64,
                            });
                        }
                    }
                }
            }
            if params.eta > 0.0 {
                let exc = -saturate(-params.eta, params.gamma);
                for m2 in 0..4usize {
                    if m2 != mctx {
                        // Delay 2 aligns the veto with the freshest joint spike.
                        edges.push(Edge { src: marg_ad + m2, dst, delay: 2, weight: -params.eta });
                        edges.push(Edge { src: marg_ad + m2, dst, delay: 3, weight: exc });
                    }
                }
            }
        }
    }

    // Output relays: OR over the four context copies (unit weights, threshold ½).
    for m in 0..4usize {
        edges.push(Edge { src: partial + m, dst: b_relay, delay: 1, weight: 1.0 });
        edges.push(Edge { src: partial + 4 + m, dst: c_relay, delay: 1, weight: 1.0 });
    }

    let mut labels: Vec<String> = ["A", "B", "C", "D", "unit"].iter().map(|s| s.to_string()).collect();
    for m in 0..4 {
        labels.push(format!("ad_{m:02b}"));
    }
    for b in 0..4 {
        labels.push(format!("bc_{b:02b}"));
    }
    for m in 0..4 {
        for b in 0..4 {
            labels.push(format!("joint_{m:02b}{b:02b}"));
        }
    }
    for o in ["B", "C"] {
        for m in 0..4 {
            labels.push(format!("pp_{o}_{m:02b}"));
        }
    }
    labels.push("B'".into());
    labels.push("C'".into());

    let spec = NetworkSpec {
        vertex_count: 39,
        edges,
        unit_vertices: vec![unit],
        input_vertices: vec![a_in, b_in, c_in, d_in],
        output_vertices: vec![b_relay, c_relay],
        labels,
    };
    spec.validate()?;
    Ok(WiredCircuit {
        spec,
        n: 2,
        tau_gate: 5 + params.tau_avr,
        // input t → marginals t+1 → joint t+2 → partials t+3 → relays t+4.
        k_align: 4,
        outputs: vec![
            OutputBit::CopyOfInput(0),
            OutputBit::Vertex(b_relay),
            OutputBit::Vertex(c_relay),
            OutputBit::CopyOfInput(3),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{cnot_closed, phase_gate_closed};
    use crate::snn::{Engine, NetworkState, NeuronParams};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn pi_inv_affine() -> DMatrix<f64> {
        DMatrix::from_fn(4, 3, |i, j| W_PI_INV[i][j])
    }

    fn pi_proj() -> DMatrix<f64> {
        // Dense code of the four events: rows (first pbit, second pbit).
        DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn rectification_one_qubit() {
        // γ=1: four nonzero entries of value tanh(1) on the complement antidiagonal.
        let w = rectification_weights(&pi_inv_affine(), &pi_proj(), 1.0).unwrap();
        let t = 1f64.tanh();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { t } else { 0.0 };
                assert_abs_diff_eq!(w[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rectification_vanishes_at_gamma_zero() {
        let w = rectification_weights(&pi_inv_affine(), &pi_proj(), 0.0).unwrap();
        assert_abs_diff_eq!(w.norm(), 0.0);
    }

    #[test]
    fn rectification_rejects_bad_wiring() {
        let mut bad = pi_inv_affine();
        bad[(0, 0)] = -2.0;
        assert!(rectification_weights(&bad, &pi_proj(), 1.0).is_err());
    }

    #[test]
    fn normalization_examples() {
        let strength = -0.25 * saturate(-1.0, 1.0) * -1.0; // −¼S(−1) > 0 … via helper below
        let s = 0.25 * 1f64.tanh();
        assert_abs_diff_eq!(normalization_correction(&[0, 1, 0, 0], s), 0.0);
        assert_abs_diff_eq!(normalization_correction(&[0; 4], s), s, epsilon = 1e-12);
        assert_abs_diff_eq!(normalization_correction(&[1, 1, 0, 0], s), -s, epsilon = 1e-12);
        let _ = strength;
    }

    /// Drives a circuit with a constant input pattern and collects the raster.
    fn run_constant(
        circuit: &WiredCircuit,
        params: NeuronParams,
        pattern: &[u8],
        steps: usize,
    ) -> Vec<Vec<u8>> {
        let mut engine = Engine::new(circuit.spec.clone(), params).unwrap();
        let mut state = NetworkState::new(engine.spec());
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let trains = vec![pattern.to_vec(); steps];
        engine.run(&mut state, &trains, &mut rng).unwrap()
    }

    #[test]
    fn embedding_truth_table_one_qubit() {
        let g = phase_gate_closed(0.0);
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let circuit = build_one_qubit_circuit(
                &g,
                &CircuitParams { gamma, ..Default::default() },
            )
            .unwrap();
            for z in 0..4usize {
                let pattern = [(z >> 1) as u8, (z & 1) as u8];
                let raster = run_constant(
                    &circuit,
                    NeuronParams { sigma: 0.0, gamma },
                    &pattern,
                    20,
                );
                for row in raster.iter().skip(circuit.tau_gate) {
                    for j in 0..4usize {
                        assert_eq!(
                            row[3 + j],
                            (j == z) as u8,
                            "event node {j} wrong for input {z:02b} at γ={gamma}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_residuals_restored() {
        // One step after any event all embedding residuals are exactly 0.
        let g = phase_gate_closed(0.4);
        for gamma in [0.5, 1.0, 2.0] {
            let circuit = build_one_qubit_circuit(
                &g,
                &CircuitParams { gamma, ..Default::default() },
            )
            .unwrap();
            let mut engine =
                Engine::new(circuit.spec.clone(), NeuronParams { sigma: 0.0, gamma }).unwrap();
            let mut state = NetworkState::new(engine.spec());
            let mut rng = ChaCha12Rng::seed_from_u64(5);
            let mut ext_rng = ChaCha12Rng::seed_from_u64(17);
            use rand::Rng;
            let s_minus1 = saturate(-1.0, gamma);
            let mut prev_z = 0usize;
            for t in 0..60 {
                let z: usize = ext_rng.gen_range(0..4);
                engine
                    .step(&mut state, &[(z >> 1) as u8, (z & 1) as u8], &mut rng)
                    .unwrap();
                // The event selected at this step reflects the input of the
                // previous step; its complement node carries the fresh S(−1)
                // residual, every other node must be restored to exactly 0.
                if t >= circuit.tau_gate {
                    for j in 0..4usize {
                        let want = if j == 3 - prev_z { s_minus1 } else { 0.0 };
                        assert!(
                            (state.u[3 + j] - want).abs() < 1e-12,
                            "residual {} at event node {j}, t={t}, γ={gamma}",
                            state.u[3 + j]
                        );
                    }
                }
                prev_z = z;
            }
        }
    }

    #[test]
    fn identity_gate_end_to_end() {
        let g = phase_gate_closed(0.0);
        let circuit = build_one_qubit_circuit(&g, &CircuitParams::default()).unwrap();
        for z in 0..4usize {
            let pattern = [(z >> 1) as u8, (z & 1) as u8];
            let raster = run_constant(
                &circuit,
                NeuronParams { sigma: 0.0, gamma: 1.0 },
                &pattern,
                25,
            );
            for row in raster.iter().skip(circuit.tau_gate) {
                assert_eq!(row[11], pattern[0], "A' for input {z:02b}");
                assert_eq!(row[12], pattern[1], "B' for input {z:02b}");
            }
        }
    }

    #[test]
    fn cnot_stage_truth_tables() {
        let g = cnot_closed();
        let circuit = build_cnot_circuit(&g, &CircuitParams { tau_avr: 4, ..Default::default() })
            .unwrap();
        for z in 0..16usize {
            let (a, b, c, d) = event_bits(z);
            let pattern = [a as u8, b as u8, c as u8, d as u8];
            let raster = run_constant(
                &circuit,
                NeuronParams { sigma: 0.0, gamma: 1.0 },
                &pattern,
                25,
            );
            let m = 2 * a + d;
            let bc = 2 * b + c;
            for row in raster.iter().skip(circuit.tau_gate) {
                for j in 0..4usize {
                    assert_eq!(row[5 + j], (j == m) as u8, "ad marginal for {z:04b}");
                    assert_eq!(row[9 + j], (j == bc) as u8, "bc marginal for {z:04b}");
                }
                for mm in 0..4usize {
                    for bb in 0..4usize {
                        assert_eq!(
                            row[13 + 4 * mm + bb],
                            (mm == m && bb == bc) as u8,
                            "joint node ({mm},{bb}) for input {z:04b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cnot_basis_states_pass_through() {
        // Basis inputs are fixed points up to the B/C swap dictated by CNOT;
        // check |11⟩ → |10⟩ statistics on the relays (point-mass inputs are
        // 4-outcome events here, so compare against G applied to the event).
        let g = cnot_closed();
        let circuit = build_cnot_circuit(
            &g,
            &CircuitParams { tau_avr: 4, eta: 0.5, ..Default::default() },
        )
        .unwrap();
        // Event 1111 (A=B=C=D=1): G_CNOT maps it among events with the same
        // (A,D) context; just verify the relays settle to the dominant event.
        let raster = run_constant(
            &circuit,
            NeuronParams { sigma: 0.0, gamma: 1.0 },
            &[1, 1, 1, 1],
            40,
        );
        let mut col = nalgebra::DVector::zeros(16);
        col[15] = 1.0;
        let out = &g.entries * col;
        let best = (0..16).max_by(|&i, &j| out[i].partial_cmp(&out[j]).unwrap()).unwrap();
        let (_, bb, cb, _) = event_bits(best);
        let tail = &raster[circuit.tau_gate + 10..];
        let b_rate =
            tail.iter().map(|r| r[37] as usize).sum::<usize>() as f64 / tail.len() as f64;
        let c_rate =
            tail.iter().map(|r| r[38] as usize).sum::<usize>() as f64 / tail.len() as f64;
        assert!((b_rate - bb as f64).abs() < 0.45, "B' rate {b_rate} vs {bb}");
        assert!((c_rate - cb as f64).abs() < 0.45, "C' rate {c_rate} vs {cb}");
    }

    #[test]
    fn builders_are_deterministic() {
        let g = phase_gate_closed(1.2);
        let p = CircuitParams { eta: 0.3, ..Default::default() };
        let c1 = build_one_qubit_circuit(&g, &p).unwrap();
        let c2 = build_one_qubit_circuit(&g, &p).unwrap();
        assert_eq!(c1.spec.edges, c2.spec.edges);
        let gc = cnot_closed();
        let d1 = build_cnot_circuit(&gc, &p).unwrap();
        let d2 = build_cnot_circuit(&gc, &p).unwrap();
        assert_eq!(d1.spec.edges, d2.spec.edges);
    }

    #[test]
    fn averaged_weights_conserve_composite() {
        // The τ_avr replicas of each gate-projection edge sum to the composite.
        let g = phase_gate_closed(0.9);
        let params = CircuitParams { tau_avr: 3, ..Default::default() };
        let circuit = build_one_qubit_circuit(&g, &params).unwrap();
        for y in 0..4usize {
            for z in 0..4usize {
                let total: f64 = circuit
                    .spec
                    .edges
                    .iter()
                    .filter(|e| e.src == 3 + z && e.dst == 7 + y)
                    .map(|e| e.weight)
                    .sum();
                assert_abs_diff_eq!(total, g.entries[(y, z)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_zero_kills_feedback() {
        let g = phase_gate_closed(0.3);
        let params = CircuitParams { gamma: 0.0, eta: 0.4, ..Default::default() };
        let circuit = build_one_qubit_circuit(&g, &params).unwrap();
        // All rectification, normalization, and η-excitation weights scale with
        // S at negative arguments → zero; inhibition −η remains.
        for e in &circuit.spec.edges {
            let in_embed = (3..7).contains(&e.dst) && (3..7).contains(&e.src);
            if in_embed {
                assert!(
                    e.weight == 0.0 || e.weight == -0.4,
                    "unexpected embed feedback weight {}",
                    e.weight
                );
            }
        }
    }
}
