//! Command-line driver: algebraic verification, state catalogs, circuit
//! dumps, single trials, parameter sweeps, and SVG plots.
//!
//! Exit codes: 0 success, 1 check/trial failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use pbitnet::circuits::{build_cnot_circuit, build_one_qubit_circuit, CircuitParams};
use pbitnet::experiments::{
    parse_config, rows_to_csv, run_trial, sweep, test_states, SweepConfig,
};
use pbitnet::povm::{
    cnot_closed, coherence, default_povm, embed, fidelity, gate_operator, invert, metric_g,
    phase_gate_closed, Distribution, GateOperator, Povm,
};
use pbitnet::qubit::{builtin_gate, GateName};
use pbitnet::snn::{iterate_saturation, NeuronParams};

/// Fixed default master seed; never derived from the clock.
const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(name = "pbitnet", version, about = "Quantum gates on stochastic pbit networks")]
struct Cli {
    /// Worker threads for the experiment pool (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct AngleArg {
    /// Rotation angle of parametric gates.
    #[arg(long)]
    angle: Option<f64>,
    /// Interpret --angle in degrees instead of radians.
    #[arg(long)]
    degrees: bool,
}

impl AngleArg {
    fn radians(&self) -> Option<f64> {
        self.angle
            .map(|a| if self.degrees { a.to_radians() } else { a })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the algebraic oracle suite and report per-check deviations.
    Verify {
        /// Inject a POVM perturbation of this size (negative control).
        #[arg(long, hide = true)]
        perturb: Option<f64>,
    },
    /// Print a test-state catalog with embedded distributions.
    States {
        #[arg(short, long, default_value_t = 1)]
        n: usize,
    },
    /// Emit the edge-list text of a wired circuit.
    DumpCircuit {
        /// Gate name: identity, not, hadamard, rot, phase, antipode, cnot.
        #[arg(long)]
        gate: String,
        #[command(flatten)]
        angle: AngleArg,
        #[arg(long, default_value_t = 2)]
        tau_avr: usize,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Run one (gate, state, setting) trial and print F/R/α.
    Trial {
        #[arg(long)]
        gate: String,
        #[command(flatten)]
        angle: AngleArg,
        /// Test-state label from the catalog (see `states`).
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        tau_avr: Option<usize>,
        #[arg(long, default_value_t = 30)]
        tau_sig: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run a sweep described by a config file and write the CSV (and SVG).
    Sweep {
        /// Plain-text key-value config (see docs for keys).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG plot next to the CSV.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render an existing sweep CSV as an SVG plot.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.workers {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .is_err()
        {
            eprintln!("warning: worker pool already initialized");
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> pbitnet::Result<ExitCode> {
    match cmd {
        Command::Verify { perturb } => Ok(cmd_verify(perturb)),
        Command::States { n } => {
            cmd_states(n)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpCircuit { gate, angle, tau_avr, eta, gamma } => {
            cmd_dump(&gate, angle.radians(), tau_avr, eta, gamma)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trial {
            gate,
            angle,
            state,
            gamma,
            sigma,
            eta,
            tau_avr,
            tau_sig,
            budget,
            seed,
        } => {
            cmd_trial(
                &gate,
                angle.radians(),
                &state,
                gamma,
                sigma,
                eta,
                tau_avr,
                tau_sig,
                budget,
                seed,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out, plot, seed } => {
            cmd_sweep(&config, &out, plot.as_deref(), seed)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { csv, out } => {
            let text = std::fs::read_to_string(&csv)?;
            let svg = render_svg_from_csv(&text)?;
            std::fs::write(&out, svg)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

// ---------------------------------------------------------------- verify ----

struct Check {
    name: &'static str,
    deviation: f64,
    tolerance: f64,
}

fn checks(povm: &Povm) -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(DEFAULT_SEED);

    // 1. POVM row structure: first column ½, others ±1/(2√3).
    let k = 0.5 / 3f64.sqrt();
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        dev = dev.max((povm.matrix[(i, 0)].abs() - 0.5).abs());
        for j in 1..4 {
            dev = dev.max((povm.matrix[(i, j)].abs() - k).abs());
        }
    }
    out.push(Check { name: "povm-row-structure", deviation: dev, tolerance: 1e-12 });

    // 2. Inverse identity A⁻¹A = I.
    let id = DMatrix::<f64>::identity(4, 4);
    let dev = (&povm.inverse * &povm.matrix - &id).abs().max();
    out.push(Check { name: "povm-inverse", deviation: dev, tolerance: 1e-12 });

    // 3. Phase-gate closed form vs transfer-matrix construction, 36 angles.
    let mut dev: f64 = 0.0;
    for kk in 0..36 {
        let phi = 2.0 * std::f64::consts::PI * kk as f64 / 36.0;
        let closed = phase_gate_closed(phi);
        let l = builtin_gate(GateName::PhasePhi(phi));
        let built = gate_operator(&l, povm);
        dev = dev.max((&closed.entries - &built.entries).abs().max());
    }
    out.push(Check { name: "phase-gate-closed-form", deviation: dev, tolerance: 1e-12 });

    // 4. CNOT printed blocks vs transfer-matrix construction.
    let closed = cnot_closed();
    let built = gate_operator(&builtin_gate(GateName::Cnot), povm);
    let dev = (&closed.entries - &built.entries).abs().max();
    out.push(Check { name: "cnot-block-assembly", deviation: dev, tolerance: 1e-12 });

    // 5. Gate operators preserve total probability (columns sum to 1).
    let mut dev: f64 = 0.0;
    for g in [&closed, &phase_gate_closed(0.7)] {
        for j in 0..g.entries.ncols() {
            dev = dev.max((g.entries.column(j).sum() - 1.0).abs());
        }
    }
    out.push(Check { name: "gate-column-sums", deviation: dev, tolerance: 1e-12 });

    // 6. embed ∘ invert round trip on random states, n ∈ {1, 2}.
    let mut dev: f64 = 0.0;
    for n in [1usize, 2] {
        for _ in 0..50 {
            let len = 1usize << (2 * n);
            let mut probs = DVector::from_fn(len, |_, _| rng.gen::<f64>());
            probs /= probs.sum();
            let d = Distribution::new(n, probs).unwrap();
            let s = invert(&d, povm);
            let back = embed(&s, povm);
            dev = dev.max((&back.probs - &d.probs).abs().max());
        }
    }
    out.push(Check { name: "embed-invert-roundtrip", deviation: dev, tolerance: 1e-12 });

    // 7. Test-state purity R = 1 and the probability bound 2⁻ⁿ (eigenvalues
    // of each single-qubit POVM element are {0, ½}).
    let mut dev: f64 = 0.0;
    for n in [1usize, 2] {
        let bound = 2f64.powi(-(n as i32));
        for ls in test_states(n).unwrap().states {
            let d = embed(&ls.state, povm);
            dev = dev.max((coherence(&d, povm).unwrap() - 1.0).abs());
            dev = dev.max((d.probs.max() - bound).max(0.0));
        }
    }
    out.push(Check { name: "test-state-purity", deviation: dev, tolerance: 1e-9 });

    // 8. CNOT leaves the (A, D) pair marginal invariant.
    let g = cnot_closed();
    let mut dev: f64 = 0.0;
    for _ in 0..50 {
        let mut probs = DVector::from_fn(16, |_, _| rng.gen::<f64>());
        probs /= probs.sum();
        let out_p = &g.entries * &probs;
        for m in 0..4usize {
            let marg = |p: &DVector<f64>| -> f64 {
                (0..16)
                    .filter(|&y| 2 * ((y >> 3) & 1) + (y & 1) == m)
                    .map(|y| p[y])
                    .sum()
            };
            dev = dev.max((marg(&probs) - marg(&out_p)).abs());
        }
    }
    out.push(Check { name: "cnot-ad-marginal", deviation: dev, tolerance: 1e-10 });

    // 9. Metric examples: g(uniform, uniform) = 2⁻ⁿ, F(|0⟩, uniform) = 1/√2.
    let uni = DVector::from_element(4, 0.25);
    let mut dev = (metric_g(&uni, &uni, povm).unwrap() - 0.5).abs();
    let d0 = embed(&test_states(1).unwrap().states[0].state, povm);
    let du = Distribution::new(1, uni).unwrap();
    dev = dev.max((fidelity(&d0, &du, povm).unwrap() - 0.5f64.sqrt()).abs());
    out.push(Check { name: "metric-examples", deviation: dev, tolerance: 1e-12 });

    // 10. Rectification potentials of the printed embedding are in {0, −1}.
    let w_embed = DMatrix::from_fn(4, 3, |i, j| pbitnet::circuits::W_PI_INV[i][j]);
    let w_proj = DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    let dev = match pbitnet::circuits::rectification_weights(&w_embed, &w_proj, 1.0) {
        Ok(w) => {
            let t = 1f64.tanh();
            let mut d: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i + j == 3 { t } else { 0.0 };
                    d = d.max((w[(i, j)] - want).abs());
                }
            }
            d
        }
        Err(_) => f64::INFINITY,
    };
    out.push(Check { name: "rectification-weights", deviation: dev, tolerance: 1e-12 });

    // 11. Saturation decay law S¹⁰⁰(1) ≈ 1/√(1 + ⅔·100) at γ = 1.
    let got = iterate_saturation(1.0, 1.0, 100);
    let asym = 1.0 / (1.0 + 2.0 / 3.0 * 100.0f64).sqrt();
    out.push(Check {
        name: "saturation-decay-law",
        deviation: (got / asym - 1.0).abs(),
        tolerance: 0.05,
    });

    out
}

fn cmd_verify(perturb: Option<f64>) -> ExitCode {
    let mut povm = default_povm();
    if let Some(eps) = perturb {
        povm.matrix[(0, 1)] += eps;
    }
    let results = checks(&povm);
    println!("{:<28} {:>12} {:>10} {:>6}", "check", "deviation", "tolerance", "state");
    let mut ok = true;
    for c in &results {
        let pass = c.deviation <= c.tolerance;
        ok &= pass;
        println!(
            "{:<28} {:>12.3e} {:>10.1e} {:>6}",
            c.name,
            c.deviation,
            c.tolerance,
            if pass { "pass" } else { "FAIL" }
        );
    }
    println!("{} checks, {}", results.len(), if ok { "all passed" } else { "FAILURES" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

// ------------------------------------------------------------- catalogs ----

fn cmd_states(n: usize) -> pbitnet::Result<()> {
    let povm = default_povm();
    let set = test_states(n)?;
    println!("# n={} states={}", set.n, set.states.len());
    for ls in &set.states {
        let d = embed(&ls.state, &povm);
        let probs: Vec<String> = d.probs.iter().map(|p| format!("{p:.6}")).collect();
        println!(
            "{:<12} {} {}",
            ls.label,
            if ls.entangled { "entangled" } else { "separable" },
            probs.join(" ")
        );
    }
    Ok(())
}

// ------------------------------------------------------------- circuits ----

fn gate_for(name: &str, angle: Option<f64>) -> pbitnet::Result<(GateOperator, usize)> {
    let gate = GateName::parse(name, angle)?;
    let povm = default_povm();
    let n = match gate {
        GateName::Cnot => 2,
        _ => 1,
    };
    let g = match gate {
        GateName::PhasePhi(phi) => phase_gate_closed(phi),
        GateName::Cnot => cnot_closed(),
        other => gate_operator(&builtin_gate(other), &povm),
    };
    Ok((g, n))
}

fn build_circuit(
    g: &GateOperator,
    n: usize,
    params: &CircuitParams,
) -> pbitnet::Result<pbitnet::circuits::WiredCircuit> {
    match n {
        1 => build_one_qubit_circuit(g, params),
        2 => build_cnot_circuit(g, params),
        other => Err(pbitnet::Error::UnsupportedQubitCount(other)),
    }
}

fn cmd_dump(
    name: &str,
    angle: Option<f64>,
    tau_avr: usize,
    eta: f64,
    gamma: f64,
) -> pbitnet::Result<()> {
    let (g, n) = gate_for(name, angle)?;
    let params = CircuitParams { tau_avr, eta, gamma, ..Default::default() };
    let circuit = build_circuit(&g, n, &params)?;
    println!(
        "# gate={} nodes={} edges={} tau_gate={} k_align={}",
        name,
        circuit.spec.vertex_count,
        circuit.spec.edges.len(),
        circuit.tau_gate,
        circuit.k_align
    );
    print!("{}", circuit.spec.to_text());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_trial(
    name: &str,
    angle: Option<f64>,
    state_label: &str,
    gamma: f64,
    sigma: f64,
    eta: f64,
    tau_avr: Option<usize>,
    tau_sig: usize,
    budget: usize,
    seed: u64,
) -> pbitnet::Result<()> {
    let (g, n) = gate_for(name, angle)?;
    let tau_avr = tau_avr.unwrap_or(if n == 1 { 2 } else { 4 });
    let params = CircuitParams { tau_avr, eta, gamma, ..Default::default() };
    let circuit = build_circuit(&g, n, &params)?;
    let povm = default_povm();
    let set = test_states(n)?;
    let ls = set
        .states
        .iter()
        .find(|s| s.label == state_label)
        .ok_or_else(|| {
            pbitnet::Error::Construction(format!(
                "unknown state `{state_label}` (see `pbitnet states -n {n}`)"
            ))
        })?;
    let p_in = embed(&ls.state, &povm);
    let cfg = SweepConfig {
        tau_sig_list: vec![tau_sig],
        tau_avr,
        steps_budget: budget,
        ..Default::default()
    };
    let res = run_trial(
        &circuit,
        &g,
        &p_in,
        &cfg,
        NeuronParams { sigma, gamma },
        seed,
    )?;
    println!("# seed={seed} config=gate={name} state={state_label} gamma={gamma} sigma={sigma} eta={eta} tau_avr={tau_avr} tau_sig={tau_sig} budget={budget}");
    println!("F      = {:.4} (segment SD {:.4})", res.f_mean, res.f_sd);
    println!("R      = {:.4} (segment SD {:.4})", res.r_mean, res.r_sd);
    println!("alpha  = {:.2} deg", res.alpha_mean.to_degrees());
    println!("segments = {}", res.segments);
    Ok(())
}

// --------------------------------------------------------------- sweeps ----

fn cmd_sweep(
    config: &std::path::Path,
    out: &std::path::Path,
    plot: Option<&std::path::Path>,
    seed: Option<u64>,
) -> pbitnet::Result<()> {
    let text = std::fs::read_to_string(config)?;
    let (target, mut cfg) = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let rows = sweep(&cfg, target)?;
    let summary = text
        .lines()
        .filter_map(|l| {
            let l = l.split('#').next().unwrap_or("").trim();
            let (k, v) = l.split_once('=')?;
            let values: Vec<&str> = v.split([',', ' ']).filter(|s| !s.is_empty()).collect();
            Some(format!("{}={}", k.trim(), values.join(",")))
        })
        .collect::<Vec<_>>()
        .join(";");
    let csv = rows_to_csv(&rows, cfg.master_seed, &summary);
    std::fs::write(out, &csv)?;
    println!("wrote {} ({} rows)", out.display(), rows.len());
    if let Some(p) = plot {
        std::fs::write(p, render_svg_from_csv(&csv)?)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

// ----------------------------------------------------------------- plot ----

struct PlotPoint {
    x: f64,
    f: f64,
    f_sd: f64,
    r: f64,
}

fn parse_rows(csv: &str) -> pbitnet::Result<(String, Vec<PlotPoint>)> {
    let mut sweep_name = String::new();
    let mut pts = Vec::new();
    for line in csv.lines() {
        if line.starts_with('#') || line.starts_with("sweep,") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 15 {
            return Err(pbitnet::Error::Construction("short CSV row".into()));
        }
        sweep_name = f[0].to_string();
        let x_col = match f[0] {
            "fig2a" | "fig3a" => 1, // gamma
            "fig2b" | "fig3b" => 2, // sigma
            _ => 3,                 // tau_sig
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| pbitnet::Error::Construction(format!("bad CSV number `{s}`")))
        };
        pts.push(PlotPoint {
            x: parse(f[x_col])?,
            f: parse(f[8])?,
            f_sd: parse(f[9])?,
            r: parse(f[10])?,
        });
    }
    if pts.is_empty() {
        return Err(pbitnet::Error::Construction("no data rows in CSV".into()));
    }
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    Ok((sweep_name, pts))
}

/// Renders F (line + SD band) and R (broken line) against the swept parameter.
fn render_svg_from_csv(csv: &str) -> pbitnet::Result<String> {
    let (name, pts) = parse_rows(csv)?;
    let (w, h, ml, mb) = (640.0, 420.0, 60.0, 50.0);
    let (pw, ph) = (w - ml - 20.0, h - mb - 20.0);
    let xmin = pts.first().unwrap().x;
    let xmax = pts.last().unwrap().x.max(xmin + 1e-9);
    let ymax = pts
        .iter()
        .map(|p| (p.f + p.f_sd).max(p.r))
        .fold(1.0f64, f64::max)
        * 1.05;
    let ymin = pts
        .iter()
        .map(|p| (p.f - p.f_sd).min(p.r))
        .fold(0.0f64, f64::min);
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| 20.0 + (ymax - y) / (ymax - ymin) * ph;
    let path = |it: &mut dyn Iterator<Item = (f64, f64)>| {
        it.enumerate()
            .map(|(i, (x, y))| {
                format!("{}{:.1},{:.1}", if i == 0 { "M" } else { "L" }, sx(x), sy(y))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let band_fwd: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.f + p.f_sd)).collect();
    let band_rev: Vec<(f64, f64)> = pts.iter().rev().map(|p| (p.x, p.f - p.f_sd)).collect();
    let band = path(&mut band_fwd.into_iter().chain(band_rev));
    let f_line = path(&mut pts.iter().map(|p| (p.x, p.f)));
    let r_line = path(&mut pts.iter().map(|p| (p.x, p.r)));
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="{w}" height="{h}" fill="white"/>
<path d="{band} Z" fill="#4a90d9" fill-opacity="0.25" stroke="none"/>
<path d="{f_line}" fill="none" stroke="#1f4e8c" stroke-width="2"/>
<path d="{r_line}" fill="none" stroke="#c0392b" stroke-width="2" stroke-dasharray="6,4"/>
<line x1="{ml}" y1="{y0:.1}" x2="{xr:.1}" y2="{y0:.1}" stroke="black"/>
<line x1="{ml}" y1="20" x2="{ml}" y2="{y0:.1}" stroke="black"/>
<text x="{xmid:.1}" y="{h}" text-anchor="middle" font-size="13" dy="-8">{name}</text>
<text x="{ml}" y="14" font-size="12" fill="#1f4e8c">F (band: ±SD)</text>
<text x="{xr2:.1}" y="14" font-size="12" fill="#c0392b" text-anchor="end">R</text>
"##,
        y0 = sy(ymin),
        xr = ml + pw,
        xmid = ml + pw / 2.0,
        xr2 = ml + pw,
    );
    for p in &pts {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            sx(p.x),
            sy(ymin) + 14.0,
            p.x
        ));
    }
    for yt in [0.0, 0.25, 0.5, 0.75, 1.0] {
        if yt >= ymin && yt <= ymax {
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{yt}</text>\n",
                ml - 6.0,
                sy(yt) + 3.0,
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
