use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use pbitnet::circuits::{build_cnot_circuit, build_one_qubit_circuit, CircuitParams};
use pbitnet::experiments::{sample_input, test_states};
use pbitnet::povm::{cnot_closed, default_povm, embed, fidelity, invert, phase_gate_closed,
    Distribution};
use pbitnet::snn::{Engine, NetworkState, NeuronParams};

fn bench_engine_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine_step");
    for (name, circuit) in [
        (
            "one_qubit",
            build_one_qubit_circuit(
                &phase_gate_closed(1.0),
                &CircuitParams { eta: 0.15, ..Default::default() },
            )
            .unwrap(),
        ),
        (
            "cnot",
            build_cnot_circuit(
                &cnot_closed(),
                &CircuitParams { tau_avr: 4, eta: 0.5, ..Default::default() },
            )
            .unwrap(),
        ),
    ] {
        let povm = default_povm();
        let set = test_states(circuit.n).unwrap();
        let p_in = embed(&set.states[2].state, &povm);
        let steps = 1024usize;
        group.throughput(Throughput::Elements(steps as u64));
        group.bench_function(name, |b| {
            let mut engine = Engine::new(
                circuit.spec.clone(),
                NeuronParams { sigma: 0.0, gamma: 1.0 },
            )
            .unwrap();
            let mut state = NetworkState::new(engine.spec());
            let mut rng = ChaCha12Rng::seed_from_u64(1);
            let trains = sample_input(&p_in, steps, &mut rng);
            b.iter(|| {
                state.reset();
                for ext in &trains {
                    engine.step(&mut state, ext, &mut rng).unwrap();
                }
            });
        });
    }
    group.finish();
}

fn bench_algebra(c: &mut Criterion) {
    let povm = default_povm();
    let set = test_states(2).unwrap();
    let states: Vec<_> = set.states.iter().map(|s| s.state.clone()).collect();
    c.bench_function("embed_invert_n2", |b| {
        b.iter(|| {
            for s in &states {
                let d = embed(s, &povm);
                let _ = invert(&d, &povm);
            }
        })
    });
    let g = cnot_closed();
    let dists: Vec<Distribution> = states.iter().map(|s| embed(s, &povm)).collect();
    c.bench_function("cnot_apply_fidelity", |b| {
        b.iter(|| {
            for d in &dists {
                let out = Distribution::new(2, &g.entries * &d.probs).unwrap();
                let _ = fidelity(&out, d, &povm).unwrap();
            }
        })
    });
    c.bench_function("gate_operator_phase", |b| {
        b.iter(|| {
            let g = phase_gate_closed(0.7);
            let _ = DVector::from_element(4, 0.25).dot(&g.entries.column(0).into_owned());
        })
    });
}

criterion_group!(benches, bench_engine_step, bench_algebra);
criterion_main!(benches);
