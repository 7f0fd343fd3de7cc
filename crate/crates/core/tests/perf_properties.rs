use hflc::perf::{
    simulate_model, ArchConfig, Composition, Dataflow, EnergyTable, MatMulWorkload, ModelShapes,
};
use proptest::prelude::*;

fn shapes(name: &str) -> ModelShapes {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/models/{name}.toml"));
    ModelShapes::load(path).unwrap()
}

fn latency(w: &[(MatMulWorkload, u64)], arch: &ArchConfig) -> f64 {
    simulate_model(w, arch, &EnergyTable::default()).unwrap().compressed.total_latency
}

#[test]
fn more_bandwidth_never_hurts() {
    for m in ["llama-3-8b", "llama-2-13b", "opt-13b"] {
        let s = shapes(m);
        let w = s.workloads(92, s.measured_bits("fp16").unwrap());
        for flow in [Dataflow::WeightStationary, Dataflow::OutputStationary] {
            let arch = ArchConfig::default().with_dataflow(flow);
            let l64 = latency(&w, &arch.with_bandwidth(64e9));
            let l128 = latency(&w, &arch.with_bandwidth(128e9));
            let l256 = latency(&w, &arch.with_bandwidth(256e9));
            assert!(l64 >= l128 && l128 >= l256, "{m} {flow:?}");
        }
    }
}

#[test]
fn os_saves_at_least_as_much_as_ws_on_llama() {
    for m in ["llama-3-8b", "llama-2-13b", "llama-3.2-3b"] {
        let s = shapes(m);
        let w = s.workloads(92, s.measured_bits("fp16").unwrap());
        for bw in [64e9, 128e9] {
            let arch = ArchConfig::default().with_bandwidth(bw);
            let ws = simulate_model(&w, &arch.with_dataflow(Dataflow::WeightStationary), &EnergyTable::default())
                .unwrap();
            let os = simulate_model(&w, &arch.with_dataflow(Dataflow::OutputStationary), &EnergyTable::default())
                .unwrap();
            assert!(os.savings.latency >= ws.savings.latency, "{m} at {bw}");
        }
    }
}

fn arch_strategy() -> impl Strategy<Value = ArchConfig> {
    (
        prop::sample::select(vec![8u64, 16, 32, 64, 128]),
        prop::sample::select(vec![8u64, 16, 32, 64, 128]),
        prop::sample::select(vec![16e9, 64e9, 128e9, 512e9]),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(r, c, bw, os, add)| {
            let mut a = ArchConfig::default().with_bandwidth(bw).with_dataflow(if os {
                Dataflow::OutputStationary
            } else {
                Dataflow::WeightStationary
            });
            a.R = r;
            a.C = c;
            a.composition = if add { Composition::Additive } else { Composition::Overlap };
            a
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn savings_bounded_by_weight_reduction(
        arch in arch_strategy(),
        ih in 1u64..300, wh in 1u64..600, ww in 1u64..600,
        bits in 1.0f64..16.0,
    ) {
        let r = simulate_model(&[(MatMulWorkload::new(ih, wh, ww, bits), 1)], &arch, &EnergyTable::default()).unwrap();
        let bound = 1.0 - bits / 16.0;
        prop_assert!(r.savings.latency >= -1e-12);
        prop_assert!(r.savings.latency <= bound + 1e-12);
        prop_assert!(r.savings.energy >= -1e-12);
        prop_assert!(r.savings.energy <= bound + 1e-12);
    }

    #[test]
    fn fewer_bits_never_cost_more(
        arch in arch_strategy(),
        ih in 1u64..300, wh in 1u64..600, ww in 1u64..600,
        a in 1.0f64..16.0, b in 1.0f64..16.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e = EnergyTable::default();
        let w = MatMulWorkload::new(ih, wh, ww, 16.0);
        let rl = simulate_model(&[(w.with_weight_bits(lo), 1)], &arch, &e).unwrap();
        let rh = simulate_model(&[(w.with_weight_bits(hi), 1)], &arch, &e).unwrap();
        prop_assert!(rl.compressed.total_latency <= rh.compressed.total_latency);
        prop_assert!(rl.compressed.energy.total() <= rh.compressed.energy.total());
    }

    #[test]
    fn additive_never_faster_than_overlap(
        arch in arch_strategy(),
        ih in 1u64..300, wh in 1u64..600, ww in 1u64..600,
    ) {
        let w = [(MatMulWorkload::new(ih, wh, ww, 11.0), 1)];
        let mut over = arch;
        over.composition = Composition::Overlap;
        let mut add = arch;
        add.composition = Composition::Additive;
        prop_assert!(latency(&w, &over) <= latency(&w, &add));
    }
}
