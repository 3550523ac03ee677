mod common;

use common::gen::{generate, GenConfig, Loops};
use proptest::prelude::*;
use pyxflow::interp::{run, run_with, Outcome, RunOptions, Store, Value};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn inputs(spec: &pyxflow::ProgramSpec, bits: u32) -> Store {
    Store::from_values(
        spec.global_names()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, Value::Int(((bits >> i) & 1) as i64))),
    )
}

#[test]
fn dynamic_labelling_program_runs() {
    let (_, prog) = common::load("dynamic_labelling");
    let init = Store::from_values([("x", Value::Int(3)), ("y", Value::Int(0)), ("z", Value::Int(9))]);
    let out = run(&prog, init, 100);
    assert!(out.is_terminated());
    assert_eq!(out.store().get("y"), Some(&Value::Int(3)));
    assert_eq!(out.store().get("a"), Some(&Value::Int(9)));
}

#[test]
fn dh_exchange_agrees_on_keys() {
    let (_, prog) = common::load("dh_mitm");
    let init = Store::from_values([
        ("g", Value::Int(5)),
        ("p", Value::Int(23)),
        ("a", Value::Int(6)),
        ("b", Value::Int(15)),
        ("i", Value::Int(4)),
    ]);
    let out = run(&prog, init, 100_000);
    assert!(out.is_terminated());
    let get = |n: &str| out.store().get(n).cloned().unwrap();
    assert_eq!(get("m_a"), Value::Int(8));
    assert_eq!(get("m_b"), Value::Int(19));
    // g^(a*i) mod p on both ends of the intercepted link.
    assert_eq!(get("k_ai"), Value::Int(modpow(5, 6 * 4, 23)));
    assert_eq!(get("k_bi"), Value::Int(modpow(5, 15 * 4, 23)));
}

fn modpow(base: i64, exp: i64, m: i64) -> i64 {
    (0..exp).fold(1, |acc, _| acc * base % m)
}

#[test]
fn trace_lists_each_step() {
    let (_, prog) = common::load("termination_leak");
    let init = Store::from_values([("x", Value::Int(1)), ("y", Value::Int(0))]);
    let run = run_with(&prog, init, &RunOptions { budget: 100, trace: true });
    let actions: Vec<&str> = run.trace.iter().map(|t| t.action.as_str()).collect();
    assert_eq!(actions, ["y = 0", "while -> false", "y = 1"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), bits in 0u32..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate(&mut rng, GenConfig { loops: Loops::Nested, ..GenConfig::default() });
        let a = run(&g.program, inputs(&g.spec, bits), 2_000);
        let b = run(&g.program, inputs(&g.spec, bits), 2_000);
        prop_assert_eq!(a.store().bindings(), b.store().bindings());
        prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b));
    }

    #[test]
    fn larger_budgets_keep_terminated_stores(seed in any::<u64>(), bits in 0u32..16, extra in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate(&mut rng, GenConfig::default());
        let first = run_with(&g.program, inputs(&g.spec, bits), &RunOptions { budget: 2_000, trace: false });
        if let Outcome::Terminated(store) = &first.outcome {
            let again = run(&g.program, inputs(&g.spec, bits), first.steps + extra);
            prop_assert!(again.is_terminated());
            prop_assert_eq!(again.store().bindings(), store.bindings());
        }
    }

    #[test]
    fn callee_writes_to_parameters_stay_local(v in -50i64..50) {
        let prog = pyxflow::parse("def bump(a):\n    a = a * 2 + 1\n    return a\nr = bump(v)\n").unwrap();
        let out = run(&prog, Store::from_values([("v", Value::Int(v))]), 100);
        prop_assert_eq!(out.store().get("v"), Some(&Value::Int(v)));
        prop_assert_eq!(out.store().get("r"), Some(&Value::Int(v * 2 + 1)));
    }
}
