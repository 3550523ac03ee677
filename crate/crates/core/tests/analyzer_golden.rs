mod common;

use common::{label, load};
use pyxflow::{analyze, Rule, Verdict};

#[test]
fn dynamic_labelling_follows_each_assignment() {
    let (spec, prog) = load("dynamic_labelling");
    let report = analyze(&spec, &prog).unwrap();
    assert_eq!(report.verdict, Verdict::Secure, "{:?}", report.diagnostics);
    assert_eq!(report.label("a"), Some(&label(&spec, "(S,{A,S},{A})")));
}

#[test]
fn local_assignment_takes_the_source_label() {
    let (spec, prog) = load("assign_local");
    let report = analyze(&spec, &prog).unwrap();
    let want = label(&spec, "(S,{B,S},{B})");
    assert!(report.is_secure());
    assert_eq!(report.label("x"), Some(&want));
    assert_eq!(report.pc, want);
}

#[test]
fn global_assignment_downward_is_misuse() {
    let (spec, prog) = load("assign_global");
    let report = analyze(&spec, &prog).unwrap();
    assert_eq!(report.verdict, Verdict::Misuse);
    let d = report.first_diagnostic().unwrap();
    assert_eq!(d.rule, Rule::AssignGlobal);
    assert_eq!(d.loc.unwrap().line, 1);
    assert_eq!(report.pc, label(&spec, "(S,{B,S},{B})"));
}

#[test]
fn termination_channel_is_caught_after_the_loop() {
    let (spec, prog) = load("termination_leak");
    let report = analyze(&spec, &prog).unwrap();
    assert_eq!(report.verdict, Verdict::Misuse);
    let d = report.first_diagnostic().unwrap();
    assert_eq!(d.rule, Rule::AssignGlobal);
    assert_eq!(d.loc.unwrap().line, 4);
    assert_eq!(d.variable.as_deref(), Some("y"));
    assert_eq!(report.pc, label(&spec, "(S,{A,S},{A})"));
    assert_eq!(report.loops.len(), 1);
    assert_eq!(report.loops[0].passes, 1);
}

#[test]
fn backward_flow_shows_up_on_the_second_pass() {
    let (spec, prog) = load("backward_flow");
    let report = analyze(&spec, &prog).unwrap();
    assert_eq!(report.verdict, Verdict::Misuse);
    let d = report.first_diagnostic().unwrap();
    assert_eq!(d.loc.unwrap().line, 2);
    assert_eq!(d.variable.as_deref(), Some("y"));
    assert_eq!(d.loop_pass, Some(2));
}

#[test]
fn password_update_without_downgrade_is_rejected() {
    let (spec, prog) = load("password_update");
    let report = analyze(&spec, &prog).unwrap();
    assert_eq!(report.verdict, Verdict::Misuse);
    let d = report.first_diagnostic().unwrap();
    assert_eq!(d.rule, Rule::ReturnReader);
    assert_eq!(d.function.as_deref(), Some("Password_Update"));
}

#[test]
fn password_update_with_downgrade_is_accepted() {
    let (spec, prog) = load("password_update_downgrade");
    let report = analyze(&spec, &prog).unwrap();
    assert!(report.is_secure(), "{:?}", report.diagnostics);
    let call = report.calls.iter().find(|c| c.function == "Password_Update").unwrap();
    assert_eq!(call.locals.get("result"), Some(&label(&spec, "(B,{B},{A,B})")));
    assert_eq!(call.returned, Some(label(&spec, "(B,{A,B},{A,B})")));
    assert_eq!(report.label("success"), Some(&label(&spec, "(A,{A,B},{A,B})")));
}

#[test]
fn dh_mitm_reproduces_the_exchanged_labels() {
    let (spec, prog) = load("dh_mitm");
    let report = analyze(&spec, &prog).unwrap();
    assert!(report.is_secure(), "{:?}", report.diagnostics);
    let call = |name: &str| report.calls.iter().find(|c| c.function == name).unwrap();

    let m_a = call("creating_m_a");
    assert_eq!(m_a.locals.get("r"), Some(&label(&spec, "(A,{A,S},{A,B})")));
    assert_eq!(m_a.returned, Some(label(&spec, "(A,{A,B,S},{A,B})")));

    let m_i = call("creating_m_i");
    assert_eq!(m_i.locals.get("r"), Some(&label(&spec, "(I,{I,S},{A,B,I})")));
    assert_eq!(m_i.returned, Some(label(&spec, "(I,{A,I,S},{A,B,I})")));

    assert_eq!(call("creating_k_ai").returned, Some(label(&spec, "(A,{A,S},{A,B,I})")));
    assert_eq!(call("creating_k_bi").returned, Some(label(&spec, "(B,{B,S},{A,B,I})")));
}

#[test]
fn accepted_extras_stay_secure() {
    for name in ["loop_counter", "branch_local", "helper_call", "nested_loops"] {
        let (spec, prog) = load(name);
        let report = analyze(&spec, &prog).unwrap();
        assert!(report.is_secure(), "{name}: {:?}", report.diagnostics);
    }
}

#[test]
fn nested_loops_converge_well_below_the_cap() {
    let (spec, prog) = load("nested_loops");
    let report = analyze(&spec, &prog).unwrap();
    assert!(report.loops.len() >= 2);
    assert!(report.max_loop_passes() <= 3, "{:?}", report.loops);
}
