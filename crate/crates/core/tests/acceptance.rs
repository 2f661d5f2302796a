//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measurements. Tolerances are exact equality unless stated otherwise;
//! wall-clock budgets are asserted per criterion.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use takt_core::codegen::{
    count_decisions, emit_ada, lint_subset, lower, run_ir, EmitterConfig, IrProgram,
    TransitionBlock,
};
use takt_core::dtd::{BinOp, Expr, Value};
use takt_core::les::{
    self, lane_driver_reference, vote, LaneDriverParams, LaneInput, LaneState, VoterInput,
};
use takt_core::model::{flatten, parse_model_str, FlatModel};
use takt_core::sim::{self, run, StepInput};
use takt_core::testgen::{
    generate_reach, render_coverage_report, roundtrip, ReachSpec, SearchConfig, SearchResult,
    Strategy,
};
use takt_core::trace::{
    parse_tdf, project, run_conformance, to_tdf, write_eet, ComponentTrace, CycleIo, CycleVerdict,
    PortSig, SimExecutor,
};

fn budget(name: &str, start: Instant, limit: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "{name} exceeded its {limit:?} budget: {elapsed:?}"
    );
}

fn identity_model(delayed: bool) -> FlatModel {
    let kind = if delayed { "delayed" } else { "immediate" };
    let src = format!(
        "system Main {{\n\
           port in i0 : Int immediate;\n\
           port out o0 : Int immediate;\n\
           sub id : Id;\n\
           channel ci : Int from i0 to id.i;\n\
           channel co : Int from id.o to o0;\n\
         }}\n\
         component Id {{\n\
           port in i : Int immediate;\n\
           port out o : Int {kind};\n\
           automaton {{ state S; init S; trans S -> S {{ in: i?x; out: o!x; }} }}\n\
         }}"
    );
    flatten(&parse_model_str(&src, "t").unwrap()).unwrap()
}

/// Criterion 1: delayed-identity streams shift by one cycle, immediate
/// identities are unshifted, over 100 random 50-cycle sequences.
#[test]
fn criterion_1_semantics_laws() {
    let start = Instant::now();
    let delayed = identity_model(true);
    let immediate = identity_model(false);
    let mut rng = StdRng::seed_from_u64(101);
    for _ in 0..100 {
        let inputs: Vec<Option<i64>> = (0..50)
            .map(|_| rng.random_bool(0.8).then(|| rng.random_range(-1000..1000)))
            .collect();
        let stimuli: Vec<StepInput> = inputs
            .iter()
            .map(|v| {
                let mut m = StepInput::new();
                if let Some(v) = v {
                    m.insert("i0".into(), Value::Int(*v));
                }
                m
            })
            .collect();

        let eet = run(&delayed, &stimuli).unwrap();
        for (t, cycle) in eet.cycles.iter().enumerate() {
            let out: Option<&Value> = cycle.iter().find(|(e, _)| e == "o0").map(|(_, v)| v);
            let expected = if t == 0 { None } else { inputs[t - 1] };
            assert_eq!(out, expected.map(Value::Int).as_ref(), "delayed cycle {t}");
        }

        let eet = run(&immediate, &stimuli).unwrap();
        for (t, cycle) in eet.cycles.iter().enumerate() {
            let out: Option<&Value> = cycle.iter().find(|(e, _)| e == "o0").map(|(_, v)| v);
            assert_eq!(
                out,
                inputs[t].map(Value::Int).as_ref(),
                "immediate cycle {t}"
            );
        }
    }
    budget("criterion 1", start, Duration::from_secs(1));
    println!("criterion 1: PASS — identity stream laws over 100 random 50-cycle runs");
}

/// Selection by rank counting: an oracle for the voter that never sorts.
fn vote_oracle(values: &[f64]) -> f64 {
    let rank_of = |k: usize| -> f64 {
        for (i, &x) in values.iter().enumerate() {
            let mut rank = 0;
            for (j, &y) in values.iter().enumerate() {
                if y < x || (y == x && j < i) {
                    rank += 1;
                }
            }
            if rank == k {
                return x;
            }
        }
        unreachable!("total order over finite values")
    };
    match values.len() {
        4 => (rank_of(1) + rank_of(2)) / 2.0,
        3 => rank_of(1),
        2 => (rank_of(0) + rank_of(1)) / 2.0,
        1 => rank_of(0),
        _ => unreachable!("lane count is 1..=4"),
    }
}

/// Criterion 2: the voting reference matches a rank-selection oracle on
/// 10^4 random inputs per lane count, exactly, plus the two pinned cases.
#[test]
fn criterion_2_voting() {
    let start = Instant::now();
    let lanes = |values: &[f64]| {
        VoterInput::new(values.to_vec(), (1..=values.len() as u8).collect()).unwrap()
    };
    assert_eq!(vote(&lanes(&[1.0, 2.0, 3.0, 10.0])), 2.5);
    assert_eq!(vote(&lanes(&[1.0, 5.0, 9.0])), 5.0);
    let mut rng = StdRng::seed_from_u64(202);
    for count in 1..=4usize {
        for _ in 0..10_000 {
            let values: Vec<f64> = (0..count)
                .map(|_| (rng.random_range(-4000..4000) as f64) / 8.0)
                .collect();
            let got = vote(&lanes(&values));
            let want = vote_oracle(&values);
            assert!(
                got.to_bits() == want.to_bits(),
                "vote({values:?}) = {got}, oracle = {want}"
            );
        }
    }
    budget("criterion 2", start, Duration::from_secs(1));
    println!("criterion 2: PASS — vote matches the rank oracle on 4 x 10^4 inputs");
}

fn signal(input: LaneInput) -> Value {
    match input {
        LaneInput::Faulty => Value::Ctor("Faulty".into(), vec![]),
        LaneInput::Ok => Value::Ctor("Ok".into(), vec![]),
    }
}

/// Criterion 3: the bundled lane-driver model agrees with the counter
/// reference on every faulty/ok word of length <= 8 (510 words) at K = 3.
#[test]
fn criterion_3_lane_driver_exhaustive() {
    let start = Instant::now();
    let fm = les::lane_driver().unwrap();
    let d = fm.instance_index("d").unwrap();
    let automaton = fm.instance_type(d).automaton().unwrap();

    // the initial configuration is Active with a zero counter
    let s0 = sim::init(&fm).unwrap();
    assert_eq!(automaton.states[s0.instances[d].control], "Active");
    assert_eq!(s0.instances[d].vars[0], Value::Int(0));

    let params = LaneDriverParams {
        k_deactivate: 3,
        k_reactivate: 3,
    };
    let mut words = 0usize;
    for len in 1..=8usize {
        for bits in 0..(1u32 << len) {
            let word: Vec<LaneInput> = (0..len)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        LaneInput::Faulty
                    } else {
                        LaneInput::Ok
                    }
                })
                .collect();
            let stimuli: Vec<StepInput> = word
                .iter()
                .map(|w| {
                    let mut m = StepInput::new();
                    m.insert("s".into(), signal(*w));
                    m
                })
                .collect();
            let reference = lane_driver_reference(params, &word);
            let (eet, _, final_state) = sim::run_detailed(&fm, &stimuli).unwrap();
            let model_state = automaton.states[final_state.instances[d].control].as_str();
            let want_state = match reference.final_state {
                LaneState::Active => "Active",
                LaneState::Deactivated => "Deactivated",
            };
            assert_eq!(model_state, want_state, "word {word:?}");
            for (t, active) in reference.activation.iter().enumerate() {
                let got = eet.cycles[t]
                    .iter()
                    .find(|(e, _)| e == "act")
                    .map(|(_, v)| v.clone());
                assert_eq!(got, Some(Value::Bool(*active)), "word {word:?} cycle {t}");
            }
            words += 1;
        }
    }
    assert_eq!(words, 510);
    budget("criterion 3", start, Duration::from_secs(5));
    println!("criterion 3: PASS — model and reference agree on all {words} words");
}

fn random_value(ty: &takt_core::dtd::TypeRef, rng: &mut StdRng) -> Value {
    use takt_core::dtd::TypeRef;
    match ty {
        TypeRef::Int => Value::Int(rng.random_range(-100..100)),
        TypeRef::Float => Value::Float((rng.random_range(-800..800) as f64) / 8.0),
        TypeRef::Bool => Value::Bool(rng.random_bool(0.5)),
        TypeRef::Named(n) if n == "SensorVal" => match rng.random_range(0..3) {
            0 => Value::Ctor("Defect".into(), vec![]),
            1 => Value::Ctor("Busy".into(), vec![]),
            _ => Value::Ctor(
                "Ready".into(),
                vec![Value::Float((rng.random_range(-800..800) as f64) / 8.0)],
            ),
        },
        TypeRef::Named(n) if n == "Signal" => {
            if rng.random_bool(0.5) {
                Value::Ctor("Faulty".into(), vec![])
            } else {
                Value::Ctor("Ok".into(), vec![])
            }
        }
        TypeRef::Named(n) => panic!("no generator for type {n}"),
    }
}

fn random_stimuli(fm: &FlatModel, cycles: usize, rng: &mut StdRng) -> Vec<StepInput> {
    (0..cycles)
        .map(|_| {
            let mut m = StepInput::new();
            for oi in &fm.open_inputs {
                if rng.random_bool(0.8) {
                    m.insert(oi.name.clone(), random_value(&oi.ty, rng));
                }
            }
            m
        })
        .collect()
}

/// Criterion 4: interpreting the lowered program coincides with simulating
/// the source model, cycle for cycle, on all three bundled models x 200
/// random 30-cycle sequences.
#[test]
fn criterion_4_codegen_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(404);
    for (name, fm) in les::all_models() {
        let p = lower(&fm);
        for trial in 0..200 {
            let stimuli = random_stimuli(&fm, 30, &mut rng);
            let sim_eet = run(&fm, &stimuli).unwrap();
            let ir_eet = run_ir(&p, &stimuli).unwrap();
            assert_eq!(sim_eet, ir_eet, "{name} trial {trial}");
        }
    }
    budget("criterion 4", start, Duration::from_secs(30));
    println!("criterion 4: PASS — run_ir = sim.run on 3 models x 200 runs x 30 cycles");
}

/// Criterion 5: the search finds Deactivated at depth 3, and independent
/// exhaustive enumeration confirms 3 is minimal.
#[test]
fn criterion_5_test_generation_minimal_depth() {
    let start = Instant::now();
    let fm = les::lane_driver().unwrap();
    let mut domains = BTreeMap::new();
    domains.insert(
        "s".to_string(),
        vec![
            Some(Value::Ctor("Faulty".into(), vec![])),
            Some(Value::Ctor("Ok".into(), vec![])),
        ],
    );
    let cfg = SearchConfig {
        max_depth: 8,
        input_domains: domains,
        strategy: Strategy::Bfs,
        prune_visited: true,
    };
    let spec = ReachSpec::state("d", "Deactivated");
    let SearchResult::Found { eet, depth } = generate_reach(&fm, &spec, &cfg).unwrap() else {
        panic!("witness expected");
    };
    assert_eq!(depth, 3);
    assert_eq!(eet.len(), 3);

    // brute force: re-simulate every word up to length 3
    let d = fm.instance_index("d").unwrap();
    let automaton = fm.instance_type(d).automaton().unwrap();
    let deactivated = automaton
        .states
        .iter()
        .position(|s| s == "Deactivated")
        .unwrap();
    let mut minimal = None;
    'depths: for len in 1..=3usize {
        for bits in 0..(1u32 << len) {
            let stimuli: Vec<StepInput> = (0..len)
                .map(|i| {
                    let mut m = StepInput::new();
                    let v = if bits >> i & 1 == 1 {
                        LaneInput::Faulty
                    } else {
                        LaneInput::Ok
                    };
                    m.insert("s".into(), signal(v));
                    m
                })
                .collect();
            let (_, _, final_state) = sim::run_detailed(&fm, &stimuli).unwrap();
            if final_state.instances[d].control == deactivated {
                minimal = Some(len);
                break 'depths;
            }
        }
    }
    assert_eq!(minimal, Some(3), "exhaustive enumeration must agree");
    budget("criterion 5", start, Duration::from_secs(5));
    println!("criterion 5: PASS — Deactivated reached at depth 3, confirmed minimal");
}

/// Criterion 6: the roundtrip loop reaches full transition coverage on the
/// lane driver within depth 12 with at most 6 traces, reproducibly.
#[test]
fn criterion_6_roundtrip_full_coverage() {
    let start = Instant::now();
    let fm = les::lane_driver().unwrap();
    let mut domains = BTreeMap::new();
    domains.insert(
        "s".to_string(),
        vec![
            Some(Value::Ctor("Faulty".into(), vec![])),
            Some(Value::Ctor("Ok".into(), vec![])),
        ],
    );
    let cfg = SearchConfig {
        max_depth: 12,
        input_domains: domains,
        strategy: Strategy::Bfs,
        prune_visited: true,
    };
    let render = |suite: &[takt_core::trace::Eet], report| {
        let mut out = String::new();
        for eet in suite {
            out.push_str(&write_eet(eet, &fm));
        }
        out.push_str(&render_coverage_report(report));
        out
    };
    let (suite, report) = roundtrip(&fm, &cfg, 1.0).unwrap();
    assert_eq!(report.transition_coverage, 1.0);
    assert!(suite.len() <= 6, "suite has {} traces", suite.len());
    let first = render(&suite, &report);

    let (suite2, report2) = roundtrip(&fm, &cfg, 1.0).unwrap();
    assert_eq!(
        first,
        render(&suite2, &report2),
        "re-run must be byte-identical"
    );
    budget("criterion 6", start, Duration::from_secs(60));
    println!(
        "criterion 6: PASS — 100% transition coverage with {} traces, reproducible",
        suite.len()
    );
}

/// Criterion 7: parse_tdf inverts to_tdf on 1000 randomized component
/// traces, and the documented line round-trips byte-exactly.
#[test]
fn criterion_7_tdf_round_trip() {
    let start = Instant::now();
    let defs =
        takt_core::dtd::Defs::parse("data SensorVal = Defect | Busy | Ready(Float);").unwrap();
    let mut sig = PortSig::default();
    use takt_core::dtd::TypeRef;
    sig.inputs.insert("a1".into(), TypeRef::Float);
    sig.inputs.insert("n".into(), TypeRef::Int);
    sig.inputs
        .insert("sv".into(), TypeRef::Named("SensorVal".into()));
    sig.outputs.insert("cons".into(), TypeRef::Float);
    sig.outputs.insert("flag".into(), TypeRef::Bool);

    let line = "a1?2.5;cons!2.5;\n";
    let parsed = parse_tdf(line, &sig, &defs).unwrap();
    assert_eq!(
        to_tdf(&parsed),
        line,
        "documented line must round-trip byte-exactly"
    );

    let mut rng = StdRng::seed_from_u64(707);
    for _ in 0..1000 {
        let cycles: Vec<CycleIo> = (0..rng.random_range(0..6))
            .map(|_| {
                let mut io = CycleIo::default();
                for (port, ty) in &sig.inputs {
                    if rng.random_bool(0.6) {
                        io.inputs.insert(port.clone(), random_value(ty, &mut rng));
                    }
                }
                for (port, ty) in &sig.outputs {
                    if rng.random_bool(0.6) {
                        io.expected.insert(port.clone(), random_value(ty, &mut rng));
                    }
                }
                io
            })
            .collect();
        let t = ComponentTrace {
            component: String::new(),
            cycles,
        };
        let text = to_tdf(&t);
        let back = parse_tdf(&text, &sig, &defs).unwrap();
        assert_eq!(back.cycles, t.cycles);
        assert_eq!(to_tdf(&back), text);
    }
    budget("criterion 7", start, Duration::from_secs(1));
    println!("criterion 7: PASS — 1000 random traces round-trip through TDF");
}

fn perturb(v: &Value) -> Value {
    match v {
        Value::Int(n) => Value::Int(n + 1),
        Value::Float(x) => Value::Float(x + 1.0),
        Value::Bool(b) => Value::Bool(!b),
        Value::Ctor(name, args) => {
            if args.is_empty() {
                // swap to a sibling constructor; the bundled types make
                // this unambiguous
                let other = if name == "Faulty" { "Ok" } else { "Faulty" };
                Value::Ctor(other.to_string(), vec![])
            } else {
                let mut args = args.clone();
                args[0] = perturb(&args[0]);
                Value::Ctor(name.clone(), args)
            }
        }
    }
}

/// Criterion 8: projected traces replay all-Pass against their own
/// component, and perturbing one expected output flips exactly that cycle,
/// over 200 randomized trials.
#[test]
fn criterion_8_conformance() {
    let start = Instant::now();
    let models = les::all_models();
    let mut rng = StdRng::seed_from_u64(808);
    let mut trials = 0;
    while trials < 200 {
        let (_, fm) = &models[rng.random_range(0..models.len())];
        let stimuli = random_stimuli(fm, rng.random_range(1..10), &mut rng);
        let eet = run(fm, &stimuli).unwrap();
        let inst = rng.random_range(0..fm.instances.len());
        let path = fm.instances[inst].path.clone();
        let tr = project(&eet, &path, fm).unwrap();

        let mut exec = SimExecutor::for_component(fm, &path).unwrap();
        let verdict = run_conformance(&mut exec, &tr);
        assert!(verdict.pass, "self-conformance of {path}");

        // pick a random expected output to perturb, if any exists
        let candidates: Vec<(usize, String)> = tr
            .cycles
            .iter()
            .enumerate()
            .flat_map(|(t, c)| c.expected.keys().map(move |p| (t, p.clone())))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let (cycle, port) = candidates[rng.random_range(0..candidates.len())].clone();
        let mut broken = tr.clone();
        let old = broken.cycles[cycle].expected[&port].clone();
        broken.cycles[cycle]
            .expected
            .insert(port.clone(), perturb(&old));

        let mut exec = SimExecutor::for_component(fm, &path).unwrap();
        let verdict = run_conformance(&mut exec, &broken);
        assert!(!verdict.pass);
        for (t, v) in verdict.per_cycle.iter().enumerate() {
            if t == cycle {
                assert!(
                    matches!(v, CycleVerdict::Fail { port: p, .. } if *p == port),
                    "cycle {t} of {path} should fail on {port}, got {v:?}"
                );
            } else {
                assert_eq!(*v, CycleVerdict::Pass, "cycle {t} of {path}");
            }
        }
        trials += 1;
    }
    budget("criterion 8", start, Duration::from_secs(5));
    println!("criterion 8: PASS — 200 projected replays, single-cycle fail isolation");
}

/// Test count of one transition block, mirroring the emitted conjuncts:
/// presence tests, pattern match tests, and the guard with its
/// short-circuit operators.
fn test_count(block: &TransitionBlock) -> usize {
    fn match_tests(p: &takt_core::dtd::Pattern) -> usize {
        use takt_core::dtd::Pattern;
        match p {
            Pattern::Wildcard | Pattern::Var(_) => 0,
            Pattern::Literal(_) => 1,
            Pattern::Ctor(_, subs) => 1 + subs.iter().map(match_tests).sum::<usize>(),
        }
    }
    fn shortcuts(e: &Expr) -> usize {
        match e {
            Expr::Binary(op, a, b) => {
                let own = usize::from(matches!(op, BinOp::And | BinOp::Or));
                own + shortcuts(a) + shortcuts(b)
            }
            Expr::Unary(_, a) => shortcuts(a),
            Expr::If(c, t, f) => shortcuts(c) + shortcuts(t) + shortcuts(f),
            Expr::Call(_, args) | Expr::Ctor(_, args) => args.iter().map(shortcuts).sum(),
            Expr::Literal(_) | Expr::Var(_) => 0,
        }
    }
    let presence = block.pattern_tests.len();
    let matches: usize = block
        .pattern_tests
        .iter()
        .map(|(_, p)| match_tests(p))
        .sum();
    let guard = block.guard.as_ref().map(|g| 1 + shortcuts(g)).unwrap_or(0);
    presence + matches + guard
}

fn emission(p: &IrProgram, split: bool) -> Vec<(String, String)> {
    emit_ada(
        p,
        &EmitterConfig {
            helper_split: split,
            package_prefix: String::new(),
        },
    )
    .unwrap()
}

/// Criterion 9: the lane-driver emission equals the checked-in golden files
/// byte for byte in both modes, stays inside the language subset, and in
/// split mode no state-machine subprogram exceeds 1 + max test count
/// decisions.
#[test]
fn criterion_9_emitted_code_checks() {
    let start = Instant::now();
    let fm = les::lane_driver().unwrap();
    let p = lower(&fm);
    for (mode, split) in [("plain", false), ("split", true)] {
        let files = emission(&p, split);
        for (name, text) in &files {
            let path = format!("{}/tests/golden/{mode}/{name}", env!("CARGO_MANIFEST_DIR"));
            if std::env::var_os("UPDATE_GOLDEN").is_some() {
                std::fs::create_dir_all(std::path::Path::new(&path).parent().unwrap()).unwrap();
                std::fs::write(&path, text).unwrap();
                continue;
            }
            let golden = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("missing golden {path}: {e}"));
            assert_eq!(text, &golden, "golden mismatch for {mode}/{name}");
        }
        for (name, text) in &files {
            let findings = lint_subset(text);
            assert!(findings.is_empty(), "{mode}/{name}: {findings:?}");
        }
    }

    // decision bound: split-mode subprograms of component and system
    // packages stay within 1 + the largest transition test count (the
    // types package carries modeler-written functions and is exempt)
    for (name, fm) in les::all_models() {
        let p = lower(&fm);
        let max_tests = p
            .components
            .iter()
            .flat_map(|c| c.transitions.iter())
            .map(test_count)
            .max()
            .unwrap_or(0);
        let bound = 1 + max_tests;
        let types_pkg_prefix = format!("{}_types", p.system.name).to_ascii_lowercase();
        for (file, text) in emission(&p, true) {
            if file.starts_with(&types_pkg_prefix) {
                continue;
            }
            for (subprogram, decisions) in count_decisions(&text) {
                assert!(
                    decisions <= bound,
                    "{name}/{file}: {subprogram} has {decisions} decisions, bound {bound}"
                );
            }
        }
    }
    budget("criterion 9", start, Duration::from_secs(1));
    println!("criterion 9: PASS — goldens byte-equal, subset clean, decision bound holds");
}
