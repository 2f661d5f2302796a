//! The bundled leading edge system case study: the model sources for the
//! quadruplex sensor voting plane, the control law, and the lane driver,
//! plus independent reference oracles for the voting and control-block
//! arithmetic used in tests.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::diag::Diagnostics;
use crate::model::{flatten, parse_model, FlatModel, MapLoader, Model};

pub const LES_DTD: &str = include_str!("../../../examples/les/les.dtd");
pub const LANE_DRIVER_MODEL: &str = include_str!("../../../examples/les/lane_driver.model");
pub const VOTER_PLANE_MODEL: &str = include_str!("../../../examples/les/voter_plane.model");
pub const CONTROL_LAW_MODEL: &str = include_str!("../../../examples/les/control_law.model");

fn loader() -> MapLoader {
    let mut files = BTreeMap::new();
    files.insert("les.dtd".to_string(), LES_DTD.to_string());
    MapLoader { files }
}

pub fn parse_les_model(src: &str, name: &str) -> Result<Model, Diagnostics> {
    parse_model(src, name, &mut loader())
}

pub fn lane_driver() -> Result<FlatModel, Diagnostics> {
    flatten(&parse_les_model(LANE_DRIVER_MODEL, "lane_driver.model")?)
}

pub fn voter_plane() -> Result<FlatModel, Diagnostics> {
    flatten(&parse_les_model(VOTER_PLANE_MODEL, "voter_plane.model")?)
}

pub fn control_law() -> Result<FlatModel, Diagnostics> {
    flatten(&parse_les_model(CONTROL_LAW_MODEL, "control_law.model")?)
}

/// All three bundled models, for suites that sweep the case study.
pub fn all_models() -> Vec<(&'static str, FlatModel)> {
    vec![
        (
            "lane_driver",
            lane_driver().expect("bundled model is consistent"),
        ),
        (
            "voter_plane",
            voter_plane().expect("bundled model is consistent"),
        ),
        (
            "control_law",
            control_law().expect("bundled model is consistent"),
        ),
    ]
}

/// Lane driver text with configurable deactivation/reactivation thresholds.
/// `lane_driver_model_text(3, 3)` equals the bundled file.
pub fn lane_driver_model_text(k_deactivate: u32, k_reactivate: u32) -> String {
    assert!(k_deactivate >= 1 && k_reactivate >= 1);
    let kd = k_deactivate - 1;
    let kr = k_reactivate - 1;
    format!(
        "-- A single lane driver: deactivates its lane after {k_deactivate} consecutive faulty\n\
         -- readings and reactivates it after {k_reactivate} consecutive good ones.\n\
         \n\
         data Signal = Faulty | Ok;\n\
         \n\
         component Driver {{\n\
         \x20 port in s : Signal immediate;\n\
         \x20 port out act : Bool immediate;\n\
         \x20 automaton {{\n\
         \x20   state Active, Deactivated;\n\
         \x20   init Active;\n\
         \x20   var n : Int = 0;\n\
         \x20   trans Active -> Active {{ in: s?Ok; set: n := 0; out: act!true; }}\n\
         \x20   trans Active -> Active {{ in: s?Faulty; guard: n < {kd}; set: n := n + 1; out: act!true; }}\n\
         \x20   trans Active -> Deactivated {{ in: s?Faulty; guard: n >= {kd}; set: n := 0; out: act!false; }}\n\
         \x20   trans Deactivated -> Deactivated {{ in: s?Faulty; set: n := 0; out: act!false; }}\n\
         \x20   trans Deactivated -> Deactivated {{ in: s?Ok; guard: n < {kr}; set: n := n + 1; out: act!false; }}\n\
         \x20   trans Deactivated -> Active {{ in: s?Ok; guard: n >= {kr}; set: n := 0; out: act!true; }}\n\
         \x20 }}\n\
         }}\n\
         \n\
         system LaneDriver {{\n\
         \x20 port in s : Signal immediate;\n\
         \x20 port out act : Bool immediate;\n\
         \x20 sub d : Driver;\n\
         \x20 channel cin : Signal from s to d.s;\n\
         \x20 channel cout : Bool from d.act to act;\n\
         }}\n"
    )
}

/// Input to one consolidation step: the values of the active lanes.
#[derive(Debug, Clone)]
pub struct VoterInput {
    pub values: Vec<f64>,
    pub active_lanes: BTreeSet<u8>,
}

impl VoterInput {
    pub fn new(values: Vec<f64>, active_lanes: BTreeSet<u8>) -> Result<VoterInput, String> {
        if values.is_empty() || values.len() > 4 {
            return Err("between 1 and 4 lane values required".into());
        }
        if values.len() != active_lanes.len() {
            return Err("one value per active lane required".into());
        }
        if active_lanes.iter().any(|l| !(1..=4).contains(l)) {
            return Err("lane numbers are 1..=4".into());
        }
        Ok(VoterInput {
            values,
            active_lanes,
        })
    }
}

/// Consolidates redundant lane values: quadruplex takes the mean of the two
/// middle values after sorting, triplex the middle value, duplex the
/// arithmetic mean, and a single lane passes through.
pub fn vote(input: &VoterInput) -> f64 {
    let mut v = input.values.clone();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite lane values"));
    match v.len() {
        4 => (v[1] + v[2]) / 2.0,
        3 => v[1],
        2 => (v[0] + v[1]) / 2.0,
        1 => v[0],
        _ => unreachable!("validated lane count"),
    }
}

/// One rate limiter step: move from `prev` towards `demand`, by at most `r`.
pub fn rate_limit(prev: f64, demand: f64, r: f64) -> f64 {
    assert!(r > 0.0);
    prev + (demand - prev).clamp(-r, r)
}

/// One limited integrator step.
pub fn integrate(acc: f64, x: f64, lo: f64, hi: f64) -> f64 {
    (acc + x).clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneInput {
    Faulty,
    Ok,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneState {
    Active,
    Deactivated,
}

#[derive(Debug, Clone, Copy)]
pub struct LaneDriverParams {
    pub k_deactivate: u32,
    pub k_reactivate: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneDriverRun {
    pub final_state: LaneState,
    /// Whether the lane counts as active after each processed input.
    pub activation: Vec<bool>,
}

/// Counter semantics of the lane driver, independent of the automaton model:
/// while active, faulty readings increment a streak counter and a good one
/// resets it; the lane deactivates when the streak reaches `k_deactivate`.
/// Deactivated lanes behave symmetrically with good readings and
/// `k_reactivate`.
pub fn lane_driver_reference(params: LaneDriverParams, inputs: &[LaneInput]) -> LaneDriverRun {
    assert!(params.k_deactivate >= 1 && params.k_reactivate >= 1);
    let mut state = LaneState::Active;
    let mut streak = 0u32;
    let mut activation = Vec::with_capacity(inputs.len());
    for &input in inputs {
        match state {
            LaneState::Active => match input {
                LaneInput::Ok => streak = 0,
                LaneInput::Faulty => {
                    streak += 1;
                    if streak == params.k_deactivate {
                        state = LaneState::Deactivated;
                        streak = 0;
                    }
                }
            },
            LaneState::Deactivated => match input {
                LaneInput::Faulty => streak = 0,
                LaneInput::Ok => {
                    streak += 1;
                    if streak == params.k_reactivate {
                        state = LaneState::Active;
                        streak = 0;
                    }
                }
            },
        }
        activation.push(state == LaneState::Active);
    }
    LaneDriverRun {
        final_state: state,
        activation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtd::Value;
    use crate::sim::{run, StepInput};

    fn lanes(values: &[f64]) -> VoterInput {
        let active: BTreeSet<u8> = (1..=values.len() as u8).collect();
        VoterInput::new(values.to_vec(), active).unwrap()
    }

    #[test]
    fn bundled_models_parse_check_and_flatten() {
        for (name, fm) in all_models() {
            assert!(!fm.instances.is_empty(), "{name}");
        }
    }

    #[test]
    fn generated_lane_driver_text_matches_the_bundled_file() {
        assert_eq!(lane_driver_model_text(3, 3), LANE_DRIVER_MODEL);
    }

    #[test]
    fn voter_plane_flattens_to_the_documented_instances() {
        let fm = voter_plane().unwrap();
        let paths: Vec<&str> = fm.instances.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(
            paths,
            vec![
                "splitter",
                "monitor/d1",
                "monitor/d2",
                "monitor/d3",
                "monitor/d4",
                "voter"
            ]
        );
        let chans: Vec<&str> = fm.channels.iter().map(|c| c.name.as_str()).collect();
        for expected in ["v1", "v2", "v3", "v4"] {
            assert!(chans.contains(&expected), "missing {expected} in {chans:?}");
        }
        let opens: Vec<&str> = fm.open_inputs.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(opens, vec!["a1", "a2", "a3", "a4"]);
    }

    #[test]
    fn quadruplex_vote_is_the_mean_of_the_middle_values() {
        assert_eq!(vote(&lanes(&[1.0, 2.0, 3.0, 10.0])), 2.5);
    }

    #[test]
    fn triplex_vote_is_the_median() {
        assert_eq!(vote(&lanes(&[9.0, 1.0, 5.0])), 5.0);
    }

    #[test]
    fn all_equal_lanes_vote_to_that_value() {
        for n in 1..=4 {
            let v = vec![4.25; n];
            assert_eq!(vote(&lanes(&v)), 4.25);
        }
    }

    #[test]
    fn vote_never_extrapolates_and_ignores_lane_order() {
        // deterministic pseudo-random inputs; consolidation must stay in
        // [min, max] and be insensitive to permutation
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            ((seed % 16001) as f64 - 8000.0) / 16.0
        };
        for n in 1..=4usize {
            for _ in 0..500 {
                let values: Vec<f64> = (0..n).map(|_| next()).collect();
                let v = vote(&lanes(&values));
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(v >= lo && v <= hi, "vote({values:?}) = {v}");
                let mut rotated = values.clone();
                rotated.rotate_left(1);
                assert_eq!(v.to_bits(), vote(&lanes(&rotated)).to_bits());
                let mut reversed = values.clone();
                reversed.reverse();
                assert_eq!(v.to_bits(), vote(&lanes(&reversed)).to_bits());
            }
        }
    }

    #[test]
    fn rate_limit_clamps_the_step() {
        assert_eq!(rate_limit(0.0, 10.0, 2.0), 2.0);
        assert_eq!(rate_limit(5.0, 5.0, 2.0), 5.0);
        assert_eq!(rate_limit(0.0, 1.5, 2.0), 1.5);
        assert_eq!(rate_limit(0.0, -10.0, 2.0), -2.0);
        // the step never exceeds the limit in magnitude
        let mut prev = 0.0;
        for demand in [100.0, -3.0, 7.5, 0.0, -50.0] {
            let out = rate_limit(prev, demand, 2.0);
            assert!((out - prev).abs() <= 2.0);
            prev = out;
        }
    }

    #[test]
    fn reference_deactivates_after_three_faulty() {
        let p = LaneDriverParams {
            k_deactivate: 3,
            k_reactivate: 3,
        };
        let run = lane_driver_reference(p, &[LaneInput::Faulty; 3]);
        assert_eq!(run.final_state, LaneState::Deactivated);
        assert_eq!(run.activation, vec![true, true, false]);
    }

    #[test]
    fn a_good_reading_resets_the_streak() {
        let p = LaneDriverParams {
            k_deactivate: 3,
            k_reactivate: 3,
        };
        let run = lane_driver_reference(
            p,
            &[
                LaneInput::Faulty,
                LaneInput::Faulty,
                LaneInput::Ok,
                LaneInput::Faulty,
            ],
        );
        assert_eq!(run.final_state, LaneState::Active);
    }

    #[test]
    fn threshold_one_toggles_each_cycle() {
        let p = LaneDriverParams {
            k_deactivate: 1,
            k_reactivate: 1,
        };
        let run = lane_driver_reference(p, &[LaneInput::Faulty, LaneInput::Ok, LaneInput::Faulty]);
        assert_eq!(run.activation, vec![false, true, false]);
    }

    #[test]
    fn voter_plane_consolidates_the_documented_example() {
        let fm = voter_plane().unwrap();
        let mut stim = StepInput::new();
        stim.insert("a1".into(), Value::Float(1.0));
        stim.insert("a2".into(), Value::Float(2.0));
        stim.insert("a3".into(), Value::Float(3.0));
        stim.insert("a4".into(), Value::Float(10.0));
        let eet = run(&fm, &[stim]).unwrap();
        assert!(
            eet.cycles[0].contains(&("cons".to_string(), Value::Float(2.5))),
            "{:?}",
            eet.cycles[0]
        );
    }

    #[test]
    fn triplex_voting_after_a_lane_drops_out() {
        let fm = voter_plane().unwrap();
        // three out-of-range cycles deactivate lane 4
        let mut stimuli: Vec<StepInput> = (0..3)
            .map(|_| {
                let mut m = StepInput::new();
                m.insert("a1".into(), Value::Float(0.0));
                m.insert("a2".into(), Value::Float(0.0));
                m.insert("a3".into(), Value::Float(0.0));
                m.insert("a4".into(), Value::Float(500.0));
                m
            })
            .collect();
        let mut last = StepInput::new();
        last.insert("a1".into(), Value::Float(1.0));
        last.insert("a2".into(), Value::Float(5.0));
        last.insert("a3".into(), Value::Float(9.0));
        last.insert("a4".into(), Value::Float(500.0));
        stimuli.push(last);
        let eet = run(&fm, &stimuli).unwrap();
        // degraded to triplex: the voter picks the middle value
        assert!(
            eet.cycles[3].contains(&("cons".to_string(), Value::Float(5.0))),
            "{:?}",
            eet.cycles[3]
        );
        assert!(eet.cycles[3].contains(&("v4".to_string(), Value::Bool(false))));
    }

    #[test]
    fn control_law_parses_to_one_composite_of_blocks() {
        let m = parse_les_model(CONTROL_LAW_MODEL, "control_law.model").unwrap();
        let system = m.system();
        match &system.body {
            crate::model::ComponentBody::Composite { subs, .. } => {
                let names: Vec<&str> = subs.iter().map(|s| s.name.as_str()).collect();
                assert_eq!(
                    names,
                    vec!["filter", "gain", "err", "rl", "li", "buf", "mux"]
                );
            }
            _ => panic!("the control law system is a composite of blocks"),
        }
    }

    #[test]
    fn projection_reproduces_the_driver_io_columns() {
        use crate::trace::project;
        let fm = lane_driver().unwrap();
        let word = [LaneInput::Faulty, LaneInput::Faulty, LaneInput::Ok];
        let stimuli: Vec<StepInput> = word
            .iter()
            .map(|w| {
                let mut m = StepInput::new();
                let v = match w {
                    LaneInput::Faulty => Value::Ctor("Faulty".into(), vec![]),
                    LaneInput::Ok => Value::Ctor("Ok".into(), vec![]),
                };
                m.insert("s".into(), v);
                m
            })
            .collect();
        let eet = run(&fm, &stimuli).unwrap();
        let tr = project(&eet, "d", &fm).unwrap();
        // hand-traced columns: inputs mirror the word, outputs stay true
        // while the streak is below the threshold
        assert_eq!(tr.cycles.len(), 3);
        for (t, w) in word.iter().enumerate() {
            let expected_in = match w {
                LaneInput::Faulty => Value::Ctor("Faulty".into(), vec![]),
                LaneInput::Ok => Value::Ctor("Ok".into(), vec![]),
            };
            assert_eq!(tr.cycles[t].inputs.get("s"), Some(&expected_in));
        }
        for t in 0..3 {
            assert_eq!(tr.cycles[t].expected.get("act"), Some(&Value::Bool(true)));
        }
    }

    #[test]
    fn control_law_processes_a_value_within_one_cycle() {
        let fm = control_law().unwrap();
        let mut stim = StepInput::new();
        stim.insert(
            "aoa".into(),
            Value::Ctor("Ready".into(), vec![Value::Float(1.5)]),
        );
        stim.insert("gseOn".into(), Value::Bool(false));
        let eet = run(&fm, &[stim]).unwrap();
        // gain 1.0, no feedback yet, rate limit 2.0, integrator from 0
        assert!(
            eet.cycles[0].contains(&("demand".to_string(), Value::Float(1.5))),
            "{:?}",
            eet.cycles[0]
        );
    }

    #[test]
    fn gse_override_replaces_the_demand() {
        let fm = control_law().unwrap();
        let mut stim = StepInput::new();
        stim.insert(
            "aoa".into(),
            Value::Ctor("Ready".into(), vec![Value::Float(1.5)]),
        );
        stim.insert("gseOn".into(), Value::Bool(true));
        stim.insert("gseVal".into(), Value::Float(42.0));
        let eet = run(&fm, &[stim]).unwrap();
        assert!(eet.cycles[0].contains(&("demand".to_string(), Value::Float(42.0))));
    }

    #[test]
    fn rate_limiter_block_matches_the_reference() {
        let fm = control_law().unwrap();
        // demand 10 with limit 2.0 per cycle: output ramps 2, 4, 6, ...
        let mk = |x: f64| {
            let mut stim = StepInput::new();
            stim.insert(
                "aoa".into(),
                Value::Ctor("Ready".into(), vec![Value::Float(x)]),
            );
            stim.insert("gseOn".into(), Value::Bool(false));
            stim
        };
        let eet = run(&fm, &[mk(10.0)]).unwrap();
        let mut expected = rate_limit(0.0, 10.0, 2.0);
        expected = integrate(0.0, expected, -100.0, 100.0);
        assert!(eet.cycles[0].contains(&("demand".to_string(), Value::Float(expected))));
    }
}
