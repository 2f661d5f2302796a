//! The TDF text format: one line per clock cycle, inputs before outputs,
//! `{port?literal;}*{port!literal;}*` with no whitespace, LF line endings.

use std::collections::BTreeMap;

use crate::dtd::check::check_value_type;
use crate::dtd::parser::parse_literal_str;
use crate::dtd::{Defs, TypeRef, Value};
use crate::trace::{ComponentTrace, CycleIo, PortSig, TraceError};

/// Renders a component trace as TDF: exactly one line per cycle, each
/// terminated by a newline; events sorted by port name within the input and
/// output groups; an empty cycle is an empty line.
pub fn to_tdf(t: &ComponentTrace) -> String {
    let mut out = String::new();
    for cycle in &t.cycles {
        for (port, v) in &cycle.inputs {
            out.push_str(&format!("{port}?{v};"));
        }
        for (port, v) in &cycle.expected {
            out.push_str(&format!("{port}!{v};"));
        }
        out.push('\n');
    }
    out
}

/// Scans one event line into (endpoint, marker, value, type) tuples. The
/// `endpoint_ty` callback validates the endpoint name and marker and
/// supplies the expected value type. Inputs (`?`) must precede outputs
/// (`!`); endpoints may occur at most once per line.
pub(crate) fn scan_event_line(
    line: &str,
    mut endpoint_ty: impl FnMut(&str, char) -> Result<TypeRef, String>,
) -> Result<Vec<(String, char, Value, TypeRef)>, String> {
    let mut out: Vec<(String, char, Value, TypeRef)> = Vec::new();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    let mut rest = line;
    let mut in_outputs = false;
    while !rest.is_empty() {
        let marker_at = rest
            .find(['?', '!'])
            .ok_or_else(|| format!("expected `?` or `!` in `{rest}`"))?;
        let endpoint = &rest[..marker_at];
        if endpoint.is_empty()
            || !endpoint
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '/')
        {
            return Err(format!("malformed endpoint name `{endpoint}`"));
        }
        let marker = rest.as_bytes()[marker_at] as char;
        if marker == '!' {
            in_outputs = true;
        } else if in_outputs {
            return Err(format!("input `{endpoint}` appears after an output"));
        }
        rest = &rest[marker_at + 1..];
        let semi = rest
            .find(';')
            .ok_or_else(|| format!("missing `;` after `{endpoint}{marker}`"))?;
        let lit_text = &rest[..semi];
        rest = &rest[semi + 1..];
        let ty = endpoint_ty(endpoint, marker)?;
        let value = parse_literal_str(lit_text)
            .map_err(|d| format!("literal `{lit_text}`: {}", d.message))?;
        if seen.insert(endpoint.to_string(), ()).is_some() {
            return Err(format!("endpoint `{endpoint}` occurs twice in one cycle"));
        }
        out.push((endpoint.to_string(), marker, value, ty));
    }
    Ok(out)
}

/// Parses TDF text against a component signature. Inverse of [`to_tdf`] up
/// to event ordering within a group.
pub fn parse_tdf(text: &str, sig: &PortSig, defs: &Defs) -> Result<ComponentTrace, TraceError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop(); // trailing newline
    }
    let mut cycles = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        let events = scan_event_line(line, |endpoint, marker| {
            let side = if marker == '?' {
                &sig.inputs
            } else {
                &sig.outputs
            };
            side.get(endpoint).cloned().ok_or_else(|| {
                format!(
                    "unknown {} port `{endpoint}`",
                    if marker == '?' { "input" } else { "output" }
                )
            })
        })
        .map_err(|message| TraceError::Parse {
            line: lineno,
            message,
        })?;
        let mut io = CycleIo::default();
        for (port, marker, value, ty) in events {
            check_value_type(&value, &ty, defs).map_err(|message| TraceError::Parse {
                line: lineno,
                message,
            })?;
            let side = if marker == '?' {
                &mut io.inputs
            } else {
                &mut io.expected
            };
            side.insert(port, value);
        }
        cycles.push(io);
    }
    Ok(ComponentTrace {
        component: String::new(),
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> PortSig {
        let mut s = PortSig::default();
        s.inputs.insert("a1".into(), TypeRef::Float);
        s.inputs
            .insert("s".into(), TypeRef::Named("SensorVal".into()));
        s.outputs.insert("cons".into(), TypeRef::Float);
        s
    }

    fn defs() -> Defs {
        Defs::parse("data SensorVal = Defect | Busy | Ready(Float);").unwrap()
    }

    fn trace(cycles: Vec<CycleIo>) -> ComponentTrace {
        ComponentTrace {
            component: String::new(),
            cycles,
        }
    }

    #[test]
    fn renders_the_documented_line_format() {
        let mut io = CycleIo::default();
        io.inputs.insert("a1".into(), Value::Float(2.5));
        io.expected.insert("cons".into(), Value::Float(2.5));
        let t = trace(vec![io]);
        assert_eq!(to_tdf(&t), "a1?2.5;cons!2.5;\n");
    }

    #[test]
    fn the_documented_line_round_trips_byte_exactly() {
        let text = "a1?2.5;cons!2.5;\n";
        let t = parse_tdf(text, &sig(), &defs()).unwrap();
        assert_eq!(to_tdf(&t), text);
    }

    #[test]
    fn empty_cycles_are_empty_lines() {
        let t = trace(vec![CycleIo::default(), CycleIo::default()]);
        assert_eq!(to_tdf(&t), "\n\n");
        let back = parse_tdf("\n\n", &sig(), &defs()).unwrap();
        assert_eq!(back.cycles.len(), 2);
    }

    #[test]
    fn constructed_values_use_definition_literal_syntax() {
        let mut io = CycleIo::default();
        io.inputs.insert(
            "s".into(),
            Value::Ctor("Ready".into(), vec![Value::Float(3.5)]),
        );
        let t = trace(vec![io]);
        assert_eq!(to_tdf(&t), "s?Ready(3.5);\n");
        let back = parse_tdf("s?Ready(3.5);\n", &sig(), &defs()).unwrap();
        assert_eq!(
            back,
            trace(vec![{
                let mut io = CycleIo::default();
                io.inputs.insert(
                    "s".into(),
                    Value::Ctor("Ready".into(), vec![Value::Float(3.5)]),
                );
                io
            }])
        );
    }

    #[test]
    fn duplicate_endpoint_in_one_cycle_is_rejected() {
        let err = parse_tdf("a1?2.5;a1?3.0;\n", &sig(), &defs()).unwrap_err();
        assert!(matches!(err, TraceError::Parse { line: 1, .. }));
    }

    #[test]
    fn outputs_may_not_precede_inputs() {
        let err = parse_tdf("cons!2.5;a1?2.5;\n", &sig(), &defs()).unwrap_err();
        let TraceError::Parse { message, .. } = err else {
            panic!("wrong error kind");
        };
        assert!(message.contains("after an output"));
    }

    #[test]
    fn unknown_ports_and_type_mismatches_carry_line_numbers() {
        let err = parse_tdf("\nnope?1;\n", &sig(), &defs()).unwrap_err();
        assert!(matches!(err, TraceError::Parse { line: 2, .. }));
        let err = parse_tdf("a1?true;\n", &sig(), &defs()).unwrap_err();
        assert!(matches!(err, TraceError::Parse { line: 1, .. }));
    }

    #[test]
    fn output_counts_lines_exactly() {
        let t = trace(vec![CycleIo::default(); 5]);
        let text = to_tdf(&t);
        assert_eq!(text.matches('\n').count(), 5);
        assert!(!text.contains(' '));
    }
}
