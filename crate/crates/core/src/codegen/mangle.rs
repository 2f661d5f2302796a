//! Model-identifier to Ada-identifier mangling: names split into words at
//! underscores and case transitions, rendered Mixed_Case. Reserved words
//! get an `_M` suffix; collisions within one scope get numeric suffixes.

use std::collections::BTreeSet;

const RESERVED: &[&str] = &[
    "abort",
    "abs",
    "abstract",
    "accept",
    "access",
    "aliased",
    "all",
    "and",
    "array",
    "at",
    "begin",
    "body",
    "case",
    "constant",
    "declare",
    "delay",
    "delta",
    "digits",
    "do",
    "else",
    "elsif",
    "end",
    "entry",
    "exception",
    "exit",
    "for",
    "function",
    "generic",
    "goto",
    "if",
    "in",
    "interface",
    "is",
    "limited",
    "loop",
    "mod",
    "new",
    "not",
    "null",
    "of",
    "or",
    "others",
    "out",
    "overriding",
    "package",
    "parallel",
    "pragma",
    "private",
    "procedure",
    "protected",
    "raise",
    "range",
    "record",
    "rem",
    "renames",
    "requeue",
    "return",
    "reverse",
    "select",
    "separate",
    "some",
    "subtype",
    "synchronized",
    "tagged",
    "task",
    "terminate",
    "then",
    "type",
    "until",
    "use",
    "when",
    "while",
    "with",
    "xor",
];

/// Splits an identifier into words and joins them as Mixed_Case:
/// `faultCount` becomes `Fault_Count`, `is_Ready` becomes `Is_Ready`.
pub(crate) fn ada_words(raw: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    for part in raw.split('_').filter(|p| !p.is_empty()) {
        let chars: Vec<char> = part.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1);
            let boundary = match prev {
                None => false,
                Some(p) => {
                    (c.is_ascii_uppercase() && (p.is_ascii_lowercase() || p.is_ascii_digit()))
                        || (c.is_ascii_uppercase()
                            && p.is_ascii_uppercase()
                            && next.is_some_and(|n| n.is_ascii_lowercase()))
                }
            };
            if boundary && !word.is_empty() {
                words.push(word);
                word = String::new();
            }
            word.push(c);
        }
        if !word.is_empty() {
            words.push(word);
        }
    }
    if words.is_empty() {
        words.push("X".to_string());
    }
    words
        .iter()
        .map(|w| {
            let mut out = String::new();
            for (i, c) in w.chars().enumerate() {
                if i == 0 {
                    out.push(c.to_ascii_uppercase());
                } else {
                    out.push(c.to_ascii_lowercase());
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .join("_")
}

/// One naming scope (a package, a record, an enum). Seeding it with the
/// generated fixed names keeps model identifiers from colliding with them.
pub(crate) struct Scope {
    used: BTreeSet<String>,
}

impl Scope {
    pub(crate) fn new(seed: &[&str]) -> Scope {
        Scope {
            used: seed.iter().map(|s| s.to_ascii_lowercase()).collect(),
        }
    }

    /// Deterministic unique Ada name for a raw model identifier.
    pub(crate) fn mangle(&mut self, raw: &str) -> String {
        let mut base = ada_words(raw);
        if RESERVED.contains(&base.to_ascii_lowercase().as_str()) {
            base.push_str("_M");
        }
        let mut candidate = base.clone();
        let mut n = 2;
        while !self.used.insert(candidate.to_ascii_lowercase()) {
            candidate = format!("{base}_{n}");
            n += 1;
        }
        candidate
    }
}
