//! Syntactic checks over emitted text: a linter for the excluded language
//! features and a per-subprogram decision counter.

use std::collections::BTreeMap;

/// Features outside the emission subset.
const EXCLUDED: &[&str] = &["task", "exception", "generic", "access", "goto", "use"];

/// Splits source text into lowercased word tokens, skipping comments and
/// string literals.
fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c == '"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            i += 1;
        } else if c == '\'' && i + 2 < bytes.len() && bytes[i + 2] == b'\'' {
            // character literal; attribute ticks lack the closing quote
            i += 3;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(text[start..i].to_ascii_lowercase());
        } else {
            i += 1;
        }
    }
    out
}

/// Scans emitted text for excluded features. Returns one finding per
/// occurrence; an empty result means the text stays within the subset.
pub fn lint_subset(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| EXCLUDED.contains(&t.as_str()))
        .map(|t| format!("excluded feature `{t}`"))
        .collect()
}

/// Counts decisions per subprogram body: `if`, `elsif`, `case`, `while`,
/// `for`, and the short-circuit pairs `and then` / `or else`. Declarations
/// without bodies are skipped.
pub fn count_decisions(text: &str) -> BTreeMap<String, usize> {
    let toks = tokens(text);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut stack: Vec<String> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i].as_str();
        match t {
            "procedure" | "function" => {
                if let Some(name) = toks.get(i + 1) {
                    // find whether this is a body: an `is` before the
                    // closing `;` of the profile (parameter semicolons are
                    // inside parentheses, which tokens() drops, so scan for
                    // `is`/`begin`/`;`-equivalents in token space)
                    let name = name.clone();
                    let mut j = i + 2;
                    let mut is_body = false;
                    while let Some(tok) = toks.get(j) {
                        match tok.as_str() {
                            "is" => {
                                is_body = true;
                                break;
                            }
                            // a following declaration keyword means the
                            // profile ended without a body
                            "procedure" | "function" | "end" | "type" | "package" => break,
                            _ => j += 1,
                        }
                    }
                    if is_body {
                        stack.push(name.clone());
                        counts.entry(name).or_insert(0);
                    }
                }
            }
            "end" => {
                if let (Some(name), Some(top)) = (toks.get(i + 1), stack.last()) {
                    if name == top {
                        stack.pop();
                    }
                }
            }
            "if" | "elsif" | "case" | "while" | "for" => {
                // skip `end if` / `end case`; `for` in attribute-free
                // emitted code only opens loops
                let closing = i > 0 && toks[i - 1] == "end";
                if !closing {
                    if let Some(top) = stack.last() {
                        *counts.get_mut(top).expect("tracked subprogram") += 1;
                    }
                }
            }
            "and" | "or" => {
                let shortcut = matches!(
                    toks.get(i + 1).map(|s| s.as_str()),
                    Some("then") | Some("else")
                );
                if shortcut {
                    if let Some(top) = stack.last() {
                        *counts.get_mut(top).expect("tracked subprogram") += 1;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_text_has_no_findings() {
        let text = "procedure P is\nbegin\n   null; -- use of task generic\nend P;\n";
        assert!(lint_subset(text).is_empty());
    }

    #[test]
    fn excluded_words_are_flagged_outside_comments_and_strings() {
        let text = "procedure P is\nbegin\n   raise Constraint_Error;\nexception\n   when others => null;\nend P;\n";
        let findings = lint_subset(text);
        assert_eq!(findings, vec!["excluded feature `exception`"]);
        assert!(lint_subset("X := \"use task\";").is_empty());
        assert_eq!(lint_subset("use Ada.Text_IO;").len(), 1);
    }

    #[test]
    fn decisions_count_ifs_and_shortcuts_per_subprogram() {
        let text = "\
procedure A is
begin
   if X and then Y then
      null;
   end if;
   if Z then
      null;
   end if;
end A;

procedure B is
begin
   case S is
      when 1 => null;
      when others => null;
   end case;
end B;
";
        let counts = count_decisions(text);
        assert_eq!(counts["a"], 3); // if + and-then + if
        assert_eq!(counts["b"], 1); // one case
    }

    #[test]
    fn specs_without_bodies_are_ignored() {
        let text = "package P is\n   function F return Boolean;\nend P;\n";
        let counts = count_decisions(text);
        assert!(counts.is_empty());
    }

    #[test]
    fn nested_declares_keep_attribution() {
        let text = "\
procedure Outer is
begin
   declare
      X : Integer := 0;
   begin
      if X = 0 then
         null;
      end if;
   end;
end Outer;
";
        let counts = count_decisions(text);
        assert_eq!(counts["outer"], 1);
    }
}
