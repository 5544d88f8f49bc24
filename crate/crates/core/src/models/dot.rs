use std::fmt::Write;

use crate::models::{BnSpec, HasseDiagram, ModelError};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn bn_to_dot(spec: &BnSpec) -> String {
    let mut out = format!("digraph {} {{\n", quote(&spec.name));
    for v in &spec.variables {
        let _ = writeln!(out, "  {} [label={}];", quote(&v.name), quote(&format!("{} ({})", v.name, v.levels)));
    }
    for (i, ps) in spec.parents.iter().enumerate() {
        for &p in ps {
            let _ = writeln!(out, "  {} -> {};", quote(&spec.variables[p].name), quote(&spec.variables[i].name));
        }
    }
    out.push_str("}\n");
    out
}

/// Terminal circumstances are drawn as double circles; `parse_dot` reads
/// that attribute back.
pub fn hasse_to_dot(d: &HasseDiagram) -> String {
    let mut out = format!("digraph {} {{\n", quote(&d.name));
    for (i, v) in d.vertices.iter().enumerate() {
        if d.terminal.contains(&i) {
            let _ = writeln!(out, "  {} [shape=doublecircle];", quote(v));
        } else {
            let _ = writeln!(out, "  {};", quote(v));
        }
    }
    for &(a, b) in &d.edges {
        let _ = writeln!(out, "  {} -> {};", quote(&d.vertices[a]), quote(&d.vertices[b]));
    }
    out.push_str("}\n");
    out
}

/// Splits a statement into identifiers (quoted or bare) and punctuation.
fn tokens(line: usize, s: &str) -> Result<Vec<String>, ModelError> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut t = String::new();
            loop {
                match chars.next() {
                    Some('\\') => t.extend(chars.next()),
                    Some('"') => break,
                    Some(c) => t.push(c),
                    None => return Err(ModelError::Parse { line, msg: "unterminated string".into() }),
                }
            }
            out.push(t);
        } else if c == '-' && s.contains("->") {
            chars.next();
            if chars.next() != Some('>') {
                return Err(ModelError::Parse { line, msg: "expected `->`".into() });
            }
            out.push("->".into());
        } else if "[]=,;{}".contains(c) {
            chars.next();
            out.push(c.to_string());
        } else {
            let mut t = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || "[]=,;{}\"".contains(c) || (c == '-' && t.is_empty()) {
                    break;
                }
                t.push(c);
                chars.next();
            }
            if t.is_empty() {
                return Err(ModelError::Parse { line, msg: format!("unexpected `{c}`") });
            }
            out.push(t);
        }
    }
    Ok(out)
}

/// Reads the subset of DOT written by [`hasse_to_dot`]: one node or edge
/// statement per line.
pub fn parse_dot(text: &str) -> Result<HasseDiagram, ModelError> {
    let mut d = HasseDiagram::default();
    let mut pending_edges = Vec::new();
    let mut in_graph = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = tokens(line, raw.trim())?;
        let t: Vec<&str> = t.iter().map(String::as_str).filter(|s| *s != ";").collect();
        match t.as_slice() {
            [] => {}
            ["digraph", name, "{"] => {
                d.name = name.to_string();
                in_graph = true;
            }
            ["}"] => in_graph = false,
            _ if !in_graph => {
                return Err(ModelError::Parse { line, msg: "statement outside digraph".into() });
            }
            [a, "->", b] => pending_edges.push((line, a.to_string(), b.to_string())),
            [v] => {
                d.vertex(v, false).map_err(|e| ModelError::Parse { line, msg: e.to_string() })?;
            }
            [v, "[", attrs @ .., "]"] => {
                let terminal = attrs.windows(3).any(|w| w == ["shape", "=", "doublecircle"]);
                d.vertex(v, terminal).map_err(|e| ModelError::Parse { line, msg: e.to_string() })?;
            }
            _ => return Err(ModelError::Parse { line, msg: format!("unsupported statement `{}`", raw.trim()) }),
        }
    }
    for (line, a, b) in pending_edges {
        d.edge(&a, &b).map_err(|e| ModelError::Parse { line, msg: e.to_string() })?;
    }
    Ok(d)
}
