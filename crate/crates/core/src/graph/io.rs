//! Text and JSON formats for graphs and combinations.
//!
//! ```text
//! hgraph m=2 n=2 v=1 h=1
//! E v1 h1
//! ```
//! Records may also be written on one line with ` / ` separators. `m=-`
//! marks a GC atom. A combination file repeats `coef <num>/<den>` followed by
//! one record.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{canonicalize, End, Graph};
use crate::error::{Error, Result};
use crate::lin::{fmt_q, parse_q, Lin, Q};

struct Tok<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

/// Splits the input into logical lines of tokens; a lone `/` ends a line.
fn logical_lines(text: &str) -> Vec<Vec<Tok<'_>>> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let mut cur = Vec::new();
        let mut start = None;
        let bytes = line.as_bytes();
        for i in 0..=bytes.len() {
            let ws = i == bytes.len() || bytes[i].is_ascii_whitespace() || bytes[i] == b'#';
            match (start, ws) {
                (None, false) => start = Some(i),
                (Some(s), true) => {
                    let t = &line[s..i];
                    if t == "/" {
                        if !cur.is_empty() {
                            out.push(std::mem::take(&mut cur));
                        }
                    } else {
                        cur.push(Tok { line: line_no, col: s + 1, text: t });
                    }
                    start = None;
                }
                _ => {}
            }
            if i < bytes.len() && bytes[i] == b'#' {
                break;
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn syntax(t: &Tok<'_>, msg: impl Into<String>) -> Error {
    Error::Syntax { line: t.line, col: t.col, msg: msg.into() }
}

fn field<'a>(t: &Tok<'a>, name: &str) -> Result<&'a str> {
    t.text
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| syntax(t, format!("expected `{name}=<value>`")))
}

fn int_field(t: &Tok<'_>, name: &str) -> Result<i64> {
    field(t, name)?.parse().map_err(|_| syntax(t, format!("`{name}` needs an integer")))
}

fn endpoint(t: &Tok<'_>, v: usize, h: usize) -> Result<End> {
    let (kind, rest) = t.text.split_at(1.min(t.text.len()));
    let idx: usize = rest.parse().map_err(|_| syntax(t, "endpoint must look like v<k> or h<k>"))?;
    match kind {
        "v" if (1..=v).contains(&idx) => Ok(End::V((idx - 1) as u8)),
        "h" if (1..=h).contains(&idx) => Ok(End::H((idx - 1) as u8)),
        "v" | "h" => Err(syntax(t, format!("endpoint {} out of range", t.text))),
        _ => Err(syntax(t, "endpoint must look like v<k> or h<k>")),
    }
}

fn parse_record(lines: &[Vec<Tok<'_>>], pos: &mut usize) -> Result<Graph> {
    let head = &lines[*pos];
    if head[0].text != "hgraph" || head.len() != 5 {
        return Err(syntax(&head[0], "expected `hgraph m=<int|-> n=<int> v=<int> h=<int>`"));
    }
    let m = match field(&head[1], "m")? {
        "-" => None,
        s => Some(s.parse::<i32>().map_err(|_| syntax(&head[1], "`m` needs an integer or `-`"))?),
    };
    let n = int_field(&head[2], "n")? as i32;
    let v = int_field(&head[3], "v")?;
    let h = int_field(&head[4], "h")?;
    if !(0..=255).contains(&v) || !(0..=255).contains(&h) {
        return Err(syntax(&head[3], "vertex and hair counts must lie in 0..=255"));
    }
    let (v, h) = (v as usize, h as usize);
    *pos += 1;
    let mut edges = Vec::new();
    while *pos < lines.len() && lines[*pos][0].text == "E" {
        let l = &lines[*pos];
        if l.len() != 3 {
            return Err(syntax(&l[0], "expected `E <a> <b>`"));
        }
        edges.push((endpoint(&l[1], v, h)?, endpoint(&l[2], v, h)?));
        *pos += 1;
    }
    let g = Graph { n, m, v, h, edges };
    g.validate()?;
    Ok(g)
}

/// Parses exactly one graph record.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let lines = logical_lines(text);
    if lines.is_empty() {
        return Err(Error::Syntax { line: 1, col: 1, msg: "empty input".into() });
    }
    let mut pos = 0;
    let g = parse_record(&lines, &mut pos)?;
    if pos < lines.len() {
        return Err(syntax(&lines[pos][0], "unexpected trailing input"));
    }
    Ok(g)
}

/// Parses a combination file into canonical form. A bare graph record is read
/// as coefficient 1.
pub fn parse_combination(text: &str) -> Result<Lin<Graph>> {
    let lines = logical_lines(text);
    let mut pos = 0;
    let mut out = Lin::zero();
    while pos < lines.len() {
        let l = &lines[pos];
        let coef = if l[0].text == "coef" {
            if l.len() != 2 {
                return Err(syntax(&l[0], "expected `coef <num>/<den>`"));
            }
            let c = parse_q(l[1].text).ok_or_else(|| syntax(&l[1], "coefficient must be an exact fraction"))?;
            pos += 1;
            if pos >= lines.len() {
                return Err(syntax(&l[0], "coefficient without a graph"));
            }
            c
        } else {
            Q::from_integer(1.into())
        };
        let g = parse_record(&lines, &mut pos)?;
        if let Some((cg, neg)) = canonicalize(&g)? {
            out.add_term(cg, if neg { -coef } else { coef });
        }
    }
    Ok(out)
}

pub fn serialize_graph(g: &Graph) -> String {
    let m = g.m.map_or("-".to_string(), |m| m.to_string());
    let mut s = format!("hgraph m={} n={} v={} h={}\n", m, g.n, g.v, g.h);
    let show = |e: End| match e {
        End::V(i) => format!("v{}", i + 1),
        End::H(i) => format!("h{}", i + 1),
    };
    for (a, b) in &g.edges {
        let _ = writeln!(s, "E {} {}", show(*a), show(*b));
    }
    s
}

pub fn serialize_combination(x: &Lin<Graph>) -> String {
    let mut s = String::new();
    for (g, c) in x.iter() {
        let _ = writeln!(s, "coef {}", fmt_q(c));
        s.push_str(&serialize_graph(g));
    }
    s
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    coef: String,
    graph: Graph,
}

pub fn to_json(x: &Lin<Graph>) -> String {
    let terms: Vec<JsonTerm> = x.iter().map(|(g, c)| JsonTerm { coef: fmt_q(c), graph: g.clone() }).collect();
    serde_json::to_string_pretty(&terms).expect("graphs serialize")
}

pub fn from_json(text: &str) -> Result<Lin<Graph>> {
    let terms: Vec<JsonTerm> = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = Lin::zero();
    for t in terms {
        let c = parse_q(&t.coef).ok_or_else(|| Error::InvalidInput(format!("bad coefficient {}", t.coef)))?;
        if let Some((cg, neg)) = canonicalize(&t.graph)? {
            out.add_term(cg, if neg { -c } else { c });
        }
    }
    Ok(out)
}
