//! Line-oriented edge-list grammar.
//!
//! ```text
//! # comment
//! S_B -> B; S_G -> G     # statements end at `;` or end of line
//! B -> Y; G -> Y; Z -> Y
//! @differs W             # selection node S_W with edge S_W -> W
//! V                      # isolated node
//! exposure Z; outcome Y  # each exactly once
//! ```
//!
//! Nodes named `S` or `S_<anything>` are selection nodes.

use super::{DiagramBuilder, DiagramError, SelectionDiagram};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Arrow,
    Directive(&'a str),
    Semi,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> DiagramError {
    DiagramError::Syntax { line, column, message: message.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_selection_name(name: &str) -> bool {
    name == "S" || name.starts_with("S_")
}

/// Splits one line into `(column, token)` pairs; columns are 1-based.
fn tokenize(line_no: usize, line: &str) -> Result<Vec<(usize, Tok<'_>)>, DiagramError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let column = line[..pos].chars().count() + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            ';' => {
                chars.next();
                out.push((column, Tok::Semi));
            }
            '-' => {
                chars.next();
                match chars.next() {
                    Some((_, '>')) => out.push((column, Tok::Arrow)),
                    _ => return Err(syntax(line_no, column, "expected `->`")),
                }
            }
            '@' => {
                chars.next();
                let start = pos + 1;
                let mut end = start;
                while let Some(&(p, c)) = chars.peek() {
                    if !is_ident_continue(c) {
                        break;
                    }
                    end = p + c.len_utf8();
                    chars.next();
                }
                out.push((column, Tok::Directive(&line[start..end])));
            }
            c if is_ident_start(c) => {
                let mut end = pos;
                while let Some(&(p, c)) = chars.peek() {
                    if !is_ident_continue(c) {
                        break;
                    }
                    end = p + c.len_utf8();
                    chars.next();
                }
                out.push((column, Tok::Ident(&line[pos..end])));
            }
            other => return Err(syntax(line_no, column, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Declarations {
    exposure: Option<usize>,
    outcome: Option<usize>,
}

fn statement(
    builder: &mut DiagramBuilder,
    decls: &mut Declarations,
    line_no: usize,
    toks: &[(usize, Tok<'_>)],
) -> Result<(), DiagramError> {
    let Some(&(col0, ref first)) = toks.first() else {
        return Ok(());
    };
    let expect_single_name = |what: &str| -> Result<&str, DiagramError> {
        match toks {
            [_, (_, Tok::Ident(name))] => Ok(name),
            [_] => Err(syntax(line_no, col0, format!("`{what}` needs a node name"))),
            [_, (col, _), ..] => Err(syntax(line_no, *col, format!("expected a single node name after `{what}`"))),
            [] => unreachable!(),
        }
    };
    match first {
        Tok::Directive(d) if *d == "differs" => {
            let target = expect_single_name("@differs")?;
            builder.differs(target);
        }
        Tok::Directive(d) => return Err(syntax(line_no, col0, format!("unknown directive `@{d}`"))),
        Tok::Ident(kw @ ("exposure" | "outcome")) if toks.len() == 2 => {
            let name = expect_single_name(kw)?;
            let (slot, keyword) = if *kw == "exposure" {
                (&mut decls.exposure, "exposure")
            } else {
                (&mut decls.outcome, "outcome")
            };
            if slot.replace(line_no).is_some() {
                return Err(DiagramError::DuplicateDeclaration { keyword, line: line_no });
            }
            if keyword == "exposure" {
                builder.exposure(name);
            } else {
                builder.outcome(name);
            }
        }
        Tok::Ident(_) => {
            // node (-> node)*
            let mut names = Vec::new();
            let mut expect_name = true;
            for (col, tok) in toks {
                match (expect_name, tok) {
                    (true, Tok::Ident(name)) => names.push(*name),
                    (false, Tok::Arrow) => {}
                    (true, _) => return Err(syntax(line_no, *col, "expected a node name")),
                    (false, _) => return Err(syntax(line_no, *col, "expected `->` or `;`")),
                }
                expect_name = !expect_name;
            }
            if expect_name {
                let (col, _) = toks.last().expect("nonempty");
                return Err(syntax(line_no, *col, "edge is missing its child node"));
            }
            for name in &names {
                if is_selection_name(name) {
                    builder.selection(name);
                } else {
                    builder.node(name);
                }
            }
            for pair in names.windows(2) {
                builder.edge(pair[0], pair[1]);
            }
        }
        Tok::Arrow => return Err(syntax(line_no, col0, "edge is missing its parent node")),
        Tok::Semi => unreachable!("statements are split on `;`"),
    }
    Ok(())
}

/// Parses and validates a diagram.
pub fn parse_diagram(text: &str) -> Result<SelectionDiagram, DiagramError> {
    let mut builder = DiagramBuilder::new();
    let mut decls = Declarations { exposure: None, outcome: None };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let toks = tokenize(line_no, line)?;
        for stmt in toks.split(|(_, t)| *t == Tok::Semi) {
            statement(&mut builder, &mut decls, line_no, stmt)?;
        }
    }
    builder.build()
}
