use std::collections::HashMap;

use super::{AmrGraph, Edge, ParseError, ParseErrorKind, Target};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Str(String),
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn err(kind: ParseErrorKind, pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, first_line: usize) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: first_line,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while_not_delim(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if is_delim(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn next_token(&mut self) -> Result<Option<(Tok, Pos)>, ParseError> {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::Open
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            '/' => {
                self.bump();
                Tok::Slash
            }
            '"' => {
                let mut s = String::new();
                s.push(c);
                self.bump();
                let mut closed = false;
                while let Some(c) = self.bump() {
                    s.push(c);
                    if c == '\\' {
                        if let Some(n) = self.bump() {
                            s.push(n);
                        }
                    } else if c == '"' {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(err(
                        ParseErrorKind::UnterminatedString,
                        pos,
                        "unterminated string literal",
                    ));
                }
                Tok::Str(s)
            }
            ':' => {
                self.bump();
                let name = self.take_while_not_delim();
                if name.is_empty() {
                    return Err(err(ParseErrorKind::UnexpectedToken, pos, "empty role"));
                }
                Tok::Role(name)
            }
            _ => Tok::Symbol(self.take_while_not_delim()),
        };
        Ok(Some((tok, pos)))
    }
}

/// Variable-shaped symbols (`a`, `s2`, `x17`): an unbound one is treated as a
/// dangling reference rather than a constant.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Role(r) => format!("role `:{r}`"),
        Tok::Symbol(s) => format!("symbol `{s}`"),
        Tok::Str(s) => format!("string {s}"),
    }
}

struct Frame {
    var: String,
    pending_role: Option<String>,
}

fn parse_expression(text: &str, first_line: usize, metadata: Vec<(String, String)>) -> Result<AmrGraph, ParseError> {
    let mut lex = Lexer::new(text, first_line);
    let mut stack: Vec<Frame> = Vec::new();
    let mut nodes: Vec<(String, String)> = Vec::new();
    let mut bound: HashMap<String, usize> = HashMap::new();
    // Edge targets given as bare symbols are resolved once every variable is known.
    let mut edges: Vec<(Edge, Option<(String, Pos)>)> = Vec::new();
    let mut root: Option<String> = None;

    let Some((first, first_pos)) = lex.next_token()? else {
        return Err(err(
            ParseErrorKind::EmptyInput,
            lex.pos(),
            "no graph expression",
        ));
    };
    if first != Tok::Open {
        return Err(err(
            ParseErrorKind::UnexpectedToken,
            first_pos,
            format!("expected `(`, found {}", describe(&first)),
        ));
    }
    let mut next_open = Some(first_pos);

    loop {
        if let Some(open_pos) = next_open.take() {
            // just consumed `(`: read `VAR / CONCEPT`
            let var = match lex.next_token()? {
                Some((Tok::Symbol(v), _)) => v,
                Some((t, p)) => {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        p,
                        format!("expected variable, found {}", describe(&t)),
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::UnbalancedParens,
                        open_pos,
                        "unclosed `(`",
                    ))
                }
            };
            match lex.next_token()? {
                Some((Tok::Slash, _)) => {}
                Some((t, p)) => {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        p,
                        format!("expected `/`, found {}", describe(&t)),
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::UnbalancedParens,
                        open_pos,
                        "unclosed `(`",
                    ))
                }
            }
            let concept = match lex.next_token()? {
                Some((Tok::Symbol(c), _)) | Some((Tok::Str(c), _)) => c,
                Some((t, p)) => {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        p,
                        format!("expected concept, found {}", describe(&t)),
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::UnbalancedParens,
                        open_pos,
                        "unclosed `(`",
                    ))
                }
            };
            if bound.contains_key(&var) {
                return Err(err(
                    ParseErrorKind::DuplicateVariable,
                    open_pos,
                    format!("variable `{var}` bound twice"),
                ));
            }
            bound.insert(var.clone(), nodes.len());
            nodes.push((var.clone(), concept));
            if let Some(parent) = stack.last_mut() {
                let role = parent.pending_role.take().expect("open only after role");
                edges.push((
                    Edge {
                        source: parent.var.clone(),
                        role,
                        target: Target::Node(var.clone()),
                    },
                    None,
                ));
            } else {
                root = Some(var.clone());
            }
            stack.push(Frame {
                var,
                pending_role: None,
            });
            continue;
        }

        let Some((tok, pos)) = lex.next_token()? else {
            return Err(err(
                ParseErrorKind::UnbalancedParens,
                lex.pos(),
                format!("{} unclosed `(` at end of input", stack.len()),
            ));
        };
        let top = stack.last_mut().expect("stack non-empty inside expression");
        match tok {
            Tok::Role(r) => {
                if let Some(prev) = &top.pending_role {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        pos,
                        format!("role `:{prev}` has no value"),
                    ));
                }
                top.pending_role = Some(r);
            }
            Tok::Open => {
                if top.pending_role.is_none() {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        pos,
                        "`(` must follow a role",
                    ));
                }
                next_open = Some(pos);
            }
            Tok::Symbol(s) | Tok::Str(s) => {
                let is_str = s.starts_with('"');
                let Some(role) = top.pending_role.take() else {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        pos,
                        format!("value `{s}` without a role"),
                    ));
                };
                let source = top.var.clone();
                if is_str {
                    edges.push((
                        Edge {
                            source,
                            role,
                            target: Target::Constant(s),
                        },
                        None,
                    ));
                } else {
                    edges.push((
                        Edge {
                            source,
                            role,
                            target: Target::Constant(s.clone()),
                        },
                        Some((s, pos)),
                    ));
                }
            }
            Tok::Close => {
                if let Some(r) = &top.pending_role {
                    return Err(err(
                        ParseErrorKind::UnexpectedToken,
                        pos,
                        format!("role `:{r}` has no value"),
                    ));
                }
                stack.pop();
                if stack.is_empty() {
                    break;
                }
            }
            Tok::Slash => {
                return Err(err(
                    ParseErrorKind::UnexpectedToken,
                    pos,
                    "unexpected `/`",
                ))
            }
        }
    }

    if let Some((tok, pos)) = lex.next_token()? {
        let kind = if tok == Tok::Close {
            ParseErrorKind::UnbalancedParens
        } else {
            ParseErrorKind::TrailingInput
        };
        return Err(err(
            kind,
            pos,
            format!("unexpected {} after the graph", describe(&tok)),
        ));
    }

    let mut resolved = Vec::with_capacity(edges.len());
    for (mut edge, symbol) in edges {
        if let Some((s, pos)) = symbol {
            if bound.contains_key(&s) {
                edge.target = Target::Node(s);
            } else if looks_like_variable(&s) {
                return Err(err(
                    ParseErrorKind::DanglingReference,
                    pos,
                    format!("reference to unbound variable `{s}`"),
                ));
            }
        }
        resolved.push(edge);
    }

    let root = root.expect("root set on first node");
    Ok(AmrGraph::new(root, nodes, resolved, metadata).expect("parser output satisfies graph invariants"))
}

/// Splits `# ::key value ::key2 value2` comment lines into fields.
fn parse_metadata_line(line: &str, out: &mut Vec<(String, String)>) {
    let body = line.trim_start().trim_start_matches('#');
    for field in body.split("::").skip(1) {
        let field = field.trim();
        if field.is_empty() {
            continue;
        }
        let (k, v) = match field.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (field, ""),
        };
        out.push((k.to_string(), v.to_string()));
    }
}

fn parse_block(text: &str, first_line: usize) -> Result<AmrGraph, ParseError> {
    let mut metadata = Vec::new();
    let mut offset = 0;
    let mut line_no = first_line;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            parse_metadata_line(trimmed, &mut metadata);
        } else if !trimmed.is_empty() {
            break;
        }
        offset += line.len();
        line_no += 1;
    }
    parse_expression(&text[offset..], line_no, metadata)
}

/// Parses a single PENMAN block: optional `# ::` metadata lines followed by
/// exactly one graph expression.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    parse_block(text, 1)
}

/// Parses a sembank file: blocks separated by blank lines. Line numbers in
/// errors refer to the whole file.
pub fn parse_sembank(text: &str) -> Result<Vec<AmrGraph>, ParseError> {
    let mut graphs = Vec::new();
    let mut block = String::new();
    let mut block_start = 1;
    let mut has_content = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if has_content {
                graphs.push(parse_block(block.trim_end_matches('\n'), block_start)?);
            }
            block.clear();
            has_content = false;
            block_start = i + 2;
            continue;
        }
        if !has_content {
            block_start = i + 1;
        }
        has_content = true;
        block.push_str(line);
        block.push('\n');
    }
    if has_content {
        graphs.push(parse_block(block.trim_end_matches('\n'), block_start)?);
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_node_frame() {
        let g = parse_penman("(h / have-01 :ARG0 (i / i) :ARG1 (d / down))").unwrap();
        assert_eq!(g.root(), "h");
        assert_eq!(g.nodes().len(), 3);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edges()[0].role, "ARG0");
        assert_eq!(g.edges()[0].target, Target::Node("i".into()));
        assert_eq!(g.edges()[1].target, Target::Node("d".into()));
    }

    #[test]
    fn parses_single_node() {
        let g = parse_penman("(a / a)").unwrap();
        assert_eq!(g.root(), "a");
        assert_eq!(g.nodes(), &[("a".to_string(), "a".to_string())]);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn captures_metadata_and_constants() {
        let text = "# ::id s1.3 ::date 2020\n# ::snt I have my ups and downs.\n(h / have-01\n   :polarity -\n   :ARG1 \"New York\"\n   :quant 5)";
        let g = parse_penman(text).unwrap();
        assert_eq!(g.meta("id"), Some("s1.3"));
        assert_eq!(g.meta("date"), Some("2020"));
        assert_eq!(g.meta("snt"), Some("I have my ups and downs."));
        assert_eq!(g.edges()[0].target, Target::Constant("-".into()));
        assert_eq!(g.edges()[1].target, Target::Constant("\"New York\"".into()));
        assert_eq!(g.edges()[2].target, Target::Constant("5".into()));
    }

    #[test]
    fn reentrancy_resolves_forward_and_backward() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        assert_eq!(g.edges()[2].target, Target::Node("b".into()));
        let g = parse_penman("(w / want-01 :ARG1 (g / go-01 :ARG0 b) :ARG0 (b / boy))").unwrap();
        assert_eq!(g.edges()[1].target, Target::Node("b".into()));
    }

    #[test]
    fn located_errors() {
        let e = parse_penman("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::EmptyInput);

        let e = parse_penman("(a / b :ARG0 (c / d)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParens);

        let e = parse_penman("(a / b))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParens);
        assert_eq!((e.line, e.column), (1, 8));

        let e = parse_penman("(a / b\n  :ARG0 (a / c))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateVariable);
        assert_eq!((e.line, e.column), (2, 9));

        let e = parse_penman("(a / b :ARG0 z2)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DanglingReference);
        assert_eq!((e.line, e.column), (1, 14));

        let e = parse_penman("# ::snt x\n\n(a / b :ARG0 \"open").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnterminatedString);
        assert_eq!(e.line, 3);
    }

    #[test]
    fn symbol_constants_that_are_not_variable_shaped() {
        let g = parse_penman("(a / b :mode imperative)").unwrap();
        assert_eq!(g.edges()[0].target, Target::Constant("imperative".into()));
    }

    #[test]
    fn sembank_blocks_and_absolute_lines() {
        let text = "# ::id a\n(a / a)\n\n\n# ::id b\n(b / b\n  :ARG0 (c / c))\n";
        let gs = parse_sembank(text).unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[1].meta("id"), Some("b"));

        let bad = "(a / a)\n\n(b / b\n  :ARG0 (c / c)";
        let e = parse_sembank(bad).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParens);
        assert_eq!(e.line, 4);
    }

    #[test]
    fn deep_nesting_does_not_overflow() {
        let depth = 200_000;
        let mut s = String::new();
        for i in 0..depth {
            s.push_str(&format!("(v{i} / c :op1 "));
        }
        s.push_str("(z / end)");
        let e = parse_penman(&s).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParens);
    }
}
