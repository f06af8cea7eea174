//! Minimal GML reader covering the subset used by the classic network
//! collections: `graph [ node [ id .. <key> .. ] edge [ source .. target .. ] ]`.
//!
//! Directed graphs are read as undirected. Unknown keys are ignored.

use std::path::Path;

use log::warn;

use super::{read_to_string, Graph, GraphBuilder, LabelVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<(String, Value, usize)>),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

#[derive(Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Word(String),
    Str(String),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
        }
    }

    fn next_token(&mut self, path: &Path) -> Result<Option<(Token, usize)>> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some('\n') => {
                    self.line += 1;
                    self.chars.next();
                }
                Some(c) if c.is_whitespace() => {
                    self.chars.next();
                }
                Some('#') => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.chars.next();
                    }
                }
                _ => break,
            }
        }
        let line = self.line;
        let c = self.chars.next().expect("peeked");
        let tok = match c {
            '[' => Token::Open,
            ']' => Token::Close,
            '"' => {
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err(Error::parse(path, line, "unterminated string")),
                        Some('"') => break,
                        Some(ch) => {
                            if ch == '\n' {
                                self.line += 1;
                            }
                            s.push(ch);
                        }
                    }
                }
                Token::Str(s)
            }
            _ => {
                let mut s = String::from(c);
                while let Some(&ch) = self.chars.peek() {
                    if ch.is_whitespace() || ch == '[' || ch == ']' || ch == '"' {
                        break;
                    }
                    s.push(ch);
                    self.chars.next();
                }
                Token::Word(s)
            }
        };
        Ok(Some((tok, line)))
    }
}

fn parse_list(lex: &mut Lexer, path: &Path, nested: bool, open_line: usize) -> Result<Vec<(String, Value, usize)>> {
    let mut items = Vec::new();
    loop {
        let Some((tok, line)) = lex.next_token(path)? else {
            if nested {
                return Err(Error::parse(path, open_line, "unclosed `[`"));
            }
            return Ok(items);
        };
        let key = match tok {
            Token::Close if nested => return Ok(items),
            Token::Close => return Err(Error::parse(path, line, "unbalanced `]`")),
            Token::Open | Token::Str(_) => {
                return Err(Error::parse(path, line, "expected a key"));
            }
            Token::Word(w) => w,
        };
        let value = match lex.next_token(path)? {
            None => return Err(Error::parse(path, line, format!("key `{key}` has no value"))),
            Some((Token::Open, l)) => Value::List(parse_list(lex, path, true, l)?),
            Some((Token::Word(w), _)) | Some((Token::Str(w), _)) => Value::Scalar(w),
            Some((Token::Close, l)) => {
                return Err(Error::parse(path, l, format!("key `{key}` has no value")));
            }
        };
        items.push((key, value, line));
    }
}

fn scalar<'v>(items: &'v [(String, Value, usize)], key: &str) -> Option<&'v str> {
    items.iter().find_map(|(k, v, _)| match v {
        Value::Scalar(s) if k == key => Some(s.as_str()),
        _ => None,
    })
}

/// Parses GML text; `label_key` names the node attribute holding ground truth.
pub fn parse_gml(text: &str, label_key: &str, path: &Path) -> Result<(Graph, LabelVector)> {
    let mut lex = Lexer::new(text);
    let top = parse_list(&mut lex, path, false, 1)?;
    let (graph_items, graph_line) = top
        .iter()
        .find_map(|(k, v, l)| match v {
            Value::List(items) if k == "graph" => Some((items, *l)),
            _ => None,
        })
        .ok_or_else(|| Error::parse(path, 1, "no `graph [ ... ]` block"))?;

    let mut b = GraphBuilder::default();
    let mut raw_labels: Vec<String> = Vec::new();
    for (key, value, line) in graph_items {
        if key != "node" {
            continue;
        }
        let Value::List(attrs) = value else {
            return Err(Error::parse(path, *line, "`node` must be a list"));
        };
        let id = scalar(attrs, "id").ok_or_else(|| Error::parse(path, *line, "node without `id`"))?;
        if b.lookup(id).is_some() {
            return Err(Error::parse(path, *line, format!("duplicate node id {id}")));
        }
        let label = scalar(attrs, label_key)
            .ok_or_else(|| Error::parse(path, *line, format!("node {id} has no `{label_key}` attribute")))?;
        b.intern(id);
        raw_labels.push(label.to_string());
    }
    if raw_labels.is_empty() {
        return Err(Error::parse(path, graph_line, "graph has no nodes"));
    }
    for (key, value, line) in graph_items {
        if key != "edge" {
            continue;
        }
        let Value::List(attrs) = value else {
            return Err(Error::parse(path, *line, "`edge` must be a list"));
        };
        let endpoint = |name: &str| -> Result<usize> {
            let id = scalar(attrs, name).ok_or_else(|| Error::parse(path, *line, format!("edge without `{name}`")))?;
            b.lookup(id)
                .ok_or_else(|| Error::parse(path, *line, format!("edge refers to unknown node {id}")))
        };
        let (u, v) = (endpoint("source")?, endpoint("target")?);
        b.push_internal(u, v, 1.0)?;
    }
    if b.self_loops > 0 {
        warn!("{}: dropped {} self-loop(s)", path.display(), b.self_loops);
    }
    Ok((b.finish(), LabelVector::densify(&raw_labels)))
}

pub fn load_gml(path: &Path, label_key: &str) -> Result<(Graph, LabelVector)> {
    let text = read_to_string(path)?;
    parse_gml(&text, label_key, path)
}
