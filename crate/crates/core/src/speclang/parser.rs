//! Recursive-descent parser for specification source text.
//!
//! Precedence, tightest first: `!` / `not`, `&&` / `and`, `|| ` / `or`,
//! `->` / `implies`, `<->` / `iff`. The arrows associate to the right,
//! conjunction and disjunction to the left, and parentheses override.

use thiserror::Error;

use super::SpecAst;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: unknown operator `{text}`")]
    UnknownOperator { line: u32, col: u32, text: String },
    #[error("{line}:{col}: unexpected {found}, expected {expected}")]
    Unexpected {
        line: u32,
        col: u32,
        found: String,
        expected: String,
    },
    #[error("specification text is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Not => "`!`".into(),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($tok:expr, $width:expr) => {{
            toks.push(Spanned {
                tok: $tok,
                line,
                col,
            });
            col += $width;
        }};
    }

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '(' => {
                chars.next();
                push!(Tok::LParen, 1);
            }
            ')' => {
                chars.next();
                push!(Tok::RParen, 1);
            }
            '!' => {
                chars.next();
                push!(Tok::Not, 1);
            }
            '&' => {
                chars.next();
                if chars.peek() == Some(&'&') {
                    chars.next();
                    push!(Tok::And, 2);
                } else {
                    return Err(ParseError::UnknownOperator {
                        line,
                        col,
                        text: "&".into(),
                    });
                }
            }
            '|' => {
                chars.next();
                if chars.peek() == Some(&'|') {
                    chars.next();
                    push!(Tok::Or, 2);
                } else {
                    return Err(ParseError::UnknownOperator {
                        line,
                        col,
                        text: "|".into(),
                    });
                }
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'>') {
                    chars.next();
                    push!(Tok::Implies, 2);
                } else {
                    return Err(ParseError::UnknownOperator {
                        line,
                        col,
                        text: "-".into(),
                    });
                }
            }
            '<' => {
                chars.next();
                if chars.peek() == Some(&'-') {
                    chars.next();
                    if chars.peek() == Some(&'>') {
                        chars.next();
                        push!(Tok::Iff, 3);
                    } else {
                        return Err(ParseError::UnknownOperator {
                            line,
                            col,
                            text: "<-".into(),
                        });
                    }
                } else {
                    return Err(ParseError::UnknownOperator {
                        line,
                        col,
                        text: "<".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let width = ident.len() as u32;
                let tok = match ident.as_str() {
                    "not" => Tok::Not,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "implies" => Tok::Implies,
                    "iff" => Tok::Iff,
                    _ => Tok::Ident(ident),
                };
                push!(tok, width);
            }
            other => {
                return Err(ParseError::UnknownOperator {
                    line,
                    col,
                    text: other.to_string(),
                });
            }
        }
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let here = self.peek();
        ParseError::Unexpected {
            line: here.line,
            col: here.col,
            found: here.tok.describe(),
            expected: expected.into(),
        }
    }

    fn eat(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    // iff := implies ('<->' iff)?
    fn iff(&mut self) -> Result<SpecAst, ParseError> {
        let lhs = self.implies()?;
        if self.peek().tok == Tok::Iff {
            self.bump();
            let rhs = self.iff()?;
            Ok(lhs.iff(rhs))
        } else {
            Ok(lhs)
        }
    }

    // implies := or ('->' implies)?
    fn implies(&mut self) -> Result<SpecAst, ParseError> {
        let lhs = self.or()?;
        if self.peek().tok == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            Ok(lhs.implies(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<SpecAst, ParseError> {
        let mut lhs = self.and()?;
        while self.peek().tok == Tok::Or {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<SpecAst, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek().tok == Tok::And {
            self.bump();
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<SpecAst, ParseError> {
        match &self.peek().tok {
            Tok::Not => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Ident(_) => {
                let Spanned {
                    tok: Tok::Ident(name),
                    ..
                } = self.bump()
                else {
                    unreachable!()
                };
                Ok(SpecAst::Atom(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                self.eat(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("a predicate name, `!`, or `(`")),
        }
    }
}

/// Parses specification source text into a [`SpecAst`].
pub fn parse_spec(text: &str) -> Result<SpecAst, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let ast = parser.iff()?;
    parser.eat(
        Tok::Eof,
        "an operator (`&&`, `||`, `->`, `<->`) or end of input",
    )?;
    Ok(ast)
}
