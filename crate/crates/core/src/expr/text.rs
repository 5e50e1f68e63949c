//! Canonical prefix text format.
//!
//! ```text
//! expr  := "x" | number | "rand(" number ")" | op "(" expr ("," expr)* ")"
//! ```
//!
//! Numbers are written in Rust's shortest round-trip form (`{:?}`), so
//! parsing the output reproduces every constant bit for bit.

use super::{ExprTree, Node, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

pub(super) fn serialize(tree: &ExprTree) -> String {
    let mut out = String::with_capacity(tree.len() * 6);
    let mut pos = 0;
    write_node(tree.nodes(), &mut pos, &mut out);
    out
}

fn write_node(nodes: &[Node], pos: &mut usize, out: &mut String) {
    let node = nodes[*pos];
    *pos += 1;
    match node {
        Node::X => out.push('x'),
        Node::Const(v) => out.push_str(&format!("{v:?}")),
        Node::Rand(v) => out.push_str(&format!("rand({v:?})")),
        Node::Op(op) => {
            out.push_str(op.name());
            out.push('(');
            for i in 0..op.arity() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_node(nodes, pos, out);
            }
            out.push(')');
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { position: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.error(format!("expected '{want}', found '{c}'")),
            None => self.error(format!("expected '{want}', found end of input")),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let lit = self.take_while(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E'));
        match lit.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.error(format!("invalid number literal '{lit}'"))
            }
        }
    }

    fn expr(&mut self, out: &mut Vec<Node>) -> Result<(), ParseError> {
        match self.peek() {
            None => self.error("unexpected end of input"),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let v = self.number()?;
                out.push(Node::Const(v));
                Ok(())
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let ident = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                let Some(symbol) = Symbol::from_name(ident) else {
                    self.pos = start;
                    return self.error(format!("unknown symbol '{ident}'"));
                };
                match symbol {
                    Symbol::X => out.push(Node::X),
                    Symbol::A => {
                        self.pos = start;
                        return self.error("constants are written as numeric literals");
                    }
                    Symbol::Rand => {
                        self.expect('(')?;
                        let v = self.number()?;
                        self.expect(')')?;
                        out.push(Node::Rand(v));
                    }
                    op => {
                        out.push(Node::Op(op));
                        self.expect('(')?;
                        for i in 0..op.arity() {
                            if i > 0 {
                                self.expect(',')?;
                            }
                            self.expr(out)?;
                        }
                        self.expect(')')?;
                    }
                }
                Ok(())
            }
            Some(c) => self.error(format!("unexpected character '{c}'")),
        }
    }
}

pub(super) fn parse(input: &str) -> Result<ExprTree, ParseError> {
    let mut parser = Parser { src: input, pos: 0 };
    let mut nodes = Vec::new();
    parser.expr(&mut nodes)?;
    if parser.peek().is_some() {
        return parser.error("trailing input after expression");
    }
    ExprTree::from_prefix(nodes).map_err(|e| ParseError { position: input.len(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        let t = ExprTree::binary(Symbol::Add, ExprTree::leaf(Node::X), ExprTree::leaf(Node::Const(2.5)));
        assert_eq!(t.to_text(), "add(x, 2.5)");
        let r = ExprTree::unary(Symbol::Neg, ExprTree::leaf(Node::Rand(1.0625)));
        assert_eq!(r.to_text(), "neg(rand(1.0625))");
    }

    #[test]
    fn parse_round_trip_exact_constants() {
        let v = 1.0 + f64::EPSILON * 3.0;
        let t = ExprTree::binary(
            Symbol::Div,
            ExprTree::leaf(Node::Const(v)),
            ExprTree::leaf(Node::Rand(1.0999999999999999)),
        );
        let back = ExprTree::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        for s in ["x", "-3.5", "1e-300", "sum(mul(x, x))", "cum( x )", "max(sub(x,rand(1.05)))"] {
            let parsed = ExprTree::parse(s).unwrap();
            assert_eq!(ExprTree::parse(&parsed.to_text()).unwrap(), parsed, "{s}");
        }
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "add(x)", "add(x, x, x)", "foo(x)", "neg(x", "x x", "rand()", "a", "neg(inf)", "sum(x))"] {
            assert!(ExprTree::parse(bad).is_err(), "{bad:?} should fail");
        }
    }
}
