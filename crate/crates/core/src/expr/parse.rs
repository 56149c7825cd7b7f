use super::{Func, Node};
use crate::error::{Error, Result};

const PRIMARY: &[&str] = &["number", "identifier", "(", "-", "+"];

pub(super) fn parse(source: &str) -> Result<Node> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, expected: &[&str]) -> Error {
        Error::Syntax {
            offset: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Node::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Node::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    // `^` binds tighter than unary minus on its left and is right associative.
    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error(&[")", "operator"]));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.error(PRIMARY)),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(Node::Num(v))
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        self.pos = i;
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.error(&["("]));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error(&[")", "operator"]));
            }
            return Ok(Node::Call(func, Box::new(arg)));
        }
        if name == "pi" {
            return Ok(Node::Num(std::f64::consts::PI));
        }
        if let Some(idx) = variable_index(name) {
            return Ok(Node::Var(idx));
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

/// `x1` → 0, `x12` → 11; anything else is not a variable.
fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    digits.parse::<usize>().ok().map(|k| k - 1)
}
