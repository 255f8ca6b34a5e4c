//! Lexer and recursive-descent parser for `.slc` modules.

use super::ast::{Decl, FuncDecl, Ident, Pos, SExp, SourceModule};
use super::LangError;
use crate::syntax::Op;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Kw(k) => format!("keyword `{k}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const KEYWORDS: [&str; 9] = ["export", "import", "decl", "local", "return", "if", "then", "else", "new"];
const PUNCT: [&str; 12] = ["==", "(", ")", "{", "}", ",", ";", "=", "<", "+", "-", "*"];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, LangError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<i64>()
                .map_err(|_| LangError::Syntax { pos, message: format!("integer literal `{text}` out of range") })?;
            col += (i - start) as u32;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(text),
            };
            out.push((tok, pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push((Tok::Punct(p), pos));
            }
            None => return Err(LangError::Syntax { pos, message: format!("unexpected character `{c}`") }),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, LangError> {
        Err(LangError::Syntax {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), LangError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(&format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), LangError> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> Result<Ident, LangError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let (_, pos) = self.bump();
                Ok(Ident { name, pos })
            }
            _ => self.error("an identifier"),
        }
    }

    /// Comma-separated identifiers, possibly empty, up to `close`.
    fn ident_list(&mut self, close: &str) -> Result<Vec<Ident>, LangError> {
        let mut out = Vec::new();
        if self.is_punct(close) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    fn module(&mut self) -> Result<SourceModule, LangError> {
        let mut m = SourceModule::default();
        loop {
            if self.is_kw("export") {
                self.bump();
                m.exports.extend(self.ident_list(";")?);
                self.expect_punct(";")?;
            } else if self.is_kw("import") {
                self.bump();
                m.imports.extend(self.ident_list(";")?);
                self.expect_punct(";")?;
            } else {
                break;
            }
        }
        while !matches!(self.peek(), Tok::Eof) {
            if !self.is_kw("decl") {
                return self.error("`decl`");
            }
            m.decls.push(self.decl()?);
        }
        Ok(m)
    }

    fn decl(&mut self) -> Result<Decl, LangError> {
        self.expect_kw("decl")?;
        let name = self.ident()?;
        if self.eat_punct("(") {
            let params = self.ident_list(")")?;
            self.expect_punct(")")?;
            self.expect_punct("{")?;
            let mut locals = Vec::new();
            while self.is_kw("local") {
                self.bump();
                locals.extend(self.ident_list(";")?);
                self.expect_punct(";")?;
            }
            let (mut body, ret) = self.items()?;
            self.expect_punct("}")?;
            self.eat_punct(";");
            let explicit_return = ret.is_some();
            let result = match ret {
                Some(e) => e,
                None => body.pop().unwrap_or(SExp::Unit),
            };
            return Ok(Decl::Func(FuncDecl { name, params, locals, body, result, explicit_return }));
        }
        let init = if self.eat_punct("=") { self.int_literal()? } else { 0 };
        self.expect_punct(";")?;
        Ok(Decl::Var { name, init })
    }

    fn int_literal(&mut self) -> Result<i64, LangError> {
        let neg = self.eat_punct("-");
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { n.wrapping_neg() } else { n })
            }
            _ => self.error("an integer"),
        }
    }

    /// Items of a block up to (not including) `}`. A `return` must be last.
    fn items(&mut self) -> Result<(Vec<SExp>, Option<SExp>), LangError> {
        let mut items = Vec::new();
        loop {
            if self.is_punct("}") {
                return Ok((items, None));
            }
            if self.is_kw("return") {
                self.bump();
                let e = self.exp()?;
                self.eat_punct(";");
                if !self.is_punct("}") {
                    return self.error("`}` after return");
                }
                return Ok((items, Some(e)));
            }
            items.push(self.exp()?);
            if !self.eat_punct(";") && !self.is_punct("}") {
                return self.error("`;` or `}`");
            }
        }
    }

    fn block(&mut self) -> Result<SExp, LangError> {
        self.expect_punct("{")?;
        let (mut items, ret) = self.items()?;
        self.expect_punct("}")?;
        if let Some(e) = ret {
            items.push(e);
        }
        Ok(SExp::Block(items))
    }

    fn exp(&mut self) -> Result<SExp, LangError> {
        let lhs = self.comparison()?;
        if self.eat_punct("=") {
            let rhs = self.exp()?;
            return Ok(SExp::Bin(Op::Assign, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<SExp, LangError> {
        let mut lhs = self.additive()?;
        loop {
            let op = if self.eat_punct("==") {
                Op::Eq
            } else if self.eat_punct("<") {
                Op::Lt
            } else {
                return Ok(lhs);
            };
            let rhs = self.additive()?;
            lhs = SExp::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn additive(&mut self) -> Result<SExp, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_punct("+") {
                Op::Add
            } else if self.eat_punct("-") {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = SExp::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<SExp, LangError> {
        if self.eat_punct("*") {
            return Ok(SExp::Deref(Box::new(self.unary()?)));
        }
        if self.is_punct("-") {
            return Ok(SExp::Int(self.int_literal()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<SExp, LangError> {
        let mut e = self.primary()?;
        while self.eat_punct("(") {
            let mut args = Vec::new();
            if !self.is_punct(")") {
                loop {
                    args.push(self.exp()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            e = SExp::Call(Box::new(e), args);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<SExp, LangError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(SExp::Int(n))
            }
            Tok::Ident(_) => Ok(SExp::Ident(self.ident()?)),
            Tok::Kw("new") => {
                self.bump();
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                Ok(SExp::New)
            }
            Tok::Kw("if") => {
                self.bump();
                self.expect_punct("(")?;
                let c = self.exp()?;
                self.expect_punct(")")?;
                self.expect_kw("then")?;
                let t = self.branch()?;
                self.expect_kw("else")?;
                let e = self.branch()?;
                Ok(SExp::If(Box::new(c), Box::new(t), Box::new(e)))
            }
            Tok::Punct("(") => {
                self.bump();
                if self.eat_punct(")") {
                    return Ok(SExp::Unit);
                }
                let mut items = vec![self.exp()?];
                while self.eat_punct(",") {
                    items.push(self.exp()?);
                }
                self.expect_punct(")")?;
                if items.len() == 1 {
                    Ok(items.pop().expect("one item"))
                } else {
                    Ok(SExp::Tuple(items))
                }
            }
            _ => self.error("an expression"),
        }
    }

    fn branch(&mut self) -> Result<SExp, LangError> {
        if self.is_punct("{") {
            self.block()
        } else {
            self.comparison()
        }
    }
}

/// Parses module text without checking scoping.
pub fn parse_module(src: &str) -> Result<SourceModule, LangError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    p.module()
}

/// Parses a single expression; used by tests and the REPL-style commands.
pub fn parse_exp(src: &str) -> Result<SExp, LangError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let e = p.exp()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.error("end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROT: &str = "export prot; import read;
decl s; decl k; decl x;
decl prot() {
  s = new(); k = new(); x = read();
  if (*x == *k) then *s else *k
}";

    #[test]
    fn parses_protector_module() {
        let m = parse_module(PROT).unwrap();
        assert_eq!(m.exports, vec![Ident::new("prot")]);
        assert_eq!(m.imports, vec![Ident::new("read")]);
        assert_eq!(m.decls.len(), 4);
        let f = m.func("prot").unwrap();
        assert_eq!(f.body.len(), 3);
        assert!(matches!(f.result, SExp::If(..)));
        assert!(!f.explicit_return);
    }

    #[test]
    fn precedence_and_calls() {
        let e = parse_exp("x = *y + 1 == f(a, b)").unwrap();
        assert_eq!(e.to_string(), "x = *y + 1 == f(a, b)");
        let SExp::Bin(Op::Assign, _, rhs) = e else { panic!() };
        assert!(matches!(*rhs, SExp::Bin(Op::Eq, ..)));
        assert_eq!(parse_exp("a - (b - c)").unwrap().to_string(), "a - (b - c)");
        assert_eq!(parse_exp("(a - b) - c").unwrap().to_string(), "a - b - c");
        assert_eq!(parse_exp("-3 + x").unwrap(), SExp::Bin(Op::Add, Box::new(SExp::Int(-3)), Box::new(SExp::Ident(Ident::new("x")))));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_module("decl f() {\n  x = ;\n}").unwrap_err();
        match err {
            LangError::Syntax { pos, .. } => assert_eq!(pos, Pos { line: 2, col: 7 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn statements_after_return_rejected() {
        assert!(parse_module("decl f() { return 1; 2 }").is_err());
    }

    #[test]
    fn printed_module_reparses_identically() {
        let m = parse_module(PROT).unwrap();
        let again = parse_module(&m.to_string()).unwrap();
        assert_eq!(m, again);
    }
}
