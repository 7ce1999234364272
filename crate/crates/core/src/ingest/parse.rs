//! Reader for the textual model format.
//!
//! ```text
//! document  := decl*
//! decl      := var_decl | rule_decl | cpt_decl
//! var_decl  := "variable" IDENT "{" IDENT ("," IDENT)* "}"
//! rule_decl := "rule" head "<-" body ":" NUMBER ("," NUMBER)?
//! head      := assign ("&" assign)*
//! body      := [ assign ("&" assign)* ]
//! assign    := IDENT "=" IDENT
//! cpt_decl  := "cpt" IDENT "|" IDENT* "{" row* "}"
//! row       := IDENT* ":" NUMBER+
//! ```
//!
//! `#` comments run to end of line. Identifiers are `[A-Za-z_][A-Za-z0-9_]*`;
//! numbers are plain decimals in `[0, 1]`.

use crate::error::{Error, Result};
use crate::ingest::tabular::{Cpt, TabularNetwork};
use crate::model::{Context, Rule, RuleBase, RuleBaseKind, VarId, Variable, SUM_TOLERANCE};
use crate::scalar::{compensated_sum, Prob};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    Comma,
    Arrow,
    Colon,
    Amp,
    Eq,
    Bar,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Number(s) => format!("number `{}`", s),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '{' => push(Tok::LBrace),
            '}' => push(Tok::RBrace),
            ',' => push(Tok::Comma),
            ':' => push(Tok::Colon),
            '&' => push(Tok::Amp),
            '=' => push(Tok::Eq),
            '|' => push(Tok::Bar),
            '<' => {
                if chars.get(i + 1) == Some(&'-') {
                    push(Tok::Arrow);
                    i += 2;
                    col += 2;
                    continue;
                }
                return Err(Error::Syntax {
                    line,
                    column: col,
                    expected: "`<-`".into(),
                    found: "`<`".into(),
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Ident(s));
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Number(s));
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    column: col,
                    expected: "a token".into(),
                    found: format!("`{}`", other),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// What a declaration introduced, and where.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclSpan {
    pub kind: DeclKind,
    /// Variable name for `variable` and `cpt`; head variable(s) for `rule`.
    pub subject: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Variable,
    Rule,
    Cpt,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model<P = f64> {
    Rules(RuleBase<P>),
    Network(TabularNetwork<P>),
}

impl<P: Prob> Model<P> {
    pub fn variables(&self) -> &[Variable] {
        match self {
            Model::Rules(rb) => rb.variables(),
            Model::Network(net) => net.variables(),
        }
    }

    /// The model as a rule base; tables are converted row by row.
    pub fn to_rule_base(&self) -> RuleBase<P> {
        match self {
            Model::Rules(rb) => rb.clone(),
            Model::Network(net) => crate::ingest::cpt_to_rules(net),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument<P = f64> {
    pub model: Model<P>,
    pub decls: Vec<DeclSpan>,
}

struct Parser<P> {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<Variable>,
    rules: Vec<Rule<P>>,
    interval_rules: bool,
    cpts: Vec<Option<Cpt<P>>>,
    decls: Vec<DeclSpan>,
}

/// Parses a model document. Per-declaration checks (names, domains, numeric
/// ranges, table shapes) are done here; rule-base-wide invariants are left
/// to [`crate::model::validate`].
pub fn parse_model<P: Prob>(text: &str) -> Result<ModelDocument<P>> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        vars: Vec::new(),
        rules: Vec::new(),
        interval_rules: false,
        cpts: Vec::new(),
        decls: Vec::new(),
    };
    p.document()?;
    p.finish()
}

impl<P: Prob> Parser<P> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, expected: &str) -> Result<T> {
        let t = self.peek();
        Err(Error::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.to_string(),
            found: t.tok.describe(),
        })
    }

    fn semantic<T>(at: &Token, message: String) -> Result<T> {
        Err(Error::Semantic {
            line: at.line,
            column: at.column,
            message,
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            self.syntax(&tok.describe())
        }
    }

    fn ident(&mut self) -> Result<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next()))
            }
            _ => self.syntax("identifier"),
        }
    }

    fn number(&mut self) -> Result<P> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(s) => {
                self.next();
                let p = match P::parse_decimal(s) {
                    Some(p) => p,
                    None => {
                        return Err(Error::Syntax {
                            line: t.line,
                            column: t.column,
                            expected: "decimal number".into(),
                            found: t.tok.describe(),
                        })
                    }
                };
                if p > P::one() {
                    return Self::semantic(&t, format!("probability {} outside [0, 1]", s));
                }
                Ok(p)
            }
            _ => self.syntax("number"),
        }
    }

    fn var_id(&self, name: &str, at: &Token) -> Result<VarId> {
        match self.vars.iter().position(|v| v.name == name) {
            Some(i) => Ok(VarId(i)),
            None => Self::semantic(at, format!("undeclared variable `{}`", name)),
        }
    }

    fn value_of(&self, var: VarId, value: &str, at: &Token) -> Result<usize> {
        match self.vars[var.0].value_index(value) {
            Some(i) => Ok(i),
            None => Self::semantic(
                at,
                format!("`{}` is not a value of `{}`", value, self.vars[var.0].name),
            ),
        }
    }

    fn document(&mut self) -> Result<()> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return Ok(()),
                Tok::Ident(k) if k == "variable" => self.var_decl()?,
                Tok::Ident(k) if k == "rule" => self.rule_decl()?,
                Tok::Ident(k) if k == "cpt" => self.cpt_decl()?,
                _ => return self.syntax("`variable`, `rule`, or `cpt`"),
            }
        }
    }

    fn var_decl(&mut self) -> Result<()> {
        let kw = self.next();
        let (name, name_tok) = self.ident()?;
        if self.vars.iter().any(|v| v.name == name) {
            return Self::semantic(&name_tok, format!("duplicate variable `{}`", name));
        }
        if !self.rules.is_empty() || self.cpts.iter().any(Option::is_some) {
            // ids follow declaration order, so the ordering is fixed once used
            return Self::semantic(
                &kw,
                format!("variable `{}` declared after rules or tables", name),
            );
        }
        self.expect(Tok::LBrace)?;
        let mut values = Vec::new();
        loop {
            let (v, vt) = self.ident()?;
            if values.contains(&v) {
                return Self::semantic(&vt, format!("duplicate value `{}` in `{}`", v, name));
            }
            values.push(v);
            if self.peek().tok == Tok::Comma {
                self.next();
                continue;
            }
            break;
        }
        self.expect(Tok::RBrace)?;
        if values.len() < 2 {
            return Self::semantic(
                &name_tok,
                format!("variable `{}` needs at least two values", name),
            );
        }
        self.vars.push(Variable {
            name: name.clone(),
            values,
        });
        self.cpts.push(None);
        self.decls.push(DeclSpan {
            kind: DeclKind::Variable,
            subject: name,
            line: kw.line,
            column: kw.column,
        });
        Ok(())
    }

    fn assignments(&mut self, ctx: &mut Context) -> Result<()> {
        loop {
            let (name, nt) = self.ident()?;
            self.expect(Tok::Eq)?;
            let (value, vt) = self.ident()?;
            let var = self.var_id(&name, &nt)?;
            let val = self.value_of(var, &value, &vt)?;
            if ctx.contains_var(var) {
                return Self::semantic(&nt, format!("`{}` assigned twice", name));
            }
            ctx.insert(var, val);
            if self.peek().tok == Tok::Amp {
                self.next();
                continue;
            }
            return Ok(());
        }
    }

    fn rule_decl(&mut self) -> Result<()> {
        let kw = self.next();
        if self.cpts.iter().any(Option::is_some) {
            return Self::semantic(&kw, "rules and tables cannot be mixed".into());
        }
        let mut head = Context::new();
        self.assignments(&mut head)?;
        let arrow = self.expect(Tok::Arrow)?;
        let mut body = Context::new();
        if self.peek().tok != Tok::Colon {
            self.assignments(&mut body)?;
        }
        if head.shares_var(&body) {
            return Self::semantic(&arrow, "head and body mention the same variable".into());
        }
        self.expect(Tok::Colon)?;
        let lo_tok = self.peek().clone();
        let lower = self.number()?;
        let upper = if self.peek().tok == Tok::Comma {
            self.next();
            self.interval_rules = true;
            self.number()?
        } else {
            lower.clone()
        };
        if lower > upper {
            return Self::semantic(&lo_tok, "lower bound exceeds upper bound".into());
        }
        let subject = head
            .vars()
            .map(|v| self.vars[v.0].name.clone())
            .collect::<Vec<_>>()
            .join("&");
        self.rules.push(Rule::interval(head, body, lower, upper));
        self.decls.push(DeclSpan {
            kind: DeclKind::Rule,
            subject,
            line: kw.line,
            column: kw.column,
        });
        Ok(())
    }

    fn cpt_decl(&mut self) -> Result<()> {
        let kw = self.next();
        if !self.rules.is_empty() {
            return Self::semantic(&kw, "rules and tables cannot be mixed".into());
        }
        let (name, nt) = self.ident()?;
        let var = self.var_id(&name, &nt)?;
        if self.cpts[var.0].is_some() {
            return Self::semantic(&nt, format!("duplicate table for `{}`", name));
        }
        self.expect(Tok::Bar)?;
        let mut parents = Vec::new();
        while let Tok::Ident(_) = self.peek().tok {
            let (pname, pt) = self.ident()?;
            let p = self.var_id(&pname, &pt)?;
            if p >= var {
                return Self::semantic(
                    &pt,
                    format!("parent `{}` must be declared before `{}`", pname, name),
                );
            }
            if parents.contains(&p) {
                return Self::semantic(&pt, format!("duplicate parent `{}`", pname));
            }
            parents.push(p);
        }
        self.expect(Tok::LBrace)?;
        let nrows: usize = parents
            .iter()
            .map(|p| self.vars[p.0].domain_size())
            .product();
        let arity = self.vars[var.0].domain_size();
        let mut rows: Vec<Option<Vec<P>>> = vec![None; nrows];
        while self.peek().tok != Tok::RBrace {
            let row_tok = self.peek().clone();
            let mut idx = 0usize;
            for &p in &parents {
                let (value, vt) = self.ident()?;
                let val = self.value_of(p, &value, &vt)?;
                idx = idx * self.vars[p.0].domain_size() + val;
            }
            self.expect(Tok::Colon)?;
            let mut probs = Vec::new();
            while let Tok::Number(_) = self.peek().tok {
                probs.push(self.number()?);
            }
            if probs.is_empty() {
                return self.syntax("number");
            }
            if probs.len() != arity {
                return Self::semantic(
                    &row_tok,
                    format!(
                        "row has {} probabilities, `{}` has {} values",
                        probs.len(),
                        name,
                        arity
                    ),
                );
            }
            let sum = compensated_sum(probs.iter().cloned());
            if !sum.near(&P::one(), SUM_TOLERANCE) {
                return Self::semantic(&row_tok, format!("row sums to {}, not 1", sum.to_f64()));
            }
            if rows[idx].is_some() {
                return Self::semantic(&row_tok, "duplicate row".into());
            }
            rows[idx] = Some(probs);
        }
        let close = self.expect(Tok::RBrace)?;
        let present = rows.iter().filter(|r| r.is_some()).count();
        if present != nrows {
            return Self::semantic(
                &close,
                format!(
                    "table for `{}` has {} rows, expected {}",
                    name, present, nrows
                ),
            );
        }
        self.cpts[var.0] = Some(Cpt {
            parents,
            rows: rows.into_iter().map(Option::unwrap).collect(),
        });
        self.decls.push(DeclSpan {
            kind: DeclKind::Cpt,
            subject: name,
            line: kw.line,
            column: kw.column,
        });
        Ok(())
    }

    fn finish(self) -> Result<ModelDocument<P>> {
        let eof = self.toks.last().expect("eof token").clone();
        let has_tables = self.cpts.iter().any(Option::is_some);
        let model = if has_tables {
            let mut cpts = Vec::with_capacity(self.cpts.len());
            for (i, c) in self.cpts.into_iter().enumerate() {
                match c {
                    Some(c) => cpts.push(c),
                    None => {
                        return Self::semantic(
                            &eof,
                            format!("no table for `{}`", self.vars[i].name),
                        )
                    }
                }
            }
            let net = TabularNetwork::new(self.vars, cpts).map_err(|e| Error::Semantic {
                line: eof.line,
                column: eof.column,
                message: e.to_string(),
            })?;
            Model::Network(net)
        } else {
            let kind = if self.interval_rules {
                RuleBaseKind::Approximating
            } else {
                RuleBaseKind::Exact
            };
            let rb = RuleBase::new(self.vars, self.rules, kind).map_err(|e| Error::Semantic {
                line: eof.line,
                column: eof.column,
                message: e.to_string(),
            })?;
            Model::Rules(rb)
        };
        Ok(ModelDocument {
            model,
            decls: self.decls,
        })
    }
}
