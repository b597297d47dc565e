//! Recursive-descent parser for the policy DSL.
//!
//! ```text
//! # comment
//! deny Aw -> v;
//! deny AwE -> B pre downgrade [Abk];
//! deny Acv -> v pre upgrade [Acu <>];
//! deny P -> u pre regex (Q | R)* . Q;
//! deny AH -> L post [<>AD1 <>AD2 | {AD1, AD2}];
//! ```

use crate::model::Signature;

use super::{
    Assertion, Channel, ChannelKind, Condition, PartSet, Policy, PolicyError, PreRegex, Token,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Arrow,
    Semi,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Bar,
    Comma,
    Diamond,
    Star,
    Dot,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Arrow => "`->`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Diamond => "`<>`".into(),
            Tok::Star => "`*`".into(),
            Tok::Dot => "`.`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '^'
}

fn lex(text: &str) -> Result<Vec<Spanned>, PolicyError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let two = |n: char| chars.get(i + 1) == Some(&n);
            let (tok, width) = match c {
                '-' if two('>') => (Tok::Arrow, 2),
                '<' if two('>') => (Tok::Diamond, 2),
                ';' => (Tok::Semi, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '|' => (Tok::Bar, 1),
                ',' => (Tok::Comma, 1),
                '*' => (Tok::Star, 1),
                '.' => (Tok::Dot, 1),
                c if is_ident_char(c) => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    (Tok::Ident(chars[start..j].iter().collect()), j - start)
                }
                other => {
                    return Err(PolicyError::Syntax {
                        line: line_no,
                        col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            out.push(Spanned {
                tok,
                line: line_no,
                col,
            });
            i += width;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'a Signature,
    end: (usize, usize),
}

type PResult<T> = Result<T, PolicyError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(PolicyError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<(String, usize, usize)> {
        match self.toks.get(self.pos) {
            Some(Spanned {
                tok: Tok::Ident(s),
                line,
                col,
            }) => {
                let r = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(r)
            }
            _ => self.unexpected(wanted),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.unexpected(&format!("`{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn partition(&mut self) -> PResult<crate::PartId> {
        let (name, line, col) = self.ident("a partition name")?;
        self.sig
            .partition(&name)
            .ok_or(PolicyError::UnknownPartition { line, col, name })
    }

    fn statement(&mut self) -> PResult<Assertion> {
        self.keyword("deny")?;
        let controlled = self.partition()?;
        self.expect(Tok::Arrow)?;
        let (name, line, col) = self.ident("a user name")?;
        let target = self
            .sig
            .user(&name)
            .ok_or(PolicyError::UnknownUser { line, col, name })?;
        let condition = if self.at_keyword("pre") {
            self.pos += 1;
            if self.at_keyword("upgrade") {
                self.pos += 1;
                Condition::PreUpgrade(self.channels(ChannelKind::Pre)?)
            } else if self.at_keyword("downgrade") {
                self.pos += 1;
                Condition::PreDowngrade(self.channels(ChannelKind::Pre)?)
            } else if self.at_keyword("regex") {
                self.pos += 1;
                Condition::PreRegex(self.regex()?)
            } else {
                return self.unexpected("`upgrade`, `downgrade` or `regex`");
            }
        } else if self.at_keyword("post") {
            self.pos += 1;
            Condition::Post(self.channels(ChannelKind::Post)?)
        } else {
            Condition::Strict
        };
        self.expect(Tok::Semi)?;
        Assertion::new(controlled, target, condition).map_err(|e| PolicyError::Shape {
            line,
            col,
            message: e.to_string(),
        })
    }

    fn channels(&mut self, kind: ChannelKind) -> PResult<Vec<Channel>> {
        self.expect(Tok::LBracket)?;
        let mut out = vec![self.channel(kind)?];
        while self.eat(&Tok::Bar) {
            out.push(self.channel(kind)?);
        }
        self.expect(Tok::RBracket)?;
        Ok(out)
    }

    fn channel(&mut self, kind: ChannelKind) -> PResult<Channel> {
        let (line, col) = self.here();
        // Flat list of `<>` markers and sets; placement is validated below.
        let mut flat: Vec<Option<PartSet>> = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Diamond) => {
                    self.pos += 1;
                    flat.push(None);
                }
                Some(Tok::Ident(_)) | Some(Tok::LBrace) => flat.push(Some(self.partset()?)),
                _ => break,
            }
        }
        if flat.is_empty() {
            return self.unexpected("a channel");
        }
        let shape = |message: &str| PolicyError::Shape {
            line,
            col,
            message: message.to_string(),
        };
        let tokens = match kind {
            ChannelKind::Pre => flat
                .into_iter()
                .map(|t| t.map(Token::Set).unwrap_or(Token::Gap))
                .collect(),
            ChannelKind::Post => {
                let mut tokens = Vec::new();
                let mut pending_gap = false;
                for t in flat {
                    match t {
                        None if pending_gap => {
                            return Err(shape("two adjacent `<>` in a post channel"))
                        }
                        None => pending_gap = true,
                        Some(c) if pending_gap => {
                            tokens.push(Token::GapSet(c));
                            pending_gap = false;
                        }
                        Some(c) => tokens.push(Token::Set(c)),
                    }
                }
                if pending_gap {
                    return Err(shape("`<>` must precede a partition set in a post channel"));
                }
                tokens
            }
        };
        Channel::new(kind, tokens).map_err(|e| match e {
            PolicyError::ChannelShape(m) => shape(&m),
            other => other,
        })
    }

    fn partset(&mut self) -> PResult<PartSet> {
        let mut set = PartSet::new();
        if self.eat(&Tok::LBrace) {
            set.insert(self.partition()?);
            while self.eat(&Tok::Comma) {
                set.insert(self.partition()?);
            }
            self.expect(Tok::RBrace)?;
        } else {
            set.insert(self.partition()?);
        }
        Ok(set)
    }

    // regex := concat ('|' concat)* ; concat := postfix ('.' postfix)* ;
    // postfix := atom '*'* ; atom := '0' | PART | '(' regex ')'
    fn regex(&mut self) -> PResult<PreRegex> {
        let mut r = self.regex_concat()?;
        while self.eat(&Tok::Bar) {
            r = PreRegex::union(r, self.regex_concat()?);
        }
        Ok(r)
    }

    fn regex_concat(&mut self) -> PResult<PreRegex> {
        let mut r = self.regex_postfix()?;
        while self.eat(&Tok::Dot) {
            r = PreRegex::concat(r, self.regex_postfix()?);
        }
        Ok(r)
    }

    fn regex_postfix(&mut self) -> PResult<PreRegex> {
        let mut r = self.regex_atom()?;
        while self.eat(&Tok::Star) {
            r = PreRegex::star(r);
        }
        Ok(r)
    }

    fn regex_atom(&mut self) -> PResult<PreRegex> {
        if self.eat(&Tok::LParen) {
            let r = self.regex()?;
            self.expect(Tok::RParen)?;
            return Ok(r);
        }
        match self.peek() {
            Some(Tok::Ident(s)) if s == "0" && self.sig.partition("0").is_none() => {
                self.pos += 1;
                Ok(PreRegex::Empty)
            }
            Some(Tok::Ident(_)) => Ok(PreRegex::Lit(self.partition()?)),
            _ => self.unexpected("a regular expression"),
        }
    }
}

/// Parses policy text against a signature.
pub fn parse_policy(text: &str, sig: &Signature) -> Result<Policy, PolicyError> {
    let toks = lex(text)?;
    let end = toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    let mut p = Parser {
        toks,
        pos: 0,
        sig,
        end,
    };
    let mut assertions: Vec<Assertion> = Vec::new();
    while p.peek().is_some() {
        let (line, col) = p.here();
        let t = p.statement()?;
        if assertions
            .iter()
            .any(|o| o.controlled == t.controlled && o.target == t.target)
        {
            return Err(PolicyError::Shape {
                line,
                col,
                message: format!(
                    "duplicate assertion for partition `{}` toward user `{}`",
                    sig.part_name(t.controlled),
                    sig.user_name(t.target)
                ),
            });
        }
        assertions.push(t);
    }
    Policy::new(sig, assertions)
}
