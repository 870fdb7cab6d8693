//! A small expression language for naming sets.
//!
//! ```text
//! expr    := name | name '(' arg {',' arg} ')'
//! arg     := expr | literal
//! literal := natural | p/q | 0.ddd | seed:<n>[,mode=derived|pairing]
//!          | column=<primitive> | <permutation spec>
//! ```
//!
//! Nullary names: `omega`, `empty`, `evens`, `odds`, `factorials`.
//! Calls: `arith(a, m)`, `bern(r, seed)`, `col(e, i)`, `partA(src, i)`,
//! `partB(src, i)`, `xr(r, src)`, `into(b, a)`, `within(b, a)`,
//! `join(a, b)`, `union(a, b)`, `inter(a, b)`, `diff(a, b)`, `compl(e)`,
//! `perm(spec, e)`. Names are case-sensitive ASCII.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::bits::BitSource;
use crate::budget::EvaluationBudget;
use crate::constructions::{self, build_partition, ColumnSource, PartitionFamily, RealSpec};
use crate::error::{Result, SetError};
use crate::permutations::PermSpec;
use crate::sets::{self, SetHandle};

/// A real literal: a rational `p/q` in lowest terms with `0 < p < q`, or a
/// seeded random real.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RealLit {
    Rational(u64, u64),
    Seed(u64),
}

impl RealLit {
    pub fn to_spec(&self) -> Result<RealSpec> {
        match *self {
            RealLit::Rational(p, q) => RealSpec::from_ratio(p, q),
            RealLit::Seed(s) => Ok(RealSpec::from_seed(s)),
        }
    }
}

impl fmt::Display for RealLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealLit::Rational(p, q) => write!(f, "{p}/{q}"),
            RealLit::Seed(s) => write!(f, "seed:{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Omega,
    Empty,
    Evens,
    Odds,
    Factorials,
}

impl Primitive {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "omega" => Primitive::Omega,
            "empty" => Primitive::Empty,
            "evens" => Primitive::Evens,
            "odds" => Primitive::Odds,
            "factorials" => Primitive::Factorials,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Primitive::Omega => "omega",
            Primitive::Empty => "empty",
            Primitive::Evens => "evens",
            Primitive::Odds => "odds",
            Primitive::Factorials => "factorials",
        }
    }

    fn handle(&self) -> SetHandle {
        match self {
            Primitive::Omega => sets::omega(),
            Primitive::Empty => sets::empty(),
            Primitive::Evens => sets::evens(),
            Primitive::Odds => sets::odds(),
            Primitive::Factorials => sets::factorials(),
        }
    }
}

/// Where partition columns come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceLit {
    Bits(BitSource),
    Column(Primitive),
}

impl fmt::Display for SourceLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceLit::Bits(b) => write!(f, "{b}"),
            SourceLit::Column(p) => write!(f, "column={}", p.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Prim(Primitive),
    Arith(u64, u64),
    Bern(RealLit, u64),
    Col(Box<Expr>, u32),
    PartA(SourceLit, u32),
    PartB(SourceLit, u32),
    Xr(RealLit, SourceLit),
    Into(Box<Expr>, Box<Expr>),
    Within(Box<Expr>, Box<Expr>),
    Join(Box<Expr>, Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Inter(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Compl(Box<Expr>),
    Perm(PermSpec, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Prim(p) => f.write_str(p.name()),
            Expr::Arith(a, m) => write!(f, "arith({a}, {m})"),
            Expr::Bern(r, s) => write!(f, "bern({r}, {s})"),
            Expr::Col(e, i) => write!(f, "col({e}, {i})"),
            Expr::PartA(s, i) => write!(f, "partA({s}, {i})"),
            Expr::PartB(s, i) => write!(f, "partB({s}, {i})"),
            Expr::Xr(r, s) => write!(f, "xr({r}, {s})"),
            Expr::Into(b, a) => write!(f, "into({b}, {a})"),
            Expr::Within(b, a) => write!(f, "within({b}, {a})"),
            Expr::Join(a, b) => write!(f, "join({a}, {b})"),
            Expr::Union(a, b) => write!(f, "union({a}, {b})"),
            Expr::Inter(a, b) => write!(f, "inter({a}, {b})"),
            Expr::Diff(a, b) => write!(f, "diff({a}, {b})"),
            Expr::Compl(e) => write!(f, "compl({e})"),
            Expr::Perm(p, e) => write!(f, "perm({p}, {e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("arity error at byte {offset}: `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("domain error at byte {offset}: {message}")]
    Domain { offset: usize, message: String },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. }
            | ExprError::Arity { offset, .. }
            | ExprError::Domain { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Open,
    Close,
    Comma,
}

fn is_word_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || b"_:=./[];".contains(&c)
}

/// A comma belongs to the current word when it introduces another
/// `key=value` option, as in `seed:3,mode=pairing`.
fn comma_continues_word(rest: &[u8]) -> bool {
    let key = rest.iter().take_while(|c| c.is_ascii_lowercase()).count();
    key > 0 && rest.get(key) == Some(&b'=')
}

fn lex(src: &str) -> std::result::Result<Vec<(Token, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((Token::Open, i));
                i += 1;
            }
            b')' => {
                out.push((Token::Close, i));
                i += 1;
            }
            b',' => {
                out.push((Token::Comma, i));
                i += 1;
            }
            c if is_word_byte(c) => {
                let start = i;
                while i < bytes.len() {
                    if is_word_byte(bytes[i])
                        || (bytes[i] == b',' && comma_continues_word(&bytes[i + 1..]))
                    {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Token::Word(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!(
                        "unexpected character `{}`",
                        src[i..].chars().next().unwrap_or('?')
                    ),
                })
            }
        }
    }
    Ok(out)
}

/// Untyped parse tree: a word, optionally applied to arguments.
struct Tree {
    name: String,
    offset: usize,
    args: Option<Vec<Tree>>,
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn tree(&mut self) -> std::result::Result<Tree, ExprError> {
        let offset = self.offset();
        let name = match self.peek() {
            Some(Token::Word(w)) => w.clone(),
            Some(_) => return Err(self.syntax("expected a name or literal")),
            None => return Err(self.syntax("unexpected end of input")),
        };
        self.pos += 1;
        if self.peek() != Some(&Token::Open) {
            return Ok(Tree {
                name,
                offset,
                args: None,
            });
        }
        self.pos += 1;
        let mut args = vec![self.tree()?];
        loop {
            match self.peek() {
                Some(Token::Comma) => {
                    self.pos += 1;
                    args.push(self.tree()?);
                }
                Some(Token::Close) => {
                    self.pos += 1;
                    return Ok(Tree {
                        name,
                        offset,
                        args: Some(args),
                    });
                }
                _ => return Err(self.syntax("expected `,` or `)`")),
            }
        }
    }
}

fn domain(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Domain {
        offset,
        message: message.into(),
    }
}

fn literal(t: &Tree, what: &str) -> std::result::Result<String, ExprError> {
    match &t.args {
        None => Ok(t.name.clone()),
        Some(_) => Err(ExprError::Syntax {
            offset: t.offset,
            message: format!("expected {what}, found a call to `{}`", t.name),
        }),
    }
}

fn natural(t: &Tree) -> std::result::Result<u64, ExprError> {
    let s = literal(t, "a natural number")?;
    if !s.bytes().all(|c| c.is_ascii_digit()) {
        return Err(ExprError::Syntax {
            offset: t.offset,
            message: format!("expected a natural number, found `{s}`"),
        });
    }
    s.parse()
        .map_err(|_| domain(t.offset, format!("`{s}` does not fit in 64 bits")))
}

fn small_natural(t: &Tree) -> std::result::Result<u32, ExprError> {
    let n = natural(t)?;
    u32::try_from(n).map_err(|_| domain(t.offset, format!("index {n} is too large")))
}

fn real(t: &Tree) -> std::result::Result<RealLit, ExprError> {
    let s = literal(t, "a real literal")?;
    if let Some(seed) = s.strip_prefix("seed:") {
        return seed
            .parse()
            .map(RealLit::Seed)
            .map_err(|_| domain(t.offset, format!("invalid seed `{seed}`")));
    }
    let r = constructions::parse_rational(&s).map_err(|e| domain(t.offset, e.to_string()))?;
    RealSpec::from_rational(r.clone()).map_err(|e| domain(t.offset, e.to_string()))?;
    let p = r
        .numer()
        .try_into()
        .map_err(|_| domain(t.offset, "numerator too large"))?;
    let q = r
        .denom()
        .try_into()
        .map_err(|_| domain(t.offset, "denominator too large"))?;
    let (p, q) = constructions::reduce(p, q);
    Ok(RealLit::Rational(p, q))
}

fn source(t: &Tree) -> std::result::Result<SourceLit, ExprError> {
    let s = literal(t, "a bit source")?;
    if let Some(name) = s.strip_prefix("column=") {
        return Primitive::from_name(name)
            .map(SourceLit::Column)
            .ok_or_else(|| domain(t.offset, format!("unknown column set `{name}`")));
    }
    s.parse::<BitSource>()
        .map(SourceLit::Bits)
        .map_err(|e| domain(t.offset, e))
}

fn convert(t: &Tree) -> std::result::Result<Expr, ExprError> {
    let Some(args) = &t.args else {
        return Primitive::from_name(&t.name)
            .map(Expr::Prim)
            .ok_or_else(|| ExprError::Syntax {
                offset: t.offset,
                message: format!("unknown set `{}`", t.name),
            });
    };
    let expected = match t.name.as_str() {
        "compl" => 1,
        "arith" | "bern" | "col" | "partA" | "partB" | "xr" | "into" | "within" | "join"
        | "union" | "inter" | "diff" | "perm" => 2,
        name if Primitive::from_name(name).is_some() => 0,
        name => {
            return Err(ExprError::Syntax {
                offset: t.offset,
                message: format!("unknown function `{name}`"),
            })
        }
    };
    if args.len() != expected {
        return Err(ExprError::Arity {
            offset: t.offset,
            name: t.name.clone(),
            expected,
            found: args.len(),
        });
    }
    let sub = |i: usize| convert(&args[i]).map(Box::new);
    Ok(match t.name.as_str() {
        "compl" => Expr::Compl(sub(0)?),
        "arith" => {
            let (a, m) = (natural(&args[0])?, natural(&args[1])?);
            if m == 0 || a >= m {
                return Err(domain(t.offset, format!("arith({a}, {m}) needs 0 ≤ a < m")));
            }
            Expr::Arith(a, m)
        }
        "bern" => Expr::Bern(real(&args[0])?, natural(&args[1])?),
        "col" => Expr::Col(sub(0)?, small_natural(&args[1])?),
        "partA" => Expr::PartA(source(&args[0])?, small_natural(&args[1])?),
        "partB" => Expr::PartB(source(&args[0])?, small_natural(&args[1])?),
        "xr" => Expr::Xr(real(&args[0])?, source(&args[1])?),
        "into" => Expr::Into(sub(0)?, sub(1)?),
        "within" => Expr::Within(sub(0)?, sub(1)?),
        "join" => Expr::Join(sub(0)?, sub(1)?),
        "union" => Expr::Union(sub(0)?, sub(1)?),
        "inter" => Expr::Inter(sub(0)?, sub(1)?),
        "diff" => Expr::Diff(sub(0)?, sub(1)?),
        "perm" => {
            let spec = literal(&args[0], "a permutation spec")?;
            let spec = spec
                .parse::<PermSpec>()
                .map_err(|e| domain(args[0].offset, e))?;
            Expr::Perm(spec, sub(1)?)
        }
        _ => unreachable!("arity table covers every name"),
    })
}

/// Parses an expression; errors carry the byte offset of the problem.
pub fn parse(text: &str) -> std::result::Result<Expr, ExprError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let tree = p.tree()?;
    if p.pos != p.tokens.len() {
        return Err(p.syntax("trailing input"));
    }
    convert(&tree)
}

/// Evaluates expressions to set handles, sharing structurally identical
/// subtrees and partition families.
pub struct Evaluator {
    budget: EvaluationBudget,
    cache: HashMap<Expr, SetHandle>,
    families: HashMap<SourceLit, PartitionFamily>,
}

impl Evaluator {
    pub fn new(budget: EvaluationBudget) -> Self {
        Evaluator {
            budget,
            cache: HashMap::new(),
            families: HashMap::new(),
        }
    }

    /// Number of distinct subexpressions evaluated so far.
    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    pub fn family(&mut self, src: &SourceLit) -> Result<PartitionFamily> {
        if let Some(f) = self.families.get(src) {
            return Ok(f.clone());
        }
        let cols = match src {
            SourceLit::Bits(b) => ColumnSource::Bits(*b),
            SourceLit::Column(p) => ColumnSource::Constant(p.handle()),
        };
        let f = build_partition(cols, 1, self.budget)?;
        self.families.insert(*src, f.clone());
        Ok(f)
    }

    pub fn eval(&mut self, e: &Expr) -> Result<SetHandle> {
        if let Some(h) = self.cache.get(e) {
            return Ok(h.clone());
        }
        let b = self.budget;
        let h = match e {
            Expr::Prim(p) => p.handle().with_budget(b),
            Expr::Arith(a, m) => sets::arithmetic(*a, *m)?.with_budget(b),
            Expr::Bern(r, seed) => {
                constructions::bernoulli_set(&r.to_spec()?, *seed).with_budget(b)
            }
            Expr::Col(x, i) => sets::column(&self.eval(x)?, *i),
            Expr::PartA(src, i) => self.family(src)?.a(*i as usize)?,
            Expr::PartB(src, i) => self.family(src)?.b(*i as usize)?,
            Expr::Xr(r, src) => constructions::build_xr(&r.to_spec()?, &self.family(src)?),
            Expr::Into(x, y) => sets::into(&self.eval(x)?, &self.eval(y)?),
            Expr::Within(x, y) => sets::within(&self.eval(x)?, &self.eval(y)?),
            Expr::Join(x, y) => sets::join(&self.eval(x)?, &self.eval(y)?),
            Expr::Union(x, y) => sets::union(&self.eval(x)?, &self.eval(y)?),
            Expr::Inter(x, y) => sets::intersect(&self.eval(x)?, &self.eval(y)?),
            Expr::Diff(x, y) => sets::diff(&self.eval(x)?, &self.eval(y)?),
            Expr::Compl(x) => sets::compl(&self.eval(x)?),
            Expr::Perm(spec, x) => sets::apply(&spec.build()?, &self.eval(x)?),
        };
        self.cache.insert(e.clone(), h.clone());
        Ok(h)
    }
}

/// Evaluates a single expression with a fresh [`Evaluator`].
pub fn eval(e: &Expr, budget: EvaluationBudget) -> Result<SetHandle> {
    Evaluator::new(budget).eval(e)
}

/// Parses and evaluates; parse failures become [`SetError::Domain`].
pub fn eval_str(text: &str, budget: EvaluationBudget) -> Result<SetHandle> {
    let e = parse(text).map_err(|e| SetError::Domain(e.to_string()))?;
    eval(&e, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b() -> EvaluationBudget {
        EvaluationBudget::default()
    }

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            p("within(odds, arith(2,4))"),
            Expr::Within(
                Box::new(Expr::Prim(Primitive::Odds)),
                Box::new(Expr::Arith(2, 4))
            )
        );
        assert_eq!(p("into(evens, odds)").to_string(), "into(evens, odds)");
        assert_eq!(
            p("xr(1/3, seed:42)"),
            Expr::Xr(RealLit::Rational(1, 3), SourceLit::Bits(BitSource::new(42)))
        );
        assert_eq!(
            p("partA(seed:3,mode=pairing, 2)"),
            Expr::PartA(SourceLit::Bits(BitSource::pairing(3)), 2)
        );
        assert_eq!(p("bern(0.25, 1)"), Expr::Bern(RealLit::Rational(1, 4), 1));
        assert_eq!(p("bern(2/6, 1)"), Expr::Bern(RealLit::Rational(1, 3), 1));
        assert_eq!(
            p("perm(blockshuffle:w=256,seed=7, evens)"),
            Expr::Perm(
                PermSpec::BlockShuffle {
                    width: 256,
                    seed: 7
                },
                Box::new(Expr::Prim(Primitive::Evens))
            )
        );
        assert_eq!(
            p("  compl ( omega ) "),
            Expr::Compl(Box::new(Expr::Prim(Primitive::Omega)))
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse("into(evens)"),
            Err(ExprError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse("omega(evens)"),
            Err(ExprError::Arity { expected: 0, .. })
        ));
        assert!(matches!(
            parse("bern(3/2, 1)"),
            Err(ExprError::Domain { offset: 5, .. })
        ));
        assert!(matches!(
            parse("bern(0/2, 1)"),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("arith(4, 4)"),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("primes"),
            Err(ExprError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse("frob(evens, odds)"),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse("into(evens, odds"),
            Err(ExprError::Syntax { offset: 16, .. })
        ));
        assert!(matches!(
            parse("evens odds"),
            Err(ExprError::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            parse("evens$"),
            Err(ExprError::Syntax { offset: 5, .. })
        ));
        assert!(matches!(
            parse(""),
            Err(ExprError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse("col(evens, x)"),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse("perm(rotate, evens)"),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("xr(1/2, column=primes)"),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let omega = eval(&p("omega"), b()).unwrap();
        assert_eq!(omega.prefix(100).unwrap(), (0..100).collect::<Vec<_>>());

        let lhs = eval(&p("into(within(bern(1/2,7), evens), evens)"), b()).unwrap();
        let rhs = eval(&p("inter(bern(1/2,7), evens)"), b()).unwrap();
        assert_eq!(lhs.prefix(5000).unwrap(), rhs.prefix(5000).unwrap());

        let a2 = eval(&p("partA(column=evens, 2)"), b()).unwrap();
        let expect: Vec<u64> = (0..2000).map(|k| 8 * k + 4).filter(|&x| x < 2000).collect();
        assert_eq!(a2.prefix(2000).unwrap(), expect);
    }

    #[test]
    fn shared_subtrees_evaluate_once() {
        let mut ev = Evaluator::new(b());
        let h = ev
            .eval(&p("union(compl(bern(1/2,3)), compl(bern(1/2,3)))"))
            .unwrap();
        assert_eq!(ev.cached(), 3);
        let again = ev.eval(&p("compl(bern(1/2,3))")).unwrap();
        assert_eq!(h.prefix(100).unwrap(), again.prefix(100).unwrap());
        assert_eq!(ev.cached(), 3);
    }

    #[test]
    fn evaluation_is_pure() {
        let e = p("xr(1/3, seed:5)");
        let x = eval(&e, b()).unwrap().prefix(20_000).unwrap();
        let y = eval(&e, b()).unwrap().prefix(20_000).unwrap();
        assert_eq!(x, y);
    }

    fn arb_prim() -> impl Strategy<Value = Primitive> {
        prop_oneof![
            Just(Primitive::Omega),
            Just(Primitive::Empty),
            Just(Primitive::Evens),
            Just(Primitive::Odds),
            Just(Primitive::Factorials),
        ]
    }

    fn arb_real() -> impl Strategy<Value = RealLit> {
        prop_oneof![
            (2u64..1000)
                .prop_flat_map(|q| (1..q, Just(q)))
                .prop_map(|(p, q)| {
                    let (p, q) = constructions::reduce(p, q);
                    RealLit::Rational(p, q)
                }),
            any::<u64>().prop_map(RealLit::Seed),
        ]
    }

    fn arb_source() -> impl Strategy<Value = SourceLit> {
        prop_oneof![
            any::<u64>().prop_map(|s| SourceLit::Bits(BitSource::new(s))),
            any::<u64>().prop_map(|s| SourceLit::Bits(BitSource::pairing(s))),
            arb_prim().prop_map(SourceLit::Column),
        ]
    }

    fn arb_perm() -> impl Strategy<Value = PermSpec> {
        let leaf = prop_oneof![
            Just(PermSpec::Identity),
            (1u64..5000, any::<u64>())
                .prop_map(|(width, seed)| PermSpec::BlockShuffle { width, seed }),
        ];
        leaf.prop_recursive(3, 8, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|p| PermSpec::JoinHat(Box::new(p))),
                prop::collection::vec(inner, 1..4).prop_map(PermSpec::Compose),
            ]
        })
    }

    pub(crate) fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            arb_prim().prop_map(Expr::Prim),
            (1u64..100)
                .prop_flat_map(|m| (0..m, Just(m)))
                .prop_map(|(a, m)| Expr::Arith(a, m)),
            (arb_real(), any::<u64>()).prop_map(|(r, s)| Expr::Bern(r, s)),
            (arb_source(), 0u32..64).prop_map(|(s, i)| Expr::PartA(s, i)),
            (arb_source(), 0u32..64).prop_map(|(s, i)| Expr::PartB(s, i)),
            (arb_real(), arb_source()).prop_map(|(r, s)| Expr::Xr(r, s)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            let bx = |e: Expr| Box::new(e);
            prop_oneof![
                (inner.clone(), 0u32..20).prop_map(move |(e, i)| Expr::Col(bx(e), i)),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Into(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Within(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Join(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Union(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Inter(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Diff(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|e| Expr::Compl(Box::new(e))),
                (arb_perm(), inner).prop_map(|(p, e)| Expr::Perm(p, Box::new(e))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn print_then_parse_round_trips(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse(&printed).unwrap(), e);
        }
    }
}
