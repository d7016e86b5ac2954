//! The MPEC problem file and the exact problem object built from it.
//!
//! ```toml
//! [dims]
//! n = 2
//! m = 3
//! p = 2
//! q = 2
//!
//! [functions]
//! phi = ["y1 - x1", "y2 - x2", "-1"]
//! g = ["y3 + 1/2*y1^2", "y3 + 1/2*y2^2"]
//! G = ["-x1 - 2*x2", "-2*x1 - x2"]
//! F = "x1 + x2 - y3"          # optional
//!
//! [point]
//! x = [0, 0]                   # integers, exact decimals or "p/q" strings
//! y = [0, 0, 0]
//!
//! [[solution_map]]             # optional, repeated; consumed by the oracle
//! region = ["2*x2 - x1 <= 0"]
//! y = ["x1/2", "x2", "-x1^2/8"]
//! lambda = ["1", "0"]
//! ```

use serde::Deserialize;
use toml::Spanned;

use super::expr::{parse_expr, parse_le_zero, Expr};
use super::poly::Poly;
use crate::exactmath::matrix::Matrix;
use crate::exactmath::rational::{fmt_rational, parse_decimal, parse_rational};
use crate::{Error, Rational};

/// One piece of a piecewise solution map `x ↦ (y(x), λ(x))`, valid on the
/// region `{x : r(x) ≤ 0 ∀ r}`. Formulas may be rational functions of x.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPiece {
    pub region: Vec<Expr>,
    pub y: Vec<Expr>,
    pub lambda: Vec<Expr>,
    pub(crate) source: PieceSource,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct PieceSource {
    region: Vec<String>,
    y: Vec<String>,
    lambda: Vec<String>,
}

impl PartialEq for PieceSource {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl SolutionPiece {
    fn lookup<'a>(x: &'a [f64]) -> impl Fn(&str) -> Option<f64> + 'a {
        move |s: &str| {
            let i: usize = s.strip_prefix('x')?.parse().ok()?;
            x.get(i.checked_sub(1)?).copied()
        }
    }

    /// `max_r r(x)`; the piece applies where this is `≤ 0`.
    pub fn region_violation(&self, x: &[f64]) -> f64 {
        let f = Self::lookup(x);
        self.region
            .iter()
            .map(|r| r.eval_f64(&f).unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every region function at `x` (`NaN` where undefined).
    pub fn region_values(&self, x: &[f64]) -> Vec<f64> {
        let f = Self::lookup(x);
        self.region.iter().map(|r| r.eval_f64(&f).unwrap_or(f64::NAN)).collect()
    }

    pub fn eval(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f = Self::lookup(x);
        let ev = |es: &[Expr]| es.iter().map(|e| e.eval_f64(&f).unwrap_or(f64::NAN)).collect();
        (ev(&self.y), ev(&self.lambda))
    }
}

/// `(φ, g, G, F)` with dimensions and reference point `(x̄, ȳ)`. All
/// polynomials live in the variable space `z = (x1..xn, y1..ym)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpecProblem {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub phi: Vec<Poly>,
    pub g: Vec<Poly>,
    pub big_g: Vec<Poly>,
    pub f: Option<Poly>,
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
    pub solution_map: Vec<SolutionPiece>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    dims: RawDims,
    functions: RawFunctions,
    point: RawPoint,
    #[serde(default)]
    solution_map: Vec<RawPiece>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    n: usize,
    m: usize,
    #[serde(default)]
    p: usize,
    #[serde(default)]
    q: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctions {
    phi: Spanned<Vec<Spanned<String>>>,
    #[serde(default)]
    g: Option<Spanned<Vec<Spanned<String>>>>,
    #[serde(default, rename = "G")]
    big_g: Option<Spanned<Vec<Spanned<String>>>>,
    #[serde(default, rename = "F")]
    f: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: Spanned<Vec<Spanned<toml::Value>>>,
    y: Spanned<Vec<Spanned<toml::Value>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    #[serde(default)]
    region: Vec<Spanned<String>>,
    y: Spanned<Vec<Spanned<String>>>,
    #[serde(default)]
    lambda: Option<Spanned<Vec<Spanned<String>>>>,
}

struct Source<'a>(&'a str);

impl Source<'_> {
    /// 1-based (line, column) of a byte offset.
    fn locate(&self, offset: usize) -> (usize, usize) {
        let before = &self.0[..offset.min(self.0.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn err_at(&self, offset: usize, msg: impl Into<String>) -> Error {
        let (line, col) = self.locate(offset);
        Error::parse(line, col, msg)
    }

    /// Re-anchor an expression error at its position inside the quoted string.
    fn reanchor(&self, e: Error, s: &Spanned<String>) -> Error {
        match e {
            Error::Parse { col, msg, .. } => {
                let (line, c0) = self.locate(s.span().start);
                Error::Parse { line, col: c0 + col, msg }
            }
            e => e,
        }
    }
}

/// Names of the problem variables in order: `x1..xn, y1..ym`.
pub fn variable_names(n: usize, m: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).chain((1..=m).map(|i| format!("y{i}"))).collect()
}

fn index_of(n: usize, m: usize, name: &str) -> Option<usize> {
    let (base, count, off) = match name.as_bytes().first()? {
        b'x' => (&name[1..], n, 0),
        b'y' => (&name[1..], m, n),
        _ => return None,
    };
    if base.starts_with('0') {
        return None;
    }
    let i: usize = base.parse().ok()?;
    (1..=count).contains(&i).then(|| off + i - 1)
}

fn check_len<T>(what: &str, v: &Spanned<Vec<T>>, want: usize) -> Result<(), Error> {
    if v.get_ref().len() != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} entries, expected {want}",
            v.get_ref().len()
        )));
    }
    Ok(())
}

fn value_to_rational(src: &Source, v: &Spanned<toml::Value>) -> Result<Rational, Error> {
    let at = v.span().start;
    match v.get_ref() {
        toml::Value::Integer(i) => Ok(Rational::from_integer((*i).into())),
        toml::Value::Float(f) => parse_decimal(&format!("{f}"))
            .ok_or_else(|| src.err_at(at, format!("coordinate {f} is not a finite decimal"))),
        toml::Value::String(s) => parse_rational(s).map_err(|_| src.err_at(at, format!("bad rational `{s}`"))),
        other => Err(src.err_at(at, format!("coordinate must be a number or \"p/q\" string, got {other}"))),
    }
}

/// Parse a problem file.
pub fn parse_problem(text: &str) -> Result<MpecProblem, Error> {
    let src = Source(text);
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| src.locate(s.start));
        Error::parse(line, col, e.message().trim().to_string())
    })?;
    let RawDims { n, m, p, q } = raw.dims;
    let nz = n + m;
    let lookup = |s: &str| index_of(n, m, s);

    let compile = |s: &Spanned<String>| -> Result<Poly, Error> {
        let e = parse_expr(s.get_ref()).map_err(|e| src.reanchor(e, s))?;
        e.to_poly(nz, &lookup).map_err(|e| src.reanchor(e, s))
    };
    let compile_all = |v: &Option<Spanned<Vec<Spanned<String>>>>, what: &str, want: usize| -> Result<Vec<Poly>, Error> {
        match v {
            None if want == 0 => Ok(Vec::new()),
            None => Err(Error::DimensionMismatch(format!("{what} missing, expected {want} entries"))),
            Some(v) => {
                check_len(what, v, want)?;
                v.get_ref().iter().map(compile).collect()
            }
        }
    };

    check_len("phi", &raw.functions.phi, m)?;
    let phi = raw.functions.phi.get_ref().iter().map(compile).collect::<Result<Vec<_>, _>>()?;
    let g = compile_all(&raw.functions.g, "g", q)?;
    if let Some(gs) = &raw.functions.g {
        for (poly, s) in g.iter().zip(gs.get_ref()) {
            if (0..n).any(|i| poly.depends_on(i)) {
                return Err(src.err_at(s.span().start, "g may depend on y-variables only"));
            }
        }
    }
    let big_g = compile_all(&raw.functions.big_g, "G", p)?;
    let f = raw.functions.f.as_ref().map(compile).transpose()?;

    check_len("point.x", &raw.point.x, n)?;
    check_len("point.y", &raw.point.y, m)?;
    let x = raw.point.x.get_ref().iter().map(|v| value_to_rational(&src, v)).collect::<Result<_, _>>()?;
    let y = raw.point.y.get_ref().iter().map(|v| value_to_rational(&src, v)).collect::<Result<_, _>>()?;

    let x_only = |s: &str| index_of(n, 0, s);
    let mut solution_map = Vec::new();
    for piece in &raw.solution_map {
        check_len("solution_map.y", &piece.y, m)?;
        let lambda_raw: Vec<Spanned<String>> = match &piece.lambda {
            Some(l) => {
                check_len("solution_map.lambda", l, q)?;
                l.get_ref().clone()
            }
            None if q == 0 => Vec::new(),
            None => return Err(Error::DimensionMismatch(format!("solution_map.lambda missing, expected {q} entries"))),
        };
        let formula = |s: &Spanned<String>, region: bool| -> Result<Expr, Error> {
            let e = if region { parse_le_zero(s.get_ref()) } else { parse_expr(s.get_ref()) }
                .map_err(|e| src.reanchor(e, s))?;
            let mut vars = Vec::new();
            e.variables(&mut vars);
            if let Some(bad) = vars.iter().find(|v| x_only(v).is_none()) {
                return Err(Error::UnknownVariable(format!("{bad} (solution-map formulas use x only)")));
            }
            Ok(e)
        };
        solution_map.push(SolutionPiece {
            region: piece.region.iter().map(|s| formula(s, true)).collect::<Result<_, _>>()?,
            y: piece.y.get_ref().iter().map(|s| formula(s, false)).collect::<Result<_, _>>()?,
            lambda: lambda_raw.iter().map(|s| formula(s, false)).collect::<Result<_, _>>()?,
            source: PieceSource {
                region: piece.region.iter().map(|s| s.get_ref().clone()).collect(),
                y: piece.y.get_ref().iter().map(|s| s.get_ref().clone()).collect(),
                lambda: lambda_raw.iter().map(|s| s.get_ref().clone()).collect(),
            },
        });
    }

    Ok(MpecProblem { n, m, p, q, phi, g, big_g, f, x, y, solution_map })
}

fn toml_str_list(v: &[String]) -> String {
    let items: Vec<String> = v.iter().map(|s| toml::Value::String(s.clone()).to_string()).collect();
    format!("[{}]", items.join(", "))
}

impl MpecProblem {
    /// Build from expression strings; the point is given exactly.
    pub fn from_strings(
        phi: &[&str],
        g: &[&str],
        big_g: &[&str],
        f: Option<&str>,
        x: Vec<Rational>,
        y: Vec<Rational>,
    ) -> Result<Self, Error> {
        let list = |v: &[&str]| toml_str_list(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        let pt = |v: &[Rational]| toml_str_list(&v.iter().map(fmt_rational).collect::<Vec<_>>());
        let mut text = format!(
            "[dims]\nn = {}\nm = {}\np = {}\nq = {}\n\n[functions]\nphi = {}\ng = {}\nG = {}\n",
            x.len(),
            y.len(),
            big_g.len(),
            g.len(),
            list(phi),
            list(g),
            list(big_g)
        );
        if let Some(f) = f {
            text.push_str(&format!("F = {}\n", toml::Value::String(f.into())));
        }
        text.push_str(&format!("\n[point]\nx = {}\ny = {}\n", pt(&x), pt(&y)));
        parse_problem(&text)
    }

    /// Serialize back to the problem-file format.
    pub fn to_toml(&self) -> String {
        let names = self.names();
        let polys = |v: &[Poly]| toml_str_list(&v.iter().map(|p| p.to_string_with(&names)).collect::<Vec<_>>());
        let pt = |v: &[Rational]| toml_str_list(&v.iter().map(fmt_rational).collect::<Vec<_>>());
        let mut s = format!(
            "[dims]\nn = {}\nm = {}\np = {}\nq = {}\n\n[functions]\nphi = {}\ng = {}\nG = {}\n",
            self.n,
            self.m,
            self.p,
            self.q,
            polys(&self.phi),
            polys(&self.g),
            polys(&self.big_g)
        );
        if let Some(f) = &self.f {
            s.push_str(&format!("F = {}\n", toml::Value::String(f.to_string_with(&names))));
        }
        s.push_str(&format!("\n[point]\nx = {}\ny = {}\n", pt(&self.x), pt(&self.y)));
        for piece in &self.solution_map {
            s.push_str(&format!(
                "\n[[solution_map]]\nregion = {}\ny = {}\nlambda = {}\n",
                toml_str_list(&piece.source.region),
                toml_str_list(&piece.source.y),
                toml_str_list(&piece.source.lambda)
            ));
        }
        s
    }

    pub fn names(&self) -> Vec<String> {
        variable_names(self.n, self.m)
    }

    /// `n + m`.
    pub fn nz(&self) -> usize {
        self.n + self.m
    }

    /// `(x̄, ȳ)`.
    pub fn zbar(&self) -> Vec<Rational> {
        self.x.iter().chain(&self.y).cloned().collect()
    }

    pub fn join(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        assert_eq!(x.len(), self.n, "x dimension");
        assert_eq!(y.len(), self.m, "y dimension");
        x.iter().chain(y).cloned().collect()
    }

    pub fn eval_all(polys: &[Poly], z: &[Rational]) -> Vec<Rational> {
        polys.iter().map(|p| p.evaluate(z)).collect()
    }

    /// Jacobian of `polys` at `z` restricted to variable indices `vars`.
    pub fn jacobian(polys: &[Poly], z: &[Rational], vars: std::ops::Range<usize>) -> Matrix<Rational> {
        let rows = polys
            .iter()
            .map(|p| vars.clone().map(|i| p.differentiate(i).evaluate(z)).collect())
            .collect();
        Matrix::from_rows_unchecked(vars.len(), rows)
    }

    pub fn xs(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn ys(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.m
    }

    /// `∇g(y)` as a q×m matrix (rows are gradients).
    pub fn grad_g(&self, z: &[Rational]) -> Matrix<Rational> {
        Self::jacobian(&self.g, z, self.ys())
    }

    /// `∇²(λᵀg)(y)`, an m×m matrix.
    pub fn hess_lag(&self, z: &[Rational], lambda: &[Rational]) -> Matrix<Rational> {
        let m = self.m;
        let mut h = Matrix::<Rational>::zeros(m, m);
        for (gi, li) in self.g.iter().zip(lambda) {
            if num_traits::Zero::is_zero(li) {
                continue;
            }
            for a in 0..m {
                let da = gi.differentiate(self.n + a);
                for b in 0..m {
                    let v = da.differentiate(self.n + b).evaluate(z);
                    h[(a, b)] = h[(a, b)].clone() + li.clone() * v;
                }
            }
        }
        h
    }

    /// `ȳ* = −φ(x̄, ȳ)`.
    pub fn y_star(&self) -> Vec<Rational> {
        Self::eval_all(&self.phi, &self.zbar()).into_iter().map(|v| -v).collect()
    }
}
