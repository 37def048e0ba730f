//! Text form of scenario families, e.g. `normal:d=4:cov=sigma`,
//! `student:df=3:d=4`, `maxwell:c=10:d=2`, `spherical:d=3:logsd=0.5`,
//! `product:normal(0,1)+maxwell(10)`.
//!
//! Named covariances: `identity`, `sigma` (Σ_d), `a` (A_d), `b` (B_d), or a
//! literal `[1,0.5;0.5,2]`. `mean` is a scalar broadcast to every coordinate
//! or a comma-separated vector.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{CovarianceMatrix, Family, Marginal, ScenarioSpec};
use crate::error::{Error, Result};

pub const FAMILY_NAMES: &str = "normal, student, maxwell, spherical, product";

fn usage(msg: impl fmt::Display) -> Error {
    Error::param(format!("{msg} (valid families: {FAMILY_NAMES})"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::param(format!("'{key}' expects a number, got '{v}'")))
}

fn parse_dim(v: &str) -> Result<usize> {
    match v.trim().parse::<usize>() {
        Ok(d) if d >= 1 => Ok(d),
        _ => Err(Error::param(format!(
            "'d' expects a positive integer, got '{v}'"
        ))),
    }
}

fn named_cov(name: &str, d: usize) -> Result<CovarianceMatrix> {
    match name.to_ascii_lowercase().as_str() {
        "identity" | "i" => CovarianceMatrix::identity(d),
        "sigma" => CovarianceMatrix::sigma(d),
        "a" => CovarianceMatrix::last_pair(d),
        "b" => CovarianceMatrix::equicorrelated(d),
        other => Err(Error::param(format!(
            "unknown covariance '{other}' (identity, sigma, a, b or [..;..])"
        ))),
    }
}

fn literal_cov(s: &str) -> Result<CovarianceMatrix> {
    let inner = s
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::param(format!("bad covariance literal '{s}'")))?;
    let rows: Vec<Vec<f64>> = inner
        .split(';')
        .map(|r| r.split(',').map(|v| parse_f64("cov", v)).collect())
        .collect::<Result<_>>()?;
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::param("covariance literal must be square"));
    }
    CovarianceMatrix::new(d, rows.concat())
}

fn split_args(s: &str) -> Result<(&str, Vec<f64>)> {
    let open = s
        .find('(')
        .ok_or_else(|| Error::param(format!("expected name(args) in '{s}'")))?;
    let args = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::param(format!("unclosed '(' in '{s}'")))?;
    let vals = args
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| parse_f64(&s[..open], a))
        .collect::<Result<_>>()?;
    Ok((&s[..open], vals))
}

fn parse_marginal(s: &str) -> Result<Marginal> {
    let (name, args) = split_args(s.trim())?;
    let m = match (name, args.as_slice()) {
        ("normal", [mean, sd]) => Marginal::Normal { mean: *mean, sd: *sd },
        ("student", [df]) => Marginal::Student { df: *df },
        ("maxwell", [c]) => Marginal::Maxwell { scale: *c },
        ("lognormal", [mu, sigma]) => Marginal::LogNormal { mu: *mu, sigma: *sigma },
        _ => {
            return Err(Error::param(format!(
                "unknown marginal '{s}' (normal(mean,sd), student(df), maxwell(c), lognormal(mu,sigma))"
            )))
        }
    };
    m.validate()?;
    Ok(m)
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        if head == "product" {
            let ms = rest
                .split('+')
                .map(parse_marginal)
                .collect::<Result<Vec<_>>>()?;
            let f = Family::ProductOfMarginals(ms);
            f.validate()?;
            return Ok(f);
        }
        let mut kv = BTreeMap::new();
        for part in rest.split(':').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::param(format!("expected key=value, got '{part}'")))?;
            if kv.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::param(format!("duplicate key '{k}'")));
            }
        }
        let mut take = |k: &str| kv.remove(k);
        let family = match head {
            "normal" => {
                let cov_s = take("cov").unwrap_or("identity");
                let cov = if cov_s.starts_with('[') {
                    literal_cov(cov_s)?
                } else {
                    let d = parse_dim(take("d").ok_or_else(|| Error::param("normal needs d="))?)?;
                    named_cov(cov_s, d)?
                };
                if let Some(d) = take("d") {
                    if parse_dim(d)? != cov.dim() {
                        return Err(Error::param("d= disagrees with covariance literal"));
                    }
                }
                let mean = match take("mean") {
                    None => vec![0.0; cov.dim()],
                    Some(m) => {
                        let v: Vec<f64> = m
                            .split(',')
                            .map(|x| parse_f64("mean", x))
                            .collect::<Result<_>>()?;
                        if v.len() == 1 {
                            vec![v[0]; cov.dim()]
                        } else {
                            v
                        }
                    }
                };
                Family::MvNormal { mean, cov }
            }
            "student" => Family::MvStudent {
                df: parse_f64(
                    "df",
                    take("df").ok_or_else(|| Error::param("student needs df="))?,
                )?,
                dim: parse_dim(take("d").ok_or_else(|| Error::param("student needs d="))?)?,
            },
            "maxwell" => Family::MaxwellProduct {
                scale: parse_f64(
                    "c",
                    take("c").ok_or_else(|| Error::param("maxwell needs c="))?,
                )?,
                dim: parse_dim(take("d").ok_or_else(|| Error::param("maxwell needs d="))?)?,
            },
            "spherical" => Family::SphericalLogNormal {
                dim: parse_dim(take("d").ok_or_else(|| Error::param("spherical needs d="))?)?,
                log_sd: parse_f64("logsd", take("logsd").unwrap_or("0.5"))?,
            },
            other => return Err(usage(format!("unknown scenario family '{other}'"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::param(format!("unexpected key '{k}' for '{head}'")));
        }
        family.validate()?;
        Ok(family)
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Marginal::Student { df } => write!(f, "student({df})"),
            Marginal::Maxwell { scale } => write!(f, "maxwell({scale})"),
            Marginal::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::MvNormal { mean, cov } => {
                let d = cov.dim();
                let named = ["identity", "sigma", "a", "b"]
                    .into_iter()
                    .find(|n| named_cov(n, d).map(|c| &c == cov).unwrap_or(false));
                match named {
                    Some(n) => write!(f, "normal:d={d}:cov={n}")?,
                    None => {
                        let rows: Vec<String> = cov.entries().chunks(d).map(fmt_vec).collect();
                        write!(f, "normal:d={d}:cov=[{}]", rows.join(";"))?
                    }
                }
                if mean.iter().any(|&m| m != 0.0) {
                    if mean.iter().all(|&m| m == mean[0]) {
                        write!(f, ":mean={}", mean[0])?;
                    } else {
                        write!(f, ":mean={}", fmt_vec(mean))?;
                    }
                }
                Ok(())
            }
            Family::MvStudent { df, dim } => write!(f, "student:df={df}:d={dim}"),
            Family::MaxwellProduct { scale, dim } => write!(f, "maxwell:c={scale}:d={dim}"),
            Family::SphericalLogNormal { dim, log_sd } => {
                write!(f, "spherical:d={dim}:logsd={log_sd}")
            }
            Family::ProductOfMarginals(ms) => {
                let parts: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
                write!(f, "product:{}", parts.join("+"))
            }
        }
    }
}

impl FromStr for ScenarioSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioSpec::new(s.parse()?)
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}
