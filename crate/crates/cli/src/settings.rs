//! Positional `key=value` experiment settings.

use bnpmi::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n: usize,
    pub replicates: usize,
    pub k: Option<Vec<usize>>,
    pub a: Option<Vec<f64>>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n: 50,
            replicates: 200,
            k: None,
            a: None,
        }
    }
}

fn bad(key: &str, v: &str) -> Error {
    Error::Parameter(format!("bad value '{v}' for '{key}'"))
}

/// `3`, `1,3,5` or `1..20` (inclusive).
pub fn parse_usize_list(key: &str, v: &str) -> Result<Vec<usize>, Error> {
    if let Some((lo, hi)) = v.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad(key, v))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad(key, v))?;
        if lo > hi {
            return Err(bad(key, v));
        }
        return Ok((lo..=hi).collect());
    }
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad(key, v)))
        .collect()
}

impl Settings {
    pub fn parse(items: &[String]) -> Result<Self, Error> {
        let mut s = Settings::default();
        for item in items {
            let (key, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{item}'")))?;
            match key.trim() {
                "n" => s.n = v.trim().parse().map_err(|_| bad(key, v))?,
                "r" => s.replicates = v.trim().parse().map_err(|_| bad(key, v))?,
                "k" => s.k = Some(parse_usize_list(key, v)?),
                "a" => {
                    s.a = Some(
                        v.split(',')
                            .map(|x| x.trim().parse().map_err(|_| bad(key, v)))
                            .collect::<Result<_, _>>()?,
                    )
                }
                other => {
                    return Err(Error::Parameter(format!(
                        "unknown setting '{other}' (n, r, k, a)"
                    )))
                }
            }
        }
        Ok(s)
    }
}
