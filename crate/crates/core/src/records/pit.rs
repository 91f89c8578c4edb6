//! Probability-integral transforms to the copula scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm_cdf;

/// Univariate margin used by [`pit_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Margin {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// df `exp(-((x - loc) / scale)^-shape)` for `x > loc`.
    Frechet { shape: f64, scale: f64, loc: f64 },
    /// df `exp(-exp(-(x - loc) / scale))`.
    Gumbel { loc: f64, scale: f64 },
    /// `(rank - 0.5) / n` within the column, ties averaged.
    EmpiricalRank,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive and finite for a strictly increasing margin",
        })
    }
}

impl Margin {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Margin::Normal { mean, sd } => {
                positive("sd", sd)?;
                finite("mean", mean)
            }
            Margin::Exponential { rate } => positive("rate", rate),
            Margin::Uniform { lo, hi } => {
                finite("lo", lo)?;
                positive("hi - lo", hi - lo)
            }
            Margin::Frechet { shape, scale, loc } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
                finite("loc", loc)
            }
            Margin::Gumbel { loc, scale } => {
                positive("scale", scale)?;
                finite("loc", loc)
            }
            Margin::EmpiricalRank => Ok(()),
        }
    }

    /// Parametric df at `x`; `None` for the rank margin.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        Some(match *self {
            Margin::Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Margin::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Margin::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Margin::Frechet { shape, scale, loc } => {
                if x <= loc {
                    0.0
                } else {
                    (-((x - loc) / scale).powf(-shape)).exp()
                }
            }
            Margin::Gumbel { loc, scale } => (-(-(x - loc) / scale).exp()).exp(),
            Margin::EmpiricalRank => return None,
        })
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be finite",
        })
    }
}

/// Margin grammar: `normal[:mean:sd]`, `exp[:rate]`, `uniform[:lo:hi]`,
/// `frechet:shape[:scale[:loc]]`, `gumbel[:loc:scale]`, `rank`.
impl FromStr for Margin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(':');
        let name = parts.next().unwrap_or("");
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| err("parameter is not a number")))
            .collect::<Result<_>>()?;
        let m = match (name, nums.as_slice()) {
            ("normal", []) => Margin::Normal { mean: 0.0, sd: 1.0 },
            ("normal", [m, s]) => Margin::Normal { mean: *m, sd: *s },
            ("exp" | "exponential", []) => Margin::Exponential { rate: 1.0 },
            ("exp" | "exponential", [r]) => Margin::Exponential { rate: *r },
            ("uniform", []) => Margin::Uniform { lo: 0.0, hi: 1.0 },
            ("uniform", [a, b]) => Margin::Uniform { lo: *a, hi: *b },
            ("frechet", [a]) => Margin::Frechet { shape: *a, scale: 1.0, loc: 0.0 },
            ("frechet", [a, s]) => Margin::Frechet { shape: *a, scale: *s, loc: 0.0 },
            ("frechet", [a, s, l]) => Margin::Frechet { shape: *a, scale: *s, loc: *l },
            ("gumbel", []) => Margin::Gumbel { loc: 0.0, scale: 1.0 },
            ("gumbel", [l, s]) => Margin::Gumbel { loc: *l, scale: *s },
            ("rank", []) => Margin::EmpiricalRank,
            ("normal" | "exp" | "exponential" | "uniform" | "frechet" | "gumbel" | "rank", _) => {
                return Err(err("wrong number of parameters"))
            }
            _ => return Err(err("unknown margin")),
        };
        m.validate()?;
        Ok(m)
    }
}

impl fmt::Display for Margin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Margin::Normal { mean, sd } => write!(f, "normal:{mean}:{sd}"),
            Margin::Exponential { rate } => write!(f, "exp:{rate}"),
            Margin::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Margin::Frechet { shape, scale, loc } => write!(f, "frechet:{shape}:{scale}:{loc}"),
            Margin::Gumbel { loc, scale } => write!(f, "gumbel:{loc}:{scale}"),
            Margin::EmpiricalRank => f.write_str("rank"),
        }
    }
}

/// `(rank - 0.5) / n` with average ranks for ties.
pub fn empirical_ranks(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && column[order[j + 1]] == column[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = (rank - 0.5) / n as f64;
        }
        i = j + 1;
    }
    out
}

/// Componentwise probability-integral transform. `margins` holds one entry
/// per coordinate, or a single entry applied to all.
pub fn pit_transform(rows: &[Vec<f64>], margins: &[Margin]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let d = first.len();
    if margins.len() != 1 && margins.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: margins.len(),
        });
    }
    for m in margins {
        m.validate()?;
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::DimensionDrift {
                index: i as u64 + 1,
                expected: d,
                got: r.len(),
            });
        }
    }
    let margin = |j: usize| &margins[if margins.len() == 1 { 0 } else { j }];
    let mut out = vec![vec![0.0; d]; rows.len()];
    for j in 0..d {
        match margin(j) {
            Margin::EmpiricalRank => {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                for (o, v) in out.iter_mut().zip(empirical_ranks(&col)) {
                    o[j] = v;
                }
            }
            m => {
                for (o, r) in out.iter_mut().zip(rows) {
                    o[j] = m.cdf(r[j]).expect("parametric margin");
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_is_identity() {
        let rows = vec![vec![0.1, 0.9], vec![0.5, 0.25]];
        assert_eq!(pit_transform(&rows, &[Margin::Uniform { lo: 0.0, hi: 1.0 }]).unwrap(), rows);
    }

    #[test]
    fn ranks_example() {
        let r = empirical_ranks(&[3.0, 1.0, 2.0]);
        assert_abs_diff_eq!(r[0], 2.5 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.5 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], 0.5, epsilon = 1e-15);
        assert_eq!(empirical_ranks(&[1.0, 1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn parametric_margins() {
        assert_abs_diff_eq!(Margin::Normal { mean: 0.0, sd: 1.0 }.cdf(0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(Margin::Exponential { rate: 2.0 }.cdf(0.5).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            Margin::Frechet { shape: 2.0, scale: 1.0, loc: 0.0 }.cdf(1.0).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(Margin::Gumbel { loc: 0.0, scale: 1.0 }.cdf(0.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn parse_margins() {
        assert_eq!("normal".parse::<Margin>().unwrap(), Margin::Normal { mean: 0.0, sd: 1.0 });
        assert_eq!("exp:2".parse::<Margin>().unwrap(), Margin::Exponential { rate: 2.0 });
        assert_eq!("rank".parse::<Margin>().unwrap(), Margin::EmpiricalRank);
        for bad in ["normal:0:-1", "exp:0", "uniform:1:1", "frechet", "weird", "rank:1"] {
            assert!(bad.parse::<Margin>().is_err(), "{bad}");
        }
        for m in ["normal:1:2", "exp:3", "uniform:-1:4", "frechet:2:1:0", "gumbel:0:1", "rank"] {
            let p: Margin = m.parse().unwrap();
            assert_eq!(p.to_string().parse::<Margin>().unwrap(), p);
        }
    }

    #[test]
    fn margin_count_checked() {
        let rows = vec![vec![0.1, 0.2, 0.3]];
        let two = [Margin::EmpiricalRank, Margin::EmpiricalRank];
        assert!(pit_transform(&rows, &two).is_err());
    }
}
