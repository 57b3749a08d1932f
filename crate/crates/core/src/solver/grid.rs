use super::SolverError;
use std::fmt;
use std::str::FromStr;

/// Evaluation grid for density curves.
///
/// Textual forms: `default`, `mixed:<n_log>:<n_lin>`, `linear:<lo>:<hi>:<n>`,
/// `log:<lo>:<hi>:<n>`. The default is `mixed:512:512`: logarithmic points on
/// `[1e-8, 1e-2) * top` followed by linear points on `[1e-2 * top, top]`,
/// where `top` is the upper end of the support. When the support does not
/// reach zero the mixed form degenerates to `n_log + n_lin` linear points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec {
    Mixed { n_log: usize, n_lin: usize },
    Linear { lo: f64, hi: f64, n: usize },
    Log { lo: f64, hi: f64, n: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Mixed { n_log: 512, n_lin: 512 }
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![hi],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n).into_iter().map(f64::exp).collect()
}

impl GridSpec {
    /// Grid points for a support `[lower, top]`.
    pub fn resolve(&self, lower: f64, top: f64) -> Vec<f64> {
        match *self {
            GridSpec::Linear { lo, hi, n } => linspace(lo, hi, n),
            GridSpec::Log { lo, hi, n } => logspace(lo, hi, n),
            GridSpec::Mixed { n_log, n_lin } => {
                if lower > 0.0 {
                    return linspace(lower, top, n_log + n_lin);
                }
                let split = 1e-2 * top;
                let mut g = logspace(1e-8 * top, split, n_log + 1);
                g.pop();
                g.extend(linspace(split, top, n_lin));
                g
            }
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Mixed { n_log, n_lin } => write!(f, "mixed:{n_log}:{n_lin}"),
            GridSpec::Linear { lo, hi, n } => write!(f, "linear:{lo}:{hi}:{n}"),
            GridSpec::Log { lo, hi, n } => write!(f, "log:{lo}:{hi}:{n}"),
        }
    }
}

impl FromStr for GridSpec {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SolverError::InvalidGrid(format!("cannot parse grid spec `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let int = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["default"] => GridSpec::default(),
            ["mixed", a, b] => GridSpec::Mixed { n_log: int(a)?, n_lin: int(b)? },
            ["linear", lo, hi, n] => GridSpec::Linear { lo: num(lo)?, hi: num(hi)?, n: int(n)? },
            ["log", lo, hi, n] => GridSpec::Log { lo: num(lo)?, hi: num(hi)?, n: int(n)? },
            _ => return Err(bad()),
        };
        match spec {
            GridSpec::Linear { lo, hi, n } | GridSpec::Log { lo, hi, n } if !(lo >= 0.0 && hi > lo && n >= 1) => Err(bad()),
            GridSpec::Log { lo, .. } if lo <= 0.0 => Err(bad()),
            _ => Ok(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default().resolve(0.0, 2.0);
        assert_eq!(g.len(), 1024);
        assert!((g[0] - 2e-8).abs() < 1e-20);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["mixed:16:32", "linear:0.05:5.19:100", "log:0.0001:0.01:50"] {
            let g: GridSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("linear:1:0:5".parse::<GridSpec>().is_err());
        assert!("bogus".parse::<GridSpec>().is_err());
    }
}
