//! Parameter types shared by the command line and figure configs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Mean received SNR. Configured in decibels; the linear value is derived
/// once, on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Snr {
    db: f64,
    linear: f64,
}

impl Snr {
    pub fn from_db(db: f64) -> Result<Self, String> {
        if !db.is_finite() {
            return Err(format!("SNR must be finite, got {db} dB"));
        }
        let decades = db / 10.0;
        // Whole decades go through powi so 0 dB and 20 dB give exactly 1 and 100.
        let linear = if decades.fract() == 0.0 && decades.abs() <= 300.0 {
            10f64.powi(decades as i32)
        } else {
            10f64.powf(decades)
        };
        if !(linear > 0.0 && linear.is_finite()) {
            return Err(format!("{db} dB is outside the representable range"));
        }
        Ok(Snr { db, linear })
    }

    pub fn db(self) -> f64 {
        self.db
    }

    pub fn linear(self) -> f64 {
        self.linear
    }
}

impl TryFrom<f64> for Snr {
    type Error = String;

    fn try_from(db: f64) -> Result<Self, String> {
        Snr::from_db(db)
    }
}

impl From<Snr> for f64 {
    fn from(s: Snr) -> f64 {
        s.db
    }
}

impl FromStr for Snr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let db = s
            .trim()
            .trim_end_matches("dB")
            .parse::<f64>()
            .map_err(|e| format!("`{s}`: {e}"))?;
        Snr::from_db(db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

/// `start:stop:points:lin|log`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k == self.points - 1 {
                    return self.stop;
                }
                let k = k as f64;
                match self.spacing {
                    Spacing::Lin => self.start + (self.stop - self.start) * k / last,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * k / last).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [start, stop, points, spacing] = parts[..] else {
            return Err(format!("sweep `{s}` is not start:stop:points:lin|log"));
        };
        let num = |x: &str| x.parse::<f64>().map_err(|e| format!("sweep `{s}`: `{x}`: {e}"));
        let (start, stop) = (num(start)?, num(stop)?);
        let points = points
            .parse::<usize>()
            .map_err(|e| format!("sweep `{s}`: points: {e}"))?;
        let spacing = match spacing {
            "lin" => Spacing::Lin,
            "log" => Spacing::Log,
            other => return Err(format!("sweep `{s}`: spacing `{other}` is neither lin nor log")),
        };
        if points == 0 {
            return Err(format!("sweep `{s}` needs at least one point"));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(format!("sweep `{s}` has a non-finite endpoint"));
        }
        if spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
            return Err(format!("log sweep `{s}` needs positive endpoints"));
        }
        Ok(Sweep {
            start,
            stop,
            points,
            spacing,
        })
    }
}

impl TryFrom<String> for Sweep {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Sweep> for String {
    fn from(s: Sweep) -> String {
        s.to_string()
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spacing = match self.spacing {
            Spacing::Lin => "lin",
            Spacing::Log => "log",
        };
        write!(f, "{}:{}:{}:{spacing}", self.start, self.stop, self.points)
    }
}

/// Either a single value or a sweep; a number or a sweep string in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Fixed(f64),
    Sweep(Sweep),
}

impl Values {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Values::Fixed(x) => vec![*x],
            Values::Sweep(s) => s.values(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decibels_convert_exactly_on_decades() {
        assert_eq!(Snr::from_db(0.0).unwrap().linear(), 1.0);
        assert_eq!(Snr::from_db(20.0).unwrap().linear(), 100.0);
        assert_eq!(Snr::from_db(40.0).unwrap().linear(), 1e4);
        assert_eq!(Snr::from_db(-10.0).unwrap().linear(), 0.1);
        assert!((Snr::from_db(3.0).unwrap().linear() - 1.9952623149688795).abs() < 1e-15);
        assert_eq!("20dB".parse::<Snr>().unwrap().linear(), 100.0);
    }

    #[test]
    fn sweeps_parse_and_include_endpoints() {
        let s: Sweep = "0.01:100:200:log".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 200);
        assert_eq!((v[0], v[199]), (0.01, 100.0));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let lin: Sweep = "-10:50:7:lin".parse().unwrap();
        assert_eq!(lin.values(), vec![-10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(lin.to_string().parse::<Sweep>().unwrap(), lin);
    }

    #[test]
    fn bad_sweeps_are_rejected() {
        for bad in ["1:2:3", "0:1:5:log", "1:2:0:lin", "1:2:3:cubic", "a:2:3:lin"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }
}
