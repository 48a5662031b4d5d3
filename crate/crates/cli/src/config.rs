//! Job configuration: a flat `key = value` file, overridden by flags.

use std::path::PathBuf;

use clap::ValueEnum;
use polespec::certify::{parse_rationals, Flags, GeometricInput, Rat};
use polespec::error::{Error, Result};
use polespec::exactla::{RankMode, RankPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    E1,
    Pages,
    Decompose,
    Chi,
    Certify,
    Roots,
    Betti,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::E1 => "e1",
            Command::Pages => "pages",
            Command::Decompose => "decompose",
            Command::Chi => "chi",
            Command::Certify => "certify",
            Command::Roots => "roots",
            Command::Betti => "betti",
            Command::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

/// Everything that determines a result. Its hash keys the cache.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub poly: String,
    pub n: usize,
    /// Last degree of the page tables; `nd - 1` when absent.
    pub k_max: Option<i64>,
    /// Last degree of the E1 table; `(n + 1) d`, or `4d + 2` for a strongly
    /// free divisor, and at least `k_max`, when absent.
    pub k_max_e1: Option<i64>,
    pub r_max: usize,
    pub rank: RankPolicy,
    pub geometry: GeometricInput,
    #[serde(with = "rat_opt")]
    pub beta: Option<Rat>,
    pub ideal_e: Vec<String>,
}

mod rat_opt {
    use polespec::certify::Rat;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(q) => s.serialize_some(&q.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let t: Option<String> = Option::deserialize(d)?;
        t.map(|x| Rat::from_str(&x).map_err(serde::de::Error::custom)).transpose()
    }
}

impl Job {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("job serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n == 3 || self.n == 4) {
            return Err(Error::Unsupported(format!("n = {} (only 3 and 4 are supported)", self.n)));
        }
        if self.r_max < 1 {
            return Err(Error::Unsupported("rmax must be at least 1".into()));
        }
        if self.rank.mode == RankMode::Modular && self.rank.primes == 0 {
            return Err(Error::Unsupported("modular mode needs at least one prime".into()));
        }
        if let Some(b) = self.beta {
            if b <= Rat::from_integer(0) {
                return Err(Error::Unsupported(format!("beta = {b} is not positive")));
            }
        }
        self.geometry.validate()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A job plus how to present and store its result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobConfig {
    pub job: Job,
    pub format: Format,
    pub cache: Option<PathBuf>,
}

/// Raw settings before defaults are applied; every field optional so that
/// a file and the flags can be layered.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub poly: Option<String>,
    pub n: Option<usize>,
    pub k_max: Option<i64>,
    pub k_max_e1: Option<i64>,
    pub r_max: Option<usize>,
    pub mode: Option<RankMode>,
    pub primes: Option<usize>,
    pub seed: Option<u64>,
    pub rz: Option<String>,
    pub alpha_z: Option<String>,
    pub alpha_tilde_prime: Option<String>,
    pub chi_u: Option<i64>,
    pub milnor: Option<i64>,
    pub flags: Option<String>,
    pub m: Option<i64>,
    pub max_rf: Option<String>,
    pub max_rf_reason: Option<String>,
    pub beta: Option<String>,
    pub ideal_e: Option<String>,
    pub format: Option<Format>,
    pub cache: Option<PathBuf>,
}

fn bad(key: &str, value: &str) -> Error {
    Error::Unsupported(format!("config key '{key}': cannot parse '{value}'"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn one_rational(key: &str, value: &str) -> Result<Rat> {
    match parse_rationals(value)?.as_slice() {
        [q] => Ok(*q),
        _ => Err(bad(key, value)),
    }
}

impl Settings {
    /// Parse a flat config document. Lines are `key = value`; `#` starts a
    /// comment; keys may be dotted (`geometry.rz`, `rank.seed`).
    pub fn parse_file(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Unsupported(format!("config line {}: expected 'key = value'", no + 1)));
            };
            s.set(key.trim(), value.trim())?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let owned = Some(v.to_string());
        match key {
            "poly" => self.poly = owned,
            "n" => self.n = Some(num(key, v)?),
            "kmax" | "k_max" => self.k_max = Some(num(key, v)?),
            "kmax_e1" | "k_max_e1" => self.k_max_e1 = Some(num(key, v)?),
            "rmax" | "r_max" => self.r_max = Some(num(key, v)?),
            "rank.mode" | "mode" => {
                self.mode = Some(match v {
                    "exact" => RankMode::Exact,
                    "modular" => RankMode::Modular,
                    _ => return Err(bad(key, v)),
                })
            }
            "rank.primes" | "primes" => self.primes = Some(num(key, v)?),
            "rank.seed" | "seed" => self.seed = Some(num(key, v)?),
            "geometry.rz" | "rz" => self.rz = owned,
            "geometry.alpha_z" => self.alpha_z = owned,
            "geometry.alpha_tilde_prime" => self.alpha_tilde_prime = owned,
            "geometry.chi_u" | "chi_u" => self.chi_u = Some(num(key, v)?),
            "geometry.milnor_total" => self.milnor = Some(num(key, v)?),
            "geometry.flags" | "flags" => self.flags = owned,
            "geometry.m" => self.m = Some(num(key, v)?),
            "geometry.max_rf" => self.max_rf = owned,
            "geometry.max_rf_reason" => self.max_rf_reason = owned,
            "beta" => self.beta = owned,
            "ideal_e" | "ideal.e" => self.ideal_e = owned,
            "format" => self.format = Some(Format::from_str(v, true).map_err(|_| bad(key, v))?),
            "cache" => self.cache = Some(PathBuf::from(v)),
            _ => return Err(Error::Unsupported(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// `other` wins wherever it sets a value.
    pub fn overlay(self, other: Settings) -> Settings {
        Settings {
            poly: other.poly.or(self.poly),
            n: other.n.or(self.n),
            k_max: other.k_max.or(self.k_max),
            k_max_e1: other.k_max_e1.or(self.k_max_e1),
            r_max: other.r_max.or(self.r_max),
            mode: other.mode.or(self.mode),
            primes: other.primes.or(self.primes),
            seed: other.seed.or(self.seed),
            rz: other.rz.or(self.rz),
            alpha_z: other.alpha_z.or(self.alpha_z),
            alpha_tilde_prime: other.alpha_tilde_prime.or(self.alpha_tilde_prime),
            chi_u: other.chi_u.or(self.chi_u),
            milnor: other.milnor.or(self.milnor),
            flags: other.flags.or(self.flags),
            m: other.m.or(self.m),
            max_rf: other.max_rf.or(self.max_rf),
            max_rf_reason: other.max_rf_reason.or(self.max_rf_reason),
            beta: other.beta.or(self.beta),
            ideal_e: other.ideal_e.or(self.ideal_e),
            format: other.format.or(self.format),
            cache: other.cache.or(self.cache),
        }
    }

    pub fn build(self) -> Result<JobConfig> {
        let poly = self.poly.ok_or_else(|| Error::Unsupported("no polynomial given (--poly)".into()))?;
        let n = self.n.ok_or_else(|| Error::Unsupported("number of variables not given (--n)".into()))?;
        let mode = self.mode.unwrap_or(RankMode::Modular);
        let default = RankPolicy::default();
        // exact ranks ignore primes and seed; keep them out of the hash
        let rank = match mode {
            RankMode::Exact => RankPolicy::exact(),
            RankMode::Modular => RankPolicy::modular(self.primes.unwrap_or(default.primes), self.seed.unwrap_or(default.seed)),
        };
        let rat = |key: &str, v: Option<String>| v.map(|t| one_rational(key, &t)).transpose();
        let geometry = GeometricInput {
            rz: match &self.rz {
                Some(t) => parse_rationals(t)?,
                None => Vec::new(),
            },
            alpha_z: rat("geometry.alpha_z", self.alpha_z)?,
            alpha_tilde_prime: rat("geometry.alpha_tilde_prime", self.alpha_tilde_prime)?,
            chi_u: self.chi_u,
            milnor_total: self.milnor,
            flags: Flags::parse(self.flags.as_deref().unwrap_or(""))?,
            m: self.m,
            max_rf: rat("geometry.max_rf", self.max_rf)?,
            max_rf_reason: self.max_rf_reason,
        };
        let ideal_e = self
            .ideal_e
            .map(|t| t.split(',').map(|g| g.trim().to_string()).filter(|g| !g.is_empty()).collect())
            .unwrap_or_default();
        let job = Job {
            poly: poly.trim().to_string(),
            n,
            k_max: self.k_max,
            k_max_e1: self.k_max_e1,
            r_max: self.r_max.unwrap_or(3),
            rank,
            geometry,
            beta: rat("beta", self.beta)?,
            ideal_e,
        };
        job.validate()?;
        Ok(JobConfig { job, format: self.format.unwrap_or_default(), cache: self.cache })
    }
}
