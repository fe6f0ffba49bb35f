//! Key/value run configuration for `search`: one `key = value` pair per
//! line, `#` comments, schema-validated with unknown keys rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bellgap::ga::{GaConfig, SearchConstraint, Side};
use bellgap::weights::{BellMatrix, WeightMatrix};
use bellgap::{Error, Result};

use crate::render::OutputFormat;
use crate::weight_source::{matrix_spec, parse_inline, parse_weight_file};

/// How the weight matrix of a run is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Chsh,
    Magic3,
    /// `bell:N:SEED`, a random Bell matrix.
    Bell { n: usize, seed: u64 },
    /// `file:PATH`, the weight file format.
    File(String),
    /// `inline:ROWS`, comma/semicolon row spec.
    Inline(String),
}

impl WeightSpec {
    fn parse(value: &str) -> Result<Self> {
        if value == "chsh" {
            return Ok(Self::Chsh);
        }
        if value == "magic3" {
            return Ok(Self::Magic3);
        }
        if let Some(rest) = value.strip_prefix("bell:") {
            let (n, seed) = rest.split_once(':').ok_or_else(|| {
                Error::InvalidInput(format!("weight {value:?}: expected bell:N:SEED"))
            })?;
            let n = n.parse().map_err(|_| {
                Error::InvalidInput(format!("weight {value:?}: bad size {n:?}"))
            })?;
            let seed = seed.parse().map_err(|_| {
                Error::InvalidInput(format!("weight {value:?}: bad seed {seed:?}"))
            })?;
            return Ok(Self::Bell { n, seed });
        }
        if let Some(path) = value.strip_prefix("file:") {
            return Ok(Self::File(path.to_string()));
        }
        if let Some(rows) = value.strip_prefix("inline:") {
            return Ok(Self::Inline(rows.to_string()));
        }
        Err(Error::InvalidInput(format!(
            "weight {value:?}: expected chsh, magic3, bell:N:SEED, file:PATH, or inline:ROWS"
        )))
    }

    /// Builds the weight matrix.
    pub fn resolve(&self) -> Result<WeightMatrix<f64>> {
        match self {
            Self::Chsh => Ok(WeightMatrix::chsh()),
            Self::Magic3 => Ok(WeightMatrix::magic_square()),
            Self::Bell { n, seed } => Ok(BellMatrix::generate(*n, *seed)?.into_weight()),
            Self::File(path) => parse_weight_file(path.as_ref()),
            Self::Inline(rows) => parse_inline(rows),
        }
    }

    /// Stable description for hashing; file contents, not paths, are hashed.
    pub fn describe(&self) -> Result<String> {
        Ok(match self {
            Self::Chsh => "chsh".into(),
            Self::Magic3 => "magic3".into(),
            Self::Bell { n, seed } => format!("bell:{n}:{seed}"),
            Self::File(_) | Self::Inline(_) => format!("matrix:{}", matrix_spec(&self.resolve()?)),
        })
    }
}

/// A fully resolved search run: weight source, Hilbert dimensions, GA
/// hyperparameters, constraint, success target, and output routing.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub weight: WeightSpec,
    /// Expected weight dims; validated against the resolved weight when set.
    pub n_a: Option<usize>,
    pub n_b: Option<usize>,
    pub dim_a: usize,
    pub dim_b: usize,
    pub ga: GaConfig,
    pub constraint: SearchConstraint,
    /// Success means `norm_bound_deviation <= target` (exit code 0 vs 1).
    pub target: Option<f64>,
    pub out: Option<String>,
    pub format: OutputFormat,
}

fn parse_side(s: &str) -> Result<Side> {
    match s {
        "a" => Ok(Side::A),
        "b" => Ok(Side::B),
        other => Err(Error::InvalidInput(format!(
            "bad side {other:?}, expected \"a\" or \"b\""
        ))),
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::A => "a",
        Side::B => "b",
    }
}

fn parse_constraint(value: &str) -> Result<SearchConstraint> {
    if value == "none" {
        return Ok(SearchConstraint::None);
    }
    if let Some(rest) = value.strip_prefix("tie:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "constraint {value:?}: expected tie:SIDE:TARGET:REFERENCE"
            )));
        }
        let side = parse_side(parts[0])?;
        let target = parts[1].parse().map_err(|_| {
            Error::InvalidInput(format!("constraint {value:?}: bad target index {:?}", parts[1]))
        })?;
        let reference = parts[2].parse().map_err(|_| {
            Error::InvalidInput(format!(
                "constraint {value:?}: bad reference index {:?}",
                parts[2]
            ))
        })?;
        return Ok(SearchConstraint::Tie {
            side,
            target,
            reference,
        });
    }
    if let Some(rest) = value.strip_prefix("commuting:") {
        return match rest {
            "a" => Ok(SearchConstraint::CommutingSide(Side::A)),
            "b" => Ok(SearchConstraint::CommutingSide(Side::B)),
            "both" => Ok(SearchConstraint::CommutingBoth),
            other => Err(Error::InvalidInput(format!(
                "constraint commuting:{other}: expected a, b, or both"
            ))),
        };
    }
    Err(Error::InvalidInput(format!(
        "constraint {value:?}: expected none, tie:SIDE:T:R, or commuting:a|b|both"
    )))
}

/// Canonical text of a constraint, inverse of [`parse_constraint`].
pub fn constraint_spec(c: &SearchConstraint) -> String {
    match c {
        SearchConstraint::None => "none".into(),
        SearchConstraint::Tie {
            side,
            target,
            reference,
        } => format!("tie:{}:{target}:{reference}", side_name(*side)),
        SearchConstraint::CommutingSide(side) => format!("commuting:{}", side_name(*side)),
        SearchConstraint::CommutingBoth => "commuting:both".into(),
    }
}

impl RunConfig {
    /// Parses the key/value text. Unknown and duplicate keys are errors;
    /// unset keys fall back to the documented defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidInput(format!(
                    "config line {line_no}: expected key = value, found {line:?}"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if let Some((first, _)) = seen.get(&key) {
                return Err(Error::InvalidInput(format!(
                    "config line {line_no}: duplicate key {key:?} (first set on line {first})"
                )));
            }
            seen.insert(key, (line_no, value));
        }

        let mut take = |key: &str| seen.remove(key).map(|(_, v)| v);
        let parse_num = |key: &str, v: String| -> Result<f64> {
            v.parse().map_err(|_| {
                Error::InvalidInput(format!("config key {key}: expected a number, found {v:?}"))
            })
        };
        let parse_usize = |key: &str, v: String| -> Result<usize> {
            v.parse().map_err(|_| {
                Error::InvalidInput(format!("config key {key}: expected an integer, found {v:?}"))
            })
        };
        let parse_u64 = |key: &str, v: String| -> Result<u64> {
            v.parse().map_err(|_| {
                Error::InvalidInput(format!("config key {key}: expected an integer, found {v:?}"))
            })
        };
        let parse_bool = |key: &str, v: String| -> Result<bool> {
            match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::InvalidInput(format!(
                    "config key {key}: expected true or false, found {v:?}"
                ))),
            }
        };

        let weight = match take("weight") {
            Some(v) => WeightSpec::parse(&v)?,
            None => {
                return Err(Error::InvalidInput(
                    "config is missing the required key \"weight\"".into(),
                ))
            }
        };

        let mut ga = GaConfig::default();
        if let Some(v) = take("population") {
            ga.population = parse_usize("population", v)?;
        }
        if let Some(v) = take("generations") {
            ga.generations = parse_usize("generations", v)?;
        }
        if let Some(v) = take("tournament_size") {
            ga.tournament_size = parse_usize("tournament_size", v)?;
        }
        if let Some(v) = take("crossover_rate") {
            ga.crossover_rate = parse_num("crossover_rate", v)?;
        }
        if let Some(v) = take("mutation_rate") {
            ga.mutation_rate = parse_num("mutation_rate", v)?;
        }
        if let Some(v) = take("mutation_sigma") {
            ga.mutation_sigma = parse_num("mutation_sigma", v)?;
        }
        if let Some(v) = take("elitism") {
            ga.elitism = parse_usize("elitism", v)?;
        }
        if let Some(v) = take("seed") {
            ga.seed = parse_u64("seed", v)?;
        }
        if let Some(v) = take("stall_generations") {
            ga.stall_generations = parse_usize("stall_generations", v)?;
        }
        if let Some(v) = take("polish") {
            ga.polish = parse_bool("polish", v)?;
        }
        if let Some(v) = take("polish_iterations") {
            ga.polish_iterations = parse_usize("polish_iterations", v)?;
        }

        let config = RunConfig {
            weight,
            n_a: take("n_a").map(|v| parse_usize("n_a", v)).transpose()?,
            n_b: take("n_b").map(|v| parse_usize("n_b", v)).transpose()?,
            dim_a: take("dim_a").map(|v| parse_usize("dim_a", v)).transpose()?.unwrap_or(2),
            dim_b: take("dim_b").map(|v| parse_usize("dim_b", v)).transpose()?.unwrap_or(2),
            ga,
            constraint: match take("constraint") {
                Some(v) => parse_constraint(&v)?,
                None => SearchConstraint::None,
            },
            target: take("target").map(|v| parse_num("target", v)).transpose()?,
            out: take("out"),
            format: match take("format") {
                Some(v) => v.parse()?,
                None => OutputFormat::Json,
            },
        };

        if let Some((key, (line, _))) = seen.iter().next() {
            return Err(Error::InvalidInput(format!(
                "config line {line}: unknown key {key:?}"
            )));
        }
        Ok(config)
    }

    /// Canonical resolved key/value text. Every effective knob appears
    /// exactly once in a fixed order; the output path is excluded because it
    /// does not affect the computation. This text is what gets hashed.
    pub fn canonical_text(&self) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "command = search");
        let _ = writeln!(s, "weight = {}", self.weight.describe()?);
        let _ = writeln!(s, "dim_a = {}", self.dim_a);
        let _ = writeln!(s, "dim_b = {}", self.dim_b);
        let _ = writeln!(s, "population = {}", self.ga.population);
        let _ = writeln!(s, "generations = {}", self.ga.generations);
        let _ = writeln!(s, "tournament_size = {}", self.ga.tournament_size);
        let _ = writeln!(s, "crossover_rate = {}", self.ga.crossover_rate);
        let _ = writeln!(s, "mutation_rate = {}", self.ga.mutation_rate);
        let _ = writeln!(s, "mutation_sigma = {}", self.ga.mutation_sigma);
        let _ = writeln!(s, "elitism = {}", self.ga.elitism);
        let _ = writeln!(s, "seed = {}", self.ga.seed);
        let _ = writeln!(s, "stall_generations = {}", self.ga.stall_generations);
        let _ = writeln!(s, "polish = {}", self.ga.polish);
        let _ = writeln!(s, "polish_iterations = {}", self.ga.polish_iterations);
        let _ = writeln!(s, "constraint = {}", constraint_spec(&self.constraint));
        if let Some(t) = self.target {
            let _ = writeln!(s, "target = {t}");
        }
        Ok(s)
    }
}
