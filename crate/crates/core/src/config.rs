//! Machine bounds and their key-value file form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::Position;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("ax15: max_args must be at least 1")]
    MaxArgs,
    #[error("ax25: max_out must be 1, got {0}")]
    MaxOut(usize),
    #[error("ax35: max_oprd must be at least 1")]
    MaxOprd,
    #[error("ax50: max_args ({max_args}) exceeds max_fol ({max_fol})")]
    ArgsAboveFoliage { max_args: usize, max_fol: usize },
    #[error("ax55: max_fol ({max_fol}) is below max_oprd * max_args ({bound})")]
    FoliageTooSmall { max_fol: usize, bound: usize },
    #[error("seq_n({nn}) outside 1..={max_fol}")]
    SeqBounds { nn: usize, max_fol: usize },
    #[error("position {value} outside 1..={max_fol}")]
    PositionBounds { value: usize, max_fol: usize },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Static bounds of the machine. Immutable once built; every value of this
/// type satisfies the context axioms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Config {
    max_args: usize,
    max_out: usize,
    max_oprd: usize,
    max_fol: usize,
}

impl Config {
    pub fn new(
        max_args: usize,
        max_out: usize,
        max_oprd: usize,
        max_fol: usize,
    ) -> Result<Self, ConfigError> {
        let config = Config {
            max_args,
            max_out,
            max_oprd,
            max_fol,
        };
        config.validate()?;
        Ok(config)
    }

    /// Bounds with `max_fol` taken at its lower bound `max_oprd * max_args`.
    pub fn with_bounds(max_args: usize, max_oprd: usize) -> Result<Self, ConfigError> {
        Config::new(max_args, 1, max_oprd, max_args.saturating_mul(max_oprd))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        validate(self.max_args, self.max_out, self.max_oprd, self.max_fol)
    }

    pub fn max_args(&self) -> usize {
        self.max_args
    }

    pub fn max_out(&self) -> usize {
        self.max_out
    }

    pub fn max_oprd(&self) -> usize {
        self.max_oprd
    }

    pub fn max_fol(&self) -> usize {
        self.max_fol
    }

    /// `{1, ..., nn}`.
    pub fn seq_n(&self, nn: usize) -> Result<BTreeSet<Position>, ConfigError> {
        if nn == 0 || nn > self.max_fol {
            return Err(ConfigError::SeqBounds {
                nn,
                max_fol: self.max_fol,
            });
        }
        Ok((1..=nn).map(|k| Position::new(k).expect("k >= 1")).collect())
    }

    pub fn position(&self, value: usize) -> Result<Position, ConfigError> {
        if value == 0 || value > self.max_fol {
            return Err(ConfigError::PositionBounds {
                value,
                max_fol: self.max_fol,
            });
        }
        Ok(Position::new(value).expect("value >= 1"))
    }
}

impl Default for Config {
    fn default() -> Self {
        default_config()
    }
}

/// The simulation bounds: six arguments, one output, eight operads, and a
/// foliage of exactly `8 * 6`.
pub fn default_config() -> Config {
    Config {
        max_args: 6,
        max_out: 1,
        max_oprd: 8,
        max_fol: 48,
    }
}

/// Check the four context axioms on raw values.
pub fn validate(
    max_args: usize,
    max_out: usize,
    max_oprd: usize,
    max_fol: usize,
) -> Result<(), ConfigError> {
    if max_args == 0 {
        return Err(ConfigError::MaxArgs);
    }
    if max_out != 1 {
        return Err(ConfigError::MaxOut(max_out));
    }
    if max_oprd == 0 {
        return Err(ConfigError::MaxOprd);
    }
    if max_args > max_fol {
        return Err(ConfigError::ArgsAboveFoliage { max_args, max_fol });
    }
    let bound = max_oprd.saturating_mul(max_args);
    if max_fol < bound {
        return Err(ConfigError::FoliageTooSmall { max_fol, bound });
    }
    Ok(())
}

/// Partial settings read from a `key=value` file or from flags. Unset
/// fields fall back to [`default_config`] when built.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct ConfigValues {
    pub max_args: Option<usize>,
    pub max_out: Option<usize>,
    pub max_oprd: Option<usize>,
    pub max_fol: Option<usize>,
    pub alphabet: Option<Vec<String>>,
}

impl ConfigValues {
    /// Parse `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = ConfigValues::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let number = || {
                value.parse::<usize>().map_err(|_| ConfigError::Syntax {
                    line: line_no,
                    msg: format!("`{key}` expects a non-negative integer, got `{value}`"),
                })
            };
            match key {
                "max_args" => values.max_args = Some(number()?),
                "max_out" => values.max_out = Some(number()?),
                "max_oprd" => values.max_oprd = Some(number()?),
                "max_fol" => values.max_fol = Some(number()?),
                "alphabet" => {
                    values.alphabet = Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(String::from)
                            .collect(),
                    )
                }
                other => {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(values)
    }

    /// Fields set in `other` take precedence.
    pub fn overlay(mut self, other: ConfigValues) -> Self {
        self.max_args = other.max_args.or(self.max_args);
        self.max_out = other.max_out.or(self.max_out);
        self.max_oprd = other.max_oprd.or(self.max_oprd);
        self.max_fol = other.max_fol.or(self.max_fol);
        self.alphabet = other.alphabet.or(self.alphabet);
        self
    }

    /// When `max_args` or `max_oprd` is overridden but `max_fol` is not, the
    /// foliage bound follows them at `max_oprd * max_args`.
    pub fn build(&self) -> Result<Config, ConfigError> {
        let d = default_config();
        let max_args = self.max_args.unwrap_or(d.max_args);
        let max_oprd = self.max_oprd.unwrap_or(d.max_oprd);
        let max_fol = self
            .max_fol
            .unwrap_or_else(|| max_args.saturating_mul(max_oprd));
        Config::new(max_args, self.max_out.unwrap_or(d.max_out), max_oprd, max_fol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::pos;

    #[test]
    fn default_values() {
        let c = default_config();
        assert_eq!(
            (c.max_args(), c.max_out(), c.max_oprd(), c.max_fol()),
            (6, 1, 8, 48)
        );
        assert_eq!(Config::new(6, 1, 8, 48), Ok(c));
    }

    #[test]
    fn validation_rejects_each_axiom() {
        assert_eq!(
            Config::new(6, 1, 8, 40),
            Err(ConfigError::FoliageTooSmall {
                max_fol: 40,
                bound: 48
            })
        );
        assert_eq!(Config::new(0, 1, 8, 48), Err(ConfigError::MaxArgs));
        assert_eq!(Config::new(6, 2, 8, 48), Err(ConfigError::MaxOut(2)));
        assert_eq!(Config::new(6, 1, 0, 48), Err(ConfigError::MaxOprd));
        // ax50 cannot fail alone once ax55 holds with max_oprd >= 1; check the raw validator ordering.
        assert!(matches!(
            validate(6, 1, 1, 5),
            Err(ConfigError::ArgsAboveFoliage { .. })
        ));
    }

    #[test]
    fn seq_n_examples() {
        let c = default_config();
        assert_eq!(c.seq_n(1).unwrap(), [pos(1)].into());
        assert_eq!(
            c.seq_n(4).unwrap(),
            [pos(1), pos(2), pos(3), pos(4)].into()
        );
        assert_eq!(c.seq_n(6).unwrap(), (1..=6).map(pos).collect());
        assert!(c.seq_n(0).is_err());
        assert!(c.seq_n(49).is_err());
        assert_eq!(c.seq_n(48).unwrap().len(), 48);
    }

    #[test]
    fn position_bounds() {
        let c = default_config();
        assert!(c.position(0).is_err());
        assert!(c.position(49).is_err());
        assert_eq!(c.position(48).unwrap().get(), 48);
    }

    #[test]
    fn parses_key_value_file() {
        let v = ConfigValues::parse("# bounds\nmax_args = 3\nmax_oprd=4 # four\n\nalphabet=a, b,c\n")
            .unwrap();
        assert_eq!(v.max_args, Some(3));
        assert_eq!(v.max_oprd, Some(4));
        assert_eq!(v.alphabet.as_deref(), Some(&["a".to_string(), "b".into(), "c".into()][..]));
        let c = v.build().unwrap();
        assert_eq!((c.max_args(), c.max_oprd(), c.max_fol()), (3, 4, 12));
    }

    #[test]
    fn file_errors_carry_line() {
        assert!(matches!(
            ConfigValues::parse("max_args=6\nbogus=1"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            ConfigValues::parse("max_args"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            ConfigValues::parse("max_args=x"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn overlay_prefers_later_values() {
        let file = ConfigValues::parse("max_args=3\nmax_oprd=3").unwrap();
        let flags = ConfigValues {
            max_args: Some(4),
            ..Default::default()
        };
        let c = file.overlay(flags).build().unwrap();
        assert_eq!((c.max_args(), c.max_oprd(), c.max_fol()), (4, 3, 12));
    }
}
