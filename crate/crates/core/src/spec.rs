//! Ensemble spec strings such as `chain:3,6,12` or `loop:3,6,15,h=5`.
//!
//! Grammar (whitespace around tokens is ignored):
//!
//! ```text
//! uncoupled:J,K
//! chain:J,K,L
//! loop:J,K,L[,h=H]
//! square:3,6,L
//! loop48:A|B,L[,h=H]
//! mixed:L1|L2,L
//! ```

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ensembles::{
    build_chain, build_loop, build_mixed_loop, build_square, build_uncoupled, ConnectionStyle,
    MixedVariant,
};
use crate::{Error, Protograph, Result};

/// A parsed ensemble description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleSpec {
    Uncoupled { j: usize, k: usize },
    Chain { j: usize, k: usize, len: usize },
    Loop { j: usize, k: usize, len: usize, h: Option<usize> },
    Square { len: usize },
    Loop48 { style: ConnectionStyle, len: usize, h: Option<usize> },
    Mixed { variant: MixedVariant, len: usize },
}

impl EnsembleSpec {
    pub fn build(&self) -> Result<Protograph> {
        match *self {
            Self::Uncoupled { j, k } => build_uncoupled(j, k),
            Self::Chain { j, k, len } => build_chain(j, k, len),
            Self::Loop { j, k, len, h } => build_loop(j, k, len, h, ConnectionStyle::Full),
            Self::Square { len } => build_square(len),
            Self::Loop48 { style, len, h } => build_loop(4, 8, len, h, style),
            Self::Mixed { variant, len } => build_mixed_loop(variant, len),
        }
    }
}

fn bad(s: &str) -> Error {
    Error::BadSpec(s.to_string())
}

fn number(tok: &str, whole: &str) -> Result<usize> {
    tok.trim().parse().map_err(|_| bad(whole))
}

impl FromStr for EnsembleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad(s))?;
        let mut args: Vec<&str> = rest.split(',').map(str::trim).collect();
        let mut h = None;
        if let Some(last) = args.last() {
            if let Some(v) = last.strip_prefix("h=") {
                h = Some(number(v, s)?);
                args.pop();
            }
        }
        let nums = |n: usize| -> Result<Vec<usize>> {
            if args.len() != n {
                return Err(bad(s));
            }
            args.iter().map(|a| number(a, s)).collect()
        };
        let no_h = |spec: Self| if h.is_some() { Err(bad(s)) } else { Ok(spec) };
        match kind.trim() {
            "uncoupled" => {
                let v = nums(2)?;
                no_h(Self::Uncoupled { j: v[0], k: v[1] })
            }
            "chain" => {
                let v = nums(3)?;
                no_h(Self::Chain { j: v[0], k: v[1], len: v[2] })
            }
            "loop" => {
                let v = nums(3)?;
                Ok(Self::Loop { j: v[0], k: v[1], len: v[2], h })
            }
            "square" => {
                let v = nums(3)?;
                if v[0] != 3 || v[1] != 6 {
                    return Err(bad(s));
                }
                no_h(Self::Square { len: v[2] })
            }
            "loop48" => {
                if args.len() != 2 {
                    return Err(bad(s));
                }
                let style = match args[0] {
                    "A" => ConnectionStyle::Full,
                    "B" => ConnectionStyle::Light,
                    _ => return Err(bad(s)),
                };
                Ok(Self::Loop48 { style, len: number(args[1], s)?, h })
            }
            "mixed" => {
                if args.len() != 2 {
                    return Err(bad(s));
                }
                let variant = match args[0] {
                    "L1" => MixedVariant::L1,
                    "L2" => MixedVariant::L2,
                    _ => return Err(bad(s)),
                };
                no_h(Self::Mixed { variant, len: number(args[1], s)? })
            }
            _ => Err(bad(s)),
        }
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = |h: Option<usize>| h.map(|h| format!(",h={h}")).unwrap_or_default();
        match *self {
            Self::Uncoupled { j, k } => write!(f, "uncoupled:{j},{k}"),
            Self::Chain { j, k, len } => write!(f, "chain:{j},{k},{len}"),
            Self::Loop { j, k, len, h: off } => write!(f, "loop:{j},{k},{len}{}", h(off)),
            Self::Square { len } => write!(f, "square:3,6,{len}"),
            Self::Loop48 { style, len, h: off } => {
                let t = match style {
                    ConnectionStyle::Full => "A",
                    ConnectionStyle::Light => "B",
                };
                write!(f, "loop48:{t},{len}{}", h(off))
            }
            Self::Mixed { variant, len } => {
                let t = match variant {
                    MixedVariant::L1 => "L1",
                    MixedVariant::L2 => "L2",
                };
                write!(f, "mixed:{t},{len}")
            }
        }
    }
}

/// Parse and build in one go.
pub fn build_from_spec(s: &str) -> Result<Protograph> {
    s.parse::<EnsembleSpec>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let cases = [
            "uncoupled:3,6",
            "chain:3,6,12",
            "loop:3,6,15,h=5",
            "loop:3,9,8",
            "square:3,6,16",
            "loop48:A,12",
            "loop48:B,9,h=3",
            "mixed:L1,15",
            "mixed:L2,15",
        ];
        for c in cases {
            let spec: EnsembleSpec = c.parse().unwrap();
            assert_eq!(spec.to_string(), c);
            spec.build().unwrap();
        }
    }

    #[test]
    fn spaces_are_tolerated() {
        let spec: EnsembleSpec = "loop: 3, 6, 15, h=5".parse().unwrap();
        assert_eq!(spec, EnsembleSpec::Loop { j: 3, k: 6, len: 15, h: Some(5) });
    }

    #[test]
    fn rejects_malformed() {
        for c in [
            "",
            "chain",
            "chain:3,6",
            "chain:3,6,x",
            "chain:3,6,12,h=2",
            "square:3,9,16",
            "loop48:C,12",
            "mixed:L3,15",
            "ring:3,6,12",
            "loop:3,6,-1",
        ] {
            assert!(matches!(c.parse::<EnsembleSpec>(), Err(Error::BadSpec(_))), "{c}");
        }
    }

    #[test]
    fn builder_errors_pass_through() {
        assert!(matches!(build_from_spec("loop:3,6,15,h=1"), Err(Error::Geometry(_))));
        assert!(matches!(build_from_spec("uncoupled:3,7"), Err(Error::UnsupportedProfile { .. })));
    }
}
