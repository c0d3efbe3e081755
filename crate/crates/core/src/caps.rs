//! Size limits for exact computations, overridable through `ERGOLAB_CAP`.
//!
//! `ERGOLAB_CAP` is either a bare integer (the dimension cap) or a comma
//! separated list of `dim=N`, `levels=N`, `stages=N`.

use crate::error::{invalid, Result};

pub const ENV_VAR: &str = "ERGOLAB_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest `2^w` for exact rank computations.
    pub max_dimension: usize,
    /// Largest tower height a rank-one construction may reach.
    pub max_levels: u64,
    /// Largest number of stages a rank-one construction may reach.
    pub max_stages: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_dimension: 4096, max_levels: 1 << 22, max_stages: 64 }
    }
}

impl Caps {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut caps = Caps::default();
        let spec = spec.trim();
        if let Ok(n) = spec.parse::<usize>() {
            caps.max_dimension = n;
            return Ok(caps);
        }
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(format!("bad cap entry `{item}`")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad cap value in `{item}`")))?;
            match key.trim() {
                "dim" => caps.max_dimension = value as usize,
                "levels" => caps.max_levels = value,
                "stages" => caps.max_stages = value as usize,
                other => return Err(invalid(format!("unknown cap `{other}`"))),
            }
        }
        Ok(caps)
    }

    /// Defaults, overridden by the environment when `ERGOLAB_CAP` is set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Caps::parse("8192").unwrap().max_dimension, 8192);
        let c = Caps::parse("levels=100, stages=3").unwrap();
        assert_eq!((c.max_levels, c.max_stages, c.max_dimension), (100, 3, 4096));
        assert!(Caps::parse("foo=1").is_err());
        assert!(Caps::parse("dim=x").is_err());
    }
}
