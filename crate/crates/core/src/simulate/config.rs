use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::SimError;
use crate::data::SIM_COVARIATES;
use crate::estimate::{CiMethod, Expansion, MAX_TRANSPORT_SET};

/// A transport set with a display name such as `TS8`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSet {
    pub name: String,
    pub members: Vec<String>,
}

impl NamedSet {
    pub fn new(name: &str, members: &[&str]) -> Self {
        Self { name: name.to_string(), members: members.iter().map(|m| m.to_string()).collect() }
    }
}

/// The eleven transport sets of the experiment; `TS11` omits MSTS and is the
/// inadmissible negative control.
pub fn standard_sets() -> Vec<NamedSet> {
    vec![
        NamedSet::new("TS1", &["MSTS"]),
        NamedSet::new("TS2", &["MSTS", "W_a"]),
        NamedSet::new("TS3", &["MSTS", "W_b"]),
        NamedSet::new("TS4", &["MSTS", "W_c"]),
        NamedSet::new("TS5", &["MSTS", "W_d"]),
        NamedSet::new("TS6", &["MSTS", "W_e"]),
        NamedSet::new("TS7", &["MSTS", "W_a", "W_b"]),
        NamedSet::new("TS8", &["MSTS", "W_a", "W_c", "W_d"]),
        NamedSet::new("TS9", &["MSTS", "W_c", "W_d"]),
        NamedSet::new("TS10", &["MSTS", "W_a", "W_b", "W_c", "W_d", "W_e"]),
        NamedSet::new("TS11", &["W_c"]),
    ]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WorkerCount {
    /// One worker per available core.
    #[default]
    Auto,
    Fixed(usize),
}

impl WorkerCount {
    pub fn resolve(self) -> usize {
        match self {
            WorkerCount::Auto => std::thread::available_parallelism().map_or(1, usize::from),
            WorkerCount::Fixed(n) => n,
        }
    }
}

impl fmt::Display for WorkerCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkerCount::Auto => f.write_str("auto"),
            WorkerCount::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for WorkerCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(WorkerCount::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(WorkerCount::Fixed(n)),
            _ => Err(format!("expected \"auto\" or a positive integer, got `{s}`")),
        }
    }
}

impl Serialize for WorkerCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            WorkerCount::Auto => serializer.serialize_str("auto"),
            WorkerCount::Fixed(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for WorkerCount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(i64),
            Name(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Count(n) if n >= 1 => Ok(WorkerCount::Fixed(n as usize)),
            Raw::Count(n) => Err(de::Error::custom(format!("worker count must be positive, got {n}"))),
            Raw::Name(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub models: Vec<u8>,
    pub transport_sets: Vec<NamedSet>,
    pub replicates: usize,
    pub n_per_replicate: usize,
    pub n_boot: usize,
    pub master_seed: u64,
    pub workers: WorkerCount,
    pub ci: CiMethod,
    pub expansion: Expansion,
}

impl Default for SimConfig {
    /// Desk scale: 500 replicates of 5000 rows with 200 bootstrap samples.
    fn default() -> Self {
        Self {
            models: vec![1, 2, 3],
            transport_sets: standard_sets(),
            replicates: 500,
            n_per_replicate: 5000,
            n_boot: 200,
            master_seed: 2021,
            workers: WorkerCount::Auto,
            ci: CiMethod::Wald,
            expansion: Expansion::Full,
        }
    }
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::InvalidConfig { key: key.into(), message: message.into() }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.models.is_empty() {
            return Err(invalid("models", "at least one model is required"));
        }
        for (i, &m) in self.models.iter().enumerate() {
            if !(1..=3).contains(&m) {
                return Err(invalid(format!("models[{i}]"), format!("model must be 1, 2 or 3, got {m}")));
            }
            if self.models[..i].contains(&m) {
                return Err(invalid(format!("models[{i}]"), format!("model {m} listed twice")));
            }
        }
        if self.transport_sets.is_empty() {
            return Err(invalid("transport_sets", "at least one transport set is required"));
        }
        for (i, set) in self.transport_sets.iter().enumerate() {
            let key = format!("transport_sets[{i}]");
            if set.name.trim().is_empty() {
                return Err(invalid(format!("{key}.name"), "name must not be empty"));
            }
            if self.transport_sets[..i].iter().any(|s| s.name == set.name) {
                return Err(invalid(format!("{key}.name"), format!("duplicate name `{}`", set.name)));
            }
            if set.members.len() > MAX_TRANSPORT_SET {
                return Err(invalid(format!("{key}.members"), format!("at most {MAX_TRANSPORT_SET} members")));
            }
            for (j, member) in set.members.iter().enumerate() {
                if !SIM_COVARIATES.contains(&member.as_str()) {
                    return Err(invalid(
                        format!("{key}.members[{j}]"),
                        format!("`{member}` is not one of {}", SIM_COVARIATES.join(", ")),
                    ));
                }
                if set.members[..j].contains(member) {
                    return Err(invalid(format!("{key}.members[{j}]"), format!("`{member}` listed twice")));
                }
            }
        }
        if self.replicates < 2 {
            return Err(invalid("replicates", format!("must be at least 2, got {}", self.replicates)));
        }
        if self.n_per_replicate < 100 {
            return Err(invalid("n_per_replicate", format!("must be at least 100, got {}", self.n_per_replicate)));
        }
        if self.n_boot < 2 {
            return Err(invalid("n_boot", format!("must be at least 2, got {}", self.n_boot)));
        }
        if self.workers == WorkerCount::Fixed(0) {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.transport_sets.len(), 11);
        assert_eq!(c.transport_sets[9].members.len(), 6);
    }

    #[test]
    fn validation_names_the_key() {
        let mut c = SimConfig { replicates: 1, ..SimConfig::default() };
        let err = c.validate().unwrap_err();
        assert!(matches!(err, SimError::InvalidConfig { ref key, .. } if key == "replicates"), "{err}");
        c.replicates = 10;
        c.transport_sets[2].members.push("W_z".into());
        let err = c.validate().unwrap_err();
        assert!(matches!(err, SimError::InvalidConfig { ref key, .. } if key == "transport_sets[2].members[2]"));
        c.transport_sets = standard_sets();
        c.models = vec![1, 4];
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig { ref key, .. }) if key == "models[1]"));
    }

    #[test]
    fn worker_count_parsing() {
        assert_eq!("auto".parse::<WorkerCount>().unwrap(), WorkerCount::Auto);
        assert_eq!("4".parse::<WorkerCount>().unwrap(), WorkerCount::Fixed(4));
        assert!("0".parse::<WorkerCount>().is_err());
        assert!("many".parse::<WorkerCount>().is_err());
    }
}
