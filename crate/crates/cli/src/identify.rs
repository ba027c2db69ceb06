use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use transport_core::diagram::{EnumerationOptions, TransportSet, DEFAULT_ENUMERATION_LIMIT};
use transport_core::{parse_diagram, AdmissibilityMode};

use crate::{parse_name_list, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    /// Condition on the transport set only.
    Literal,
    /// Also condition on the exposure, with edges into it removed.
    Interventional,
}

impl From<Mode> for AdmissibilityMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Literal => AdmissibilityMode::Literal,
            Mode::Interventional => AdmissibilityMode::Interventional,
        }
    }
}

/// Find s-admissible transport sets in a selection diagram.
///
/// Without `--check`, lists the minimal s-admissible sets followed by every
/// s-admissible subset of the pool. Exits 2 when no set qualifies.
#[derive(Debug, clap::Args)]
pub struct Args {
    /// Diagram file in the edge-list grammar.
    pub diagram: PathBuf,
    /// Comma-separated candidate variables [default: every pre-treatment node].
    #[arg(long, value_name = "A,B,...")]
    pub pool: Option<String>,
    /// Test one comma-separated set instead of enumerating; exits 2 if it is not s-admissible.
    #[arg(long, value_name = "A,B,...")]
    pub check: Option<String>,
    /// How the exposure enters the independence check.
    #[arg(long, value_enum, default_value = "literal")]
    pub mode: Mode,
    /// Largest pool that may be enumerated.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    pub limit: usize,
}

pub fn run(args: &Args, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&args.diagram)
        .with_context(|| format!("cannot read {}", args.diagram.display()))?;
    let g = parse_diagram(&text).with_context(|| format!("{}", args.diagram.display()))?;
    let mode = AdmissibilityMode::from(args.mode);

    if let Some(check) = &args.check {
        let ts = TransportSet::new(parse_name_list(check));
        return match g.open_selection_trail(&ts, mode)? {
            None => {
                writeln!(out, "{ts} is s-admissible")?;
                Ok(Outcome::Success)
            }
            Some(trail) => {
                writeln!(out, "{ts} is not s-admissible: open path {trail}")?;
                Ok(Outcome::Negative)
            }
        };
    }

    let pool = match &args.pool {
        Some(p) => parse_name_list(p),
        None => g.eligible_pool(),
    };
    let opts = EnumerationOptions { limit: args.limit, mode };
    let all = g.enumerate_s_admissible(&pool, &opts)?;
    writeln!(out, "pool: {}", TransportSet::new(pool.iter().map(String::as_str)))?;
    if all.is_empty() {
        writeln!(out, "no subset of the pool is s-admissible")?;
        return Ok(Outcome::Negative);
    }
    let smallest = all[0].len();
    let minimal: Vec<&TransportSet> = all.iter().take_while(|ts| ts.len() == smallest).collect();
    writeln!(out, "minimal s-admissible sets ({}):", minimal.len())?;
    for ts in &minimal {
        writeln!(out, "  {ts}")?;
    }
    writeln!(out, "s-admissible sets ({}):", all.len())?;
    for ts in &all {
        writeln!(out, "  {ts}")?;
    }
    Ok(Outcome::Success)
}
