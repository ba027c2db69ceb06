use std::io::Write;

use transport_core::data::ToyModel;
use transport_core::estimate::{discrete_transport, empirical_tables, DiscreteTransportResult};

use crate::Outcome;

/// Transport risks in the binary toy example with {B, G} and with {B} alone.
///
/// The first block uses the model's exact probabilities, the second a sample
/// of `--n` rows drawn with `--seed`.
#[derive(Debug, clap::Args)]
pub struct Args {
    /// Rows in the sampled block (at least 100).
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(100..))]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn row(out: &mut dyn Write, label: &str, r: &DiscreteTransportResult) -> std::io::Result<()> {
    let rr = r.risk_ratio.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"));
    writeln!(out, "{label:<26} {:>10.3} {:>10.3} {:>9.3} {:>7}", r.risks[0], r.risks[1], r.risk_difference, rr)
}

fn header(out: &mut dyn Write, title: &str) -> std::io::Result<()> {
    writeln!(out, "{title}")?;
    writeln!(out, "{:<26} {:>10} {:>10} {:>9} {:>7}", "", "P(Y=1|Z=0)", "P(Y=1|Z=1)", "RD", "RR")
}

fn from_risks(risks: [f64; 2]) -> DiscreteTransportResult {
    let risk_ratio = (risks[0] != 0.0).then(|| risks[1] / risks[0]);
    DiscreteTransportResult { risks, risk_difference: risks[1] - risks[0], risk_ratio }
}

fn arm_means(y: &[f64], z: &[u8], rows: &[usize]) -> Option<[f64; 2]> {
    let mut sums = [(0.0, 0usize); 2];
    for &i in rows {
        let arm = &mut sums[usize::from(z[i])];
        arm.0 += y[i];
        arm.1 += 1;
    }
    (sums[0].1 > 0 && sums[1].1 > 0).then(|| sums.map(|(s, n)| s / n as f64))
}

pub fn run(args: &Args, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let model = ToyModel::default();
    let source_risks = [0u8, 1].map(|z| {
        let mut total = 0.0;
        for b in 0..=1u8 {
            for g in 0..=1u8 {
                let pb = if b == 1 { model.p_b[1] } else { 1.0 - model.p_b[1] };
                let pg = if g == 1 { model.p_g[1] } else { 1.0 - model.p_g[1] };
                total += model.risk(z, b, g) * pb * pg;
            }
        }
        total
    });
    let (src, tgt) = model.tables_bg();
    let via_bg = discrete_transport(&src, &tgt)?;
    let (src, tgt) = model.tables_b();
    let via_b = discrete_transport(&src, &tgt)?;

    header(out, "exact probabilities")?;
    row(out, "Source", &from_risks(source_risks))?;
    row(out, "Target", &from_risks(model.target_risks()))?;
    row(out, "Transported using {B, G}", &via_bg)?;
    row(out, "Transported using {B}", &via_b)?;

    let n = usize::try_from(args.n)?;
    let data = model.sample(n, args.seed)?;
    let (source, target) = data.split_population()?;
    writeln!(out)?;
    header(out, &format!("sample of {n} rows, seed {}", args.seed))?;
    for (label, view) in [("Source", &source), ("Target", &target)] {
        match arm_means(data.y(), data.z(), view.rows()) {
            Some(risks) => row(out, label, &from_risks(risks))?,
            None => writeln!(out, "{label:<26} an arm is empty")?,
        }
    }
    for (label, strata) in [("Transported using {B, G}", &["B", "G"][..]), ("Transported using {B}", &["B"][..])] {
        let strata: Vec<String> = strata.iter().map(|s| s.to_string()).collect();
        let (src, tgt) = empirical_tables(&data, &strata)?;
        match discrete_transport(&src, &tgt) {
            Ok(r) => row(out, label, &r)?,
            Err(e) => writeln!(out, "{label:<26} not estimable: {e}")?,
        }
    }
    Ok(Outcome::Success)
}
