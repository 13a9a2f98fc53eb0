//! Table sweeps behind `scloop reproduce`.

use anyhow::Result;
use clap::ValueEnum;
use scloop_core::de_awgn::{threshold_awgn, AwgnDeConfig, AwgnSearch};
use scloop_core::de_bec::{threshold_bec, BecDeConfig};
use scloop_core::spec::EnsembleSpec;
use scloop_core::wenum::{min_distance_growth, GrowthConfig};
use serde::Serialize;

use crate::cli::GlobalOpts;
use crate::format::{num, Table};
use crate::parallel::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    /// (3,6) loops and chains at L = 12, 15, 18 on the BEC.
    Table1,
    /// The same ensembles on the AWGN channel.
    Table2,
    /// Squares against chains of equal rate on the BEC.
    Table3,
    /// (3,9) loops and chains on the BEC.
    Table5,
    /// Loop L(3,6,15) over connection offsets h = 2..9.
    Table6,
    /// Minimum distance growth rates of squares and loops.
    Growth,
}

impl TableId {
    pub fn name(&self) -> &'static str {
        match self {
            TableId::Table1 => "table1",
            TableId::Table2 => "table2",
            TableId::Table3 => "table3",
            TableId::Table5 => "table5",
            TableId::Table6 => "table6",
            TableId::Growth => "growth",
        }
    }

    /// Ensemble specs in table order.
    pub fn ensembles(&self) -> Vec<String> {
        let pairs = |a: &str, b: &str, ls: &[usize]| -> Vec<String> {
            ls.iter()
                .flat_map(|l| [format!("{a}{l}"), format!("{b}{l}")])
                .collect()
        };
        match self {
            TableId::Table1 | TableId::Table2 => pairs("loop:3,6,", "chain:3,6,", &[12, 15, 18]),
            TableId::Table3 => [8, 12, 16, 20, 24]
                .iter()
                .zip([6, 9, 12, 15, 18])
                .flat_map(|(s, c)| [format!("square:3,6,{s}"), format!("chain:3,6,{c}")])
                .collect(),
            TableId::Table5 => pairs("loop:3,9,", "chain:3,9,", &[6, 8, 12, 100]),
            TableId::Table6 => (2..=9).map(|h| format!("loop:3,6,15,h={h}")).collect(),
            TableId::Growth => (8..=24)
                .step_by(2)
                .map(|l| format!("square:3,6,{l}"))
                .chain([12, 15, 18].iter().map(|l| format!("loop:3,6,{l}")))
                .collect(),
        }
    }
}

/// Runs one table sweep, one ensemble per task.
pub fn reproduce(table: TableId, g: &GlobalOpts, workers: usize) -> Result<Table> {
    let specs = table.ensembles();
    let rows: Vec<Result<Vec<String>>> = par_map(workers, &specs, |s| {
        let p = s.parse::<EnsembleSpec>()?.build()?;
        let rate = num(p.design_rate()?.value());
        let value = match table {
            TableId::Table2 => {
                let search = AwgnSearch {
                    tol_db: g.tol.unwrap_or(0.01),
                    ..AwgnSearch::default()
                };
                let cfg = AwgnDeConfig {
                    grid: g.grid,
                    ..AwgnDeConfig::default()
                };
                vec![num(threshold_awgn(&p, &search, &cfg)?.ebn0_star_db)]
            }
            TableId::Growth => {
                let cfg = GrowthConfig {
                    seed: g.seed,
                    ..GrowthConfig::default()
                };
                let m = min_distance_growth(&p, &cfg)?;
                vec![num(m.delta_min), m.asymptotically_good.to_string()]
            }
            _ => {
                let t = threshold_bec(&p, g.tol.unwrap_or(1e-4), &BecDeConfig::default());
                vec![num(t.epsilon_star)]
            }
        };
        let mut row = vec![s.clone(), p.name().to_string(), rate];
        row.extend(value);
        Ok(row)
    })?;
    let header: &[&str] = match table {
        TableId::Table2 => &["spec", "ensemble", "rate", "ebn0_star_db"],
        TableId::Growth => &["spec", "ensemble", "rate", "delta_min", "asymptotically_good"],
        _ => &["spec", "ensemble", "rate", "epsilon_star"],
    };
    let mut t = Table::new(header);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_spec_builds() {
        for t in TableId::value_variants() {
            for s in t.ensembles() {
                s.parse::<EnsembleSpec>().unwrap().build().unwrap();
            }
        }
    }
}
