//! Monte-Carlo sweeps over one config axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use super::race::{simulate, RaceSummary};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Share of races in which car 0 completed at least one overtake.
    pub p_overtake: f64,
    /// Share of races in which car 1 held at least one block and car 0
    /// never completed an overtake.
    pub p_defense: f64,
    pub n: u32,
}

fn overtook(s: &RaceSummary) -> bool {
    s.cars[0].counters.n_ot3 > 0
}

fn defended(s: &RaceSummary) -> bool {
    s.cars[1].counters.n_df3 > 0 && !overtook(s)
}

/// Runs every `(value, seed)` pair; seeds are `base.seed + k`. Rows follow
/// the order of `values`.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let jobs: Vec<(usize, u64)> =
        (0..sweep.values.len()).flat_map(|v| (0..u64::from(sweep.seeds_per_value)).map(move |k| (v, k))).collect();
    let results: Vec<(usize, bool, bool)> = jobs
        .par_iter()
        .map(|&(v, k)| {
            let mut cfg = sweep.base.with_field(&sweep.axis, sweep.values[v])?;
            cfg.seed = sweep.base.seed.wrapping_add(k);
            let s = simulate(&cfg)?.summary;
            Ok((v, overtook(&s), defended(&s)))
        })
        .collect::<Result<_>>()?;
    let n = sweep.seeds_per_value;
    Ok(sweep
        .values
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let mine = results.iter().filter(|r| r.0 == v);
            let (o, d) = mine.fold((0u32, 0u32), |(o, d), r| (o + u32::from(r.1), d + u32::from(r.2)));
            SweepRow { value, p_overtake: f64::from(o) / f64::from(n), p_defense: f64::from(d) / f64::from(n), n }
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,p_overtake,p_defense,n\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.value, r.p_overtake, r.p_defense, r.n));
    }
    out
}

/// Kendall rank correlation (tau-a); ties contribute zero.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "kendall_tau needs paired samples");
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut score = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            score += ((xs[j] - xs[i]) * (ys[j] - ys[i])).signum() * f64::from(u8::from(xs[j] != xs[i] && ys[j] != ys[i]));
        }
    }
    score / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]), 0.0);
        assert!((kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let rows = [SweepRow { value: 40.0, p_overtake: 1.0, p_defense: 0.0, n: 1 }];
        assert_eq!(sweep_csv(&rows), "value,p_overtake,p_defense,n\n40,1,0,1\n");
    }
}
