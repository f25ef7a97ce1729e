//! CSV / JSON output. Every file starts with a `#` comment naming the schema,
//! its version, the library version, the parameters and the seed.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactDistribution, GfcTable};
use crate::martingale::{FluctuationSample, TrajectoryRecord};
use crate::params::ModelParams;
use crate::stats::{version_string, ExperimentResult};

pub const SCHEMA_VERSION: u32 = 1;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// `# ep-toolkit <schema> v<N> | ep-core <ver> | alpha=… theta=… | seed=…`
pub fn header_line(schema: &str, params: Option<&ModelParams>, seed: Option<u64>) -> String {
    let mut s = format!("# ep-toolkit {schema} v{SCHEMA_VERSION} | {}", version_string());
    if let Some(p) = params {
        s.push_str(&format!(" | alpha={} theta={}", p.alpha(), p.theta()));
    }
    if let Some(seed) = seed {
        s.push_str(&format!(" | seed={seed}"));
    }
    s
}

fn csv_writer<W: Write>(mut w: W, header: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{header}")?;
    Ok(csv::Writer::from_writer(w))
}

/// Columns `n,k,log_value,sign` for `C(n,k;α)`.
pub fn write_gfc_csv<W: Write>(w: W, table: &GfcTable, params: &ModelParams) -> Result<()> {
    let mut out = csv_writer(w, &header_line("gfc_table", Some(params), None))?;
    out.write_record(["n", "k", "log_value", "sign"])?;
    for n in 1..=table.n_max() {
        for (k, ln) in table.row(n) {
            out.serialize((n, k, ln, 1i8))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Significant digits written for probabilities.
pub const PROB_DIGITS: usize = 12;

/// `x` rounded to `digits` significant digits, printed in shortest round-trip form.
pub fn round_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() || x == 0.0 {
        return x.to_string();
    }
    let v: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    if (1e-5..1e16).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Columns `k,probability`; probabilities carry [`PROB_DIGITS`] significant
/// digits, the log-space evaluation being good to a few ulps less than full precision.
pub fn write_distribution_csv<W: Write>(w: W, dist: &ExactDistribution, params: &ModelParams) -> Result<()> {
    let mut out = csv_writer(w, &header_line("exact_dist_kn", Some(params), None))?;
    out.write_record(["k", "probability"])?;
    for (i, p) in dist.probabilities.iter().enumerate() {
        out.serialize((i + 1, round_sig(*p, PROB_DIGITS)))?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `trajectory_id,n,K,log_b,M,qv_predictable,qv_realized,s_hat`, then
/// `K_r{r},a_tilde_r{r},m_tilde_r{r}` for every tracked `r` (taken from the first record).
pub fn write_trajectories_csv<W: Write>(
    w: W,
    records: &[(u64, TrajectoryRecord)],
    params: &ModelParams,
    seed: u64,
) -> Result<()> {
    let mut out = csv_writer(w, &header_line("trajectory", Some(params), Some(seed)))?;
    let rs: Vec<u64> = records
        .first()
        .map(|(_, r)| r.size_classes.iter().map(|c| c.r).collect())
        .unwrap_or_default();
    let mut head: Vec<String> = [
        "trajectory_id",
        "n",
        "K",
        "log_b",
        "M",
        "qv_predictable",
        "qv_realized",
        "s_hat",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for r in &rs {
        head.extend([format!("K_r{r}"), format!("a_tilde_r{r}"), format!("m_tilde_r{r}")]);
    }
    out.write_record(&head)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (id, rec) in records {
        let mut row = vec![
            id.to_string(),
            rec.n.to_string(),
            rec.k.to_string(),
            rec.log_b.to_string(),
            opt(rec.m),
            rec.qv_predictable.to_string(),
            rec.qv_realized.to_string(),
            opt(rec.s_hat),
        ];
        for &r in &rs {
            match rec.size_class(r) {
                Some(c) => row.extend([c.k_r.to_string(), c.a_tilde.to_string(), c.m_tilde.to_string()]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonLine<'a> {
    trajectory_id: u64,
    #[serde(flatten)]
    record: &'a TrajectoryRecord,
}

/// One JSON object per line, after the header comment.
pub fn write_trajectories_jsonl<W: Write>(
    mut w: W,
    records: &[(u64, TrajectoryRecord)],
    params: &ModelParams,
    seed: u64,
) -> Result<()> {
    writeln!(w, "{}", header_line("trajectory", Some(params), Some(seed)))?;
    for (id, record) in records {
        serde_json::to_writer(
            &mut w,
            &JsonLine {
                trajectory_id: *id,
                record,
            },
        )?;
        writeln!(w)?;
    }
    Ok(())
}

/// Columns `trajectory_id,kind,n,r,value,valid_flag`.
pub fn write_fluctuations_csv<W: Write>(
    w: W,
    samples: &[(u64, FluctuationSample)],
    params: &ModelParams,
    seed: u64,
) -> Result<()> {
    let mut out = csv_writer(w, &header_line("fluctuation", Some(params), Some(seed)))?;
    out.write_record(["trajectory_id", "kind", "n", "r", "value", "valid_flag"])?;
    for (id, s) in samples {
        out.serialize((id, s.kind.name(), s.n, s.r, s.value, u8::from(s.valid)))?;
    }
    out.flush()?;
    Ok(())
}

/// Full result with configuration and metadata.
pub fn write_result_json<W: Write>(mut w: W, result: &ExperimentResult) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema: &'static str,
        schema_version: u32,
        #[serde(flatten)]
        result: &'a ExperimentResult,
        passed: bool,
    }
    let doc = Doc {
        schema: "experiment",
        schema_version: SCHEMA_VERSION,
        result,
        passed: result.passed(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// One row per compared quantity.
pub fn write_result_csv<W: Write>(w: W, result: &ExperimentResult) -> Result<()> {
    let c = &result.config;
    let mut out = csv_writer(w, &header_line("experiment", Some(&c.params), Some(c.seed)))?;
    for row in &result.rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_dist_kn, gfc_table};
    use crate::partition::simulate;

    fn p() -> ModelParams {
        ModelParams::new(0.5, 0.0).unwrap()
    }

    fn text(f: impl FnOnce(&mut Vec<u8>)) -> String {
        let mut buf = Vec::new();
        f(&mut buf);
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn distribution_csv() {
        let d = exact_dist_kn(&p(), 3).unwrap();
        let s = text(|b| write_distribution_csv(b, &d, &p()).unwrap());
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# ep-toolkit exact_dist_kn v1"));
        assert_eq!(lines[1], "k,probability");
        assert_eq!(lines[2], "1,0.375");
        assert_eq!(lines[4], "3,0.25");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(0.37499999999999933, 12), "0.375");
        assert_eq!(round_sig(1e-300, 12), "1e-300");
        assert_eq!(round_sig(0.123456789, 3), "0.123");
        assert_eq!(round_sig(0.0, 12), "0");
    }

    #[test]
    fn gfc_csv() {
        let t = gfc_table(3, &p()).unwrap();
        let s = text(|b| write_gfc_csv(b, &t, &p()).unwrap());
        assert_eq!(s.lines().count(), 2 + 6);
        assert!(s.lines().nth(2).unwrap().starts_with("1,1,"));
    }

    #[test]
    fn trajectory_outputs_echo_seed() {
        let recs = simulate(p(), &[10, 100], 77, &[1, 2]).unwrap();
        let tagged: Vec<_> = recs.into_iter().map(|r| (0u64, r)).collect();
        let s = text(|b| write_trajectories_csv(b, &tagged, &p(), 77).unwrap());
        assert!(s.lines().next().unwrap().ends_with("seed=77"));
        assert!(s.lines().nth(1).unwrap().contains("K_r2"));
        let j = text(|b| write_trajectories_jsonl(b, &tagged, &p(), 77).unwrap());
        let v: serde_json::Value = serde_json::from_str(j.lines().nth(1).unwrap()).unwrap();
        assert_eq!(v["n"], 10);
        assert_eq!(v["trajectory_id"], 0);
    }
}
