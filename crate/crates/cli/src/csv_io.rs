//! Per-step loss CSV: `seed,t,algorithm,instant_loss,cum_loss`.

use std::io::{Read, Write};

use anyhow::{bail, Context};

pub const HEADER: [&str; 5] = ["seed", "t", "algorithm", "instant_loss", "cum_loss"];

/// Per-step losses of one algorithm on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub algorithm: String,
    pub losses: Vec<f64>,
}

impl Trace {
    pub fn total(&self) -> f64 {
        self.losses.iter().sum()
    }

    /// Sum of losses over the 1-based steps `from..=to`.
    pub fn window(&self, from: u64, to: u64) -> f64 {
        self.losses[from as usize - 1..to as usize].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub seed: u64,
    pub t: u64,
    pub algorithm: String,
    pub instant_loss: f64,
    pub cum_loss: f64,
}

/// Plain decimal with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Write traces in the order given, one row per step.
pub fn write_traces<W: Write>(out: W, traces: &[Trace]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for trace in traces {
        let mut cum = 0.0;
        for (t, &l) in (1u64..).zip(&trace.losses) {
            cum += l;
            w.write_record([
                trace.seed.to_string(),
                t.to_string(),
                trace.algorithm.clone(),
                format_sig(l),
                format_sig(cum),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> anyhow::Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        bail!("unexpected CSV header {header:?}");
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let rec = record?;
        let field = |k: usize| rec.get(k).with_context(|| format!("row {}: missing field {k}", i + 1));
        rows.push(Row {
            seed: field(0)?.parse().with_context(|| format!("row {}: seed", i + 1))?,
            t: field(1)?.parse().with_context(|| format!("row {}: t", i + 1))?,
            algorithm: field(2)?.to_string(),
            instant_loss: field(3)?.parse().with_context(|| format!("row {}: loss", i + 1))?,
            cum_loss: field(4)?.parse().with_context(|| format!("row {}: cum_loss", i + 1))?,
        });
    }
    Ok(rows)
}

/// Group rows back into traces, in order of first appearance.
pub fn rows_to_traces(rows: &[Row]) -> anyhow::Result<Vec<Trace>> {
    let mut traces: Vec<Trace> = Vec::new();
    for row in rows {
        let idx = traces
            .iter()
            .position(|tr| tr.seed == row.seed && tr.algorithm == row.algorithm);
        let trace = match idx {
            Some(i) => &mut traces[i],
            None => {
                traces.push(Trace { seed: row.seed, algorithm: row.algorithm.clone(), losses: vec![] });
                traces.last_mut().expect("just pushed")
            }
        };
        if row.t != trace.losses.len() as u64 + 1 {
            bail!("seed {} {}: step {} out of order", row.seed, row.algorithm, row.t);
        }
        trace.losses.push(row.instant_loss);
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(0.5), "0.500000000000");
        assert_eq!(format_sig(123.456), "123.456000000");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn round_trip() {
        let traces = vec![
            Trace { seed: 3, algorithm: "saol".into(), losses: vec![0.25, 0.5] },
            Trace { seed: 3, algorithm: "cbce-an".into(), losses: vec![1.0, 0.0] },
        ];
        let mut buf = Vec::new();
        write_traces(&mut buf, &traces).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("seed,t,algorithm,instant_loss,cum_loss\n3,1,saol,"));
        let rows = read_rows(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].cum_loss, 0.75);
        assert_eq!(rows_to_traces(&rows).unwrap(), traces);
    }
}
