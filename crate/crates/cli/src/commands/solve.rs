//! `solve`: one ladder run, streamed as `rungs.jsonl` plus `summary.csv`.

use std::fs::File;
use std::io::{BufWriter, Write};

use ritzkit::solve::{find_case, gamma_ladder_with};
use ritzkit::RungReport;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::output::{num, opt, Table, NA};
use crate::Failure;

pub const SUMMARY_HEADER: [&str; 11] = [
    "case", "rung", "width", "lambda", "delta", "steps", "loss", "l2_rel", "h1_rel", "gap",
    "seconds",
];

/// JSON record of one rung; wall time is dropped unless `timing` is set.
pub fn rung_record(report: &RungReport, timing: bool) -> serde_json::Value {
    let mut value = serde_json::to_value(report).expect("report serializes");
    let map = value.as_object_mut().expect("object");
    if !timing {
        map.insert("seconds".into(), serde_json::Value::Null);
    }
    map.insert("schema".into(), SCHEMA_VERSION.into());
    value
}

pub fn summary_row(report: &RungReport, timing: bool) -> Vec<String> {
    vec![
        report.case.clone(),
        report.rung.to_string(),
        report.width.to_string(),
        num(report.lambda),
        num(report.delta),
        report.steps.to_string(),
        num(report.loss),
        num(report.l2_error),
        num(report.h1_error),
        opt(report.quasi_min_gap),
        if timing { num(report.seconds) } else { NA.into() },
    ]
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let section = &config.solve;
    let case = find_case::<f64>(&section.case)?;
    let ladder = section.ladder.as_ref().expect("resolved before running");
    let timing = section.timing;
    let mut jsonl = BufWriter::new(File::create(config.out.join("rungs.jsonl"))?);
    let mut summary = Table::create(&config.out.join("summary.csv"), &SUMMARY_HEADER)?;
    let mut write_error: Option<Failure> = None;

    let outcome = gamma_ladder_with(&case, ladder, |report| {
        println!(
            "rung {}: width {} lambda {} steps {} loss {:.5} l2_rel {:.3e} h1_rel {:.3e}",
            report.rung,
            report.width,
            report.lambda,
            report.steps,
            report.loss,
            report.l2_error,
            report.h1_error
        );
        if write_error.is_some() {
            return;
        }
        let line = serde_json::to_string(&rung_record(report, timing)).expect("json");
        let written = writeln!(jsonl, "{line}")
            .and_then(|_| jsonl.flush())
            .map_err(Failure::from)
            .and_then(|_| summary.row(summary_row(report, timing)));
        if let Err(e) = written {
            write_error = Some(e);
        }
    });
    summary.finish()?;
    if let Some(e) = write_error {
        return Err(e);
    }
    let outcome = outcome?;
    std::fs::write(config.out.join("network.json"), outcome.params.to_json()?)?;
    Ok(())
}
