use std::path::PathBuf;

use clap::Args;
use graphcam::error::{Error, Result};
use graphcam::train::CvReport;

#[derive(Args)]
pub struct ReportArgs {
    /// Results directory holding metrics.json and saliency.csv
    #[arg(long)]
    pub results: PathBuf,
}

struct SaliencyRow {
    node: usize,
    activations: Vec<f64>,
    topk_count: u64,
}

fn parse_saliency_csv(text: &str, path: &PathBuf) -> Result<Vec<SaliencyRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: path.clone(),
        message: "empty saliency file".into(),
    })?;
    let columns = header.split(',').count();
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns {
            return Err(Error::Parse {
                path: path.clone(),
                message: format!("row {line_no} has {} cells, expected {columns}", cells.len()),
            });
        }
        let parse = |cell: &str| -> Result<f64> {
            cell.parse().map_err(|e| Error::Parse {
                path: path.clone(),
                message: format!("row {line_no}: {e}"),
            })
        };
        rows.push(SaliencyRow {
            node: parse(cells[0])? as usize,
            activations: cells[1..columns - 1]
                .iter()
                .map(|c| parse(c))
                .collect::<Result<_>>()?,
            topk_count: parse(cells[columns - 1])? as u64,
        });
    }
    Ok(rows)
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let metrics_path = args.results.join("metrics.json");
    let metrics_text = super::read_text(&metrics_path, "metrics")?;
    let report: CvReport = serde_json::from_str(&metrics_text).map_err(|e| Error::Parse {
        path: metrics_path,
        message: e.to_string(),
    })?;

    println!("Cross-validation accuracy");
    println!("{:>4}  {:>10}  {:>8}", "run", "accuracy", "std");
    for run in &report.runs {
        println!("{:>4}  {:>10.4}  {:>8.4}", run.run + 1, run.mean, run.std);
    }
    let mean_std = if report.runs.is_empty() {
        0.0
    } else {
        report.runs.iter().map(|r| r.std).sum::<f64>() / report.runs.len() as f64
    };
    println!("{:>4}  {:>10.4}  {:>8.4}", "avg", report.grand_mean, mean_std);

    let saliency_path = args.results.join("saliency.csv");
    let saliency_text = super::read_text(&saliency_path, "saliency table")?;
    let mut rows = parse_saliency_csv(&saliency_text, &saliency_path)?;
    rows.sort_by(|a, b| b.topk_count.cmp(&a.topk_count).then(a.node.cmp(&b.node)));

    println!();
    println!("Salient nodes, most important first (by top-k occurrences)");
    let classes = rows.first().map(|r| r.activations.len()).unwrap_or(0);
    let mut header = format!("{:>4}  {:>10}", "node", "topk");
    for class in 0..classes {
        header.push_str(&format!("  {:>12}", format!("act_class{class}")));
    }
    println!("{header}");
    for row in &rows {
        let mut line = format!("{:>4}  {:>10}", row.node, row.topk_count);
        for activation in &row.activations {
            line.push_str(&format!("  {activation:>12.4}"));
        }
        println!("{line}");
    }
    Ok(())
}
