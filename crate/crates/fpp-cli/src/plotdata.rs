//! Turn a run directory's CSV artifacts into gnuplot-ready two/three
//! column files plus a text summary of fitted exponents and slopes.

use std::fmt::Write as _;
use std::path::Path;

use fpp_core::stats::ols_fit;

use crate::errors::{CliError, CliResult};
use crate::experiments::{
    CONCENTRATION_HEADER, ORIENTED_HEADER, PC_HEADER, RESULTS_HEADER, SKELETON_HEADER,
    TRUNC_HEADER,
};
use crate::output::{fmt_f64, OutDir};

/// CSV file as header + string rows.
struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn load(dir: &Path, name: &str) -> CliResult<Option<Table>> {
        let path = dir.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => CliError::io(path.display().to_string(), io),
                other => CliError::Format(format!("{name}: {other:?}")),
            })?;
        let mut records = Vec::new();
        for record in reader.records() {
            let record = record
                .map_err(|e| CliError::Format(format!("{name}: unreadable row: {e}")))?;
            records.push(record.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        }
        if records.is_empty() {
            return Err(CliError::Format(format!("{name}: empty file, expected a header")));
        }
        let header = records.remove(0);
        Ok(Some(Table { name: name.to_string(), header, rows: records }))
    }

    /// Enforce the expected column layout; a wrong or truncated header is
    /// a format error.
    fn require_columns(&self, expected: &[&str]) -> CliResult<()> {
        let missing: Vec<&str> = expected
            .iter()
            .filter(|want| !self.header.iter().any(|h| h == *want))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Format(format!(
                "{}: missing columns {missing:?} (header is {:?})",
                self.name, self.header
            )));
        }
        Ok(())
    }

    fn col(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Format(format!("{}: missing column '{name}'", self.name)))
    }

    fn f64_at(&self, row: &[String], idx: usize) -> CliResult<f64> {
        let raw = row.get(idx).map(|s| s.as_str()).unwrap_or("");
        raw.parse::<f64>().map_err(|_| {
            CliError::Format(format!(
                "{}: cannot read '{raw}' in column '{}' as a number",
                self.name, self.header[idx]
            ))
        })
    }
}

/// Pull `key=value` out of a results-CSV extra cell.
fn extra_field<'a>(extra: &'a str, key: &str) -> Option<&'a str> {
    extra
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn dat(lines: &[Vec<f64>]) -> String {
    let mut text = String::new();
    for line in lines {
        let cells: Vec<String> = line.iter().map(|&v| fmt_f64(v)).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    text
}

pub fn emit(dir: &Path) -> CliResult<()> {
    if !dir.is_dir() {
        return Err(CliError::io(
            dir.display().to_string(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "run directory not found"),
        ));
    }
    let out = OutDir::new(dir.to_path_buf());
    let mut summary = String::new();
    let mut any = false;

    if let Some(table) = Table::load(dir, "results.csv")? {
        any = true;
        results_plots(&table, dir, &out, &mut summary)?;
    }
    if let Some(table) = Table::load(dir, "concentration.csv")? {
        any = true;
        table.require_columns(&CONCENTRATION_HEADER)?;
        let (cu, ct) = (table.col("u")?, table.col("tail")?);
        let lines: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| Ok(vec![table.f64_at(r, cu)?, table.f64_at(r, ct)?]))
            .collect::<CliResult<_>>()?;
        out.write_text("tail_vs_u.dat", &dat(&lines))?;
        if let Some(last) = lines.last() {
            let _ = writeln!(summary, "deviation tail at u={}: {}", fmt_f64(last[0]), fmt_f64(last[1]));
        }
    }
    if let Some(table) = Table::load(dir, "coupling.csv")? {
        any = true;
        table.require_columns(&TRUNC_HEADER)?;
        let (cn, cp) = (table.col("n")?, table.col("p_neq")?);
        let lines: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| Ok(vec![table.f64_at(r, cn)?, table.f64_at(r, cp)?]))
            .collect::<CliResult<_>>()?;
        out.write_text("coupling_vs_n.dat", &dat(&lines))?;
        let ps: Vec<f64> = lines.iter().map(|l| l[1]).collect();
        let monotone = ps.windows(2).all(|w| w[1] <= w[0]);
        let _ = writeln!(
            summary,
            "coupling p_neq across n: [{}] — {}",
            ps.iter().map(|&p| fmt_f64(p)).collect::<Vec<_>>().join(", "),
            if monotone { "nonincreasing" } else { "not monotone" }
        );
    }
    if let Some(table) = Table::load(dir, "expectation_gap.csv")? {
        any = true;
        table.require_columns(&TRUNC_HEADER)?;
        let (cn, cg) = (table.col("n")?, table.col("gap")?);
        let lines: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| Ok(vec![table.f64_at(r, cn)?, table.f64_at(r, cg)?]))
            .collect::<CliResult<_>>()?;
        out.write_text("expectation_gap_vs_n.dat", &dat(&lines))?;
        if let Some(worst) = lines.iter().map(|l| l[1]).fold(None::<f64>, |a, g| {
            Some(a.map_or(g, |a| a.max(g)))
        }) {
            let _ = writeln!(summary, "largest expectation gap: {}", fmt_f64(worst));
        }
    }
    if let Some(table) = Table::load(dir, "pc.csv")? {
        any = true;
        table.require_columns(&PC_HEADER)?;
        let (cp, cc) = (table.col("p")?, table.col("crossing_prob")?);
        let lines: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| Ok(vec![table.f64_at(r, cp)?, table.f64_at(r, cc)?]))
            .collect::<CliResult<_>>()?;
        out.write_text("crossing_vs_p.dat", &dat(&lines))?;
        if let Some(last) = lines.last() {
            let _ = writeln!(summary, "pc estimate row: p={}", fmt_f64(last[0]));
        }
    }
    for name in ["oriented.csv", "vec_pc.csv"] {
        if let Some(table) = Table::load(dir, name)? {
            any = true;
            table.require_columns(&ORIENTED_HEADER)?;
            let (cq, cs) = (table.col("q")?, table.col("survival")?);
            let lines: Vec<Vec<f64>> = table
                .rows
                .iter()
                .map(|r| Ok(vec![table.f64_at(r, cq)?, table.f64_at(r, cs)?]))
                .collect::<CliResult<_>>()?;
            let stem = name.trim_end_matches(".csv");
            out.write_text(&format!("{stem}_survival_vs_q.dat"), &dat(&lines))?;
            let _ = writeln!(summary, "{stem}: {} rows of (q, survival)", lines.len());
        }
    }
    if !any {
        return Err(CliError::Format(format!(
            "{} holds no results CSV to plot",
            dir.display()
        )));
    }
    print!("{summary}");
    let path = out.write_text("plot_summary.txt", &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Plots derived from the generic results table, dispatched on the
/// experiment column.
fn results_plots(
    table: &Table,
    dir: &Path,
    out: &OutDir,
    summary: &mut String,
) -> CliResult<()> {
    table.require_columns(&RESULTS_HEADER)?;
    let experiment = table
        .rows
        .first()
        .and_then(|r| r.first())
        .cloned()
        .ok_or_else(|| CliError::Format("results.csv: no data rows".to_string()))?;
    let (cn, cmean, cvar, cdir, cextra) = (
        table.col("n")?,
        table.col("mean")?,
        table.col("var")?,
        table.col("xi_or_theta")?,
        table.col("extra")?,
    );
    match experiment.as_str() {
        "estimate-mu" => {
            let lines: Vec<Vec<f64>> = table
                .rows
                .iter()
                .map(|r| {
                    let n = table.f64_at(r, cn)?;
                    Ok(vec![n, table.f64_at(r, cmean)? / n])
                })
                .collect::<CliResult<_>>()?;
            out.write_text("mu_ratio_vs_n.dat", &dat(&lines))?;
            if let Some(best) = lines
                .iter()
                .map(|l| l[1])
                .min_by(|a, b| a.total_cmp(b))
            {
                let _ = writeln!(summary, "estimate-mu: smallest mean/n ratio = {}", fmt_f64(best));
            }
        }
        "convergence-gap" => {
            let mut loglog = Vec::new();
            let mut total = 0usize;
            for r in &table.rows {
                total += 1;
                let extra = r.get(cextra).map(|s| s.as_str()).unwrap_or("");
                let gap: f64 = extra_field(extra, "gap")
                    .ok_or_else(|| {
                        CliError::Format("results.csv: extra cell lacks gap=".to_string())
                    })?
                    .parse()
                    .map_err(|_| CliError::Format("results.csv: unreadable gap=".to_string()))?;
                if gap > 0.0 {
                    loglog.push(vec![table.f64_at(r, cn)?.ln(), gap.ln()]);
                }
            }
            out.write_text("gap_loglog.dat", &dat(&loglog))?;
            let xs: Vec<f64> = loglog.iter().map(|l| l[0]).collect();
            let ys: Vec<f64> = loglog.iter().map(|l| l[1]).collect();
            match ols_fit(&xs, &ys) {
                Some(fit) if !loglog.is_empty() => {
                    let _ = writeln!(
                        summary,
                        "convergence-gap: {} of {total} gaps positive; fitted exponent = {}",
                        loglog.len(),
                        fmt_f64(fit.slope)
                    );
                }
                _ => {
                    let _ = writeln!(summary, "convergence-gap: no positive gaps; fit skipped");
                }
            }
        }
        "variance-scan" => {
            let mut thetas: Vec<String> = Vec::new();
            for r in &table.rows {
                let t = r.get(cdir).cloned().unwrap_or_default();
                if !thetas.contains(&t) {
                    thetas.push(t);
                }
            }
            for (k, theta) in thetas.iter().enumerate() {
                let lines: Vec<Vec<f64>> = table
                    .rows
                    .iter()
                    .filter(|r| r.get(cdir).map(|t| t == theta).unwrap_or(false))
                    .map(|r| Ok(vec![table.f64_at(r, cn)?.ln(), table.f64_at(r, cvar)?]))
                    .collect::<CliResult<_>>()?;
                out.write_text(&format!("variance_theta{k}.dat"), &dat(&lines))?;
                let xs: Vec<f64> = lines.iter().map(|l| l[0]).collect();
                let ys: Vec<f64> = lines.iter().map(|l| l[1]).collect();
                match ols_fit(&xs, &ys) {
                    Some(fit) => {
                        let _ = writeln!(
                            summary,
                            "variance-scan theta={theta}: slope over log n = {}",
                            fmt_f64(fit.slope)
                        );
                    }
                    None => {
                        let _ = writeln!(
                            summary,
                            "variance-scan theta={theta}: too few scales for a slope"
                        );
                    }
                }
            }
        }
        "lambda" | "skeleton-demo" => {
            for r in &table.rows {
                let extra = r.get(cextra).map(|s| s.as_str()).unwrap_or("");
                let _ = writeln!(summary, "{experiment}: {extra}");
            }
            if experiment == "skeleton-demo" {
                if let Some(anchors) = Table::load(dir, "skeleton.csv")? {
                    anchors.require_columns(&SKELETON_HEADER)?;
                    let ci = anchors.col("site")?;
                    let mut lines = Vec::new();
                    for r in &anchors.rows {
                        let site = r.get(ci).map(|s| s.as_str()).unwrap_or("");
                        let comps: Result<Vec<f64>, _> =
                            site.split('|').map(|c| c.parse::<f64>()).collect();
                        lines.push(comps.map_err(|_| {
                            CliError::Format(format!("skeleton.csv: bad site '{site}'"))
                        })?);
                    }
                    out.write_text("anchors.dat", &dat(&lines))?;
                }
            }
        }
        other => {
            let _ = writeln!(summary, "results.csv: no plot rule for experiment '{other}'");
        }
    }
    Ok(())
}
