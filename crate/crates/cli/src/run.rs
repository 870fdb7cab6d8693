use std::fmt::Write as _;

use densets::constructions::{build_partition, build_xr, truncated_xr, ColumnSource, RealSpec};
use densets::density::{
    density_report, format_sig, intrinsic_probe_with, principal_checkpoints, to_f64, DensityReport,
    Grid,
};
use densets::laws::{run_suite, Suite};
use densets::{expr, sets, Expr, PermSpec};
use num_rational::BigRational;
use serde_json::json;

use crate::config::{emit, CliError, CliResult, Format, RunConfig};
use crate::{Common, Estimator};

fn parse_expr(text: &str) -> CliResult<Expr> {
    expr::parse(text).map_err(|e| CliError::Usage(format!("in `{text}`: {e}")))
}

fn parse_grid(text: &str) -> CliResult<Grid> {
    text.parse()
        .map_err(|e| CliError::Usage(format!("--grid: {e}")))
}

fn to_json(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json");
    s.push('\n');
    s
}

fn summary_lines(r: &DensityReport) -> String {
    format!(
        "# tail_len {}\n# tail_inf {} ({})\n# tail_sup {} ({})\n",
        r.tail_len,
        r.tail_inf,
        format_sig(to_f64(&r.tail_inf)),
        r.tail_sup,
        format_sig(to_f64(&r.tail_sup)),
    )
}

/// Header and rows as CSV, quoting fields where needed.
fn csv_rows<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.as_ref()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn eval(common: &Common, text: &str, prefix: u64) -> CliResult<u8> {
    let mut cfg = RunConfig::new("eval", common)?;
    let e = parse_expr(text)?;
    cfg.expr = Some(e.to_string());
    cfg.prefix = Some(prefix);
    let elements = expr::eval(&e, cfg.budget)?.prefix(prefix)?;
    let body = match cfg.format {
        Format::Json => to_json(json!({
            "config": cfg.json(),
            "count": elements.len(),
            "elements": elements,
        })),
        Format::Csv => {
            let mut s = cfg.csv_header();
            let _ = writeln!(s, "# count {}", elements.len());
            s.push_str("element\n");
            for x in &elements {
                let _ = writeln!(s, "{x}");
            }
            s
        }
    };
    emit(common, &body)?;
    Ok(0)
}

pub fn density(
    common: &Common,
    text: &str,
    max_n: u64,
    grid: &str,
    estimator: Estimator,
    k: u64,
) -> CliResult<u8> {
    let mut cfg = RunConfig::new("density", common)?;
    let e = parse_expr(text)?;
    cfg.expr = Some(e.to_string());
    cfg.estimator = Some(estimator);
    let set = expr::eval(&e, cfg.budget)?;
    let report = match estimator {
        Estimator::Counting => {
            let g = parse_grid(grid)?;
            cfg.grid = Some(g.to_string());
            cfg.max_n = Some(max_n);
            density_report(&set, &g, max_n)?
        }
        Estimator::Principal => {
            cfg.k = Some(k);
            principal_checkpoints(&set, k)?
        }
    };
    let body = match cfg.format {
        Format::Json => to_json(json!({ "config": cfg.json(), "report": report })),
        Format::Csv => format!(
            "{}{}{}",
            cfg.csv_header(),
            summary_lines(&report),
            report.to_csv()
        ),
    };
    emit(common, &body)?;
    Ok(0)
}

pub fn identities(
    common: &Common,
    suite: &str,
    trials: u64,
    seed: u64,
    prefix: u64,
) -> CliResult<u8> {
    let mut cfg = RunConfig::new("identities", common)?;
    let s: Suite = suite.parse().map_err(CliError::Usage)?;
    cfg.suite = Some(s.to_string());
    cfg.trials = Some(trials);
    cfg.seed = Some(seed);
    cfg.prefix = Some(prefix);
    let report = run_suite(s, trials, seed, prefix, cfg.budget)?;
    let body = match cfg.format {
        Format::Json => to_json(json!({ "config": cfg.json(), "report": report })),
        Format::Csv => {
            let mut out = cfg.csv_header();
            let _ = writeln!(
                out,
                "# laws {} checks {} violations {}",
                report.laws.len(),
                report.checks,
                report.violations.len()
            );
            let rows: Vec<Vec<String>> = report
                .violations
                .iter()
                .map(|v| {
                    vec![
                        v.law.clone(),
                        v.trial.to_string(),
                        v.witness.to_string(),
                        v.detail.clone(),
                    ]
                })
                .collect();
            out.push_str(&csv_rows(&["law", "trial", "witness", "detail"], &rows));
            out
        }
    };
    emit(common, &body)?;
    if report.passed() {
        eprintln!("{}: {} checks, no violations", s, report.checks);
        Ok(0)
    } else {
        let v = &report.violations[0];
        eprintln!(
            "{}: {} violation(s); first: `{}` in trial {} (witness {})",
            s,
            report.violations.len(),
            v.law,
            v.trial,
            v.witness
        );
        Ok(1)
    }
}

pub fn probe(
    common: &Common,
    text: &str,
    family: &str,
    grid: &str,
    max_n: u64,
    threshold: f64,
) -> CliResult<u8> {
    let mut cfg = RunConfig::new("probe", common)?;
    let e = parse_expr(text)?;
    let fam =
        PermSpec::parse_family(family).map_err(|m| CliError::Usage(format!("--family: {m}")))?;
    let g = parse_grid(grid)?;
    cfg.expr = Some(e.to_string());
    cfg.family = Some(fam.iter().map(PermSpec::to_string).collect());
    cfg.grid = Some(g.to_string());
    cfg.max_n = Some(max_n);
    cfg.threshold = Some(threshold);
    let budget = cfg.budget;
    let report = intrinsic_probe_with(|| expr::eval(&e, budget), &fam, &g, max_n)?;
    let spread = report.spread();
    let unstable = to_f64(&spread) > threshold;
    let body = match cfg.format {
        Format::Json => to_json(json!({
            "config": cfg.json(),
            "spread": spread.to_string(),
            "spread_float": format_sig(to_f64(&spread)),
            "unstable": unstable,
            "report": report,
        })),
        Format::Csv => {
            let mut out = cfg.csv_header();
            let _ = writeln!(out, "# min_tail_inf {}", report.min_tail_inf);
            let _ = writeln!(out, "# max_tail_sup {}", report.max_tail_sup);
            let _ = writeln!(out, "# spread {} ({})", spread, format_sig(to_f64(&spread)));
            let _ = writeln!(out, "# unstable {unstable}");
            let rows: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|entry| {
                    let r = &entry.report;
                    let last = r
                        .last()
                        .map(|c| format_sig(to_f64(&c.rho)))
                        .unwrap_or_default();
                    vec![
                        entry.permutation.clone(),
                        r.tail_inf.to_string(),
                        r.tail_sup.to_string(),
                        format_sig(to_f64(&r.tail_inf)),
                        format_sig(to_f64(&r.tail_sup)),
                        last,
                    ]
                })
                .collect();
            out.push_str(&csv_rows(
                &[
                    "permutation",
                    "tail_inf",
                    "tail_sup",
                    "tail_inf_float",
                    "tail_sup_float",
                    "final_rho_float",
                ],
                &rows,
            ));
            out
        }
    };
    emit(common, &body)?;
    Ok(0)
}

fn parse_source(text: &str) -> CliResult<ColumnSource> {
    ColumnSource::parse(text).map_err(|e| CliError::Usage(format!("--source: {e}")))
}

pub fn partition(
    common: &Common,
    source: &str,
    levels: usize,
    max_n: u64,
    grid: &str,
) -> CliResult<u8> {
    let mut cfg = RunConfig::new("partition", common)?;
    let g = parse_grid(grid)?;
    cfg.source = Some(source.to_string());
    cfg.levels = Some(levels);
    cfg.max_n = Some(max_n);
    cfg.grid = Some(g.to_string());
    let family = build_partition(parse_source(source)?, levels, cfg.budget)?;
    let mut reports = Vec::with_capacity(levels);
    for i in 0..levels {
        reports.push(density_report(&family.a(i)?, &g, max_n)?);
    }
    let target = |i: usize| format!("1/{}", 1u128 << (i + 1).min(127));
    let body = match cfg.format {
        Format::Json => {
            let levels: Vec<_> = reports
                .iter()
                .enumerate()
                .map(|(i, r)| json!({ "level": i, "target": target(i), "report": r }))
                .collect();
            to_json(json!({ "config": cfg.json(), "levels": levels }))
        }
        Format::Csv => {
            let mut out = cfg.csv_header();
            for (i, r) in reports.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "# level {i} target {} tail_inf {} tail_sup {}",
                    target(i),
                    format_sig(to_f64(&r.tail_inf)),
                    format_sig(to_f64(&r.tail_sup))
                );
            }
            out.push_str("level,n,count,rho_num,rho_den,rho_float\n");
            for (i, r) in reports.iter().enumerate() {
                for line in r.to_csv().lines().skip(1) {
                    let _ = writeln!(out, "{i},{line}");
                }
            }
            out
        }
    };
    emit(common, &body)?;
    Ok(0)
}

pub fn construct_xr(
    common: &Common,
    real: &str,
    source: &str,
    max_n: u64,
    grid: &str,
    levels: usize,
) -> CliResult<u8> {
    let mut cfg = RunConfig::new("construct-xr", common)?;
    let r = RealSpec::parse(real).map_err(|e| CliError::Usage(format!("--real: {e}")))?;
    let g = parse_grid(grid)?;
    cfg.real = Some(r.to_string());
    cfg.source = Some(source.to_string());
    cfg.max_n = Some(max_n);
    cfg.grid = Some(g.to_string());
    cfg.levels = Some(levels);
    let family = build_partition(parse_source(source)?, levels.max(1), cfg.budget)?;
    let xr = build_xr(&r, &family);
    let report = density_report(&xr, &g, max_n)?;

    // Truncated additivity: the first `levels` pieces are disjoint, so the
    // count of their union is the sum of their counts.
    let truncated = truncated_xr(&r, &family, levels)?;
    let mut reached = sets::empty().with_budget(cfg.budget);
    for i in 0..levels {
        reached = sets::union(&reached, &family.a(i)?);
    }
    let restricted = sets::intersect(&xr, &reached);
    let mut additivity_failure = None;
    for c in &report.checkpoints {
        let whole = truncated.count(c.n)?;
        let mut sum = 0;
        for i in (0..levels).filter(|&i| r.bit(i as u64)) {
            sum += family.a(i)?.count(c.n)?;
        }
        if whole != sum || restricted.count(c.n)? != whole {
            additivity_failure = Some(c.n);
            break;
        }
    }
    let truncated_rho = report
        .last()
        .map(|c| -> CliResult<BigRational> { Ok(densets::density::density_at(&truncated, c.n)?) })
        .transpose()?;

    let body = match cfg.format {
        Format::Json => to_json(json!({
            "config": cfg.json(),
            "additivity_holds": additivity_failure.is_none(),
            "additivity_failure_at": additivity_failure,
            "truncated_final_rho": truncated_rho.as_ref().map(|q| q.to_string()),
            "report": report,
        })),
        Format::Csv => {
            let mut out = cfg.csv_header();
            out.push_str(&summary_lines(&report));
            match additivity_failure {
                None => {
                    let _ = writeln!(
                        out,
                        "# truncated additivity over {levels} pieces holds at every checkpoint"
                    );
                }
                Some(n) => {
                    let _ = writeln!(
                        out,
                        "# truncated additivity over {levels} pieces fails at n = {n}"
                    );
                }
            }
            if let Some(q) = &truncated_rho {
                let _ = writeln!(
                    out,
                    "# truncated final rho {} ({})",
                    q,
                    format_sig(to_f64(q))
                );
            }
            out.push_str(&report.to_csv());
            out
        }
    };
    emit(common, &body)?;
    Ok(if additivity_failure.is_some() { 1 } else { 0 })
}
