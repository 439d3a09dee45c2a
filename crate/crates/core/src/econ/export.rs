use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::index::IndexSeries;
use super::ols::FitResult;
use super::spec::{term_label, ModelSpec};
use super::trend::TrendRow;

/// `term,estimate,std_error,t_stat,stars` for every retained coefficient.
pub fn write_coefficient_csv<W: Write>(writer: W, fit: &FitResult) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["term", "estimate", "std_error", "t_stat", "stars"])?;
    for c in &fit.coefficients {
        w.write_record([
            c.term.clone(),
            c.estimate.to_string(),
            c.std_error.to_string(),
            c.t_stat.to_string(),
            c.stars.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    n_obs: usize,
    adj_r2: f64,
    r2: f64,
    dof: usize,
    fe_dimensions: &'a [String],
    se_type: &'static str,
    dropped_columns: &'a [String],
}

/// Coefficients plus the metadata block, keyed by specification name.
pub fn coefficient_json(name: &str, spec: &ModelSpec, fit: &FitResult) -> Value {
    let coefficients: Vec<Value> = fit
        .coefficients
        .iter()
        .map(|c| {
            json!({
                "term": c.term,
                "estimate": c.estimate,
                "std_error": c.std_error,
                "t_stat": c.t_stat,
                "p_value": c.p_value,
                "stars": c.stars,
            })
        })
        .collect();
    json!({
        "name": name,
        "spec": spec,
        "coefficients": coefficients,
        "metadata": Metadata {
            n_obs: fit.n_obs,
            adj_r2: fit.adj_r2,
            r2: fit.r2,
            dof: fit.dof,
            fe_dimensions: &fit.fe_dimensions,
            se_type: fit.se_type.name(),
            dropped_columns: &fit.dropped_columns,
        },
    })
}

/// `period,value` in calendar order; periods without sales have an empty
/// value.
pub fn write_index_csv<W: Write>(writer: W, series: &IndexSeries) -> Result<(), csv::Error> {
    let mut rows: Vec<_> = series
        .points
        .iter()
        .map(|p| (p.start, p.period.clone(), p.value.to_string()))
        .chain(
            series
                .gaps
                .iter()
                .map(|g| (g.start, g.period.clone(), String::new())),
        )
        .collect();
    rows.sort();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["period", "value"])?;
    for (_, period, value) in rows {
        w.write_record([period, value])?;
    }
    w.flush()?;
    Ok(())
}

/// `event_day,group,mean_residual,n`; empty cells leave `mean_residual`
/// blank.
pub fn write_trend_csv<W: Write>(writer: W, rows: &[TrendRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["event_day", "group", "mean_residual", "n"])?;
    for r in rows {
        w.write_record([
            r.event_day.to_string(),
            r.group.to_string(),
            r.mean_residual.map(|v| v.to_string()).unwrap_or_default(),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One column of a console table. `fit` is `Err` with a message when the
/// specification could not be estimated.
pub struct TableColumn<'a> {
    pub title: String,
    pub fit: Result<&'a FitResult, String>,
}

/// Aligned regression table: estimates with stars to three decimals, SEs in
/// parentheses beneath, then fixed effects, observations and adjusted R².
pub fn format_table(columns: &[TableColumn<'_>]) -> String {
    let mut terms: Vec<String> = Vec::new();
    let mut dims: Vec<String> = Vec::new();
    for col in columns {
        if let Ok(fit) = col.fit {
            for c in &fit.coefficients {
                if !terms.contains(&c.term) {
                    terms.push(c.term.clone());
                }
            }
            for d in &fit.fe_dimensions {
                if !dims.contains(d) {
                    dims.push(d.clone());
                }
            }
        }
    }
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for term in &terms {
        let mut est = Vec::new();
        let mut se = Vec::new();
        for col in columns {
            match col.fit.as_ref().ok().and_then(|f| f.coefficient(term)) {
                Some(c) => {
                    est.push(format!("{:.3}{}", c.estimate, c.stars));
                    se.push(format!("({:.3})", c.std_error));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push((term_label(term), est));
        rows.push((String::new(), se));
    }
    for d in &dims {
        let cells = columns
            .iter()
            .map(|c| match &c.fit {
                Ok(f) if f.fe_dimensions.contains(d) => "Yes".to_string(),
                Ok(_) => "No".to_string(),
                Err(_) => String::new(),
            })
            .collect();
        rows.push((format!("{} FE", fe_title(d)), cells));
    }
    let cell = |f: fn(&FitResult) -> String| -> Vec<String> {
        columns
            .iter()
            .map(|c| c.fit.as_ref().map(|x| f(x)).unwrap_or_default())
            .collect()
    };
    rows.push(("Observations".into(), cell(|f| f.n_obs.to_string())));
    rows.push(("Adj. R2".into(), cell(|f| format!("{:.3}", f.adj_r2))));
    let failures: Vec<String> = columns
        .iter()
        .filter_map(|c| c.fit.as_ref().err().map(|e| format!("{}: {e}", c.title)))
        .collect();

    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(8);
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            rows.iter()
                .map(|r| r.1[j].len())
                .max()
                .unwrap_or(0)
                .max(c.title.len())
                .max(6)
        })
        .collect();
    let mut out = String::new();
    let rule = "-".repeat(label_w + widths.iter().map(|w| w + 2).sum::<usize>());
    let _ = write!(out, "{:label_w$}", "");
    for (c, w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", c.title);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{rule}");
    let footer_start = terms.len() * 2;
    for (i, (label, cells)) in rows.iter().enumerate() {
        if i == footer_start {
            let _ = writeln!(out, "{rule}");
        }
        let _ = write!(out, "{label:label_w$}");
        for (v, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {v:>w$}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "*** p<0.01, ** p<0.05, * p<0.1");
    for f in failures {
        let _ = writeln!(out, "not estimated: {f}");
    }
    out
}

fn fe_title(dim: &str) -> String {
    match dim {
        "day" => "Day".into(),
        "week" => "Week".into(),
        "mint_wave" => "Wave".into(),
        other => other.into(),
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::super::ols::{ols_fit, OlsOptions};
    use super::*;

    fn fit() -> FitResult {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_vec(vec![1.0, 3.1, 4.9, 7.0, 9.2, 10.9]);
        ols_fit(
            &y,
            &x,
            &["intercept".into(), "post".into()],
            &OlsOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn csv_columns() {
        let mut buf = Vec::new();
        write_coefficient_csv(&mut buf, &fit()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("term,estimate,std_error,t_stat,stars"));
        assert!(lines.next().unwrap().starts_with("intercept,"));
        assert!(lines.next().unwrap().starts_with("post,"));
    }

    #[test]
    fn table_layout() {
        let f = fit();
        let t = format_table(&[
            TableColumn {
                title: "(1)".into(),
                fit: Ok(&f),
            },
            TableColumn {
                title: "(2)".into(),
                fit: Err("degenerate".into()),
            },
        ]);
        assert!(t.contains("Post announcement"));
        assert!(t.contains(&format!("{:.3}", f.estimate("post").unwrap())));
        assert!(t.contains("(0.0"));
        assert!(t.contains("Observations"));
        assert!(t.contains("not estimated: (2): degenerate"));
    }

    #[test]
    fn json_has_metadata() {
        let f = fit();
        let v = coefficient_json("demo", &ModelSpec::new(None), &f);
        assert_eq!(v["metadata"]["n_obs"], 6);
        assert_eq!(v["metadata"]["se_type"], "classical");
        assert_eq!(v["coefficients"][1]["term"], "post");
    }
}
