//! CSV and JSON emitters for solution samples and convergence reports.
//!
//! Every CSV starts with a `#`-prefixed schema line naming the format and its
//! version; the JSON documents carry the same tag in a `schema` field.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::analysis::{sample_points, ConvergenceReport, Norm, KINDS};
use crate::error::Result;
use crate::problem::OdeProblem;
use crate::solvers::{PiecewiseSolution, RhsMode};

pub const CONVERGENCE_SCHEMA: &str = "galerkin-time/convergence-report/v1";
pub const SAMPLES_SCHEMA: &str = "galerkin-time/solution-samples/v1";

pub const CONVERGENCE_COLUMNS: [&str; 10] = [
    "problem", "k", "rhs_mode", "level", "elements", "h", "kind", "norm", "error", "order",
];

pub const SAMPLE_COLUMNS: [&str; 10] = [
    "element",
    "t",
    "component",
    "u_dg",
    "u_dg_star",
    "u_cg",
    "exact",
    "err_dg",
    "err_dg_star",
    "err_cg",
];

fn mode_label(mode: RhsMode) -> &'static str {
    match mode {
        RhsMode::Quadrature => "quadrature",
        RhsMode::RadauInterpolated => "radau",
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per level, solution kind and norm. `order` compares a level with
/// the previous one and is empty on the coarsest level or at the roundoff floor.
pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, mut out: W) -> Result<()> {
    writeln!(out, "# {CONVERGENCE_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_COLUMNS)?;
    for kind in KINDS {
        for norm in Norm::ALL {
            let orders = report.orders(kind, norm);
            for (i, level) in report.levels.iter().enumerate() {
                let order = if i == 0 { None } else { orders[i - 1] };
                w.write_record([
                    report.problem.clone(),
                    report.config.k.to_string(),
                    mode_label(report.config.rhs_mode).to_string(),
                    level.level.to_string(),
                    level.elements.to_string(),
                    level.h.to_string(),
                    kind.label().to_string(),
                    norm.label().to_string(),
                    level.summary(kind).get(norm).to_string(),
                    fmt_opt(order),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn convergence_json(report: &ConvergenceReport) -> Value {
    let levels: Vec<Value> = report
        .levels
        .iter()
        .map(|l| {
            let mut errors = Map::new();
            for kind in KINDS {
                let s = l.summary(kind);
                let mut m = Map::new();
                for norm in Norm::ALL {
                    m.insert(norm.label().into(), json!(s.get(norm)));
                }
                errors.insert(kind.label().into(), Value::Object(m));
            }
            json!({
                "level": l.level,
                "elements": l.elements,
                "h": l.h,
                "scale": l.scale,
                "errors": errors,
            })
        })
        .collect();
    let mut orders = Map::new();
    for kind in KINDS {
        let mut m = Map::new();
        for norm in Norm::ALL {
            m.insert(norm.label().into(), json!(report.orders(kind, norm)));
        }
        orders.insert(kind.label().into(), Value::Object(m));
    }
    json!({
        "schema": CONVERGENCE_SCHEMA,
        "problem": report.problem,
        "config": {
            "k": report.config.k,
            "quad_points": report.config.quad_points,
            "rhs_mode": mode_label(report.config.rhs_mode),
            "newton_tol": report.config.newton_tol,
            "newton_max_iter": report.config.newton_max_iter,
        },
        "levels": levels,
        "orders": orders,
    })
}

pub fn write_convergence_json<W: Write>(report: &ConvergenceReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &convergence_json(report))?;
    writeln!(out)?;
    Ok(())
}

/// The three solutions of a `solve` run, sampled on a common grid.
pub struct SolutionSet<'a> {
    pub dg: &'a PiecewiseSolution,
    pub dg_star: &'a PiecewiseSolution,
    pub cg: &'a PiecewiseSolution,
}

struct SampleRow {
    element: usize,
    t: f64,
    component: usize,
    dg: f64,
    star: f64,
    cg: f64,
    exact: Option<f64>,
}

fn sample_rows(set: &SolutionSet<'_>, p: &OdeProblem, samples: usize) -> Result<Vec<SampleRow>> {
    let mesh = &set.dg.mesh;
    let taus = sample_points(samples);
    let mut rows = Vec::new();
    for e in 0..mesh.num_elements() {
        for &tau in &taus {
            let t = mesh.from_reference(e, tau);
            let dg = set.dg.eval_reference(e, tau);
            let star = set.dg_star.eval_reference(e, tau);
            let cg = set.cg.eval_reference(e, tau);
            let exact = if p.has_exact() {
                Some(p.exact_at(t)?)
            } else {
                None
            };
            for c in 0..p.dimension() {
                rows.push(SampleRow {
                    element: e,
                    t,
                    component: c,
                    dg: dg[c],
                    star: star[c],
                    cg: cg[c],
                    exact: exact.as_ref().map(|x| x[c]),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_samples_csv<W: Write>(
    set: &SolutionSet<'_>,
    p: &OdeProblem,
    samples: usize,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# {SAMPLES_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_COLUMNS)?;
    for r in sample_rows(set, p, samples)? {
        let err = |v: f64| r.exact.map(|x| (v - x).abs());
        w.write_record([
            r.element.to_string(),
            r.t.to_string(),
            r.component.to_string(),
            r.dg.to_string(),
            r.star.to_string(),
            r.cg.to_string(),
            fmt_opt(r.exact),
            fmt_opt(err(r.dg)),
            fmt_opt(err(r.star)),
            fmt_opt(err(r.cg)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_json<W: Write>(
    set: &SolutionSet<'_>,
    p: &OdeProblem,
    samples: usize,
    mut out: W,
) -> Result<()> {
    let rows: Vec<Value> = sample_rows(set, p, samples)?
        .into_iter()
        .map(|r| {
            let err = |v: f64| r.exact.map(|x| (v - x).abs());
            json!({
                "element": r.element,
                "t": r.t,
                "component": r.component,
                "u_dg": r.dg,
                "u_dg_star": r.star,
                "u_cg": r.cg,
                "exact": r.exact,
                "err_dg": err(r.dg),
                "err_dg_star": err(r.star),
                "err_cg": err(r.cg),
            })
        })
        .collect();
    let doc = json!({
        "schema": SAMPLES_SCHEMA,
        "problem": p.name(),
        "k": set.dg.k,
        "elements": set.dg.mesh.num_elements(),
        "samples": rows,
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}
