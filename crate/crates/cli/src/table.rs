//! Tables of closed-form bound values for the `bounds` subcommand.

use std::fmt;
use std::io;
use std::str::FromStr;

use sleac_core::bounds::{
    approach1_bounds, ball_counts, d_max, linear_dt_opt, settled_survival, BoundsError,
    LinearCase, LinearVariant,
};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsCase {
    Approach1,
    Approach2,
    LinearEdge,
    LinearMid,
    Sldf,
}

impl BoundsCase {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundsCase::Approach1 => "approach1",
            BoundsCase::Approach2 => "approach2",
            BoundsCase::LinearEdge => "linear_edge",
            BoundsCase::LinearMid => "linear_mid",
            BoundsCase::Sldf => "sldf",
        }
    }

    fn is_linear(self) -> bool {
        matches!(
            self,
            BoundsCase::LinearEdge | BoundsCase::LinearMid | BoundsCase::Sldf
        )
    }
}

impl fmt::Display for BoundsCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundsCase {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "approach1" => BoundsCase::Approach1,
            "approach2" => BoundsCase::Approach2,
            "linear_edge" => BoundsCase::LinearEdge,
            "linear_mid" => BoundsCase::LinearMid,
            "sldf" => BoundsCase::Sldf,
            _ => return Err(TableError::UnknownCase(s.to_string())),
        })
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("unknown case `{0}`; expected approach1, approach2, linear_edge, linear_mid or sldf")]
    UnknownCase(String),
    #[error("case {case} needs `{param}`")]
    Missing { case: BoundsCase, param: &'static str },
    #[error("case {case} does not take `{param}`")]
    Inconsistent { case: BoundsCase, param: &'static str },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parameters of a bounds query. Unset values take per-case defaults;
/// values that do not apply to the case are rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundsQuery {
    pub e0: Option<f64>,
    pub ecrit_mobile: Option<f64>,
    pub ecrit_settled: Option<f64>,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub n: Option<u32>,
    pub j: Option<u32>,
}

/// One labeled value.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub name: &'static str,
    pub formula: &'static str,
    pub value: String,
}

fn num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

fn row(name: &'static str, formula: &'static str, value: impl Into<String>) -> BoundRow {
    BoundRow {
        name,
        formula,
        value: value.into(),
    }
}

pub fn bounds_table(case: BoundsCase, q: &BoundsQuery) -> Result<Vec<BoundRow>, TableError> {
    let reject = |param: &'static str, given: bool| {
        if given {
            Err(TableError::Inconsistent { case, param })
        } else {
            Ok(())
        }
    };
    let dt = q.dt.unwrap_or(2.0);
    let alpha = q.alpha.unwrap_or(0.0);
    let mut rows = Vec::new();

    if case.is_linear() {
        reject("e0", q.e0.is_some())?;
        reject("ecrit_mobile", q.ecrit_mobile.is_some())?;
        reject("ecrit_settled", q.ecrit_settled.is_some())?;
        let n = q.n.ok_or(TableError::Missing { case, param: "n" })?;
        let c = if case == BoundsCase::LinearEdge {
            reject("j", q.j.is_some())?;
            LinearCase::edge(n, dt, alpha)?
        } else {
            let j = q.j.ok_or(TableError::Missing { case, param: "j" })?;
            let variant = if case == BoundsCase::Sldf {
                LinearVariant::MidSldf
            } else {
                LinearVariant::MidGreedy
            };
            LinearCase::mid(n, j, dt, alpha, variant)?
        };
        rows.push(row("termination_bound", "n(dt+2) - dt", num(c.termination_bound())));
        rows.push(row("agents", "n(dt+2)/dt - 1", num(c.agent_count())));
        if let Some(nj) = c.left_branch_agents() {
            rows.push(row("left_branch_agents", "(j(dt+2) - dt)/dt", num(nj)));
        }
        rows.push(row("total_energy", "closed form, worst case", num(c.total_energy())));
        let profile = c.energy_profile();
        if let Some((k, e)) = profile
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (k, &e)| match best {
                Some((_, b)) if b >= e => best,
                _ => Some((k, e)),
            })
        {
            rows.push(row("max_agent_energy", "max over agents", num(e)));
            rows.push(row("max_agent_index", "argmax over agents", (k + 1).to_string()));
        }
        if let Some((settled, mobile)) = c.edge_energy_maxima() {
            rows.push(row("max_settled_energy", "n(1+alpha)", num(settled)));
            rows.push(row("max_mobile_energy", "2n - dt", num(mobile)));
            rows.push(row(
                "equalizing_interval",
                "(1-alpha)/alpha",
                c.equalizing_interval()
                    .map_or_else(|| "absent: alpha is zero".to_string(), num),
            ));
            let opt = if n >= 2 { linear_dt_opt(n, alpha)? } else { None };
            match opt {
                Some(o) => {
                    rows.push(row("optimal_interval", "sqrt(4n/(alpha(n-1)))", num(o.interval)));
                    rows.push(row("optimal_interval_approx", "2/sqrt(alpha)", num(o.approx)));
                    rows.push(row("total_energy_at_optimum", "closed form at optimum", num(o.total_energy)));
                    rows.push(row(
                        "total_energy_at_optimum_bound",
                        "n^2(1/2 + 2sqrt(alpha) + 3alpha/2)",
                        num(o.energy_bound),
                    ));
                }
                None => rows.push(row(
                    "optimal_interval",
                    "sqrt(4n/(alpha(n-1)))",
                    "absent: total energy decreases with the interval",
                )),
            }
        } else {
            let formula = if case == BoundsCase::Sldf {
                "2n/sqrt(2(j-n) - 2j alpha + alpha n + alpha n^2)"
            } else {
                "2n/sqrt(2(j-n) - 2j alpha - 2alpha + alpha n + alpha n^2 + 2)"
            };
            rows.push(row(
                "optimal_interval",
                formula,
                match c.optimal_interval() {
                    Ok(v) => num(v),
                    Err(why) => format!("absent: {why}"),
                },
            ));
            let cond = if case == BoundsCase::Sldf {
                "n(2 - alpha n)/2 < j"
            } else {
                "n(2 - alpha n)/2 - 1 < j"
            };
            rows.push(row(
                "optimum_condition",
                cond,
                c.optimum_condition().unwrap_or(false).to_string(),
            ));
        }
        return Ok(rows);
    }

    reject("n", q.n.is_some())?;
    reject("j", q.j.is_some())?;
    let e0 = q.e0.ok_or(TableError::Missing { case, param: "e0" })?;
    let ecrit = q.ecrit_mobile.unwrap_or(1.0);
    let d = d_max(e0, ecrit)?;
    rows.push(row("d_max", "e0 - ecrit_mobile - 1", d.to_string()));
    let balls = ball_counts(d)?;
    if case == BoundsCase::Approach1 {
        let b = approach1_bounds(d, dt)?;
        rows.push(row("ball_inner", "(d-2)^2 + (d-1)^2", balls.inner.to_string()));
        rows.push(row("termination_bound", "(ball_inner+1)dt + 2d", num(b.termination)));
        rows.push(row("area_bound", "ball_inner + 1 + 2d/dt", num(b.agents)));
        let ecrit_s = q.ecrit_settled.unwrap_or(1.0);
        rows.push(row(
            "settled_survive",
            "alpha = 0 or ecrit_settled/alpha > termination_bound",
            settled_survival(ecrit_s, alpha, b.termination).to_string(),
        ));
    } else {
        reject("dt", q.dt.is_some())?;
        reject("alpha", q.alpha.is_some())?;
        reject("ecrit_settled", q.ecrit_settled.is_some())?;
        rows.push(row("area_bound", "d^2 + (d-1)^2", balls.upper.to_string()));
    }
    Ok(rows)
}

/// Renders rows as aligned text.
pub fn render(rows: &[BoundRow]) -> String {
    let wn = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(4);
    let wf = rows.iter().map(|r| r.formula.len()).max().unwrap_or(0).max(7);
    let mut out = format!("{:wn$}  {:wf$}  value\n", "name", "formula");
    for r in rows {
        out.push_str(&format!("{:wn$}  {:wf$}  {}\n", r.name, r.formula, r.value));
    }
    out
}

pub fn write_csv<W: io::Write>(out: W, rows: &[BoundRow]) -> Result<(), TableError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "formula", "value"])?;
    for r in rows {
        w.write_record([r.name, r.formula, r.value.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
