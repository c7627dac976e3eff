//! Reports for the command-line front end.
//!
//! A [`RunReport`] is a list of sections, each with scalar fields and tables.
//! The same structure is rendered as aligned text and as JSON, so the two
//! forms carry identical content. Numbers are printed with 9 significant
//! digits (shortest form that rounds to them) and infinities as `inf`, which
//! makes reports byte-identical across runs.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::consistency::{
    audit, audit_constant_threshold, demo_avar, demo_variance, rollout, AuditReport, AuditScope,
};
use crate::dp::{solve, SolveError};
use crate::mdp::Mdp;
use crate::oracle::{brute_force_opt, OracleError, OracleResult};
use crate::policy::{
    extract_policy, martingale_check, risk_to_go_from_policy, PolicyError, RiskToGoMap,
};
use crate::scenario::{Scenario, ScenarioError};
use crate::{fixtures, TOL};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("infeasible: threshold {} is below the minimal achievable risk {}", num(*.r0), num(*.floor))]
    Infeasible { r0: f64, floor: f64 },
    #[error("unknown demo '{0}' (expected one of: variance, avar, squander)")]
    UnknownDemo(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Failed(String),
}

impl ReportError {
    /// Process exit code: 2 for bad input, 3 for an infeasible threshold.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Scenario(_) | ReportError::UnknownDemo(_) | ReportError::InvalidArgument(_) => 2,
            ReportError::Infeasible { .. } => 3,
            ReportError::Failed(_) => 1,
        }
    }
}

impl From<SolveError> for ReportError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible { r0, floor } => ReportError::Infeasible { r0, floor },
            e => ReportError::Failed(e.to_string()),
        }
    }
}

impl From<PolicyError> for ReportError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InfeasibleThreshold {
                threshold, floor, ..
            } => ReportError::Infeasible {
                r0: threshold,
                floor,
            },
            e => ReportError::Failed(e.to_string()),
        }
    }
}

impl From<OracleError> for ReportError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Infeasible { r0, min_risk } => ReportError::Infeasible {
                r0,
                floor: min_risk,
            },
            e => ReportError::Failed(e.to_string()),
        }
    }
}

/// Number text: 9 significant digits, shortest form, `inf` for infinities.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round9(x);
    if r == 0.0 {
        "0".into()
    } else if r.abs() < 1e-4 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => if *b { "yes" } else { "no" }.into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => {
                let r = round9(*x);
                json!(if r == 0.0 { 0.0 } else { r })
            }
            Cell::Num(x) => Value::String(num(*x)),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let texts: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::text).collect())
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for r in &texts {
            for (w, t) in widths.iter_mut().zip(r) {
                *w = (*w).max(t.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::from("  ");
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                s.push_str(c);
                if i + 1 < cells.len() {
                    s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
                }
            }
            s.push('\n');
            s
        };
        let _ = writeln!(out, "  [{}]", self.name);
        out.push_str(&line(&self.columns));
        for r in &texts {
            out.push_str(&line(r));
        }
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        m.insert(c.clone(), v.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub fields: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section {
            name: name.into(),
            fields: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.fields.push((key.into(), value.into()));
        self
    }

    pub fn table(&mut self, t: Table) -> &mut Self {
        self.tables.push(t);
        self
    }
}

/// Output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub tolerance: f64,
    pub sections: Vec<Section>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.into(),
            tolerance: TOL,
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Section) {
        self.sections.push(s);
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (tolerance {})", self.command, num(self.tolerance));
        for s in &self.sections {
            let _ = writeln!(out, "\n== {} ==", s.name);
            let width = s.fields.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
            for (k, v) in &s.fields {
                let pad = width - k.chars().count();
                let _ = writeln!(out, "  {k}:{} {}", " ".repeat(pad), v.text());
            }
            for t in &s.tables {
                if !s.fields.is_empty() || s.tables.len() > 1 {
                    out.push('\n');
                }
                t.render(&mut out);
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut sections = Map::new();
        for s in &self.sections {
            let mut fields = Map::new();
            for (k, v) in &s.fields {
                fields.insert(k.clone(), v.json());
            }
            let mut tables = Map::new();
            for t in &s.tables {
                tables.insert(t.name.clone(), t.json());
            }
            sections.insert(s.name.clone(), json!({"fields": fields, "tables": tables}));
        }
        json!({
            "command": self.command,
            "tolerance": self.tolerance,
            "sections": sections,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Options shared by the report builders.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub r0: Option<f64>,
    pub oracle: bool,
    pub audit_all_breakpoints: bool,
}

impl RunOptions {
    fn scope(&self) -> AuditScope {
        if self.audit_all_breakpoints {
            AuditScope::AllBreakpoints
        } else {
            AuditScope::Reachable
        }
    }
}

fn scenario_section(sc: &Scenario, r0: f64) -> Section {
    let mut s = Section::new("scenario");
    s.field("name", sc.name.as_str())
        .field("horizon", sc.mdp.horizon())
        .field("states", sc.mdp.num_states())
        .field("initial_state", sc.mdp.state_label(sc.mdp.initial_state()))
        .field("risk", risk_text(sc))
        .field("r0", r0);
    s
}

fn risk_text(sc: &Scenario) -> String {
    if sc.risk.is_uniform() {
        sc.risk.at(0).name()
    } else {
        sc.risk
            .per_stage
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Transition and cost data, one row per admissible `(state, action)`.
pub fn instance_table(mdp: &Mdp) -> Table {
    let mut t = Table::new("instance", &["state", "action", "c", "d", "successors"]);
    for x in mdp.state_ids() {
        for ch in mdp.choices(x) {
            let succ = ch
                .successors
                .iter()
                .map(|&(y, p)| format!("{}:{}", mdp.state_label(y), num(p)))
                .collect::<Vec<_>>()
                .join(" ");
            t.row(vec![
                mdp.state_label(x).into(),
                mdp.action_label(ch.action).into(),
                ch.cost_c.into(),
                ch.cost_d.into(),
                succ.into(),
            ]);
        }
    }
    t
}

fn rtg_table(mdp: &Mdp, name: &str, rtg: &RiskToGoMap) -> Table {
    let mut t = Table::new(name, &["history", "stage", "state", "threshold", "increment", "action"]);
    let increments: std::collections::BTreeMap<_, _> = rtg.increments().into_iter().collect();
    for (h, n) in rtg.nodes() {
        t.row(vec![
            mdp.display_history(&h).into(),
            n.stage.into(),
            mdp.state_label(n.state).into(),
            n.threshold.into(),
            increments.get(&h).map_or(Cell::Text("-".into()), |v| Cell::Num(*v)),
            n.action.map_or("-".to_string(), |u| mdp.action_label(u).to_string()).into(),
        ]);
    }
    t
}

fn audit_table(name: &str, rep: &AuditReport) -> Table {
    let mut t = Table::new(
        name,
        &[
            "stage",
            "state",
            "history",
            "threshold",
            "planned_value",
            "resolved_value",
            "planned_risk",
            "action_planned",
            "actions_resolved",
            "consistent",
        ],
    );
    for n in &rep.nodes {
        t.row(vec![
            n.stage.into(),
            n.state.as_str().into(),
            n.history.clone().unwrap_or_else(|| "(off path)".into()).into(),
            n.threshold.into(),
            n.planned_value.into(),
            n.resolved_value.into(),
            n.planned_risk.into(),
            n.action_planned.as_str().into(),
            n.actions_resolved.join(",").into(),
            n.consistent.into(),
        ]);
    }
    t
}

fn audit_section(name: &str, rep: &AuditReport) -> Section {
    let mut s = Section::new(name);
    s.field("overall_consistent", rep.overall)
        .field("nodes", rep.nodes.len())
        .field("inconsistent_nodes", rep.inconsistent().count());
    s.table(audit_table("nodes", rep));
    s
}

fn oracle_section(res: &OracleResult, mdp: &Mdp, dp_value: f64) -> Section {
    let mut s = Section::new("oracle");
    s.field("value", res.value)
        .field("dp_value", dp_value)
        .field("match", (res.value - dp_value).abs() <= TOL)
        .field("policy_count", res.policy_count.to_string())
        .field("feasible_count", res.feasible_count)
        .field("minimizers", res.minimizers.len());
    let mut m = Table::new("minimizers", &["index", "history", "action"]);
    for (i, p) in res.minimizers.iter().enumerate() {
        for (h, a) in p.describe(mdp) {
            m.row(vec![i.into(), h.into(), a.into()]);
        }
    }
    s.table(m);
    if let Some(rows) = &res.table {
        let mut t = Table::new("policies", &["index", "cost", "risk", "feasible", "decisions"]);
        for (i, r) in rows.iter().enumerate() {
            let d = r
                .decisions
                .iter()
                .map(|(h, a)| format!("{h}: {a}"))
                .collect::<Vec<_>>()
                .join("; ");
            t.row(vec![i.into(), r.cost.into(), r.risk.into(), r.feasible.into(), d.into()]);
        }
        s.table(t);
    }
    s
}

/// Solve, extract the policy and its risk-to-go, check the martingale
/// identity, audit, and optionally compare with the oracle.
pub fn solve_report(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, ReportError> {
    let r0 = opts.r0.unwrap_or(sc.r0);
    let mdp = &sc.mdp;
    let x0 = mdp.initial_state();
    let sol = solve(mdp, &sc.risk, r0)?;
    let (policy, rtg) = extract_policy(&sol, x0, r0)?;
    let hp = rtg
        .to_history_policy(mdp)
        .map_err(|e| ReportError::Failed(e.to_string()))?;
    let planned = risk_to_go_from_policy(mdp, &sc.risk, &hp, r0)?;
    let deviation = martingale_check(mdp, &sc.risk, &hp, &rtg);
    let planned_deviation = martingale_check(mdp, &sc.risk, &hp, &planned);

    let mut rep = RunReport::new("solve");
    rep.push(scenario_section(sc, r0));

    let mut s = Section::new("solution");
    s.field("value", sol.value)
        .field("floor", sol.bounds.lower(0, x0))
        .field("max_risk", sol.bounds.upper(0, x0))
        .field("plan_expected_cost", rtg.root.expected_cost(mdp))
        .field("plan_risk", rtg.root.risk(mdp, &sc.risk));
    let mut vt = Table::new(
        "decision_table",
        &["stage", "state", "lower", "upper", "value", "action", "successor_thresholds"],
    );
    for row in policy.table(mdp) {
        let succ = row
            .successor_thresholds
            .iter()
            .map(|(y, t)| format!("{y}={}", num(*t)))
            .collect::<Vec<_>>()
            .join(" ");
        vt.row(vec![
            row.stage.into(),
            row.state.into(),
            row.lower.into(),
            row.upper.into(),
            row.value.into(),
            row.action.into(),
            succ.into(),
        ]);
    }
    s.table(vt);
    rep.push(s);

    let mut s = Section::new("risk_to_go");
    s.field("martingale_deviation", deviation)
        .field("policy_risk_to_go_deviation", planned_deviation);
    s.table(rtg_table(mdp, "solver_plan", &rtg));
    s.table(rtg_table(mdp, "from_policy_risk", &planned));
    rep.push(s);

    let audit_rep = audit(mdp, &sc.risk, &sol, &policy, &rtg, opts.scope())?;
    rep.push(audit_section("audit", &audit_rep));

    if let Some(reference) = &sc.reference {
        let mut s = Section::new("reference");
        s.field("published_value", reference.value)
            .field("computed_value", sol.value)
            .field("difference", sol.value - reference.value)
            .field("agrees", (sol.value - reference.value).abs() <= TOL);
        if let Some(note) = &reference.note {
            s.field("note", note.as_str());
        }
        if (sol.value - reference.value).abs() > TOL {
            s.field(
                "discrepancy",
                format!(
                    "computed optimum {} differs from published value {}; the optimum was checked against full policy enumeration",
                    num(sol.value),
                    num(reference.value)
                ),
            );
        }
        let rp = reference
            .history_policy(mdp)
            .map_err(|e| ReportError::Failed(e.to_string()))?;
        if let Some(rp) = rp {
            match risk_to_go_from_policy(mdp, &sc.risk, &rp, r0) {
                Ok(rrtg) => {
                    s.field("policy_expected_cost", rrtg.root.expected_cost(mdp))
                        .field("policy_risk", rrtg.root.risk(mdp, &sc.risk))
                        .field("martingale_deviation", martingale_check(mdp, &sc.risk, &rp, &rrtg));
                    s.table(rtg_table(mdp, "policy_risk_to_go", &rrtg));
                }
                Err(e) => {
                    s.field("policy_status", e.to_string());
                }
            }
        }
        rep.push(s);
    }

    if opts.oracle {
        let res = brute_force_opt(mdp, &sc.risk, x0, r0)?;
        rep.push(oracle_section(&res, mdp, sol.value));
    }
    Ok(rep)
}

/// Audit of the solver's plan next to the constant-threshold baseline.
pub fn audit_report(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, ReportError> {
    let r0 = opts.r0.unwrap_or(sc.r0);
    let mdp = &sc.mdp;
    let sol = solve(mdp, &sc.risk, r0)?;
    let (policy, rtg) = extract_policy(&sol, mdp.initial_state(), r0)?;
    let mut rep = RunReport::new("audit");
    rep.push(scenario_section(sc, r0));
    let a = audit(mdp, &sc.risk, &sol, &policy, &rtg, opts.scope())?;
    rep.push(audit_section("solver_plan", &a));
    match audit_constant_threshold(mdp, &sc.risk, r0) {
        Ok(b) => rep.push(audit_section("constant_threshold", &b)),
        Err(e) => {
            let mut s = Section::new("constant_threshold");
            s.field("status", e.to_string());
            rep.push(s);
        }
    }
    Ok(rep)
}

/// Brute-force optimum with all minimizers.
pub fn oracle_report(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, ReportError> {
    let r0 = opts.r0.unwrap_or(sc.r0);
    let res = brute_force_opt(&sc.mdp, &sc.risk, sc.mdp.initial_state(), r0)?;
    let mut rep = RunReport::new("oracle");
    rep.push(scenario_section(sc, r0));
    let dp = solve(&sc.mdp, &sc.risk, r0)?;
    rep.push(oracle_section(&res, &sc.mdp, dp.value));
    Ok(rep)
}

/// Largest number of trajectories listed in a rollout report.
pub const SHOWN_TRAJECTORIES: usize = 20;

pub fn rollout_report(
    sc: &Scenario,
    opts: &RunOptions,
    n: usize,
    seed: u64,
) -> Result<RunReport, ReportError> {
    if n == 0 {
        return Err(ReportError::InvalidArgument("--n must be at least 1".into()));
    }
    let r0 = opts.r0.unwrap_or(sc.r0);
    let mdp = &sc.mdp;
    let x0 = mdp.initial_state();
    let sol = solve(mdp, &sc.risk, r0)?;
    let (policy, rtg) = extract_policy(&sol, x0, r0)?;
    let r = rollout(mdp, &sc.risk, &policy, &rtg, x0, r0, n, seed)?;
    let mut rep = RunReport::new("rollout");
    rep.push(scenario_section(sc, r0));
    let mut s = Section::new("rollout");
    s.field("n", r.n)
        .field("seed", i64::try_from(r.seed).map_or(Cell::Text(r.seed.to_string()), Cell::Int))
        .field("generator", "ChaCha8")
        .field("mean_objective_cost", r.mean_objective_cost)
        .field("analytic_objective_cost", r.analytic_objective_cost)
        .field("mean_constraint_cost", r.mean_constraint_cost)
        .field("std_error", r.std_error)
        .field("analytic_risk", r.analytic_risk)
        .field("min_floor_slack", r.min_floor_slack)
        .field("min_terminal_threshold", r.min_terminal_threshold)
        .field("max_tree_deviation", r.max_tree_deviation)
        .field("trajectories_shown", r.trajectories.len().min(SHOWN_TRAJECTORIES));
    let mut t = Table::new("trajectories", &["index", "path", "thresholds", "objective", "constraint"]);
    for (i, tr) in r.trajectories.iter().take(SHOWN_TRAJECTORIES).enumerate() {
        let mut path = tr.states[0].clone();
        for (a, x) in tr.actions.iter().zip(&tr.states[1..]) {
            let _ = write!(path, " > {a} > {x}");
        }
        let th = tr.thresholds.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ");
        t.row(vec![
            i.into(),
            path.into(),
            th.into(),
            tr.objective_cost.into(),
            tr.constraint_cost.into(),
        ]);
    }
    s.table(t);
    rep.push(s);
    Ok(rep)
}

pub const DEMOS: [&str; 3] = ["variance", "avar", "squander"];

/// Built-in demonstrations. `r0` applies to `variance` (default 10) and
/// `squander` (default 0.3).
pub fn demo_report(name: &str, r0: Option<f64>) -> Result<RunReport, ReportError> {
    let mut rep = RunReport::new(&format!("demo {name}"));
    match name {
        "variance" => {
            let r0 = r0.unwrap_or(10.0);
            if r0 < 0.0 {
                return Err(ReportError::InvalidArgument("variance threshold must be nonnegative".into()));
            }
            let d = demo_variance(r0);
            let sc = fixtures::variance();
            let mut s = Section::new("variance");
            let summary = match &d.selected {
                Some(p) => format!(
                    "{p} selected; seeks to incur losses: {}",
                    if d.seeks_losses { "yes" } else { "no" }
                ),
                None => "no policy meets the variance threshold".into(),
            };
            s.field("r0", r0)
                .field("selected", d.selected.clone().unwrap_or_else(|| "-".into()))
                .field("seeks_losses", d.seeks_losses)
                .field("summary", summary);
            let mut t = Table::new(
                "policies",
                &["policy", "action_at_s1", "expected_cost", "mean", "variance", "feasible"],
            );
            for p in &d.policies {
                t.row(vec![
                    p.name.as_str().into(),
                    p.action.as_str().into(),
                    p.expected_cost.into(),
                    p.mean_constraint_cost.into(),
                    p.variance.into(),
                    p.feasible.into(),
                ]);
            }
            s.table(t);
            s.table(instance_table(&sc.mdp));
            rep.push(s);
        }
        "avar" => {
            let d = demo_avar();
            let mut s = Section::new("avar");
            s.field("alpha", d.alpha)
                .field("threshold", d.threshold)
                .field("root_avar", d.root_avar);
            for (label, v) in &d.stage1_avar {
                s.field(&format!("avar_from_{label}"), *v);
            }
            s.field("root_acceptable", d.root_acceptable)
                .field("stage1_acceptable", d.stage1_acceptable)
                .field(
                    "summary",
                    format!(
                        "acceptable from every stage-1 state: {}; acceptable from the root: {}",
                        if d.stage1_acceptable { "yes" } else { "no" },
                        if d.root_acceptable { "yes" } else { "no" }
                    ),
                );
            let mut t = Table::new("outcomes", &["leaf", "prob", "total_cost"]);
            for o in &d.outcomes {
                t.row(vec![o.leaf.as_str().into(), o.prob.into(), o.total_cost.into()]);
            }
            s.table(t);
            s.table(instance_table(&fixtures::avar_tree(fixtures::AVAR_DEFAULT_COSTS)));
            rep.push(s);
        }
        "squander" => {
            let sc = fixtures::squander_save();
            let r0 = r0.unwrap_or(sc.r0);
            let mdp = &sc.mdp;
            let sol = solve(mdp, &sc.risk, r0)?;
            let (policy, rtg) = extract_policy(&sol, mdp.initial_state(), r0)?;
            let a = audit(mdp, &sc.risk, &sol, &policy, &rtg, AuditScope::Reachable)?;
            let b = audit_constant_threshold(mdp, &sc.risk, r0)?;
            let mut s = Section::new("squander");
            s.field("r0", r0)
                .field("solver_plan_consistent", a.overall)
                .field("constant_threshold_consistent", b.overall);
            let flagged = b
                .inconsistent()
                .map(|n| {
                    format!(
                        "{} (planned {}, re-solved {})",
                        n.state,
                        n.action_planned,
                        if n.actions_resolved.is_empty() {
                            "infeasible".to_string()
                        } else {
                            n.actions_resolved.join(",")
                        }
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            s.field("constant_threshold_flags", if flagged.is_empty() { "-".into() } else { flagged });
            s.table(instance_table(mdp));
            rep.push(s);
            rep.push(audit_section("solver_plan", &a));
            rep.push(audit_section("constant_threshold", &b));
        }
        other => return Err(ReportError::UnknownDemo(other.to_string())),
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(-14.000000000000002), "-14");
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(123456789012.0), "123456789000");
        assert_eq!(num(1e-9), "1e-9");
    }

    #[test]
    fn text_and_json_carry_the_same_fields() {
        let sc = fixtures::squander_save();
        let rep = solve_report(&sc, &RunOptions::default()).unwrap();
        let text = rep.to_text();
        let json = rep.to_json();
        for s in &rep.sections {
            assert!(text.contains(&format!("== {} ==", s.name)));
            for (k, _) in &s.fields {
                assert!(json["sections"][&s.name]["fields"].get(k).is_some(), "{k}");
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let sc = fixtures::squander_save();
        let a = solve_report(&sc, &RunOptions { oracle: true, ..Default::default() }).unwrap();
        let b = solve_report(&sc, &RunOptions { oracle: true, ..Default::default() }).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn error_codes() {
        let sc = fixtures::squander_save();
        let err = solve_report(&sc, &RunOptions { r0: Some(0.1), ..Default::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("0.185"));
        assert_eq!(demo_report("nope", None).unwrap_err().exit_code(), 2);
    }
}
