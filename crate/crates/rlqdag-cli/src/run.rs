use std::time::Duration;

use anyhow::{Context, Result};

use rlqdag::baseline::{enumerate, BaselineConfig, BaselineOutcome};
use rlqdag::cost::{best_of, best_plan};
use rlqdag::eval::Stats;
use rlqdag::frontend::Query;
use rlqdag::plans::count_plans;
use rlqdag::transforms::{expand, ExpansionConfig, ExpansionOutcome};
use rlqdag::{EqId, Store, Term};

use crate::{Budget, EnumArgs, Mode};

pub const CSV_HEADER: &str = "query,mode,budget_ms,plans,elapsed_ms,plans_per_ms,complete";

pub enum Space {
    Dag { store: Box<Store>, root: EqId, outcome: ExpansionOutcome },
    Terms(BaselineOutcome),
}

pub struct RunResult {
    pub space: Space,
    pub plans: u128,
    pub elapsed: Duration,
    pub complete: bool,
}

/// Runs one enumerator on `q`.
pub fn run(q: &Query, mode: Mode, o: &EnumArgs) -> Result<RunResult> {
    match mode {
        Mode::Rlqdag => {
            let mut store = Store::new(q.catalog.clone());
            let root = store.add_term(&q.term).context("interning the query")?;
            let cfg = ExpansionConfig { budget: o.budget.duration(), rep: o.rep, rules: o.rules, ..Default::default() };
            let outcome = expand(&mut store, &cfg);
            let root = store.find(root);
            let plans = count_plans(&store, root).context("counting plans")?;
            let (elapsed, complete) = (outcome.elapsed, outcome.complete());
            Ok(RunResult { space: Space::Dag { store: Box::new(store), root, outcome }, plans, elapsed, complete })
        }
        Mode::Baseline => {
            let cfg = BaselineConfig { budget: o.budget.duration(), rep: o.rep, rules: o.rules, ..Default::default() };
            let out = enumerate(&q.term, &q.catalog, &cfg);
            let (plans, elapsed, complete) = (out.plans.len() as u128, out.elapsed, out.complete());
            Ok(RunResult { space: Space::Terms(out), plans, elapsed, complete })
        }
    }
}

impl RunResult {
    pub fn plans_per_ms(&self) -> f64 {
        let ms = self.elapsed.as_secs_f64() * 1e3;
        if ms > 0.0 {
            self.plans as f64 / ms
        } else {
            f64::INFINITY
        }
    }

    pub fn csv_row(&self, query: &str, mode: Mode, budget: Budget) -> String {
        let q = if query.contains([',', '"']) { format!("\"{}\"", query.replace('"', "\"\"")) } else { query.to_string() };
        format!(
            "{},{},{},{},{:.3},{:.3},{}",
            q,
            mode.name(),
            budget.label(),
            self.plans,
            self.elapsed.as_secs_f64() * 1e3,
            self.plans_per_ms(),
            self.complete
        )
    }

    /// DAG JSON for the store, or the plan list for the baseline.
    pub fn dag_json(&self) -> String {
        match &self.space {
            Space::Dag { store, root, .. } => rlqdag::dump::to_json(store, *root) + "\n",
            Space::Terms(out) => {
                let plans: Vec<String> = out.plans.iter().map(|t| t.to_string()).collect();
                let v = serde_json::json!({ "version": rlqdag::dump::DAG_VERSION, "plans": plans });
                serde_json::to_string_pretty(&v).expect("json") + "\n"
            }
        }
    }

    pub fn best(&self, q: &Query, stats: Option<&Stats>) -> Option<(Term, f64)> {
        match &self.space {
            Space::Dag { store, root, .. } => best_plan(store, *root, stats),
            Space::Terms(out) => {
                let mut s = Store::new(q.catalog.clone());
                s.add_term(&q.term).ok()?;
                best_of(&s, stats, out.plans.iter().map(|t| &**t))
            }
        }
    }

    pub fn summary(&self, q: &Query) -> String {
        let what = match &self.space {
            Space::Dag { store, outcome, .. } => format!(
                "{:?}, {} classes, {} nodes, {} firings of {} attempts",
                outcome.stop,
                store.live_classes().len(),
                store.node_count(),
                outcome.firings,
                outcome.attempts
            ),
            Space::Terms(out) => format!("{:?}, {} terms visited", out.stop, out.visited),
        };
        format!("{}: {} plans in {:.3} ms ({})", q.source, self.plans, self.elapsed.as_secs_f64() * 1e3, what)
    }
}
