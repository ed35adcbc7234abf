use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Status given to a case whose bundle could not be loaded.
pub const UNREADABLE: &str = "unreadable";
/// Status given to a re-scored case with no stored trajectory.
pub const MISSING_LOG: &str = "missing_log";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub task_id: String,
    pub status: String,
    pub completed: bool,
    pub r_out: f64,
    pub r_part: f64,
    pub r_llm: f64,
    pub total: f64,
    pub wall_time: f64,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CaseRow {
    pub fn failed(task_id: impl Into<String>, status: &str, error: String) -> Self {
        CaseRow {
            task_id: task_id.into(),
            status: status.into(),
            completed: false,
            r_out: 0.0,
            r_part: 0.0,
            r_llm: 0.0,
            total: 0.0,
            wall_time: 0.0,
            cost: 0.0,
            error: Some(error),
        }
    }

    /// Whether an episode actually ran for this case.
    pub fn attempted(&self) -> bool {
        self.status != UNREADABLE && self.status != MISSING_LOG
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n: usize,
    /// Percent of cases with an exact match; absent when there are no tasks.
    pub accuracy: Option<f64>,
    pub completion: Option<f64>,
    pub mean_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub rows: Vec<CaseRow>,
}

impl BenchmarkReport {
    pub fn from_rows(rows: Vec<CaseRow>) -> Self {
        let n = rows.len();
        if n == 0 {
            return BenchmarkReport { n, accuracy: None, completion: None, mean_cost: None, note: Some("no tasks".into()), rows };
        }
        let exact = rows.iter().filter(|r| r.r_out == 1.0).count();
        let completed = rows.iter().filter(|r| r.completed).count();
        let cost: f64 = rows.iter().map(|r| r.cost).sum();
        BenchmarkReport {
            n,
            accuracy: Some(100.0 * exact as f64 / n as f64),
            completion: Some(100.0 * completed as f64 / n as f64),
            mean_cost: Some(cost / n as f64),
            note: None,
            rows,
        }
    }

    pub fn all_attempted(&self) -> bool {
        self.rows.iter().all(CaseRow::attempted)
    }

    /// The report with timing-dependent fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> BenchmarkReport {
        let rows = self.rows.iter().map(|r| CaseRow { wall_time: 0.0, cost: 0.0, ..r.clone() }).collect();
        BenchmarkReport { mean_cost: self.mean_cost.map(|_| 0.0), rows, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn render_text(&self) -> String {
        let header = ["task", "status", "r_out", "r_part", "r_llm", "total", "wall_s", "cost"];
        let mut cells: Vec<[String; 8]> = vec![header.map(String::from)];
        for r in &self.rows {
            cells.push([
                r.task_id.clone(),
                r.status.clone(),
                format!("{:.0}", r.r_out),
                format!("{:.3}", r.r_part),
                format!("{:.3}", r.r_llm),
                format!("{:.3}", r.total),
                format!("{:.2}", r.wall_time),
                format!("{:.6}", r.cost),
            ]);
        }
        let widths: Vec<usize> = (0..8).map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap()).collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| if c < 2 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out.push('\n');
        match (self.accuracy, self.completion, self.mean_cost) {
            (Some(a), Some(c), Some(m)) => {
                let _ = writeln!(out, "tasks: {}\naccuracy: {a:.1}%\ncompletion: {c:.1}%\nmean cost: ${m:.6}", self.n);
            }
            _ => {
                let _ = writeln!(out, "tasks: 0 (no tasks)");
            }
        }
        out
    }
}
