//! Report assembly and rendering.
//!
//! One report value per run, emitted either as an aligned text table or
//! as a single JSON document (`--json`). Both views print the same
//! numbers: the table formats every float through [`num6`] (or
//! [`sci6`] for residuals), so a JSON consumer can reproduce the table
//! digit for digit.

use serde::Serialize;
use varcomp::{
    AlchemyResult, CrossedEstimate, FamSizeEstimate, MomentSummary, OneWayEstimate,
    OverlapDistribution, RegressionEstimate, RowCovDiagnostic,
};

/// Fixed six-decimal rendering used for every float in table output.
pub fn num6(x: f64) -> String {
    format!("{x:.6}")
}

/// Scientific rendering for quantities that live near zero (residuals).
pub fn sci6(x: f64) -> String {
    format!("{x:.6e}")
}

/// Everything needed to rerun an estimation. Worker count is absent by
/// design: it cannot change any number in the report, and reports must
/// be byte-identical across worker counts.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regressor_cols: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuffle_chunks: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
}

impl RunConfig {
    /// A config that records only the input location and column schema.
    pub fn bare(input: String) -> Self {
        RunConfig {
            input,
            group_col: None,
            value_col: None,
            regressor_cols: None,
            row_col: None,
            col_col: None,
            timestamp_col: None,
            chunks: None,
            shuffle_chunks: None,
            seed: None,
            tol: None,
            max_iter: None,
            max_pairs: None,
        }
    }
}

/// Shape summary of the data the estimate was computed from.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum DatasetSummary {
    Grouped {
        n_groups: usize,
        n_obs: usize,
        count_moments: MomentSummary,
    },
    Crossed {
        n_rows: usize,
        n_cols: usize,
        n_entries: usize,
    },
}

/// Full-data estimate, one variant per model.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ModelEstimate {
    OneWay(OneWayEstimate),
    FamSize(FamSizeEstimate),
    Regression(RegressionEstimate),
    Crossed(CrossedEstimate),
}

/// Overlap diagnostic block for the crossed model.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapSection {
    pub distribution: OverlapDistribution,
    pub diagnostic: RowCovDiagnostic,
}

/// The single document an `estimate` run emits.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub model: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ModelEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alchemy: Option<AlchemyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSection>,
}

/// The document a `compare` run emits.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub model: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub random_sizes: OneWayEstimate,
    pub fixed_sizes: OneWayEstimate,
    pub max_abs_diff: f64,
}

/// Simple two-column aligned table builder.
pub struct Table {
    lines: Vec<String>,
    pending: Vec<(String, String)>,
}

impl Table {
    pub fn new() -> Self {
        Table {
            lines: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.flush_pending();
        self.lines.push(text.into());
    }

    pub fn blank(&mut self) {
        self.flush_pending();
        self.lines.push(String::new());
    }

    /// An indented `label value` row; consecutive rows align values.
    pub fn row(&mut self, label: impl Into<String>, value: impl Into<String>) {
        self.pending.push((label.into(), value.into()));
    }

    fn flush_pending(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let width = self.pending.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        for (label, value) in self.pending.drain(..) {
            self.lines.push(format!("  {label:<width$}  {value}"));
        }
    }

    pub fn finish(mut self) -> String {
        self.flush_pending();
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

fn clamp_lines(t: &mut Table, components: &[(&str, bool, f64)]) {
    let clamped: Vec<&(&str, bool, f64)> = components.iter().filter(|(_, c, _)| *c).collect();
    if clamped.is_empty() {
        t.line("clamping: none");
    } else {
        for (name, _, raw) in clamped {
            t.line(format!(
                "clamping: {name} truncated to 0 (raw solution {})",
                num6(*raw)
            ));
        }
    }
}

fn dataset_section(t: &mut Table, dataset: &DatasetSummary) {
    t.line("dataset");
    match dataset {
        DatasetSummary::Grouped {
            n_groups,
            n_obs,
            count_moments,
        } => {
            t.row("groups (r)", n_groups.to_string());
            t.row("observations (M)", n_obs.to_string());
            t.row("group size mean", num6(count_moments.mean));
            t.row("group size variance", num6(count_moments.var));
        }
        DatasetSummary::Crossed {
            n_rows,
            n_cols,
            n_entries,
        } => {
            t.row("rows (r)", n_rows.to_string());
            t.row("columns (c)", n_cols.to_string());
            t.row("ratings (n)", n_entries.to_string());
        }
    }
}

fn estimate_section(t: &mut Table, estimate: &ModelEstimate) {
    t.blank();
    t.line("estimates");
    match estimate {
        ModelEstimate::OneWay(e) => {
            t.row("mu", num6(e.mu));
            t.row("sigma_a2", num6(e.sigma_a2));
            t.row("sigma_e2", num6(e.sigma_e2));
            t.row("size mean (nu1)", num6(e.nu1));
            t.row("size variance (nu2)", num6(e.nu2));
            clamp_lines(
                t,
                &[
                    ("sigma_a2", e.clamped_sigma_a2, e.raw_sigma_a2),
                    ("sigma_e2", e.clamped_sigma_e2, e.raw_sigma_e2),
                ],
            );
        }
        ModelEstimate::FamSize(e) => {
            t.row("c1", num6(e.c1));
            t.row("c2", num6(e.c2));
            t.row("sigma_a2", num6(e.sigma_a2));
            t.row("sigma_e2", num6(e.sigma_e2));
            clamp_lines(
                t,
                &[
                    ("sigma_a2", e.clamped_sigma_a2, e.raw_sigma_a2),
                    ("sigma_e2", e.clamped_sigma_e2, e.raw_sigma_e2),
                ],
            );
            t.line(format!(
                "solver: {} after {} iterations, residual {}",
                if e.converged { "converged" } else { "did not converge" },
                e.iterations,
                sci6(e.residual_norm)
            ));
        }
        ModelEstimate::Regression(e) => {
            for (j, g) in e.gamma.iter().enumerate() {
                t.row(format!("gamma{}", j + 1), num6(*g));
            }
            t.row("sigma_a2", num6(e.sigma_a2));
            t.row("sigma_e2", num6(e.sigma_e2));
            t.row("residual mean", sci6(e.residual_summary.mean));
            t.row("residual variance", num6(e.residual_summary.var));
            clamp_lines(
                t,
                &[
                    ("sigma_a2", e.clamped_sigma_a2, e.raw_sigma_a2),
                    ("sigma_e2", e.clamped_sigma_e2, e.raw_sigma_e2),
                ],
            );
        }
        ModelEstimate::Crossed(e) => {
            t.row("mu", num6(e.mu));
            t.row("sigma_a2", num6(e.sigma_a2));
            t.row("sigma_b2", num6(e.sigma_b2));
            t.row("sigma_e2", num6(e.sigma_e2));
            t.row("row count mean", num6(e.row_count_moments.mean));
            t.row("row count variance", num6(e.row_count_moments.var));
            t.row("column count mean", num6(e.col_count_moments.mean));
            t.row("column count variance", num6(e.col_count_moments.var));
            clamp_lines(
                t,
                &[
                    ("sigma_a2", e.clamped_sigma_a2, e.raw_sigma_a2),
                    ("sigma_b2", e.clamped_sigma_b2, e.raw_sigma_b2),
                    ("sigma_e2", e.clamped_sigma_e2, e.raw_sigma_e2),
                ],
            );
        }
    }
}

fn alchemy_section(t: &mut Table, a: &AlchemyResult) {
    t.blank();
    t.line(format!("chunk-averaged estimates (g = {})", a.g));
    t.row("parameter", "estimate      std_error     clamped_chunks");
    for (k, name) in a.parameter_names.iter().enumerate() {
        let se = match &a.std_errors {
            Some(se) => num6(se[k]),
            None => "n/a".to_string(),
        };
        t.row(
            name.clone(),
            format!("{:<12}  {:<12}  {}", num6(a.theta_bar[k]), se, a.clamp_counts[k]),
        );
    }
    if a.std_errors.is_none() {
        t.line("note: standard errors need at least two chunks");
    }
}

fn overlap_section(t: &mut Table, o: &OverlapSection) {
    t.blank();
    t.line(format!(
        "row-overlap diagnostic ({} pairs, {})",
        o.distribution.pairs_evaluated,
        if o.distribution.exhaustive {
            "exhaustive"
        } else {
            "sampled"
        }
    ));
    t.row("mean shared columns", num6(o.distribution.mean_t));
    t.row("model row-sum covariance", num6(o.diagnostic.model_cov));
    t.row("empirical row-sum covariance", num6(o.diagnostic.empirical_cov));
    let atoms = &o.distribution.support;
    let shown = atoms.iter().take(10);
    let rendered: Vec<String> = shown.map(|(tt, p)| format!("{tt}:{}", num6(*p))).collect();
    let suffix = if atoms.len() > 10 {
        format!(" ... ({} atoms total)", atoms.len())
    } else {
        String::new()
    };
    t.line(format!("support t:prob  {}{}", rendered.join("  "), suffix));
}

impl EstimateReport {
    pub fn render_table(&self) -> String {
        let mut t = Table::new();
        t.line(format!("model: {}", self.model));
        t.line(format!("input: {}", self.config.input));
        t.blank();
        dataset_section(&mut t, &self.dataset);
        if let Some(est) = &self.estimate {
            estimate_section(&mut t, est);
        }
        if let Some(a) = &self.alchemy {
            alchemy_section(&mut t, a);
        }
        if let Some(o) = &self.overlap {
            overlap_section(&mut t, o);
        }
        t.finish()
    }
}

impl CompareReport {
    pub fn render_table(&self) -> String {
        let mut t = Table::new();
        t.line(format!("model: {}", self.model));
        t.line(format!("input: {}", self.config.input));
        t.blank();
        dataset_section(&mut t, &self.dataset);
        t.blank();
        t.line("estimates");
        t.row("parameter", "random_sizes  fixed_sizes   abs_diff");
        let rows = [
            ("mu", self.random_sizes.mu, self.fixed_sizes.mu),
            ("sigma_a2", self.random_sizes.sigma_a2, self.fixed_sizes.sigma_a2),
            ("sigma_e2", self.random_sizes.sigma_e2, self.fixed_sizes.sigma_e2),
        ];
        for (name, fr, fixed) in rows {
            t.row(
                name,
                format!("{:<12}  {:<12}  {}", num6(fr), num6(fixed), num6((fr - fixed).abs())),
            );
        }
        let any_clamp = self.random_sizes.clamped_sigma_a2
            || self.random_sizes.clamped_sigma_e2
            || self.fixed_sizes.clamped_sigma_a2
            || self.fixed_sizes.clamped_sigma_e2;
        if any_clamp {
            t.line("clamping: at least one estimator truncated a component at 0");
        } else {
            t.line("clamping: none");
        }
        t.line(format!("max abs difference: {}", num6(self.max_abs_diff)));
        t.finish()
    }
}

/// Render any serialisable report as pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialisation cannot fail");
    s.push('\n');
    s
}
