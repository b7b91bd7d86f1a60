use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{create_dir, run_file_stem, SuiteResult};
use super::spec::{SuiteName, HEAD_GRID};
use crate::baselines::{compare_to_hnnsae, BaselineKind};
use crate::model::RunRecord;
use crate::stats::{mean, one_tailed_welch, sample_std, two_way_anova, AnovaTable, Direction, FactorialData};
use crate::{Error, Result};

/// A named CSV table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn from_csv(name: impl Into<String>, csv: &str) -> Table {
        let mut lines = csv.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
        Table {
            name: name.into(),
            header: lines.next().unwrap_or_default(),
            rows: lines.collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("| {} |\n|{}\n", self.header.join(" | "), "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.join(" | "));
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Mean, sample std and max over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        Summary {
            runs: xs.len(),
            mean: mean(xs),
            std: sample_std(xs),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Result of checking one acceptance band against a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl BandCheck {
    fn from(name: &str, outcome: Result<(bool, String)>) -> BandCheck {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("not computable: {e}")));
        BandCheck {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Files written by [`emit_report`] and the band verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub bands: Vec<BandCheck>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.bands.iter().all(|b| b.passed)
    }
}

/// Epochs the summaries report at.
#[derive(Debug, Clone, Copy)]
enum Phase {
    Mid,
    Late,
}

struct View<'a> {
    result: &'a SuiteResult,
    early: usize,
    mid: usize,
    late: usize,
}

impl<'a> View<'a> {
    fn new(result: &'a SuiteResult) -> Self {
        let (early, mid, late) = result.spec.epochs();
        View {
            result,
            early,
            mid,
            late,
        }
    }

    fn epoch(&self, p: Phase) -> usize {
        match p {
            Phase::Mid => self.mid,
            Phase::Late => self.late,
        }
    }

    fn span(&self, p: Phase) -> (usize, usize) {
        match p {
            Phase::Mid => (self.early, self.mid),
            Phase::Late => (self.mid, self.late),
        }
    }

    /// Completed records of `cell`, or an error when fewer than two.
    fn records(&self, cell: &str) -> Result<Vec<&'a RunRecord>> {
        let r = self.result.records(cell);
        if r.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "cell {cell} has {} completed runs; statistics need 2",
                r.len()
            )));
        }
        Ok(r)
    }

    fn metric(&self, cell: &str, f: impl Fn(&RunRecord) -> Result<f64>) -> Result<Vec<f64>> {
        self.records(cell)?.into_iter().map(f).collect()
    }

    fn loss(&self, cell: &str, p: Phase) -> Result<Vec<f64>> {
        let e = self.epoch(p);
        self.metric(cell, |r| checkpoint(r, e).map(|c| c.0))
    }

    fn auc(&self, cell: &str, p: Phase) -> Result<Vec<f64>> {
        let e = self.epoch(p);
        self.metric(cell, |r| checkpoint(r, e).map(|c| c.1))
    }

    fn rod(&self, cell: &str, p: Phase) -> Result<Vec<f64>> {
        let (a, b) = self.span(p);
        self.metric(cell, |r| r.rod(a, b))
    }

    fn roin(&self, cell: &str, p: Phase) -> Result<Vec<f64>> {
        let (a, b) = self.span(p);
        self.metric(cell, |r| r.roin(a, b))
    }

    fn final_auc(&self, cell: &str) -> Result<Vec<f64>> {
        self.metric(cell, |r| Ok(r.final_test_auc))
    }
}

fn checkpoint(r: &RunRecord, epoch: usize) -> Result<(f64, f64)> {
    r.at_epoch(epoch)
        .map(|c| (c.train_loss, c.test_auc))
        .ok_or_else(|| Error::InvalidArgument(format!("no checkpoint at epoch {epoch}")))
}

fn push_summary(row: &mut Vec<String>, s: Summary, with_max: bool) {
    row.push(num(s.mean));
    row.push(num(s.std));
    if with_max {
        row.push(num(s.max));
    }
}

/// Rows of a cell x phase table. Cells whose statistics cannot be formed are
/// skipped and reported through `warnings`.
fn phase_table(
    v: &View,
    name: &str,
    label: &str,
    cells: &[(String, String)],
    with_ratios: bool,
    warnings: &mut Vec<String>,
) -> Table {
    let mut header = vec!["epoch", label, "runs", "train_loss_mean", "train_loss_std"];
    if with_ratios {
        header.extend(["rod_mean", "rod_std"]);
    }
    header.extend(["test_auc_mean", "test_auc_std", "test_auc_max"]);
    if with_ratios {
        header.extend(["roin_mean", "roin_std"]);
    }
    let mut t = Table::new(name, &header);
    for p in [Phase::Mid, Phase::Late] {
        for (cell, tag) in cells {
            let row = (|| -> Result<Vec<String>> {
                let loss = Summary::of(&v.loss(cell, p)?);
                let auc = Summary::of(&v.auc(cell, p)?);
                let mut row = vec![v.epoch(p).to_string(), tag.clone(), loss.runs.to_string()];
                push_summary(&mut row, loss, false);
                if with_ratios {
                    push_summary(&mut row, Summary::of(&v.rod(cell, p)?), false);
                }
                push_summary(&mut row, auc, true);
                if with_ratios {
                    push_summary(&mut row, Summary::of(&v.roin(cell, p)?), false);
                }
                Ok(row)
            })();
            match row {
                Ok(r) => t.rows.push(r),
                Err(e) => warnings.push(format!("{name}: {cell} excluded at epoch {}: {e}", v.epoch(p))),
            }
        }
    }
    t
}

fn heads_cells(prefix: &str) -> Vec<(String, String)> {
    HEAD_GRID.iter().map(|h| (format!("{prefix}heads-{h}"), h.to_string())).collect()
}

/// Factorial data over (SMOTE off/on) x heads using run indices completed in
/// every cell, so the design stays balanced.
fn grid_data(v: &View, f: impl Fn(&RunRecord) -> Result<f64>) -> Result<FactorialData> {
    let spec = &v.result.spec;
    let complete: Vec<usize> = (0..spec.runs)
        .filter(|&r| v.result.entries.iter().filter(|e| e.run_index == r).all(|e| e.record.is_some()))
        .collect();
    let mut cells = Vec::new();
    for s in ["off", "on"] {
        let mut row = Vec::new();
        for h in HEAD_GRID {
            let id = format!("smote-{s}-heads-{h}");
            let reps = complete
                .iter()
                .map(|&r| {
                    let e = v.result.entries.iter().find(|e| e.cell == id && e.run_index == r).expect("cell exists");
                    f(e.record.as_ref().expect("complete run"))
                })
                .collect::<Result<Vec<f64>>>()?;
            row.push(reps);
        }
        cells.push(row);
    }
    FactorialData::new(&cells)
}

/// Grid ANOVAs keyed by (metric, epoch): test AUC and ROIn at the middle and
/// final checkpoints.
fn grid_anovas(v: &View) -> Vec<(String, usize, Result<AnovaTable>)> {
    let mut out = Vec::new();
    for p in [Phase::Mid, Phase::Late] {
        let e = v.epoch(p);
        let (a, b) = v.span(p);
        out.push((
            "test_auc".to_string(),
            e,
            grid_data(v, |r| checkpoint(r, e).map(|c| c.1)).and_then(|d| two_way_anova(&d)),
        ));
        out.push(("roin".to_string(), e, grid_data(v, |r| r.roin(a, b)).and_then(|d| two_way_anova(&d))));
    }
    out.sort_by(|x, y| x.0.cmp(&y.0).reverse().then(x.1.cmp(&y.1)));
    out
}

fn welch_cells(row: &mut Vec<String>, a: &[f64], b: &[f64], dir: Direction) {
    match one_tailed_welch(a, b, dir) {
        Ok(w) => row.extend([num(w.t), num(w.df), num(w.p)]),
        Err(_) => row.extend([String::new(), String::new(), String::new()]),
    }
}

fn embedding_tests(v: &View, warnings: &mut Vec<String>) -> Table {
    let mut t = Table::new(
        "embedding_tests",
        &[
            "epoch",
            "train_loss_with_mean",
            "train_loss_without_mean",
            "train_loss_t",
            "train_loss_df",
            "train_loss_p",
            "test_auc_with_mean",
            "test_auc_without_mean",
            "test_auc_t",
            "test_auc_df",
            "test_auc_p",
        ],
    );
    let all = |cell: &str| -> Result<Vec<&RunRecord>> { v.records(cell) };
    let (with, without) = match (all("embedding-on"), all("embedding-off")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            warnings.push(format!("embedding_tests: {e}"));
            return t;
        }
    };
    for epoch in (v.early..=v.late).step_by(v.early) {
        let col = |rs: &[&RunRecord], i: usize| -> Result<Vec<f64>> {
            rs.iter().map(|r| checkpoint(r, epoch).map(|c| if i == 0 { c.0 } else { c.1 })).collect()
        };
        let (Ok(lw), Ok(lo), Ok(aw), Ok(ao)) = (col(&with, 0), col(&without, 0), col(&with, 1), col(&without, 1)) else {
            warnings.push(format!("embedding_tests: missing checkpoint at epoch {epoch}"));
            continue;
        };
        let mut row = vec![epoch.to_string(), num(mean(&lw)), num(mean(&lo))];
        welch_cells(&mut row, &lw, &lo, Direction::Less);
        row.extend([num(mean(&aw)), num(mean(&ao))]);
        welch_cells(&mut row, &aw, &ao, Direction::Greater);
        t.rows.push(row);
    }
    t
}

fn baseline_table(v: &View, warnings: &mut Vec<String>) -> Table {
    let mut t = Table::new(
        "table10",
        &["model", "smote", "runs", "test_auc_mean", "test_auc_std", "test_auc_max", "t", "df", "p"],
    );
    let hnnsae = match v.final_auc("hnnsae-smote-on") {
        Ok(x) => x,
        Err(e) => {
            warnings.push(format!("table10: {e}"));
            return t;
        }
    };
    let s = Summary::of(&hnnsae);
    let mut row = vec!["hnnsae".into(), "on".into(), s.runs.to_string()];
    push_summary(&mut row, s, true);
    row.extend([String::new(), String::new(), String::new()]);
    t.rows.push(row);
    for smote in ["on", "off"] {
        for kind in BaselineKind::ALL {
            let cell = format!("{}-smote-{smote}", kind.name());
            match v.final_auc(&cell) {
                Ok(b) => {
                    let s = Summary::of(&b);
                    let mut row = vec![kind.name().into(), smote.into(), s.runs.to_string()];
                    push_summary(&mut row, s, true);
                    match compare_to_hnnsae(&hnnsae, &b) {
                        Ok(c) => row.extend([num(c.t), num(c.df), num(c.p)]),
                        Err(_) => row.extend([String::new(), String::new(), String::new()]),
                    }
                    t.rows.push(row);
                }
                Err(e) => warnings.push(format!("table10: {e}")),
            }
        }
    }
    t
}

fn runs_table(result: &SuiteResult) -> Table {
    let mut t = Table::new(
        "runs",
        &["cell", "run_index", "seed", "status", "config_sha256", "final_test_auc", "final_train_loss", "digest"],
    );
    for e in &result.entries {
        let (status, auc, loss, digest) = match &e.record {
            Some(r) => ("ok", num(r.final_test_auc), r.final_train_loss.map(num).unwrap_or_default(), r.digest.clone()),
            None => ("failed", String::new(), String::new(), String::new()),
        };
        t.rows.push(vec![
            e.cell.clone(),
            e.run_index.to_string(),
            e.seed.to_string(),
            status.into(),
            e.config_hash(),
            auc,
            loss,
            digest,
        ]);
    }
    t
}

/// Summary tables for `result`, recomputed from its run records alone. The
/// output depends only on the records, never on timing or scheduling.
pub fn summary_tables(result: &SuiteResult) -> (Vec<Table>, Vec<String>) {
    let v = View::new(result);
    let mut warnings = Vec::new();
    let mut tables = vec![runs_table(result)];
    match result.spec.suite {
        SuiteName::SmoteAblation => {
            let cells = [("smote-off", "before-smote"), ("smote-on", "after-smote")].map(|(c, t)| (c.into(), t.into()));
            tables.push(phase_table(&v, "table3", "processing", &cells, true, &mut warnings));
        }
        SuiteName::HeadsAblation => {
            tables.push(phase_table(&v, "table4", "heads", &heads_cells(""), true, &mut warnings));
        }
        SuiteName::AnovaGrid => {
            tables.push(phase_table(&v, "table4", "heads", &heads_cells("smote-on-"), true, &mut warnings));
            tables.push(phase_table(&v, "table5", "heads", &heads_cells("smote-off-"), true, &mut warnings));
            for (metric, epoch, table) in grid_anovas(&v) {
                let name = format!("anova_{metric}_{epoch}");
                match table {
                    Ok(a) => tables.push(Table::from_csv(name, &a.to_csv())),
                    Err(e) => warnings.push(format!("{name}: {e}")),
                }
            }
        }
        SuiteName::EmbeddingAblation => {
            let cells = [("embedding-on", "with-embedding"), ("embedding-off", "without-embedding")]
                .map(|(c, t)| (c.into(), t.into()));
            tables.push(phase_table(&v, "embedding_summary", "embedding", &cells, true, &mut warnings));
            tables.push(embedding_tests(&v, &mut warnings));
        }
        SuiteName::Baselines => tables.push(baseline_table(&v, &mut warnings)),
    }
    (tables, warnings)
}

fn ordered(name: &str, lo_label: &str, lo: &[f64], hi_label: &str, hi: &[f64], alpha: Option<f64>) -> Result<(bool, String)> {
    let (ml, mh) = (mean(lo), mean(hi));
    let mut pass = mh > ml;
    let mut detail = format!("{hi_label} {mh:.4} vs {lo_label} {ml:.4}");
    if let Some(alpha) = alpha {
        let w = one_tailed_welch(hi, lo, Direction::Greater)?;
        pass &= w.p < alpha;
        let _ = write!(detail, ", one-tailed p = {:.3e}", w.p);
    }
    let _ = name;
    Ok((pass, detail))
}

fn in_band(label: &str, xs: &[f64], lo: f64, hi: f64) -> (bool, String) {
    let m = mean(xs);
    (
        (lo..=hi).contains(&m),
        format!("{label} mean {m:.4} (max {:.4}), band [{lo}, {hi}]", Summary::of(xs).max),
    )
}

/// Acceptance bands that apply to this suite.
pub fn acceptance_bands(result: &SuiteResult) -> Vec<BandCheck> {
    let v = View::new(result);
    let mut out = Vec::new();
    let mut check = |name: &str, f: &dyn Fn() -> Result<(bool, String)>| out.push(BandCheck::from(name, f()));
    match result.spec.suite {
        SuiteName::SmoteAblation => {
            check("headline test AUC with SMOTE", &|| {
                Ok(in_band("with-SMOTE test AUC", &v.auc("smote-on", Phase::Late)?, 0.92, 0.96))
            });
            check("SMOTE gap and overfitting without SMOTE", &|| {
                let on = mean(&v.auc("smote-on", Phase::Late)?);
                let off_late = mean(&v.auc("smote-off", Phase::Late)?);
                let off_mid = mean(&v.auc("smote-off", Phase::Mid)?);
                let gap = on - off_late;
                Ok((
                    gap >= 0.08 && off_late < off_mid,
                    format!(
                        "gap {gap:.4} (needs >= 0.08); without SMOTE {off_mid:.4} at epoch {} -> {off_late:.4} at epoch {}",
                        v.mid, v.late
                    ),
                ))
            });
        }
        SuiteName::HeadsAblation | SuiteName::AnovaGrid => {
            let prefix = if result.spec.suite == SuiteName::AnovaGrid { "smote-on-" } else { "" };
            check("head-count trend", &|| {
                let h2 = mean(&v.auc(&format!("{prefix}heads-2"), Phase::Late)?);
                let h8 = mean(&v.auc(&format!("{prefix}heads-8"), Phase::Late)?);
                let r2 = mean(&v.roin(&format!("{prefix}heads-2"), Phase::Late)?);
                let r16 = mean(&v.roin(&format!("{prefix}heads-16"), Phase::Late)?);
                Ok((
                    h2 < h8 && r16 < r2,
                    format!("AUC 2-head {h2:.4} vs 8-head {h8:.4}; late ROIn 16-head {r16:.4} vs 2-head {r2:.4}"),
                ))
            });
            if result.spec.suite == SuiteName::AnovaGrid {
                let anovas = grid_anovas(&v);
                check("ANOVA structure", &|| {
                    let mut pass = true;
                    let mut detail = String::new();
                    for (metric, epoch, table) in &anovas {
                        let t = table.as_ref().map_err(|e| Error::InvalidArgument(e.to_string()))?;
                        let df: Vec<usize> = t.rows.iter().map(|r| r.df).collect();
                        let fa = t.factor_a().f_crit.unwrap_or(f64::NAN);
                        let fb = t.factor_b().f_crit.unwrap_or(f64::NAN);
                        pass &= df == [1, 3, 3, 32, 39] && (fa - 4.1491).abs() < 1e-3 && (fb - 2.9011).abs() < 1e-3;
                        let _ = write!(detail, "{metric}@{epoch}: df {df:?}, F crit {fa:.4}/{fb:.4}; ");
                        if metric == "test_auc" {
                            let p = t.factor_a().p.unwrap_or(f64::NAN);
                            pass &= p < 1e-6;
                            let _ = write!(detail, "factor A p {p:.3e}; ");
                        }
                    }
                    Ok((pass, detail.trim_end_matches("; ").to_string()))
                });
            }
        }
        SuiteName::EmbeddingAblation => {
            check("entity embedding improves test AUC", &|| {
                ordered(
                    "embedding",
                    "without",
                    &v.auc("embedding-off", Phase::Late)?,
                    "with",
                    &v.auc("embedding-on", Phase::Late)?,
                    Some(0.05),
                )
            });
        }
        SuiteName::Baselines => {
            check("baseline ordering HNNSAE > DT > LR", &|| {
                let h = v.final_auc("hnnsae-smote-on")?;
                let dt = v.final_auc("tree-smote-on")?;
                let lr = v.final_auc("logistic-smote-on")?;
                let (p1, d1) = ordered("", "DT", &dt, "HNNSAE", &h, Some(0.05))?;
                let (p2, d2) = ordered("", "LR", &lr, "DT", &dt, Some(0.05))?;
                let (b1, d3) = in_band("LR", &lr, 0.64, 0.74);
                let (b2, d4) = in_band("DT", &dt, 0.80, 0.88);
                Ok((p1 && p2 && b1 && b2, format!("{d1}; {d2}; {d3}; {d4}")))
            });
        }
    }
    out
}

fn markdown(result: &SuiteResult, tables: &[Table], warnings: &[String], bands: &[BandCheck]) -> String {
    let spec = &result.spec;
    let (early, mid, late) = spec.epochs();
    let mut md = format!("# Suite report: {}\n\n", spec.suite);
    let _ = writeln!(
        md,
        "- runs per cell: {}\n- base seed: {}\n- epochs: {late} (checkpoints every {early}; summaries at {mid} and {late})\n- split ratio: {}\n- dataset: {} rows, sha256 {}\n- started (unix): {}\n- version: {}\n",
        spec.runs,
        spec.base_seed,
        spec.split_ratio,
        result.provenance.dataset_rows,
        result.provenance.dataset_sha256,
        result.provenance.started_unix_secs,
        result.provenance.version,
    );
    md.push_str("## Acceptance bands\n\n");
    for b in bands {
        let _ = writeln!(md, "- **{}** {}: {}", if b.passed { "PASS" } else { "FAIL" }, b.name, b.detail);
    }
    md.push('\n');
    let failed = result.failures();
    if !failed.is_empty() || !warnings.is_empty() {
        md.push_str("## Warnings\n\n");
        for e in failed {
            let _ = writeln!(md, "- {} run {} failed: {}", e.cell, e.run_index, e.error.as_deref().unwrap_or(""));
        }
        for w in warnings {
            let _ = writeln!(md, "- {w}");
        }
        md.push('\n');
    }
    if spec.suite == SuiteName::EmbeddingAblation {
        md.push_str(
            "The per-checkpoint tests are reported individually with no multiple-comparison correction.\n\n",
        );
    }
    for t in tables.iter().filter(|t| t.name != "runs") {
        let _ = writeln!(md, "## {}\n\n{}", t.name, t.to_markdown());
    }
    md
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Writes `summary/<table>.csv`, `curves/<cell>__run<i>.csv` and `report.md`
/// under `dir`.
pub fn emit_report(result: &SuiteResult, dir: &Path) -> Result<Report> {
    let (tables, warnings) = summary_tables(result);
    let bands = acceptance_bands(result);
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut files = Vec::new();
    let summary = dir.join("summary");
    let curves = dir.join("curves");
    create_dir(&summary)?;
    create_dir(&curves)?;
    for t in &tables {
        write(&summary.join(format!("{}.csv", t.name)), &t.to_csv(), &mut files)?;
    }
    for e in &result.entries {
        if let Some(r) = e.record.as_ref().filter(|r| !r.checkpoints.is_empty()) {
            let mut csv = String::from("epoch,train_loss,test_auc\n");
            for c in &r.checkpoints {
                let _ = writeln!(csv, "{},{},{}", c.epoch, num(c.train_loss), num(c.test_auc));
            }
            write(&curves.join(format!("{}.csv", run_file_stem(&e.cell, e.run_index))), &csv, &mut files)?;
        }
    }
    write(&dir.join("report.md"), &markdown(result, &tables, &warnings, &bands), &mut files)?;
    Ok(Report {
        files,
        bands,
        warnings,
    })
}
