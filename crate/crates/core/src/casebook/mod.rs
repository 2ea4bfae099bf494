//! Reproducible scenarios bundling the case studies, with JSON reports.
//!
//! Each scenario carries a fixture of expected values tagged with their
//! provenance, renders its programs and predicates for the chosen options,
//! and runs a list of checks. Reports are deterministic for a fixed seed;
//! the runtime is only recorded when asked for.

pub mod programs;
mod scenarios;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judgment::{Sampler, Status, Verdict};
use crate::lang::{parse, Program};
use crate::linalg::Matrix;
use crate::rules::Policy;

#[derive(Clone, Debug, Serialize)]
pub struct Options {
    pub seed: u64,
    /// Random inputs per sampled judgment check.
    pub samples: usize,
    /// Overrides every fixture tolerance.
    pub tol: Option<f64>,
    /// Noise parameter p of the teleportation scenarios.
    pub noise: f64,
    /// Walk size n; positions run over 0..=n.
    pub walk_n: usize,
    pub policy: Policy,
    #[serde(skip)]
    pub timing: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 0, samples: 200, tol: None, noise: 0.9, walk_n: 4, policy: Policy::Strict, timing: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Expected {
    pub value: serde_json::Value,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fixture {
    pub id: String,
    pub title: String,
    pub expected: BTreeMap<String, Expected>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Semantics,
    Judgment,
    Projective,
    Outline,
    Comparability,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub status: Status,
    pub provenance: Provenance,
    /// Error for equalities, worst margin or slack for inequalities.
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub title: String,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} [{}] {}\n", self.scenario, status_word(self.status), self.title);
        for c in &self.checks {
            s.push_str(&format!(
                "  {:<5} {:<34} {:>12.3e}  {}\n",
                status_word(c.status),
                c.name,
                c.residual,
                c.detail
            ));
        }
        if let Some(ms) = self.runtime_ms {
            s.push_str(&format!("  runtime {ms} ms\n"));
        }
        s
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Passed => "pass",
        Status::Falsified => "FAIL",
        Status::Inconclusive => "?",
    }
}

/// Combined status: any failure fails, then any inconclusive check.
pub fn overall(statuses: impl IntoIterator<Item = Status>) -> Status {
    let mut out = Status::Passed;
    for s in statuses {
        match s {
            Status::Falsified => return Status::Falsified,
            Status::Inconclusive => out = Status::Inconclusive,
            Status::Passed => {}
        }
    }
    out
}

/// Programs and predicates of a scenario, rendered for given options.
#[derive(Clone, Debug, Default)]
pub struct Material {
    pub programs: Vec<(String, String)>,
    pub predicates: Vec<(String, Matrix)>,
    pub files: Vec<(String, String)>,
}

pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    fixture: &'static str,
    material: fn(&Options) -> Result<Material>,
    run: fn(&mut Ctx) -> Result<()>,
}

impl Scenario {
    pub fn fixture(&self) -> Result<Fixture> {
        let f: Fixture = serde_json::from_str(self.fixture)
            .map_err(|e| Error::Io(format!("fixture of {}: {e}", self.id)))?;
        if f.id != self.id {
            return Err(Error::Io(format!("fixture of {} names scenario {}", self.id, f.id)));
        }
        Ok(f)
    }

    pub fn material(&self, opts: &Options) -> Result<Material> {
        (self.material)(opts)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub title: String,
    pub programs: Vec<String>,
    pub checks: Vec<String>,
}

pub fn scenarios() -> &'static [Scenario] {
    scenarios::CATALOG
}

pub fn find(id: &str) -> Result<&'static Scenario> {
    scenarios()
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Invalid(format!("unknown scenario {id}")))
}

pub fn list_scenarios() -> Result<Vec<CatalogEntry>> {
    let opts = Options::default();
    scenarios()
        .iter()
        .map(|s| {
            let f = s.fixture()?;
            Ok(CatalogEntry {
                id: s.id.to_string(),
                title: s.title.to_string(),
                programs: s.material(&opts)?.programs.into_iter().map(|p| p.0).collect(),
                checks: f.expected.keys().cloned().collect(),
            })
        })
        .collect()
}

pub fn run_scenario(id: &str, opts: &Options) -> Result<Report> {
    let s = find(id)?;
    let start = Instant::now();
    let fixture = s.fixture()?;
    let material = s.material(opts)?;
    let mut programs = BTreeMap::new();
    for (name, src) in &material.programs {
        let p = parse(src).map_err(|e| Error::Io(format!("program {name} of {id}: {e}")))?;
        programs.insert(name.clone(), p);
    }
    let mut cx = Ctx { opts, fixture, material, programs, checks: Vec::new() };
    (s.run)(&mut cx)?;
    let mut missing: Vec<&String> =
        cx.fixture.expected.keys().filter(|k| !cx.checks.iter().any(|c| &c.name == *k)).collect();
    if let Some(k) = missing.pop() {
        return Err(Error::Io(format!("scenario {id} did not run its check {k}")));
    }
    Ok(Report {
        scenario: id.to_string(),
        title: s.title.to_string(),
        seed: opts.seed,
        status: overall(cx.checks.iter().map(|c| c.status)),
        checks: cx.checks,
        runtime_ms: opts.timing.then(|| start.elapsed().as_millis() as u64),
    })
}

/// Runs every scenario, in parallel unless `serial`. Reports come back in
/// catalog order either way.
pub fn run_all(opts: &Options, serial: bool) -> Vec<(String, Result<Report>)> {
    let ids: Vec<&str> = scenarios().iter().map(|s| s.id).collect();
    let go = |id: &&str| (id.to_string(), run_scenario(id, opts));
    if serial {
        ids.iter().map(go).collect()
    } else {
        ids.par_iter().map(go).collect()
    }
}

/// Writes `<dir>/<id>/` with one `.qw` file per program, a `fixture.json`
/// holding the expected values, options and predicates, and any extra
/// files of the scenario.
pub fn export_fixture(id: &str, dir: &Path, opts: &Options) -> Result<Vec<PathBuf>> {
    let s = find(id)?;
    let fixture = s.fixture()?;
    let m = s.material(opts)?;
    let root = dir.join(id);
    std::fs::create_dir_all(&root)?;
    let mut written = Vec::new();
    for (name, src) in &m.programs {
        let path = root.join(format!("{name}.qw"));
        std::fs::write(&path, format!("{src}\n"))?;
        written.push(path);
    }
    let predicates: BTreeMap<&str, &Matrix> = m.predicates.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let doc = serde_json::json!({
        "id": fixture.id,
        "title": fixture.title,
        "options": opts,
        "programs": m.programs.iter().map(|(n, _)| format!("{n}.qw")).collect::<Vec<_>>(),
        "predicates": predicates,
        "expected": fixture.expected,
    });
    let path = root.join("fixture.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
    written.push(path);
    for (name, content) in &m.files {
        let path = root.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
    }
    Ok(written)
}

/// State of a running scenario.
pub(crate) struct Ctx<'a> {
    pub opts: &'a Options,
    pub fixture: Fixture,
    pub material: Material,
    pub programs: BTreeMap<String, Program>,
    pub checks: Vec<CheckResult>,
}

impl Ctx<'_> {
    pub fn program(&self, name: &str) -> Result<Program> {
        self.programs.get(name).cloned().ok_or_else(|| Error::Io(format!("no program {name}")))
    }

    pub fn predicate(&self, name: &str) -> Result<Matrix> {
        self.material
            .predicates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::Io(format!("no predicate {name}")))
    }

    pub fn expected(&self, key: &str) -> Result<&Expected> {
        self.fixture.expected.get(key).ok_or_else(|| Error::Io(format!("fixture has no expected value {key}")))
    }

    pub fn expected_matrix(&self, key: &str) -> Result<Matrix> {
        Ok(serde_json::from_value(self.expected(key)?.value.clone())?)
    }

    fn tol(&self, key: &str) -> Result<f64> {
        Ok(self.opts.tol.or(self.expected(key)?.tol).unwrap_or(1e-6))
    }

    /// Sampler for the `k`-th sampled check of the scenario.
    pub fn sampler(&self, k: u64) -> Sampler {
        Sampler::new(self.opts.samples, self.opts.seed.wrapping_mul(1_000_003).wrapping_add(k))
    }

    pub fn rng(&self, k: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.opts.seed);
        r.set_stream(1000 + k);
        r
    }

    fn push(&mut self, key: &str, kind: CheckKind, status: Status, residual: f64, tolerance: f64, detail: String) -> Result<()> {
        let provenance = self.expected(key)?.provenance;
        self.checks.push(CheckResult { name: key.to_string(), kind, status, provenance, residual, tolerance, detail });
        Ok(())
    }

    /// Passes when the error is within tolerance.
    pub fn close(&mut self, key: &str, kind: CheckKind, err: f64, detail: impl Into<String>) -> Result<()> {
        let tol = self.tol(key)?;
        let st = if err.is_finite() && err <= tol { Status::Passed } else { Status::Falsified };
        self.push(key, kind, st, err, tol, detail.into())
    }

    /// Passes when the slack is at least −tolerance.
    pub fn at_least(&mut self, key: &str, kind: CheckKind, slack: f64, detail: impl Into<String>) -> Result<()> {
        let tol = self.tol(key)?;
        let st = if slack >= -tol { Status::Passed } else { Status::Falsified };
        self.push(key, kind, st, slack, tol, detail.into())
    }

    /// Compares an observed outcome against the fixture's "holds"/"fails".
    pub fn outcome(&mut self, key: &str, kind: CheckKind, observed: Status, residual: f64, detail: impl Into<String>) -> Result<()> {
        let want = match self.expected(key)?.value.as_str() {
            Some("holds") => Status::Passed,
            Some("fails") => Status::Falsified,
            _ => return Err(Error::Io(format!("expected value {key} must be \"holds\" or \"fails\""))),
        };
        let st = match observed {
            Status::Inconclusive => Status::Inconclusive,
            s if s == want => Status::Passed,
            _ => Status::Falsified,
        };
        let word = if observed == Status::Passed { "holds" } else if observed == Status::Falsified { "fails" } else { "inconclusive" };
        let mut detail = detail.into();
        if detail.is_empty() {
            detail = word.to_string();
        } else {
            detail = format!("{word}; {detail}");
        }
        self.push(key, kind, st, residual, 0.0, detail)
    }

    pub fn verdict(&mut self, key: &str, kind: CheckKind, v: &Verdict) -> Result<()> {
        let detail = format!("{} samples{}", v.samples_used, if v.notes.is_empty() { String::new() } else { format!("; {}", v.notes.join("; ")) });
        self.outcome(key, kind, v.status, v.worst_margin, detail)
    }
}
