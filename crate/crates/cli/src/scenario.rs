//! Scenario file schema and mission compilation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use overwatch_core::automata::{combine, is_identifier, Alphabet, CombineKind, Dfa};
use overwatch_core::mdp::RawCapability;
use overwatch_core::spec_lang::{compile, parse_ltl, parse_re, SpecAst};
use overwatch_core::terrain::Cell;
use overwatch_core::trust::{check_psd, nearest_psd, TrustParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub terrain: TerrainConfig,
    /// Fort proposition to `[row, col]`.
    pub forts: BTreeMap<String, [usize; 2]>,
    pub tasks: Tasks,
    pub teams: Vec<TeamConfig>,
    /// Alternative weight vectors planned alongside each team's own parameters.
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainConfig {
    /// Relative to the scenario file.
    pub pgm: PathBuf,
    /// Meters per pixel.
    pub resolution: f64,
    pub cell_size: usize,
    pub sensing_radius: usize,
    pub g_min: f64,
    #[serde(default)]
    pub slip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tasks {
    pub items: Vec<TaskItem>,
    /// Regular expression over task ids; only concatenation and union are allowed.
    pub combinator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Re,
    Ltl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskItem {
    pub id: String,
    pub kind: TaskKind,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdMode {
    /// Indefinite weight covariances are a validation error.
    #[default]
    Reject,
    /// Indefinite weight covariances are replaced by their nearest PSD matrix.
    Project,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamConfig {
    pub id: String,
    pub capability: RawCapability,
    /// `[row, col]`.
    pub start: [usize; 2],
    pub trust: TrustParams,
    #[serde(default)]
    pub psd: PsdMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub beta_mean: [f64; 3],
    #[serde(default)]
    pub beta_cov: [[f64; 3]; 3],
    #[serde(default)]
    pub residual_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// m/s.
    pub speed: f64,
    /// Seconds.
    pub dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { speed: 1.0, dt: 0.1 }
    }
}

/// Name of the plan set that uses each team's own trust parameters.
pub const PRIMARY: &str = "trust";

impl Scenario {
    /// Reads and validates a scenario; the terrain path is resolved against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut s = Scenario::from_json(&text)?;
        if s.terrain.pgm.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            s.terrain.pgm = base.join(&s.terrain.pgm);
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::validation("scenario", e))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::validation("scenario", m));
        for name in self.forts.keys() {
            if !is_identifier(name) || name.chars().any(|c| c.is_ascii_uppercase()) {
                return bad(format!("fort name `{name}` must be a lower-case identifier"));
            }
        }
        let mut ids = BTreeSet::new();
        for t in &self.teams {
            if !ids.insert(t.id.as_str()) {
                return bad(format!("duplicate team id `{}`", t.id));
            }
        }
        let mut names = BTreeSet::from([PRIMARY]);
        for v in &self.variants {
            if !names.insert(v.name.as_str()) || !is_identifier(&v.name) {
                return bad(format!("invalid or duplicate variant name `{}`", v.name));
            }
        }
        if !(self.sim.speed > 0.0 && self.sim.dt > 0.0) {
            return bad("sim speed and dt must be positive".into());
        }
        for atom in self.task_atoms()? {
            if !self.forts.contains_key(&atom) {
                return bad(format!("task atom `{atom}` has no fort"));
            }
        }
        Ok(())
    }

    pub fn fort_cells(&self) -> BTreeMap<String, Cell> {
        self.forts
            .iter()
            .map(|(n, &[r, c])| (n.clone(), Cell::new(r, c)))
            .collect()
    }

    /// Teams sorted by id.
    pub fn teams_by_id(&self) -> Vec<&TeamConfig> {
        let mut teams: Vec<_> = self.teams.iter().collect();
        teams.sort_by(|a, b| a.id.cmp(&b.id));
        teams
    }

    fn parsed_tasks(&self) -> Result<Vec<(String, SpecAst)>, CliError> {
        self.tasks
            .items
            .iter()
            .map(|t| {
                let ast = match t.kind {
                    TaskKind::Re => parse_re(&t.text),
                    TaskKind::Ltl => parse_ltl(&t.text),
                }
                .map_err(|e| CliError::validation("spec", format!("task `{}`: {e}", t.id)))?;
                Ok((t.id.clone(), ast))
            })
            .collect()
    }

    fn task_atoms(&self) -> Result<BTreeSet<String>, CliError> {
        Ok(self
            .parsed_tasks()?
            .iter()
            .flat_map(|(_, ast)| ast.atoms())
            .collect())
    }

    /// Compiles every task over the shared atom alphabet and folds them with the
    /// combinator into the global mission automaton.
    pub fn mission(&self) -> Result<Dfa, CliError> {
        let tasks = self.parsed_tasks()?;
        let alphabet = Alphabet::new(tasks.iter().flat_map(|(_, a)| a.atoms()))
            .map_err(|e| CliError::validation("spec", e))?;
        let mut compiled = BTreeMap::new();
        for (id, ast) in &tasks {
            let dfa = compile(ast, &alphabet)
                .map_err(|e| CliError::validation("spec", format!("task `{id}`: {e}")))?;
            if compiled.insert(id.clone(), dfa).is_some() {
                return Err(CliError::validation("spec", format!("duplicate task id `{id}`")));
            }
        }
        let expr = parse_re(&self.tasks.combinator)
            .map_err(|e| CliError::validation("spec", format!("combinator: {e}")))?;
        let g = fold(&expr, &compiled)?;
        if g.is_empty_language() {
            return Err(CliError::validation("spec", "mission language is empty"));
        }
        Ok(g)
    }
}

fn fold(expr: &SpecAst, tasks: &BTreeMap<String, Dfa>) -> Result<Dfa, CliError> {
    let op = |kind, a: &SpecAst, b: &SpecAst| {
        combine(kind, &[fold(a, tasks)?, fold(b, tasks)?])
            .map_err(|e| CliError::validation("spec", format!("combinator: {e}")))
    };
    match expr {
        SpecAst::Atom(id) => tasks
            .get(id)
            .cloned()
            .ok_or_else(|| CliError::validation("spec", format!("unknown task id `{id}`"))),
        SpecAst::Concat(a, b) => op(CombineKind::Concat, a, b),
        SpecAst::Union(a, b) => op(CombineKind::Union, a, b),
        other => Err(CliError::validation(
            "spec",
            format!("combinator supports only concatenation and union, found {}", other.kind_name()),
        )),
    }
}

impl TeamConfig {
    /// Trust parameters after the covariance policy is applied.
    pub fn trust_params(&self) -> Result<TrustParams, CliError> {
        let mut p = self.trust.clone();
        if self.psd == PsdMode::Project && check_psd(&p.beta_cov).is_err() {
            log::info!("team {}: projecting the weight covariance onto the PSD cone", self.id);
            p.beta_cov = nearest_psd(&p.beta_cov);
        }
        p.validate()
            .map_err(|e| CliError::validation("trust", format!("team {}: {e}", self.id)))?;
        Ok(p)
    }

    /// Trust parameters of a variant: its weights with this team's initial belief.
    pub fn variant_params(&self, v: &Variant) -> Result<TrustParams, CliError> {
        let p = TrustParams {
            beta_mean: v.beta_mean,
            beta_cov: v.beta_cov,
            residual_var: v.residual_var,
            tau0: self.trust.tau0,
        };
        p.validate()
            .map_err(|e| CliError::validation("trust", format!("variant {}: {e}", v.name)))?;
        Ok(p)
    }
}
