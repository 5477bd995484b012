//! Scenario pipeline: mission automaton, decomposition, per-team planning, simulation
//! and rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use overwatch_core::automata::{Alphabet, Dfa};
use overwatch_core::decomp::{certify, decompose, Decomposition};
use overwatch_core::mdp::{
    build_motion_mdp, compose_planning_mdp, product_task, validate_capability_mdp, PlanningMdp,
    ProductMdp,
};
use overwatch_core::plan::{optm_path, overlay_svg, Overlay, Plan};
use overwatch_core::sim::{run_sim, SimLog};
use overwatch_core::svg;
use overwatch_core::terrain::{discretize, load_heightmap, Cell, CellGrid, DiscretizeParams, Layer};
use overwatch_core::trust::{mc_trust, timeline_csv, TrustParams};
use serde_json::json;

use crate::error::CliError;
use crate::scenario::{Scenario, TeamConfig, PRIMARY};

/// Pixels per cell in rendered SVGs.
pub const RENDER_PX: f64 = 24.0;
/// Samples of the terminal-step Monte-Carlo cross-check.
pub const MC_SAMPLES: usize = 100_000;

/// A named plan set entry: the plan or the reason there is none.
pub type PlanSet = (String, Result<Plan, String>);

/// Everything planned for one team.
#[derive(Debug, Clone)]
pub struct TeamRun {
    pub id: String,
    pub subtask: usize,
    pub alphabet: Alphabet,
    pub product: ProductMdp,
    pub planning: PlanningMdp,
    pub params: TrustParams,
    /// One entry per plan set, primary first.
    pub plans: Vec<PlanSet>,
}

impl TeamRun {
    pub fn plan(&self, set: &str) -> Option<&Plan> {
        self.plans
            .iter()
            .find(|(n, _)| n == set)
            .and_then(|(_, p)| p.as_ref().ok())
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub seed: u64,
    pub global: Dfa,
    pub decomposition: Decomposition,
    pub grid: CellGrid,
    pub forts: BTreeMap<String, Cell>,
    /// Teams with an assigned subtask, sorted by id.
    pub teams: Vec<TeamRun>,
    pub idle: Vec<String>,
    pub sim: SimLog,
}

impl PipelineOutput {
    /// Ids of teams whose primary plan is unsatisfiable.
    pub fn unsatisfiable(&self) -> Vec<String> {
        self.teams
            .iter()
            .filter(|t| t.plan(PRIMARY).is_none())
            .map(|t| t.id.clone())
            .collect()
    }

    /// Names of all plan sets in output order.
    pub fn plan_sets(&self) -> Vec<String> {
        self.teams
            .first()
            .map(|t| t.plans.iter().map(|(n, _)| n.clone()).collect())
            .unwrap_or_default()
    }
}

pub fn load_grid(s: &Scenario) -> Result<CellGrid, CliError> {
    let path = &s.terrain.pgm;
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let h = load_heightmap(&bytes, s.terrain.resolution)
        .map_err(|e| CliError::validation("terrain", e))?;
    discretize(
        &h,
        &DiscretizeParams {
            cell_size: s.terrain.cell_size,
            sensing_radius: s.terrain.sensing_radius,
            g_min: s.terrain.g_min,
        },
    )
    .map_err(|e| CliError::validation("terrain", e))
}

/// Runs every stage. Unsatisfiable teams are recorded in their [`TeamRun`] rather than
/// aborting the run.
pub fn run_pipeline(s: &Scenario, seed: u64) -> Result<PipelineOutput, CliError> {
    let global = s.mission()?;
    let decomposition = decompose(&global);
    let certified = certify(&global, &decomposition).map_err(|e| CliError::validation("decompose", e))?;
    if !certified {
        return Err(CliError::validation("decompose", "decomposition failed its certificate"));
    }
    let teams = s.teams_by_id();
    if teams.len() < decomposition.len() {
        return Err(CliError::validation(
            "assign",
            format!(
                "insufficient teams: {} subtasks but {} teams",
                decomposition.len(),
                teams.len()
            ),
        ));
    }

    let grid = load_grid(s)?;
    let forts = s.fort_cells();
    let motion = build_motion_mdp(&grid, &forts, s.terrain.slip)
        .map_err(|e| CliError::validation("motion", e))?;

    let mut runs = Vec::new();
    for (k, team) in teams.iter().enumerate().take(decomposition.len()) {
        let part = &decomposition.parts[k];
        let alphabet = decomposition.partition[k].clone();
        let tag = |stage| move |e: overwatch_core::mdp::MdpError| {
            CliError::validation(stage, format!("team {}: {e}", team.id))
        };
        let te = validate_capability_mdp(&team.capability, std::slice::from_ref(&alphabet))
            .map_err(tag("capability"))?;
        let product = product_task(&te, part).map_err(tag("product"))?;
        let start = Cell::new(team.start[0], team.start[1]);
        let planning = compose_planning_mdp(&product, &motion, start).map_err(tag("planning"))?;
        let params = team.trust_params()?;
        let plans = plan_sets(s, team, &planning, &grid, &params)?;
        runs.push(TeamRun {
            id: team.id.clone(),
            subtask: k,
            alphabet,
            product,
            planning,
            params,
            plans,
        });
    }
    let idle = teams[decomposition.len()..].iter().map(|t| t.id.clone()).collect();

    let primary: Vec<Plan> = runs.iter().filter_map(|t| t.plan(PRIMARY).cloned()).collect();
    let sim = run_sim(&primary, s.sim.speed, s.sim.dt);
    Ok(PipelineOutput {
        seed,
        global,
        decomposition,
        grid,
        forts,
        teams: runs,
        idle,
        sim,
    })
}

fn plan_sets(
    s: &Scenario,
    team: &TeamConfig,
    ppm: &PlanningMdp,
    grid: &CellGrid,
    params: &TrustParams,
) -> Result<Vec<PlanSet>, CliError> {
    let mut sets = vec![(PRIMARY.to_string(), params.clone())];
    for v in &s.variants {
        sets.push((v.name.clone(), team.variant_params(v)?));
    }
    Ok(sets
        .into_iter()
        .map(|(name, p)| {
            let plan = optm_path(ppm, grid, &p)
                .map(|mut plan| {
                    plan.team = team.id.clone();
                    plan
                })
                .map_err(|e| e.to_string());
            if let Err(e) = &plan {
                log::warn!("team {} ({name}): {e}", team.id);
            }
            (name, plan)
        })
        .collect())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Plan file of `team` in plan set `set` below an output directory.
pub fn plan_path(dir: &Path, set: &str, team: &str) -> PathBuf {
    dir.join("plans").join(set).join(format!("{team}.json"))
}

/// Writes all artifacts of a run below `dir`.
pub fn write_outputs(out: &PipelineOutput, dir: &Path) -> Result<(), CliError> {
    write(&dir.join("automata/global.json"), out.global.to_json())?;
    write(&dir.join("automata/global.dot"), out.global.to_dot("global"))?;
    for (k, part) in out.decomposition.parts.iter().enumerate() {
        let name = format!("subtask_{}", k + 1);
        write(&dir.join(format!("automata/{name}.json")), part.to_json())?;
        write(&dir.join(format!("automata/{name}.dot")), part.to_dot(&name))?;
    }
    write(&dir.join("decomposition.txt"), out.decomposition.report(&out.global))?;
    write(&dir.join("terrain.csv"), out.grid.to_csv())?;
    for (layer, name) in [
        (Layer::Traversability, "traversability"),
        (Layer::LineOfSight, "line_of_sight"),
    ] {
        write(
            &dir.join(format!("render/{name}.svg")),
            out.grid.heatmap_svg(layer, RENDER_PX),
        )?;
    }

    for t in &out.teams {
        write(&dir.join(format!("product/{}.dot", t.id)), t.product.to_dot("product"))?;
        write(&dir.join(format!("planning/{}.json", t.id)), t.planning.to_json())?;
        for (set, plan) in &t.plans {
            if let Ok(plan) = plan {
                write(&plan_path(dir, set, &t.id), plan.to_json())?;
                write(
                    &dir.join(format!("trust/{set}/{}.csv", t.id)),
                    timeline_csv(t.params.tau0, &plan.beliefs()),
                )?;
            }
        }
    }
    for set in out.plan_sets() {
        let plans: Vec<&Plan> = out.teams.iter().filter_map(|t| t.plan(&set)).collect();
        write(
            &dir.join(format!("render/paths_{set}.svg")),
            render_plans(&out.grid, &out.forts, &[(set.as_str(), plans)]),
        )?;
    }
    write_sim(&out.sim, &out.grid, dir)?;
    write(&dir.join("report.json"), report(out))
}

fn write_sim(log: &SimLog, grid: &CellGrid, dir: &Path) -> Result<(), CliError> {
    for (team, _) in &log.status {
        let one = SimLog {
            records: log.records.iter().filter(|r| &r.team == team).cloned().collect(),
            status: log.status.iter().filter(|(t, _)| t == team).cloned().collect(),
        };
        write(&dir.join(format!("sim/{team}.csv")), one.to_csv())?;
    }
    write(&dir.join("sim/sim.svg"), log.to_svg(grid, RENDER_PX))
}

fn report(out: &PipelineOutput) -> String {
    let subtasks: Vec<_> = out
        .decomposition
        .partition
        .iter()
        .enumerate()
        .map(|(k, block)| {
            json!({
                "subtask": k + 1,
                "alphabet": block.letters(),
                "team": out.teams.iter().find(|t| t.subtask == k).map(|t| &t.id),
            })
        })
        .collect();
    let teams: Vec<_> = out
        .teams
        .iter()
        .map(|t| {
            let plans: serde_json::Map<String, serde_json::Value> = t
                .plans
                .iter()
                .map(|(set, p)| {
                    let v = match p {
                        Ok(p) => json!({
                            "steps": p.path.len(),
                            "terminal_mean": p.terminal_trust.mean,
                            "terminal_var": p.terminal_trust.var,
                        }),
                        Err(e) => json!({ "error": e }),
                    };
                    (set.clone(), v)
                })
                .collect();
            json!({
                "id": t.id,
                "status": if t.plan(PRIMARY).is_some() { "planned" } else { "unsatisfiable" },
                "planning_states": t.planning.num_states(),
                "plans": plans,
                "terminal_mc_check": t.plan(PRIMARY).map(|p| mc_check(p, &out.grid, &t.params, out.seed)),
            })
        })
        .collect();
    let v = json!({
        "seed": out.seed,
        "mission_states": out.global.num_states(),
        "subtasks": subtasks,
        "idle_teams": out.idle,
        "teams": teams,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

/// Monte-Carlo estimate of the last trust step of `plan`.
fn mc_check(plan: &Plan, grid: &CellGrid, p: &TrustParams, seed: u64) -> serde_json::Value {
    let n = plan.path.len();
    let prev = if n >= 2 {
        plan.path[n - 2].belief()
    } else {
        p.tau0
    };
    let mc = mc_trust(prev, grid.stats(plan.path[n - 1].cell()), p, MC_SAMPLES, seed);
    json!({ "samples": MC_SAMPLES, "mean": mc.mean, "var": mc.var })
}

/// Plan sets over the traversability heatmap. Each set gets its own color; teams within
/// a set are told apart by dash pattern.
pub fn render_plans(
    grid: &CellGrid,
    forts: &BTreeMap<String, Cell>,
    sets: &[(&str, Vec<&Plan>)],
) -> String {
    const DASHES: [Option<&str>; 3] = [None, Some("6 3"), Some("2 2")];
    let overlays: Vec<Overlay<'_>> = sets
        .iter()
        .enumerate()
        .flat_map(|(i, (_, plans))| {
            plans.iter().enumerate().map(move |(j, &plan)| Overlay {
                plan,
                color: svg::palette(i),
                dash: DASHES[j % DASHES.len()],
            })
        })
        .collect();
    overlay_svg(grid, Layer::Traversability, forts, &overlays, RENDER_PX)
}

/// Reads the plans of every set found below `dir`, teams sorted by id.
pub fn read_plan_sets(s: &Scenario, dir: &Path) -> Result<Vec<(String, Vec<Plan>)>, CliError> {
    let mut sets = vec![PRIMARY.to_string()];
    sets.extend(s.variants.iter().map(|v| v.name.clone()));
    let mut out = Vec::new();
    for set in sets {
        let mut plans = Vec::new();
        for team in s.teams_by_id() {
            let path = plan_path(dir, &set, &team.id);
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            plans.push(Plan::from_json(&text).map_err(|e| CliError::validation("plan", e))?);
        }
        if !plans.is_empty() {
            out.push((set, plans));
        }
    }
    Ok(out)
}

/// Re-runs the simulation from the primary plans stored below `dir`.
pub fn simulate(s: &Scenario, dir: &Path) -> Result<SimLog, CliError> {
    let grid = load_grid(s)?;
    let plans = read_plan_sets(s, dir)?
        .into_iter()
        .find(|(set, _)| set == PRIMARY)
        .map(|(_, p)| p)
        .ok_or_else(|| CliError::validation("simulate", format!("no plans under {}", dir.display())))?;
    let log = run_sim(&plans, s.sim.speed, s.sim.dt);
    write_sim(&log, &grid, dir)?;
    Ok(log)
}

/// Overlay of every stored plan set.
pub fn render(s: &Scenario, dir: &Path) -> Result<String, CliError> {
    let grid = load_grid(s)?;
    let sets = read_plan_sets(s, dir)?;
    let refs: Vec<(&str, Vec<&Plan>)> = sets
        .iter()
        .map(|(n, p)| (n.as_str(), p.iter().collect()))
        .collect();
    Ok(render_plans(&grid, &s.fort_cells(), &refs))
}

/// Checks a stored plan against a stored planning MDP: it starts at the initial state,
/// every step follows a positive-probability transition and it ends in an accepting
/// state.
pub fn check_plan(planning_json: &str, plan: &Plan) -> Result<(), String> {
    let v: serde_json::Value = serde_json::from_str(planning_json).map_err(|e| e.to_string())?;
    let states = v["states"].as_array().ok_or("missing states")?;
    let key = |st: &serde_json::Value| {
        (
            st["s"].as_str().unwrap_or_default().to_string(),
            st["x"].as_u64().unwrap_or(u64::MAX) as usize,
            st["row"].as_u64().unwrap_or(u64::MAX) as usize,
            st["col"].as_u64().unwrap_or(u64::MAX) as usize,
        )
    };
    let index: BTreeMap<_, usize> = states.iter().enumerate().map(|(i, st)| (key(st), i)).collect();
    let ids = plan
        .path
        .iter()
        .map(|p| {
            index
                .get(&(p.s.clone(), p.x, p.row, p.col))
                .copied()
                .ok_or_else(|| format!("unknown state ({}, {}, {}, {})", p.s, p.x, p.row, p.col))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ids.first().map(|&i| i as u64) != v["initial"].as_u64() {
        return Err("plan does not start at the initial state".into());
    }
    let mut edges = BTreeMap::<(usize, usize), f64>::new();
    for t in v["transitions"].as_array().ok_or("missing transitions")? {
        let from = t["from"].as_u64().ok_or("bad transition")? as usize;
        for o in t["to"].as_array().ok_or("bad transition")? {
            let to = o[0].as_u64().ok_or("bad outcome")? as usize;
            let p = o[1].as_f64().ok_or("bad outcome")?;
            let e = edges.entry((from, to)).or_default();
            *e = e.max(p);
        }
    }
    for w in ids.windows(2) {
        if edges.get(&(w[0], w[1])).copied().unwrap_or(0.0) <= 0.0 {
            return Err(format!("no transition from state {} to {}", w[0], w[1]));
        }
    }
    let last = *ids.last().ok_or("empty plan")?;
    if states[last]["accepting"].as_bool() != Some(true) {
        return Err("plan does not end in an accepting state".into());
    }
    Ok(())
}
