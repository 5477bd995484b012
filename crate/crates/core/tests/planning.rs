use std::collections::BTreeMap;

use overwatch_core::mdp::{
    build_motion_mdp, compose_planning_mdp, product_task, CapabilityMdp, PlanningMdp, ROW_TOL,
};
use overwatch_core::plan::{optm_path, oracle_path, Plan};
use overwatch_core::spec_lang::{compile_own, parse_re};
use overwatch_core::terrain::{Cell, CellGrid, CellStats};
use overwatch_core::trust::{TrustBelief, TrustParams};
use proptest::prelude::*;

fn two_fort_team() -> CapabilityMdp {
    CapabilityMdp::from_json(
        r#"{"states":[{"name":"idle"},{"name":"at_a","label":"a"},{"name":"at_b","label":"b"},
                      {"name":"fail","label":"err"}],
            "actions":["go_a","go_b","wait"],"initial":"idle","failure":"fail",
            "propositions":["a","b","err"],
            "transitions":[
              {"from":"idle","action":"go_a","to":[["at_a",0.8],["fail",0.2]]},
              {"from":"idle","action":"go_b","to":[["at_b",0.8],["fail",0.2]]},
              {"from":"at_a","action":"go_b","to":[["at_b",0.8],["fail",0.2]]},
              {"from":"at_b","action":"go_a","to":[["at_a",0.8],["fail",0.2]]},
              {"from":"idle","action":"wait","to":[["idle",1.0]]},
              {"from":"fail","action":"wait","to":[["idle",1.0]]}]}"#,
    )
    .unwrap()
}

fn stats() -> impl Strategy<Value = CellStats> {
    (0.3f64..1.0, 0.0f64..0.01, 0.0f64..1.0, 0.0f64..0.01, proptest::bool::weighted(0.15)).prop_map(
        |(g_mean, g_var, los_mean, los_var, nogo)| CellStats {
            g_mean,
            g_var,
            los_mean,
            los_var,
            nogo,
        },
    )
}

/// 3x3 grid with forts `a` at (0,2) and `b` at (2,2), starting at (1,0).
fn instance() -> impl Strategy<Value = (CellGrid, f64)> {
    (proptest::collection::vec(stats(), 9), 0.0f64..0.2).prop_map(|(mut stats, slip)| {
        for i in [2, 3, 8] {
            stats[i].nogo = false;
        }
        let grid = CellGrid {
            rows: 3,
            cols: 3,
            cell_size: 2,
            sensing_radius: 1,
            resolution: 1.0,
            stats,
        };
        (grid, slip)
    })
}

fn planning(grid: &CellGrid, slip: f64, spec: &str) -> PlanningMdp {
    let te = two_fort_team();
    let g = compile_own(&parse_re(spec).unwrap()).unwrap();
    let product = product_task(&te, &g).unwrap();
    let forts = BTreeMap::from([("a".to_string(), Cell::new(0, 2)), ("b".to_string(), Cell::new(2, 2))]);
    let motion = build_motion_mdp(grid, &forts, slip).unwrap();
    for s in te.row_sums().into_iter().chain(product.row_sums()).chain(motion.row_sums()) {
        assert!((s - 1.0).abs() <= ROW_TOL);
    }
    compose_planning_mdp(&product, &motion, Cell::new(1, 0)).unwrap()
}

fn valid(ppm: &PlanningMdp, plan: &Plan) -> bool {
    plan.states.first() == Some(&ppm.initial())
        && plan.states.windows(2).all(|w| ppm.successors(w[0]).contains(&w[1]))
        && plan.states.last().is_some_and(|&i| ppm.is_accepting(i))
        && plan.path.len() == plan.states.len()
        && plan.path.windows(2).all(|w| w[0].cell().is_adjacent_or_same(&w[1].cell()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plans_are_valid_and_dominated_by_the_oracle(
        (grid, slip) in instance(),
        beta in (0.0f64..0.9, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let ppm = planning(&grid, slip, "a b + b a");
        for s in ppm.row_sums() {
            prop_assert!((s - 1.0).abs() <= ROW_TOL);
        }
        let p = TrustParams {
            beta_mean: [beta.0, beta.1, beta.2],
            beta_cov: [[0.001, 0.0, 0.0], [0.0, 0.002, 0.0], [0.0, 0.0, 0.001]],
            residual_var: 0.0005,
            tau0: TrustBelief::new(0.5, 0.01),
        };
        match (optm_path(&ppm, &grid, &p), oracle_path(&ppm, &grid, &p, None)) {
            (Ok(plan), Ok(best)) => {
                prop_assert!(valid(&ppm, &plan));
                prop_assert!(valid(&ppm, &best));
                prop_assert!(plan.terminal_trust.mean <= best.terminal_trust.mean + 1e-12);
                let word = plan.task_word(&ppm);
                prop_assert!(ppm.product.dfa.accepts(&word).unwrap(), "{:?}", word);
                let history_free = TrustParams { beta_mean: [0.0, beta.1, beta.2], ..p };
                let a = optm_path(&ppm, &grid, &history_free).unwrap();
                let b = oracle_path(&ppm, &grid, &history_free, None).unwrap();
                prop_assert!((a.terminal_trust.mean - b.terminal_trust.mean).abs() <= 1e-12);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "search and oracle disagree on satisfiability: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn optm_path_is_deterministic((grid, slip) in instance()) {
        let ppm = planning(&grid, slip, "a b");
        let p = TrustParams::deterministic([0.27, 0.33, 0.40]);
        if let Ok(plan) = optm_path(&ppm, &grid, &p) {
            prop_assert_eq!(plan.to_json(), optm_path(&ppm, &grid, &p).unwrap().to_json());
        }
    }
}
