use mtsr_core::layout::{
    generate_layout, shortest_distances, GridLayout, LayoutParams, Placement, Poi, Side,
    StationPlan,
};
use mtsr_oracles::{floyd_warshall, reachability};
use proptest::prelude::*;

fn plan(workers: u32) -> StationPlan {
    StationPlan {
        workstations: vec![
            (Placement::Side(Side::West), workers),
            (Placement::Side(Side::South), workers),
            (Placement::Side(Side::East), workers),
        ],
        charger: (Placement::Side(Side::North), 1),
    }
}

fn edge_list(layout: &GridLayout) -> Vec<(usize, usize, f64)> {
    layout
        .edges
        .iter()
        .map(|e| (e.from, e.to, e.length))
        .collect()
}

fn poi_cell(layout: &GridLayout, p: Poi) -> usize {
    match p {
        Poi::Shelf(m) => layout.shelves[m],
        Poi::Workstation(i) => layout.workstations[i].cell,
        Poi::Charger => layout.charger.cell,
    }
}

#[test]
fn distance_matrix_equals_floyd_warshall() {
    let params = LayoutParams {
        blocks_x: 2,
        blocks_y: 1,
        shelf_rows: 2,
        block_width: 3,
        cell_pitch: 1.3,
    };
    let layout = generate_layout(&params, &plan(1)).unwrap();
    let fw = floyd_warshall(layout.cells.len(), &edge_list(&layout));
    let d = shortest_distances(&layout);
    for a in d.pois() {
        for b in d.pois() {
            let want = fw[poi_cell(&layout, a)][poi_cell(&layout, b)];
            assert!(
                (d.get(a, b) - want).abs() < 1e-9,
                "{a:?} -> {b:?}: {} vs {want}",
                d.get(a, b)
            );
        }
    }
}

#[test]
fn two_by_two_blocks_every_pair_reachable() {
    let params = LayoutParams {
        blocks_x: 2,
        blocks_y: 2,
        shelf_rows: 1,
        block_width: 2,
        cell_pitch: 1.0,
    };
    let layout = generate_layout(&params, &plan(1)).unwrap();
    let reach = reachability(layout.cells.len(), &edge_list(&layout));
    assert!(reach.iter().flatten().all(|&r| r));
    assert!(layout.is_strongly_connected());
}

#[test]
fn minimal_layout() {
    let params = LayoutParams {
        blocks_x: 1,
        blocks_y: 1,
        shelf_rows: 1,
        block_width: 1,
        cell_pitch: 1.0,
    };
    let p = StationPlan {
        workstations: vec![(Placement::Side(Side::West), 1)],
        charger: (Placement::Side(Side::North), 1),
    };
    let layout = generate_layout(&params, &p).unwrap();
    assert_eq!(layout.num_shelves(), 1);
    let reach = reachability(layout.cells.len(), &edge_list(&layout));
    assert!(reach.iter().flatten().all(|&r| r));
}

fn params_strategy() -> impl Strategy<Value = LayoutParams> {
    (1usize..=3, 1usize..=2, 1usize..=2, 1usize..=4, 0.5f64..2.0).prop_map(
        |(bx, by, rows, w, pitch)| LayoutParams {
            blocks_x: bx,
            blocks_y: by,
            shelf_rows: rows,
            block_width: w,
            cell_pitch: pitch,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triangle_inequality_and_identity(params in params_strategy()) {
        let layout = generate_layout(&params, &plan(1)).unwrap();
        let d = shortest_distances(&layout);
        let pois = d.pois();
        for &u in &pois {
            prop_assert_eq!(d.get(u, u), 0.0);
            for &v in &pois {
                prop_assert!(d.get(u, v).is_finite());
                for &w in &pois {
                    prop_assert!(d.get(u, w) <= d.get(u, v) + d.get(v, w) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn reversed_graph_transposes_distances(params in params_strategy()) {
        let layout = generate_layout(&params, &plan(2)).unwrap();
        let rev = layout.reversed();
        let n = layout.cells.len();
        let fwd: Vec<Vec<f64>> = (0..n).map(|u| layout.distances_from(u)).collect();
        for v in 0..n {
            let back = rev.distances_from(v);
            for u in 0..n {
                prop_assert!((back[u] - fwd[u][v]).abs() < 1e-9);
            }
        }
    }
}
