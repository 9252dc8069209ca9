use basinscope::lyap::LyapunovPoly;
use basinscope::oracle::{classify_batch, IntegratorConfig, Verdict};
use basinscope::region::{
    compute_cp, estimate_gp, estimate_rp, radial_profile, star_check, sublevel, RadiusSweep,
    RegionError, RegionGrid, Window,
};
use basinscope::spectral::PolySystem;
use basinscope::systems;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn certified(sys: &PolySystem, p: u32, half: f64, res: usize) -> RegionGrid {
    let l = LyapunovPoly::compute(sys, p).unwrap();
    let mut grid = estimate_gp(sys, &l, &Window::cube(2, half, res).unwrap());
    compute_cp(&mut grid).unwrap();
    grid
}

#[test]
fn certified_set_invariants() {
    let grid = certified(&systems::van_der_pol(), 20, 3.0, 300);
    let c = grid.c_star.unwrap();
    assert!(grid.in_npc[grid.origin_cell]);
    for i in grid.npc_cells() {
        assert!(grid.in_gp[i], "cell {i} outside G_p");
        assert!(grid.v[i] < c);
        assert!(!grid.window.on_edge(i));
    }
    // connected: the flood fill from the origin reproduces the set
    let again = sublevel(&grid, c).unwrap();
    assert_eq!(again, grid.in_npc);
    // c_star is maximal up to the bisection tolerance
    assert!(grid.level_feasible(c));
    assert!(!grid.level_feasible(c * 1.001));
}

#[test]
fn sublevel_sets_are_nested() {
    let grid = certified(&systems::van_der_pol(), 20, 3.0, 300);
    let c_star = grid.c_star.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let a = rng.gen_range(0.01..c_star);
        let b = rng.gen_range(0.01..c_star);
        let (c1, c2) = (a.min(b), a.max(b));
        let (s1, s2) = (sublevel(&grid, c1).unwrap(), sublevel(&grid, c2).unwrap());
        assert!(s1.iter().zip(&s2).all(|(x, y)| !x || *y), "{c1} {c2}");
    }
    assert!(matches!(
        sublevel(&grid, 2.0 * c_star),
        Err(RegionError::LevelOutOfRange { .. })
    ));
}

#[test]
fn example_two_region_stays_in_unit_disk() {
    let grid = certified(&systems::radial_cubic(1.0, 1.0), 10, 1.5, 300);
    assert!(grid.npc_cells().len() > 1000);
    for i in grid.npc_cells() {
        let x = grid.window.center(i);
        assert!(x[0] * x[0] + x[1] * x[1] < 1.0, "{x:?}");
    }
}

#[test]
fn certified_cells_converge() {
    let sys = systems::van_der_pol();
    let grid = certified(&sys, 20, 3.0, 200);
    let cells = grid.npc_cells();
    let pts: Vec<Vec<f64>> = cells
        .iter()
        .step_by(cells.len() / 200)
        .map(|&i| grid.window.center(i))
        .collect();
    let v = classify_batch(&sys, &pts, &IntegratorConfig::default()).unwrap();
    assert!(v.iter().all(|b| b.verdict == Verdict::Converges));
}

#[test]
fn van_der_pol_region_is_star_shaped() {
    let grid = certified(&systems::van_der_pol(), 20, 3.0, 300);
    let star = star_check(&grid, 500, 42).unwrap();
    assert!(star.passed, "{:?}", &star.witnesses[..star.witnesses.len().min(5)]);
}

#[test]
fn radius_is_inside_certified_level() {
    let sys = systems::van_der_pol();
    let l = LyapunovPoly::compute(&sys, 20).unwrap();
    let r = estimate_rp(&sys, &l, RadiusSweep::default());
    assert!(r > 0.5 && r < 3.0, "r_p = {r}");
    let grid = certified(&sys, 20, 3.0, 300);
    // the ball of radius r_p is inside G_p
    for i in 0..grid.v.len() {
        let x = grid.window.center(i);
        if (x[0] * x[0] + x[1] * x[1]).sqrt() < 0.98 * r {
            assert!(grid.in_gp[i]);
        }
    }
}

#[test]
fn saddle_pair_radial_profile_counterexample() {
    let sys = systems::saddle_pair();
    let l = LyapunovPoly::compute(&sys, 3).unwrap();
    let s5 = 5f64.sqrt();
    let dir = [3.0 * s5, s5];
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    // λ parameterizes λ·(3√5, √5); the profile works in arc length
    let prof = radial_profile(&l, &dir, 1.0 * len, 4001).unwrap();
    assert_eq!(prof.local_maxima.len(), 1, "{:?}", prof.local_maxima);
    let lam = prof.local_maxima[0] / len;
    let want = s5 / 3.0;
    assert!(((lam - want) / want).abs() < 0.02, "{lam} vs {want}");
    assert!(!prof.is_increasing());

    let v = l.v.evaluate_real(&[123.0 / 8.0, 41.0 / 24.0]).unwrap();
    assert!(v.abs() < 1e-9, "{v}");
}
