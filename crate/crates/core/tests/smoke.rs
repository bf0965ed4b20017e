use wavelab_core::linear::{solve_system_linear, Forcing};
use wavelab_core::nonlinear::{solve_coupled, NonlinearProblem};
use wavelab_core::trajectory::c_l2_norm;
use wavelab_core::*;

#[test]
fn coupled_run_in_three_dimensions() {
    let g = GridSpec64::cube(3, (0.0, 1.0), (0.25, 0.75), 1.0 / 12.0, 0.25).unwrap();
    let mut b0 = ScalarField64::from_fn(&g, |x| {
        (std::f64::consts::PI * x[0]).sin()
            * (std::f64::consts::PI * x[1]).sin()
            * x[2]
            * (1.0 - x[2])
    });
    b0.zero_boundary(&g);
    let data = SourceData64::new(
        VectorField64::splat(b0),
        VectorField64::zeros(&g),
        Forcing::Zero,
    )
    .with_epsilon(0.1)
    .unwrap();
    let sys = SpeedSystem64::uniform(SpeedField64::constant(&g, 1.0), &g).unwrap();
    let p = NonlinearProblem::new(sys.clone(), data.clone(), g.clone()).unwrap();
    let u = solve_coupled(&p).unwrap();
    let lin = solve_system_linear(&sys, &data, &g).unwrap();
    assert!(u.is_finite());
    assert!(c_l2_norm(&u.minus(&lin).unwrap(), &g) < 0.01 * c_l2_norm(&lin, &g));
    let tr = analysis::trace(&u, &g).unwrap();
    assert!(tr.l2l2_norm() > 0.0);
}

#[test]
fn single_precision_tracks_double() {
    let g64 = GridSpec64::cube(2, (0.0, 1.0), (0.25, 0.75), 1.0 / 16.0, 0.5).unwrap();
    let g32 = GridSpec32::cube(2, (0.0, 1.0), (0.25, 0.75), 1.0 / 16.0, 0.5).unwrap();
    let run64 = {
        let mut b0 = ScalarField64::from_fn(&g64, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        b0.zero_boundary(&g64);
        let data = SourceData64::new(
            VectorField64::splat(b0),
            VectorField64::zeros(&g64),
            Forcing::Zero,
        );
        let sys = SpeedSystem64::uniform(SpeedField64::constant(&g64, 1.0), &g64).unwrap();
        c_l2_norm(&solve_system_linear(&sys, &data, &g64).unwrap(), &g64)
    };
    let run32 = {
        let mut b0 = ScalarField32::from_fn(&g32, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        b0.zero_boundary(&g32);
        let data = SourceData32::new(
            VectorField32::splat(b0),
            VectorField32::zeros(&g32),
            Forcing::Zero,
        );
        let sys = SpeedSystem32::uniform(SpeedField32::constant(&g32, 1.0), &g32).unwrap();
        c_l2_norm(&solve_system_linear(&sys, &data, &g32).unwrap(), &g32)
    };
    assert!(((run32 as f64) - run64).abs() < 1e-5 * run64);
}
