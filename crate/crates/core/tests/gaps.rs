use skewspec_core::bounds::{sigma_plus_bound, PhaseGrid, SigmaOptions, SlackMode};
use skewspec_core::gaps::{
    certify_gap, distance_profile, empirical_gaps, gap_upper_bound, largest_empirical_gap,
    phase_set, profile_over_hull, profile_phase_set, uniform_grid,
};
use skewspec_core::potentials::{PhasePoint, PotentialSpec};
use skewspec_core::Error;

#[test]
fn constant_profile_is_sound_and_small_inside() {
    let spec = PotentialSpec::constant(0.0);
    let t = uniform_grid(-3.0, 3.0, 601).unwrap();
    let p = distance_profile(&spec, 100, &[PhasePoint::origin()], &t).unwrap();
    for (ti, di) in t.iter().zip(&p.d_values) {
        // Spec H = [−2, 2].
        assert!(*di >= (ti.abs() - 2.0).max(0.0) - 1e-12, "t={ti} d={di}");
    }
    assert!(p.lipschitz_excess() <= 1e-12);
    assert_eq!(p.t_grid.len(), p.witnesses.len());
}

#[test]
fn harper_profile_has_the_known_large_gap() {
    let spec = PotentialSpec::harper(1.0);
    let bound =
        sigma_plus_bound(&spec, 200, &SigmaOptions::default_for(&spec.family, 200)).unwrap();
    let phases = profile_phase_set(&spec, Some(&bound), 32, 1).unwrap();
    // The origin is already a grid point; the argmax and its image need not be.
    assert!(phases.len() <= 32 + 2);
    assert!(
        phases.contains(&bound.argmax_phase) && phases.contains(&bound.argmax_phase.half_turn_x())
    );
    let p = profile_over_hull(&spec, &bound, &phases, 4096).unwrap();
    let g = gap_upper_bound(&p, &bound).unwrap();
    assert!(g.gamma_upper > 1.0, "{g:?}");
    assert!(g.gamma_enclosure >= g.gamma_upper);
    assert!(g.t_star > bound.window_min && g.t_star < bound.window_max);
    assert!(p.lipschitz_excess() <= 1e-12);
}

#[test]
fn more_phases_never_raise_the_profile() {
    let spec = PotentialSpec::skew_shift(1.0);
    let t = uniform_grid(-3.5, 3.5, 701).unwrap();
    let coarse = phase_set(PhaseGrid::new(4, 4).unwrap(), &[]);
    let fine = phase_set(PhaseGrid::new(8, 8).unwrap(), &[PhasePoint::new(0.1, 0.9)]);
    assert!(coarse.iter().all(|p| fine.contains(p)));
    let a = distance_profile(&spec, 40, &coarse, &t).unwrap();
    let b = distance_profile(&spec, 40, &fine, &t).unwrap();
    for (x, y) in a.d_values.iter().zip(&b.d_values) {
        assert!(y <= x);
    }
}

#[test]
fn gap_bound_requires_hull_coverage() {
    let spec = PotentialSpec::harper(1.0);
    let bound = sigma_plus_bound(
        &spec,
        50,
        &SigmaOptions {
            grid_nx: 64,
            grid_ny: 1,
            slack_mode: SlackMode::CellEnclosure,
        },
    )
    .unwrap();
    let t = uniform_grid(-1.0, 1.0, 101).unwrap();
    let p = distance_profile(&spec, 50, &[PhasePoint::origin()], &t).unwrap();
    assert!(matches!(
        gap_upper_bound(&p, &bound),
        Err(Error::Coverage { .. })
    ));
}

#[test]
fn certify_gap_outside_and_inside_spectrum() {
    let free = PotentialSpec::constant(0.0);
    let grid = PhaseGrid::new(1, 1).unwrap();
    let outside = certify_gap(&free, 200, (2.5, 3.0), grid).unwrap();
    assert!(outside.certified(), "{outside:?}");
    assert!((outside.threshold - 0.1).abs() < 1e-15);
    let inside = certify_gap(&free, 200, (-0.5, 0.5), grid).unwrap();
    assert!(!inside.certified());

    let harper = PotentialSpec::harper(1.0);
    let above = certify_gap(&harper, 2000, (2.75, 3.5), PhaseGrid::new(1024, 1).unwrap()).unwrap();
    assert!(above.certified(), "{above:?}");
    assert!(above.max_cell_slack > 0.0);
    assert!(certify_gap(&harper, 100, (1.0, 0.5), grid).is_err());
}

#[test]
fn empirical_gap_helpers() {
    let v = [-2.0, -1.9, 0.0, 0.1, 1.5, 1.6];
    let widest = largest_empirical_gap(&v).unwrap();
    assert_eq!((widest.lo, widest.hi), (-1.9, 0.0));
    let gaps = empirical_gaps(&v, -1.95, 2.0, 0.5);
    assert_eq!(gaps.len(), 2);
    assert_eq!((gaps[1].lo, gaps[1].hi), (0.1, 1.5));
    assert!(largest_empirical_gap(&[1.0]).is_none());
    assert!(uniform_grid(1.0, 0.0, 10).is_err());
}
