use lonestar::channel::{complex_gaussian, spherical_wave_channel, ArrayPlacement};
use lonestar::codebook::{cbf_codebook, coverage_variance};
use lonestar::design::{
    design_lonestar, expected_coupling_objective, solve_subproblem_f, solve_subproblem_w, DesignMode, DesignProblem,
    LonestarConfig,
};
use lonestar::geometry::{grid_from_ranges, AngleRange, Direction, UpaGeometry};
use lonestar::quant::Quantizer;
use lonestar::solverkit::SolverOptions;
use lonestar::{CMatrix, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Setup {
    geom: UpaGeometry,
    dirs: Vec<Direction>,
    quant: Quantizer,
    h: CMatrix,
}

fn setup() -> Setup {
    let geom = UpaGeometry::new(4, 4).unwrap();
    let dirs = grid_from_ranges(&AngleRange::new(-45.0, 15.0, 45.0).unwrap(), &AngleRange::new(-15.0, 15.0, 15.0).unwrap()).unwrap();
    let quant = Quantizer::new(6, 6, 0.5).unwrap();
    let h = spherical_wave_channel(&geom, &geom, &ArrayPlacement::stacked(&geom)).unwrap();
    Setup { geom, dirs, quant, h }
}

#[test]
fn full_design_reduces_coupling_and_keeps_coverage() {
    let s = setup();
    let p = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &s.h, &s.quant).unwrap();
    let cfg = LonestarConfig::default();
    let out = design_lonestar(&p, &cfg).unwrap();
    assert_eq!(out.objective_trace.len(), 1 + 2 * cfg.outer_iters);
    assert_eq!(out.coverage_trace.len(), out.objective_trace.len());
    let first = out.objective_trace[0];
    let last = *out.objective_trace.last().unwrap();
    assert!(last < 0.01 * first, "{first} -> {last}");
    for cb in [&out.f, &out.w] {
        assert!(coverage_variance(&s.geom, &s.dirs, cb).unwrap() <= cfg.sigma_sq_tx + cfg.coverage_slack);
        assert!(cb.iter().all(|z| s.quant.is_member(*z, 1e-12)));
    }
}

#[test]
fn beamwise_design_runs_every_beam() {
    let s = setup();
    let p = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &s.h, &s.quant).unwrap();
    let cfg = LonestarConfig { mode: DesignMode::Beamwise, outer_iters: 1, ..LonestarConfig::default() };
    let out = design_lonestar(&p, &cfg).unwrap();
    assert_eq!(out.objective_trace.len(), 1 + 2 * s.dirs.len());
    assert!(out.objective_trace.last().unwrap() < &out.objective_trace[0]);
}

#[test]
fn zero_budget_beamwise_keeps_matched_filters() {
    let s = setup();
    let p = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &s.h, &s.quant).unwrap();
    let cfg = LonestarConfig {
        sigma_sq_tx: 0.0,
        sigma_sq_rx: 0.0,
        mode: DesignMode::Beamwise,
        outer_iters: 1,
        ..LonestarConfig::default()
    };
    let out = design_lonestar(&p, &cfg).unwrap();
    let cbf = cbf_codebook(&s.geom, &s.dirs, &s.quant);
    assert_eq!(out.f, cbf);
    assert_eq!(out.w, cbf);
}

#[test]
fn zero_channel_exits_at_initialization() {
    let s = setup();
    let zero = CMatrix::zeros(16, 16);
    let p = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &zero, &s.quant).unwrap();
    let out = design_lonestar(&p, &LonestarConfig::default()).unwrap();
    assert_eq!(out.objective_trace, vec![0.0]);
    assert_eq!(out.f, cbf_codebook(&s.geom, &s.dirs, &s.quant));
}

#[test]
fn subproblem_never_worse_than_incoming_iterate() {
    let s = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = s.geom.array_response_matrix(&s.dirs);
    let opts = SolverOptions::default();
    for eps_sq in [0.0, 1e-3] {
        let h = &s.h + complex_gaussian(16, 16, 1e-3, &mut rng);
        let f_in = s.quant.project_matrix(&a);
        let w = s.quant.project_matrix(&a);
        let (f, rep) = solve_subproblem_f(&h, &w, &a, eps_sq, 0.05, Some(&f_in), &opts).unwrap();
        let before = expected_coupling_objective(&h, &f_in, &w, eps_sq).unwrap();
        let after = expected_coupling_objective(&h, &f, &w, eps_sq).unwrap();
        assert!(after <= before + opts.tol * before, "{before} -> {after}");
        assert!(rep.constraint_residual <= opts.tol * 256.0 * a.ncols() as f64);
        assert!(f.iter().all(|z| z.norm() <= 1.0 + opts.tol));

        let (w2, _) = solve_subproblem_w(&h, &f, &a, eps_sq, 0.05, Some(&w), &opts).unwrap();
        let after_w = expected_coupling_objective(&h, &f, &w2, eps_sq).unwrap();
        assert!(after_w <= after + opts.tol * after);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = setup();
    let small = CMatrix::zeros(4, 4);
    assert!(matches!(
        DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &small, &s.quant),
        Err(Error::Dimension(_))
    ));
    assert!(matches!(DesignProblem::new(&s.geom, &s.geom, &[], &s.dirs, &s.h, &s.quant), Err(Error::InvalidInput(_))));
    let p = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &s.h, &s.quant).unwrap();
    let cfg = LonestarConfig { sigma_sq_tx: -1.0, ..LonestarConfig::default() };
    assert!(matches!(design_lonestar(&p, &cfg), Err(Error::InvalidInput(_))));
    let cfg = LonestarConfig { eps_sq: f64::NAN, ..LonestarConfig::default() };
    assert!(matches!(design_lonestar(&p, &cfg), Err(Error::InvalidInput(_))));
}
