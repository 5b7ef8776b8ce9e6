mod common;

use common::{blocks, constructed, rng, system};
use descriptor_core::corpus::{random_vector, random_vectors, uniform};
use descriptor_core::oracle::{
    max_relative_difference, recursive_solve_invertible, residual_standard, stacked_solve, STANDARD_RESIDUAL_TOL,
};
use descriptor_core::solver::{check_consistency, solve_standard, InputSignal, SolveOptions, DEFAULT_CONSISTENCY_TOL};
use descriptor_core::DMatrix;
use proptest::prelude::*;
use rand_core::RngCore;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn three_solvers_agree_for_invertible_f(seed in any::<u64>(), real in 1usize..5, pairs in 0usize..2, horizon in 1usize..=50) {
        let mut r = rng(seed);
        let c = constructed(&mut r, real, pairs, &[], 0.95);
        let sys = system(&c);
        let m = sys.dim();
        let id = DMatrix::identity(m, m);
        let input = InputSignal::new(random_vectors(&mut r, m, horizon + 1, 1.0)).unwrap();
        let y0 = random_vector(&mut r, m, 1.0);
        let closed = solve_standard(&sys, &y0, &input, horizon, &SolveOptions::default()).unwrap();
        let direct = recursive_solve_invertible(&c.pencil, &id, &y0, &input, horizon).unwrap();
        let stacked = stacked_solve(&c.pencil, &id, Some(&y0), &input, horizon).unwrap();
        prop_assert_eq!(stacked.nullity, 0);
        let pairs = [
            max_relative_difference(&closed.states, &direct.states, horizon),
            max_relative_difference(&closed.states, &stacked.trajectory.states, horizon),
            max_relative_difference(&direct.states, &stacked.trajectory.states, horizon),
        ];
        prop_assert!(pairs.iter().all(|&d| d <= 1e-7), "{:?}", pairs);
    }

    #[test]
    fn single_entry_perturbations_are_detected(seed in any::<u64>(), slow in 0usize..3, layout in 0usize..6) {
        let mut r = rng(seed);
        let nilpotent = blocks(layout);
        prop_assume!(slow + nilpotent.len() > 0);
        let c = constructed(&mut r, slow, 0, &nilpotent, 0.9);
        let sys = system(&c);
        let m = sys.dim();
        let horizon = 12;
        let input = InputSignal::new(random_vectors(&mut r, m, horizon + c.q_star(), 1.0)).unwrap();
        let y0 = check_consistency(&sys, &random_vector(&mut r, m, 1.0), &input, DEFAULT_CONSISTENCY_TOL).unwrap().nearest;
        let mut traj = solve_standard(&sys, &y0, &input, horizon, &SolveOptions::default()).unwrap();
        prop_assert!(traj.meta.residual.as_ref().unwrap().pass);

        // Interior states enter two equations, through F and through G; the
        // stacked pencil has full column rank, so no direction hides.
        let k = 1 + (r.next_u32() as usize) % (horizon - 1);
        let i = (r.next_u32() as usize) % m;
        let sign = if uniform(&mut r, -1.0, 1.0) < 0.0 { -1.0 } else { 1.0 };
        let entry = traj.states[k][i];
        traj.states[k][i] += sign * 1e-3 * entry.abs().max(1.0);
        let report = residual_standard(&c.pencil, &traj, &input, STANDARD_RESIDUAL_TOL).unwrap();
        prop_assert!(!report.pass);
    }
}
