use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use usd_reduce::generate::{
    random_density, random_prior, random_problem, random_pure_pair, random_supports,
    random_unitary, random_usd_povm, Shape,
};
use usd_reduce::io::ProblemFile;
use usd_reduce::linalg::{eig_hermitian, orthonormality_defect};
use usd_reduce::multistate::{build_pairwise_view, nstate_reduce, NStateStepKind};
use usd_reduce::problem::{
    failure_probability, is_usd_povm, validate_problem, DiscriminationProblem, Povm, Tolerances,
};
use usd_reduce::puresolver::{closed_form_failure, solve_two_pure, PureStatePair};
use usd_reduce::reduction::{reduce_to_standard_form, StandardFormReport};
use usd_reduce::sample::sample_measurement;
use usd_reduce::subspace::Subspace;

/// Every feasible `(d, r1, r2, c, general)` with `d <= max_dim`.
fn shapes(max_dim: usize) -> Vec<Shape> {
    let mut out = Vec::new();
    for d in 1..=max_dim {
        for r1 in 1..=d {
            for r2 in 1..=d {
                for c in 0..=r1.min(r2) {
                    let Ok(g) = Shape::generic(d, r1, r2, c) else {
                        continue;
                    };
                    out.extend((0..=g.general).map(|k| Shape::new(d, r1, r2, c, k).unwrap()));
                }
            }
        }
    }
    out
}

fn shape_and_seed(max_dim: usize) -> impl Strategy<Value = (Shape, u64)> {
    let all = shapes(max_dim);
    (0..all.len(), any::<u64>()).prop_map(move |(i, seed)| (all[i], seed))
}

/// Three or four states of random rank with independent Haar supports in up
/// to five dimensions; overlapping, nested and orthogonal supports all occur.
fn multi_state_problem() -> impl Strategy<Value = DiscriminationProblem> {
    (3usize..=4, 2usize..=5, any::<u64>()).prop_map(|(n, d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random_unitary(d, &mut rng);
        let mut states = Vec::new();
        for _ in 0..n {
            let r = rng.random_range(1..=d);
            // Drawing from a shared frame makes exact orthogonality common.
            let basis = if rng.random_bool(0.5) {
                let start = rng.random_range(0..=d - r);
                frame.columns(start, r).into_owned()
            } else {
                random_unitary(d, &mut rng).columns(0, r).into_owned()
            };
            states.push(random_density(&basis, &mut rng));
        }
        let w: Vec<f64> = (0..n).map(|_| random_prior(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        DiscriminationProblem::new(states, w.iter().map(|x| x / total).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn sum_and_intersection_dimensions_add_up((shape, seed) in shape_and_seed(6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b1, b2) = random_supports(&shape, &mut rng);
        let tol = Tolerances::default();
        let s1 = Subspace::span(&b1, 1e-12);
        let s2 = Subspace::span(&b2, 1e-12);
        let sum = s1.sum_with_tol(&s2, tol.angle).unwrap();
        let cap = s1.intersection(&s2, tol.angle).unwrap();
        prop_assert_eq!(sum.dim() + cap.dim(), s1.dim() + s2.dim());
        prop_assert!(orthonormality_defect(sum.basis()) < 1e-10);
        prop_assert!(cap.containment_defect(&s1) < 1e-8);
        prop_assert!(cap.containment_defect(&s2) < 1e-8);
        let perp = s1.complement_within(&s2, tol.angle).unwrap();
        prop_assert!(perp.is_zero() || perp.max_cosine(&s1).unwrap() <= tol.angle);
    }

    #[test]
    fn reduction_reaches_the_standard_form((shape, seed) in shape_and_seed(6)) {
        let tol = Tolerances::default();
        let p = random_problem(&shape, &mut ChaCha8Rng::seed_from_u64(seed));
        let trace = reduce_to_standard_form(&p, &tol).unwrap();
        let rep = trace.final_report().unwrap();
        prop_assert!(rep.is_standard(), "{:?}", rep);
        prop_assert_eq!(rep.ranks.0, shape.general);
        prop_assert!(orthonormality_defect(&trace.retained_isometry()) < 1e-10);
        let mut dim = trace.support.dim();
        for step in &trace.steps {
            prop_assert!(step.output_dim() < dim);
            dim = step.output_dim();
        }
        // The composed failure is affine in q' with slope in [0, 1].
        let (lo, hi) = (trace.compose_failure(0.0), trace.compose_failure(1.0));
        prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12 && lo <= hi + 1e-12);
    }

    #[test]
    fn lifted_measurements_compose((shape, seed) in shape_and_seed(6)) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&shape, &mut rng);
        let trace = reduce_to_standard_form(&p, &tol).unwrap();
        let reduced = if trace.final_problem.ambient_dim() == 0 {
            Povm::all_inconclusive(2, 0)
        } else {
            random_usd_povm(&trace.final_problem, &tol, &mut rng).unwrap()
        };
        let q_reduced = if trace.final_problem.ambient_dim() == 0 {
            0.0
        } else {
            failure_probability(&trace.final_problem, &reduced).unwrap()
        };
        let lifted = trace.lift_povm(&reduced).unwrap();
        let q = failure_probability(&p, &lifted).unwrap();
        prop_assert!((q - trace.compose_failure(q_reduced)).abs() <= 1e-8);
        let check = is_usd_povm(&p, &lifted, 1e-10);
        prop_assert!(check.is_usd, "{:?}", check.failures);
    }

    #[test]
    fn pure_pair_solution_is_consistent(s in 0.0f64..1.0, p1 in 0.01f64..0.99, seed in any::<u64>()) {
        let pair = random_pure_pair(3, s, p1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let rep = solve_two_pure(&pair).unwrap();
        let p = pair.to_problem();
        prop_assert!((failure_probability(&p, &rep.povm).unwrap() - rep.q_opt).abs() < 1e-10);
        prop_assert!(is_usd_povm(&p, &rep.povm, 1e-9).is_usd);
        // Never worse than guessing inconclusive, never better than 2 sqrt(p1 p2) s.
        prop_assert!(rep.q_opt <= 1.0 + 1e-12);
        prop_assert!(rep.q_opt >= 2.0 * (p1 * (1.0 - p1)).sqrt() * s - 1e-12);
        let swapped = closed_form_failure(&pair.swapped());
        prop_assert!((swapped - rep.q_opt).abs() < 1e-12);
    }

    #[test]
    fn problem_files_round_trip_exactly((shape, seed) in shape_and_seed(5)) {
        let p = random_problem(&shape, &mut ChaCha8Rng::seed_from_u64(seed));
        let meta = BTreeMap::from([("seed".to_string(), seed.to_string())]);
        let file = ProblemFile::from_problem(&p, meta);
        let back = ProblemFile::from_json(&file.to_json()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_problem().unwrap(), p);
    }

    #[test]
    fn generated_problems_validate_with_exact_shapes((shape, seed) in shape_and_seed(6)) {
        let tol = Tolerances::default();
        let p = random_problem(&shape, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(validate_problem(&p, &tol).is_valid());
        let rep = StandardFormReport::of(&p, &tol).unwrap();
        prop_assert_eq!(rep.ranks, shape.ranks);
        prop_assert_eq!(rep.intersection_dim, shape.common);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nstate_reduction_invariants(p in multi_state_problem()) {
        let tol = Tolerances::default();
        let red = nstate_reduce(&p, &tol).unwrap();
        prop_assert!(red.passes <= p.ambient_dim() + 1);
        let mut dim = red.support.dim();
        for step in &red.steps {
            prop_assert!(step.retained.dim() < dim);
            dim = step.retained.dim();
        }
        let supports = p.supports(tol.rank).unwrap();
        for (i, sub) in red.identified_subspaces() {
            for (j, t) in supports.iter().enumerate() {
                if j != i && !t.is_zero() {
                    prop_assert!(sub.max_cosine(t).unwrap() <= 1e-8);
                }
            }
        }
        let n = p.num_states();
        let lifted = red.lift_povm(&Povm::all_inconclusive(n, red.final_problem.ambient_dim())).unwrap();
        prop_assert!(is_usd_povm(&p, &lifted, 1e-10).is_usd);
        let q = failure_probability(&p, &lifted).unwrap();
        prop_assert!((q - red.compose_failure(1.0)).abs() <= 1e-8);
        for i in 0..n {
            let v = build_pairwise_view(&p, i).unwrap();
            prop_assert!((v.p_tilde1 + v.p_tilde2 - 1.0).abs() < 1e-15);
            prop_assert!((v.rho_tilde2.operator().trace() - 1.0).abs() < 1e-12);
            prop_assert!(eig_hermitian(v.rho_tilde2.operator()).unwrap().min().unwrap() >= -1e-12);
        }
    }

    #[test]
    fn two_state_fixed_point_contains_the_standard_form((shape, seed) in shape_and_seed(5)) {
        let tol = Tolerances::default();
        let p = random_problem(&shape, &mut ChaCha8Rng::seed_from_u64(seed));
        let pairwise = reduce_to_standard_form(&p, &tol).unwrap();
        let multi = nstate_reduce(&p, &tol).unwrap();
        let standard = Subspace::span(&pairwise.retained_isometry(), 1e-12);
        prop_assert!(standard.containment_defect(&multi.retained_subspace()) < 1e-7);
        for step in &multi.steps {
            if let NStateStepKind::Identified { state } = step.kind {
                prop_assert!(state < 2);
            }
        }
    }

    #[test]
    fn sampler_counts_add_up((shape, seed) in shape_and_seed(4), trials in 1u64..5000) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&shape, &mut rng);
        let m = random_usd_povm(&p, &tol, &mut rng).unwrap();
        let r = sample_measurement(&p, &m, trials, seed).unwrap();
        prop_assert_eq!(r.counts.iter().flatten().sum::<u64>(), trials);
        prop_assert_eq!(r.misidentification_count, 0);
    }
}

#[test]
fn pure_pair_extraction_from_generated_problems() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let p = random_problem(&Shape::generic(2, 1, 1, 0).unwrap(), &mut rng);
        let pair = PureStatePair::from_problem(&p, &tol).unwrap();
        let direct = closed_form_failure(&pair);
        assert!((0.0..=1.0).contains(&direct));
    }
}
