use anisofm::lattice::{minkowski_minima_bruteforce, reduce_basis};
use anisofm::mesh::{build_mesh, mesh_metrics, verify_mesh_with};
use anisofm::metric::{spd_from_spectrum, LatticeVector, Rotation};
use anisofm::solver::{fast_march, theorem_a_check, Decomposer, Grid};
use proptest::prelude::*;

fn metric_2d(log_kappa: f64, theta: f64) -> anisofm::metric::SpdMatrix {
    let k = 10f64.powf(log_kappa);
    spd_from_spectrum(&[1.0 / k, k], &Rotation::planar(theta)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_matches_enumeration(lk in 0.0f64..2.0, theta in 0.0f64..std::f64::consts::PI) {
        let m = metric_2d(lk, theta);
        let fast = reduce_basis(&m).unwrap();
        let (brute, _) = minkowski_minima_bruteforce(&m).unwrap();
        for (a, b) in fast.norms().iter().zip(&brute) {
            prop_assert!(((a - b) / b).abs() <= 1e-10);
        }
    }

    #[test]
    fn reduced_meshes_are_valid(lk in 0.0f64..3.0, theta in 0.0f64..std::f64::consts::PI) {
        let m = metric_2d(lk, theta);
        let mesh = build_mesh(&m, &reduce_basis(&m).unwrap()).unwrap();
        prop_assert!(verify_mesh_with(&m, &mesh, 500).passed());
    }

    #[test]
    fn decomposition_reconstructs_node(lk in 0.0f64..2.0, theta in 0.0f64..3.2, x in -40i64..40, y in -40i64..40) {
        prop_assume!(x != 0 || y != 0);
        let m = metric_2d(lk, theta);
        let mesh = build_mesh(&m, &reduce_basis(&m).unwrap()).unwrap();
        let dec = Decomposer::new(&mesh).unwrap();
        let z = LatticeVector::new(&[x, y]).unwrap();
        let (t, beta) = dec.decompose(&z).unwrap();
        let mut sum = [x, y];
        for (b, v) in beta.iter().zip(dec.simplices()[t].nonzero()) {
            prop_assert!(*b >= 0);
            sum[0] += b * v.as_slice()[0];
            sum[1] += b * v.as_slice()[1];
        }
        prop_assert_eq!(sum, [0, 0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fast_march_respects_error_bounds(lk in 0.0f64..2.0, theta in 0.0f64..3.2) {
        let m = metric_2d(lk, theta);
        let mesh = build_mesh(&m, &reduce_basis(&m).unwrap()).unwrap();
        let grid = Grid::new(2, 40).unwrap();
        let (f, trace) = fast_march(&m, &mesh, grid).unwrap();
        prop_assert!(trace.is_monotone());
        let mask = anisofm::solver::omega1_mask(&mesh, &grid).unwrap();
        let rep = theorem_a_check(&m, &mesh, &f, &mesh_metrics(&m, &mesh), &mask).unwrap();
        prop_assert_eq!(rep.violations, 0);
    }
}
