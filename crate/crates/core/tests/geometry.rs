use nalgebra::DMatrix;
use polar_shape::geometry::*;
use proptest::prelude::*;

fn orthogonal(k: usize, seed: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| seed[(i * k + j) % seed.len()] + if i == j { 2.0 } else { 0.0 })
        .qr()
        .q()
}

fn config(n: usize, k: usize, v: &[f64]) -> LandmarkMatrix {
    LandmarkMatrix::new(DMatrix::from_fn(n, k, |i, j| v[(i * k + j) % v.len()] + (i * j) as f64 * 0.3)).unwrap()
}

#[test]
fn helmert_rows_are_orthonormal_contrasts() {
    for n in 2..7 {
        let l = helmert_submatrix(n).unwrap();
        let gram = &l * l.transpose();
        assert!((gram - DMatrix::identity(n - 1, n - 1)).norm() < 1e-14);
        assert!((l * DMatrix::from_element(n, 1, 1.0)).norm() < 1e-14);
    }
}

#[test]
fn dims_enforce_shape_domain() {
    assert!(Dims::new(3, 2).is_ok());
    assert!(Dims::new(4, 2).is_err());
    assert!(Dims::new(2, 2).is_err());
    let d = Dims::new(4, 3).unwrap();
    assert_eq!((d.n(), d.p(), d.m(), d.reduced_dim()), (3, 6, 5, 9));
}

proptest! {
    #[test]
    fn shape_is_invariant_to_similarity(
        v in proptest::collection::vec(-2.0f64..2.0, 12),
        shift in proptest::collection::vec(-5.0f64..5.0, 3),
        scale in 0.1f64..10.0,
        rot in proptest::collection::vec(-1.0f64..1.0, 9),
    ) {
        for (n, k) in [(3usize, 2usize), (3, 3), (4, 3)] {
            let x = config(n, k, &v);
            let (s0, _) = shape_from_landmarks(&x, None).unwrap();
            let q = orthogonal(k, &rot);
            let shifted = DMatrix::from_fn(n, k, |i, j| x.values()[(i, j)] + shift[j % shift.len()]);
            let moved = LandmarkMatrix::new(shifted * &q * scale).unwrap();
            let (s1, _) = shape_from_landmarks(&moved, None).unwrap();
            prop_assert!((&s0.w - &s1.w).norm() < 1e-9);
            prop_assert!((s1.r / s0.r - scale).abs() < 1e-9 * scale);
            prop_assert!((s0.w.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn angles_round_trip(t1 in 0.05f64..1.5, frac in 0.02f64..0.98) {
        if let Some((lo, hi)) = polar_shape::mc::pd_theta2_interval(t1) {
            let u = [t1, lo + frac * (hi - lo)];
            let w = angles_to_shape(&u).unwrap();
            let back = shape_to_angles(&w).unwrap();
            prop_assert!((back[0] - u[0]).abs() < 1e-12 && (back[1] - u[1]).abs() < 1e-12);
            prop_assert!(min_eigenvalue_at(&u, 2) > 0.0);
        }
    }

    #[test]
    fn weighted_vech_is_an_isometry(v in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let w = DMatrix::from_fn(3, 3, |i, j| v[i.min(j) * 3 - i.min(j) * (i.min(j) + 1) / 2 + i.max(j)]);
        let h = weighted_vech(&w);
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - w.norm()).abs() < 1e-12);
        prop_assert!((weighted_unvech(&h, 3).unwrap() - w).norm() < 1e-12);
    }
}

#[test]
fn polar_factors_reconstruct_the_configuration() {
    let x = config(4, 3, &[0.3, -1.2, 2.2, 0.8, 0.1, -0.7, 1.4]);
    let y = center(&x);
    let f = polar_decompose(&y).unwrap();
    assert!(!f.degenerate);
    assert!((&f.r * &f.h - &y.y).norm() < 1e-12);
    assert!((&f.h * f.h.transpose() - DMatrix::identity(3, 3)).norm() < 1e-12);
    assert!((&f.r * &f.r - &y.y * y.y.transpose()).norm() < 1e-11);
    assert!(f.r.clone().symmetric_eigenvalues().iter().all(|v| *v > 0.0));
}

#[test]
fn collinear_landmarks_are_flagged() {
    let x = LandmarkMatrix::new(DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 3.0, 3.0])).unwrap();
    assert!(polar_decompose(&center(&x)).unwrap().degenerate);
}

#[test]
fn whitening_undoes_column_covariance() {
    let x = config(3, 2, &[0.4, 1.1, -0.6, 2.0, 0.9]);
    let theta = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let root = spd_power(&theta, 0.5, "Θ").unwrap();
    let coloured = LandmarkMatrix::new(x.values() * &root).unwrap();
    let (a, _) = shape_from_landmarks(&x, None).unwrap();
    let (b, _) = shape_from_landmarks(&coloured, Some(&theta)).unwrap();
    assert!((a.w - b.w).norm() < 1e-12);
    assert!((a.r - b.r).abs() < 1e-12);
}

/// `J(u)` against the Gram determinant of the numerically differentiated
/// sphere embedding.
#[test]
fn jacobian_matches_surface_element() {
    for u in [vec![0.7, 1.9], vec![0.3, 1.1, 2.0, 0.8, 4.0], vec![1.2, 0.4, 2.5]] {
        let m = u.len();
        let h = 1e-6;
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[i] += h;
                dn[i] -= h;
                sphere_point(&up)
                    .iter()
                    .zip(sphere_point(&dn))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect()
            })
            .collect();
        let d = DMatrix::from_fn(m + 1, m, |r, c| cols[c][r]);
        let gram = (d.transpose() * d).determinant().sqrt();
        assert!((gram - jacobian_j(&u)).abs() < 1e-7, "{u:?}: {gram} vs {}", jacobian_j(&u));
    }
}

#[test]
fn outside_domain_is_reported() {
    // θ₁ = 0 puts all weight on W₁₁ with W₂₂ = 0
    assert!(angles_to_shape(&[1.4, 0.05]).is_err());
    assert!(PolarShape::from_angles(&[1.4, 0.05]).is_err());
}

#[test]
fn pair_sum_product_small_cases() {
    assert_eq!(pair_sum_product(&[0.3]), 1.0);
    assert!((pair_sum_product(&[1.0, 2.0, 4.0]) - 3.0 * 5.0 * 6.0).abs() < 1e-14);
}
