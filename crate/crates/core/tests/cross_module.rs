use werner_core::biquadratic::{phi_vector, MatrixQuadruple};
use werner_core::detpoly::{check_det_identities, det_h};
use werner_core::diagonal::{decompose, DiagonalPair};
use werner_core::hmatrix::{build_g_polarized, build_h, quadratic_eval, MoebiusParam};
use werner_core::linalg::{c, frobenius, identity, scale_of};
use werner_core::sampling::{random_complex_matrix, rng_from_seed};
use werner_core::search::{minimize_phi_alternating, SearchConfig, SearchPoint};

#[test]
fn g_equals_h_by_swap_symmetry() {
    let mut rng = rng_from_seed(31);
    for d in [2, 3] {
        let u = random_complex_matrix(&mut rng, d, d);
        let v = random_complex_matrix(&mut rng, d, d);
        let g = build_g_polarized(&u, &v).unwrap();
        let h = build_h(&u, &v).unwrap().h;
        assert!(frobenius(&(&g - &h)) <= 1e-10 * scale_of(&h));
    }
}

#[test]
fn phi_is_homogeneous_of_degree_two_in_each_block() {
    let mut rng = rng_from_seed(32);
    let mut m = || random_complex_matrix(&mut rng, 3, 3);
    let q = MatrixQuadruple::new(m(), m(), m(), m()).unwrap();
    let k = c(0.7, -1.3);
    let scaled = MatrixQuadruple::new(&q.x * k, &q.y * k, q.u.clone(), q.v.clone()).unwrap();
    let base = phi_vector(&q).phi;
    assert!((phi_vector(&scaled).phi - k.norm_sqr() * base).abs() <= 1e-10 * base.abs().max(1.0));
    let h = build_h(&q.x, &q.y).unwrap();
    assert!((quadratic_eval(&h, &q.u, &q.v).unwrap().value - base).abs() <= 1e-10 * base.abs().max(1.0));
}

#[test]
fn singular_mixing_annihilates_determinant() {
    let mut rng = rng_from_seed(33);
    let x = random_complex_matrix(&mut rng, 3, 3);
    let y = random_complex_matrix(&mut rng, 3, 3);
    let lam = MoebiusParam::real(1.0, 2.0, 0.5, 1.0);
    let r = check_det_identities(&x, &y, &identity(3), &identity(3), &lam).unwrap();
    assert!(r.lambda_singular);
    assert!(r.gl_dev <= 1e-9);
}

#[test]
fn diagonal_determinant_is_product_of_block_determinants() {
    let pair = DiagonalPair::real(&[1.0, 2.0, 3.0], &[0.5, -1.0, 2.0]).unwrap();
    let dec = decompose(&pair).unwrap();
    let log_blocks: f64 = dec
        .small_blocks
        .iter()
        .map(|b| b.block.determinant().norm().ln())
        .sum::<f64>()
        + dec.big_block.determinant().norm().ln();
    let rec = det_h(&pair.x(), &pair.y()).unwrap();
    assert!((rec.log_abs - log_blocks).abs() <= 1e-9 * log_blocks.abs().max(1.0));
    assert_eq!(rec.sign, 1);
}

#[test]
fn search_is_independent_of_worker_count() {
    let cfg = SearchConfig::two_copy(3, 5, 77);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| minimize_phi_alternating(&cfg).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
    for (ra, rb) in a.restarts.iter().zip(&b.restarts) {
        assert_eq!(ra.trace, rb.trace);
    }
    let SearchPoint::TwoCopy(q) = &a.best_point else {
        panic!("two-copy point expected");
    };
    assert!((phi_vector(q).phi - a.best_value).abs() <= 1e-9);
}
