use cranopt_bench::crane_kkt;

#[test]
fn fixture_factors_with_saddle_inertia() {
    let (mut ldl, a) = crane_kkt(25);
    let n = cranopt_bench::bundled_ocp(25).layout().num_variables();
    let inertia = ldl.factor(&a);
    assert_eq!(inertia.positive, n);
    assert_eq!(inertia.positive + inertia.negative + inertia.zero, ldl.dim());

    let x: Vec<f64> = (0..ldl.dim()).map(|i| (i % 7) as f64 - 3.0).collect();
    let mut b = vec![0.0; ldl.dim()];
    ldl.mul(&a, &x, &mut b);
    let mut y = b.clone();
    ldl.solve(&mut y);
    // backward error: the -δI block makes the forward error condition-bound
    let mut r = vec![0.0; ldl.dim()];
    ldl.mul(&a, &y, &mut r);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = r.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    assert!(err <= 1e-10 * scale, "{err} vs {scale}");
}
