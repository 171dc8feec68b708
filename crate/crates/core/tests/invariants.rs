use kirchhoff_core::decomp::{check_domain, ibp_check, key_decompose};
use kirchhoff_core::fixtures;
use kirchhoff_core::generator::catalog::{circles_theta, circles_theta_bar};
use kirchhoff_core::generator::galerkin::{evolve_cn, CnOptions};
use kirchhoff_core::generator::{in_domain_theta, resolvent_solve, CatalogCase};
use kirchhoff_core::graph::{dirichlet_energy, h_inner, l2nu_norm, EdgeFunction, MetricGraph, DEFAULT_SAMPLES};
use kirchhoff_core::hodge::{check_field, cycle_basis, hodge_decompose, VelocityField};
use kirchhoff_core::quadruple::{build_quadruple, quadruple_identity_check, theta_from_csv, theta_to_csv};
use kirchhoff_core::sampling::{random_domain_poly, random_poly};
use kirchhoff_core::sierpinski::{sg_graph, sg_harmonic};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph(i: usize) -> MetricGraph {
    match i {
        0 => fixtures::interval_graph(),
        1 => fixtures::two_circles_graph(1.0, 2.5),
        2 => fixtures::star_tree_graph(),
        _ => fixtures::k1_graph(),
    }
}

fn field(g: &MetricGraph) -> VelocityField {
    check_field(g, &g.field("b").unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_reconstructs(which in 0usize..4, seed in any::<u64>(), degree in 1usize..5) {
        let g = graph(which);
        let b = field(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_domain_poly(&g, &b, &mut rng, degree).unwrap();
        let k = key_decompose(&g, &b, &f).unwrap();
        let back = k.reconstruct(&g, &b).unwrap();
        prop_assert!(l2nu_norm(&g, &b, &back.sub(&f).unwrap()).unwrap() < 1e-11);
        prop_assert!(check_domain(&g, &b, &EdgeFunction::constants(&k.w)).unwrap().in_domain);
        prop_assert!(check_domain(&g, &b, &EdgeFunction::constants(&k.z)).unwrap().in_domain);
    }

    #[test]
    fn hodge_parts_are_orthogonal(which in 0usize..4, seed in any::<u64>()) {
        let g = graph(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_poly(&g, &mut rng, 3);
        let split = hodge_decompose(&g, &cycle_basis(&g), &form).unwrap();
        let exact = split.g.values().derivative();
        let cyc = EdgeFunction::constants(&split.v);
        prop_assert!(h_inner(&g, &exact, &cyc).unwrap().abs() < 1e-11);
        let back = exact.add(&cyc).unwrap();
        prop_assert!(h_inner(&g, &back.sub(&form).unwrap(), &back.sub(&form).unwrap()).unwrap() < 1e-20);
    }

    #[test]
    fn ibp_and_quadruple_identities(which in 0usize..4, seed in any::<u64>()) {
        let g = graph(which);
        let b = field(&g);
        let spaces = build_quadruple(&g, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f1 = random_domain_poly(&g, &b, &mut rng, 3).unwrap();
        let f2 = random_domain_poly(&g, &b, &mut rng, 3).unwrap();
        prop_assert!(ibp_check(&g, &b, &f1, &f2).unwrap().residual < 1e-10);
        prop_assert!(quadruple_identity_check(&spaces, &f1, &f2).unwrap().residual < 1e-10);
    }

    #[test]
    fn resolvent_is_a_contraction_into_the_domain(theta_bar in -1.0f64..1.0, lambda in 0.2f64..20.0, seed in any::<u64>()) {
        let gen = CatalogCase::Circles { theta_bar, c: 1.5 }.generator().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_poly(gen.graph(), &mut rng, 3);
        let f = resolvent_solve(&gen, lambda, &r).unwrap();
        prop_assert!(in_domain_theta(&gen, &f).unwrap().residual < 1e-9);
        let nf = l2nu_norm(gen.graph(), gen.field(), &f).unwrap();
        let nr = l2nu_norm(gen.graph(), gen.field(), &r.to_sampled(DEFAULT_SAMPLES)).unwrap();
        prop_assert!(lambda * nf <= nr * (1.0 + 1e-4));
    }

    #[test]
    fn theta_parametrizations_agree(theta_bar in -1.0f64..1.0, c in 0.1f64..10.0) {
        prop_assert!((circles_theta_bar(circles_theta(theta_bar, c), c) - theta_bar).abs() < 1e-12);
    }

    #[test]
    fn theta_csv_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 1..20), cols in 1usize..5) {
        let rows = values.len().div_ceil(cols);
        let mut v = values.clone();
        v.resize(rows * cols, 0.0);
        let t = DMatrix::from_row_slice(rows, cols, &v);
        prop_assert_eq!(theta_from_csv(&theta_to_csv(&t)).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn crank_nicolson_is_non_expansive(theta_bar in -1.0f64..1.0, k in 1.0f64..4.0) {
        let gen = CatalogCase::Circles { theta_bar, c: 1.0 }.generator().unwrap();
        let v0 = move |e: usize, x: f64| (k * x + e as f64).sin();
        let opts = CnOptions { elements: 4, degree: 6, samples: 24, ..CnOptions::new(0.05, 1.0) };
        let traj = evolve_cn(&gen, &v0, opts).unwrap();
        for w in traj.diagnostics.windows(2) {
            prop_assert!(w[1].norm <= w[0].norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gasket_harmonic_energy_is_level_independent(a in -1.0f64..1.0, c in -1.0f64..1.0) {
        let values = [0.0, a, c];
        let energies: Vec<f64> = (1..=4)
            .map(|m| {
                let sg = sg_graph(m, false).unwrap();
                dirichlet_energy(&sg.graph, sg_harmonic(&sg, values).values()).unwrap()
            })
            .collect();
        for e in &energies[1..] {
            prop_assert!((e - energies[0]).abs() < 1e-10 * (1.0 + energies[0]));
        }
    }
}
