mod common;

use certimeasure::{
    assemble, build_map, coarse_to_fine, norms_of_powers, operator_norm_bound, scheme_constants, dfly_coefficients,
    LyVariant, MapDescriptor, Partition, SchemeKind,
};
use common::{dense_power_norms, rat};

fn maps() -> Vec<MapDescriptor> {
    vec![
        MapDescriptor::named("doubling"),
        MapDescriptor::named("linear").with_param("k", "3"),
        MapDescriptor::named("lanford"),
        MapDescriptor::named("nonlinear_nonmarkov"),
        MapDescriptor::named("perturbed_4x"),
    ]
}

#[test]
fn computed_bounds_dominate_exact_dense_powers() {
    for desc in maps() {
        let map = build_map(&desc).unwrap();
        for scheme in [SchemeKind::Ulam, SchemeKind::Hat] {
            for n in [8usize, 32] {
                let mat = assemble(&map, &Partition::new(n).unwrap(), scheme).unwrap();
                let c = norms_of_powers(&mat, 10).unwrap().c;
                let exact = dense_power_norms(&mat, 10);
                for (k, (ck, ek)) in c.iter().zip(&exact).enumerate().skip(1) {
                    assert!(rat(*ck) >= *ek, "{} {scheme:?} n={n} k={k}: C_k = {ck} < {ek}", desc.name);
                }
            }
        }
    }
}

#[test]
fn operator_norm_covers_one_step() {
    for desc in maps() {
        let map = build_map(&desc).unwrap();
        for scheme in [SchemeKind::Ulam, SchemeKind::Hat] {
            let mat = assemble(&map, &Partition::new(16).unwrap(), scheme).unwrap();
            let exact = dense_power_norms(&mat, 1);
            // |Q v| <= |Q| |v| with |e_0 - e_j| = 2 (l1) or 1 (sup)
            let unit = if scheme == SchemeKind::Ulam { 2.0 } else { 1.0 };
            assert!(rat(operator_norm_bound(&mat) * unit) >= exact[1], "{} {scheme:?}", desc.name);
        }
    }
}

#[test]
fn coarse_to_fine_dominates_direct_fine_norms() {
    let map = build_map(&MapDescriptor::named("doubling")).unwrap();
    let sc = scheme_constants(SchemeKind::Ulam);
    let ly = dfly_coefficients(&map, SchemeKind::Ulam, LyVariant::VarFullbranch).unwrap();
    let coarse = assemble(&map, &Partition::new(256).unwrap(), SchemeKind::Ulam).unwrap();
    let fine = assemble(&map, &Partition::new(1024).unwrap(), SchemeKind::Ulam).unwrap();
    let cc = norms_of_powers(&coarse, 10).unwrap().c;
    let direct = norms_of_powers(&fine, 10).unwrap().c;
    let cf = coarse_to_fine(&cc, &ly, &sc, 256, 1024, operator_norm_bound(&fine), 10).unwrap();
    assert_eq!(cf[0], cc[0]);
    for k in 1..=10 {
        assert!(cf[k] >= direct[k], "k={k}: {} < {}", cf[k], direct[k]);
    }
}
