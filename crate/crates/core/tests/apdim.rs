use matweight::apdim::{estimate_dimensions, DimConfig};
use matweight::dyadic::Domain;
use matweight::weights::MatrixWeight;

fn config() -> DimConfig {
    DimConfig { domain: Domain::centered_box(1, 6), j_min: 0, j_max: 8, i_max: 6, per_axis: 16, ..DimConfig::standard(1) }
}

fn weights() -> Vec<MatrixWeight> {
    vec![
        MatrixWeight::identity(1, 2),
        MatrixWeight::power_log(1, 1, -0.5, 0.0).unwrap(),
        MatrixWeight::power_log(1, 1, 0.5, 0.0).unwrap(),
        MatrixWeight::power_log(1, 1, -0.3, 1.0).unwrap(),
        MatrixWeight::two_singularity(1, 1, 0.4, 0.3, 2.0, vec![0.25]).unwrap(),
    ]
}

#[test]
fn dimensions_are_never_negative() {
    for w in weights() {
        let r = estimate_dimensions(&w, 2.0, &config()).unwrap();
        assert!(r.primary.slope >= -0.05, "{:?}: {}", w.kind, r.primary.slope);
        if let Some(d) = r.dual {
            assert!(d.slope >= -0.05);
        }
    }
}

#[test]
fn dimension_does_not_grow_with_the_exponent() {
    for w in weights().into_iter().skip(1).take(3) {
        let lo = estimate_dimensions(&w, 2.0, &config()).unwrap().primary.slope;
        let hi = estimate_dimensions(&w, 3.0, &config()).unwrap().primary.slope;
        assert!(hi <= lo + 0.1, "{:?}: {lo} then {hi}", w.kind);
    }
}
