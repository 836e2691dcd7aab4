use boolform::enumerate::{aux_counts, Limits};
use boolform::series::{q, solve_model, SeriesKind};
use boolform::ModelId;

fn coeff(model: ModelId, kind: SeriesKind, n: u32, m: usize) -> u64 {
    let s = solve_model(model, n, m + 1).unwrap();
    s.get(kind).unwrap().coeff(m).to_integer().try_into().unwrap()
}

#[test]
fn aux_series_match_brute_force_small() {
    for model in ModelId::ALL {
        for n in 1..=2 {
            for m in 1..=5 {
                let a = aux_counts(model, m, n, &Limits::default()).unwrap();
                assert_eq!(coeff(model, SeriesKind::Model, n, m), a.total, "{model} n={n} m={m}");
                assert_eq!(coeff(model, SeriesKind::STX, n, m), a.st_x, "st {model} n={n} m={m}");
                assert_eq!(coeff(model, SeriesKind::GX, n, m), a.g_x, "g {model} n={n} m={m}");
                let sx = coeff(model, SeriesKind::SimpleXT, n, m) + coeff(model, SeriesKind::SimpleXX, n, m);
                // tuple counts bound the distinct simple-x trees
                assert!(sx >= a.simple_x, "simple-x {model} n={n} m={m}");
            }
        }
    }
}

// frozen from exhaustive runs at the largest sizes that finish quickly
#[test]
fn aux_series_match_frozen_counts() {
    let cases = [
        (ModelId::Catalan, 6, 405_644, 1_074_182),
        (ModelId::Comm, 7, 236_010, 636_562),
        (ModelId::Assoc, 6, 45_294, 162_496),
        (ModelId::AssocComm, 7, 6_792, 44_912),
    ];
    for (model, m, st, g) in cases {
        let s = solve_model(model, 2, m).unwrap();
        assert_eq!(*s.get(SeriesKind::STX).unwrap().coeff(m), q(st), "{model}");
        assert_eq!(*s.get(SeriesKind::GX).unwrap().coeff(m), q(g), "{model}");
    }
}
