//! Envelope, solver and format invariants over random band-limited obstacles.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psh_envelope::envelope::{envelope_psor, psh_margin, PsorOptions};
use psh_envelope::newton::{solve_beta, NewtonOptions};
use psh_envelope::presets::{random_band_limited, Preset};
use psh_envelope::torus::{io, Grid, GridField, TorusGeometry};

const RES: usize = 16;
/// Envelope laws hold to this, well above the complementarity tolerance.
const LAW_TOL: f64 = 1e-8;

fn grid(n: usize, res: usize) -> Grid {
    Grid::new(TorusGeometry::flat(n).unwrap(), res).unwrap()
}

fn random_field(g: &Grid, seed: u64, amp: f64) -> GridField {
    random_band_limited(g, amp, 3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn envelope(v: &GridField) -> GridField {
    envelope_psor(v, &PsorOptions::default()).unwrap().envelope
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn envelope_is_below_obstacle_and_psh(seed in any::<u64>(), amp in 0.01..0.4f64) {
        let v = random_field(&grid(1, RES), seed, amp);
        let p = envelope(&v);
        prop_assert!(p.sub(&v).unwrap().max() <= LAW_TOL);
        prop_assert!(psh_margin(&p) >= -1e-6);
    }

    #[test]
    fn envelope_is_a_contraction(s1 in any::<u64>(), s2 in any::<u64>(), amp in 0.01..0.4f64) {
        let g = grid(1, RES);
        let (v, w) = (random_field(&g, s1, amp), random_field(&g, s2, amp));
        let d = envelope(&v).sup_distance(&envelope(&w)).unwrap();
        prop_assert!(d <= v.sup_distance(&w).unwrap() + LAW_TOL);
    }

    #[test]
    fn envelope_is_monotone(s1 in any::<u64>(), s2 in any::<u64>()) {
        let g = grid(1, RES);
        let v = random_field(&g, s1, 0.3);
        let w = v.add(&random_field(&g, s2, 0.1).map(f64::abs)).unwrap();
        let gap = envelope(&v).sub(&envelope(&w)).unwrap().max();
        prop_assert!(gap <= LAW_TOL);
    }

    #[test]
    fn envelope_commutes_with_constants(seed in any::<u64>(), c in -2.0..2.0f64) {
        let v = random_field(&grid(1, RES), seed, 0.3);
        let d = envelope(&v.add_scalar(c)).sup_distance(&envelope(&v).add_scalar(c)).unwrap();
        prop_assert!(d <= LAW_TOL);
    }

    #[test]
    fn envelope_is_idempotent(seed in any::<u64>()) {
        let p = envelope(&random_field(&grid(1, RES), seed, 0.3));
        prop_assert!(envelope(&p).sup_distance(&p).unwrap() <= LAW_TOL);
    }

    #[test]
    fn envelope_is_concave(s1 in any::<u64>(), s2 in any::<u64>(), t in 0.0..1.0f64) {
        let g = grid(1, RES);
        let (v, w) = (random_field(&g, s1, 0.3), random_field(&g, s2, 0.3));
        let mix = |a: &GridField, b: &GridField| a.scale(t).add(&b.scale(1.0 - t)).unwrap();
        let lhs = envelope(&mix(&v, &w));
        let rhs = mix(&envelope(&v), &envelope(&w));
        prop_assert!(rhs.sub(&lhs).unwrap().max() <= LAW_TOL);
    }

    #[test]
    fn envelope_commutes_with_translations(seed in any::<u64>(), dx in -8isize..8, dy in -8isize..8) {
        let v = random_field(&grid(1, RES), seed, 0.3);
        let moved = envelope(&v.translate(&[dx, dy]).unwrap());
        let d = moved.sup_distance(&envelope(&v).translate(&[dx, dy]).unwrap()).unwrap();
        prop_assert!(d <= LAW_TOL);
    }

    #[test]
    fn solutions_stay_in_the_maximum_principle_box(seed in any::<u64>(), beta in 1.0..200.0f64) {
        let v = random_field(&grid(1, RES), seed, 0.2);
        let sol = solve_beta(&v, beta, None, &NewtonOptions::default()).unwrap();
        prop_assert!(sol.residual_sup <= 1e-10);
        prop_assert!(sol.bounds.contains(&sol.u_beta, 1e-10));
    }

    #[test]
    fn text_and_binary_dumps_round_trip(seed in any::<u64>(), n in 1usize..=2, scale in -1e6..1e6f64) {
        let g = grid(n, 8);
        let f = random_field(&g, seed, 1.0).scale(scale);
        let mut text = Vec::new();
        io::write_text(&f, &mut text).unwrap();
        prop_assert_eq!(&io::read_text(&text[..], g.geometry()).unwrap(), &f);
        let mut bin = Vec::new();
        io::write_binary(&f, &mut bin).unwrap();
        prop_assert_eq!(&io::read_binary(&bin[..], g.geometry()).unwrap(), &f);
    }

    #[test]
    fn presets_print_what_they_parse(amp in 0.0..10.0f64, k in 1usize..7, axis in 0usize..2) {
        for p in [
            Preset::Const(amp),
            Preset::Cos { amp, axis },
            Preset::CosSum(amp),
            Preset::Random { amp, kmax: k },
        ] {
            prop_assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
    }
}
