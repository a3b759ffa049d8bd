use keplerdrag::cli::portrait::level_set;
use keplerdrag::dynamics::{hamiltonian, lie_derivative_h1, lie_h1_closed_form};
use keplerdrag::{
    from_physical, invariants, to_physical, transition, ChartId, Params, PhysicalState,
};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = PhysicalState> {
    (0.05f64..20.0, -3.0f64..3.0, 1e-3f64..2.0)
        .prop_map(|(r, rdot, l)| PhysicalState::new(r, rdot, l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_chart_round_trips(s in state()) {
        for id in ChartId::ALL {
            if let Ok(p) = from_physical(&s, id) {
                let back = to_physical(&p).unwrap();
                prop_assert!((back.r - s.r).abs() <= 1e-10 * s.r.max(1.0), "{:?}: r {} vs {}", id, back.r, s.r);
                prop_assert!((back.rdot - s.rdot).abs() <= 1e-10 * s.rdot.abs().max(1.0), "{:?}: rdot", id);
                prop_assert!((back.l - s.l).abs() <= 1e-10 * s.l.max(1.0), "{:?}: l", id);
            }
        }
    }

    #[test]
    fn transitions_preserve_the_physical_state(s in state()) {
        let c2 = from_physical(&s, ChartId::C2).unwrap();
        for id in ChartId::ALL {
            if let Ok(q) = transition(&c2, id) {
                let a = to_physical(&q).unwrap();
                prop_assert!((a.r - s.r).abs() <= 1e-9 * s.r.max(1.0), "{:?}", id);
                prop_assert!((q.hamiltonian() - c2.hamiltonian()).abs() <= 1e-9 * c2.hamiltonian().max(1.0), "{:?}", id);
            }
        }
    }

    #[test]
    fn h_is_half_the_squared_eccentricity(s in state(), delta in 0.0f64..3.0) {
        let inv = invariants(&s, &Params::new(delta).unwrap()).unwrap();
        let e = inv.ecc_norm();
        prop_assert!((inv.h - 0.5 * e * e).abs() <= 1e-12 * inv.h.max(1.0));
        prop_assert!((inv.h - inv.h2).abs() <= 1e-10 * inv.h.max(1.0));
    }

    #[test]
    fn h1_rate_matches_closed_form(r1 in 0.3f64..5.0, v in -1.0f64..1.0, x in 1e-3f64..0.3, delta in 0.1f64..3.0) {
        let p = Params::new(delta).unwrap();
        let (numeric, _) = lie_derivative_h1(r1, v, x, &p).unwrap();
        let closed = lie_h1_closed_form(r1, x, &p);
        prop_assert!(((numeric - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn level_sets_lie_on_their_level(h in 0.001f64..1.0) {
        let set = level_set(h, 64).unwrap();
        for pt in set.points.iter().filter(|p| p.r1.is_finite()) {
            prop_assert!((hamiltonian(pt.r1, pt.v) - h).abs() < 1e-12);
        }
    }
}

#[test]
fn negative_drag_is_rejected() {
    assert!(Params::new(-0.1).is_err());
    assert!(Params::new(f64::NAN).is_err());
}
