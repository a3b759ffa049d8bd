//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(charts_tour);
example!(equilibria);
example!(series_summation);
example!(periodic_orbits);
example!(h_infinity);
example!(stable_fiber);
example!(center_manifold);
example!(shooting);
example!(portrait);
example!(verify);
example!(drag_experiment);
