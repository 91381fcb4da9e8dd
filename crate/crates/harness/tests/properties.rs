use gravsim::config::Config;
use gravsim::dataset::{Dataset, Row, Table};
use gravsim::fit::scaling_fit;
use gravsim::mc::{anisotropy_mc, AnisotropyModel};
use gravsim_core::{oracles, C64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trips_floats_exactly(values in prop::collection::vec(-1e300..1e300f64, 1..20)) {
        let mut ds = Dataset::new(2);
        for (i, v) in values.iter().enumerate() {
            ds.rows.push(Row::new("s", i as f64, *v).with("oracle", *v * 0.5).with("n", i));
        }
        let table = Table::parse(&ds.to_csv(None).unwrap()).unwrap();
        let y = table.column("y").unwrap();
        for (rec, v) in table.records.iter().zip(&values) {
            prop_assert_eq!(rec[y].parse::<f64>().unwrap(), *v);
        }
    }

    #[test]
    fn config_lists_parse_back(values in prop::collection::vec(0.0..1e6f64, 1..8)) {
        let joined = values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(", ");
        let c = Config::parse(&format!("kn-list = {joined}")).unwrap();
        prop_assert_eq!(c.get_list::<f64>("kn-list").unwrap().unwrap(), values);
    }

    #[test]
    fn power_laws_are_recovered(exponent in -3.0..3.0f64, prefactor in 1e-3..1e3f64) {
        let pts: Vec<(f64, f64)> = (1..8).map(|i| {
            let x = i as f64 * 1.7;
            (x, prefactor * x.powf(exponent))
        }).collect();
        let fit = scaling_fit(&pts).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-9);
        prop_assert!((fit.prefactor / prefactor - 1.0).abs() < 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn sensitivity_scales_as_inverse_n(
        log_omega in 3.0..9.0f64, log_mass in -21.0..-3.0f64, n in 1usize..500, log_nu in 0.0..4.0f64,
    ) {
        let (omega, mass, nu) = (10f64.powf(log_omega), 10f64.powf(log_mass), 10f64.powf(log_nu));
        let tau = 2.0 * std::f64::consts::PI;
        let a = oracles::sensitivity(omega, mass, n, nu, 1.0, tau, 0.0).unwrap();
        let b = oracles::sensitivity(omega, mass, 2 * n, nu, 1.0, tau, 0.0).unwrap();
        prop_assert!((a / b - 2.0).abs() < 1e-10);
        let c = oracles::sensitivity_closed_form(omega, mass, n, nu, 1.0);
        prop_assert!((a / c - 1.0).abs() < 1e-10);
    }

    #[test]
    fn anisotropy_never_beats_the_isotropic_bound(seed in any::<u64>(), dk in 0.0..0.5f64) {
        let model = AnisotropyModel {
            k: 0.1, delta_k: dk, n_spins: 6, samples: 8, seed, g: 0.1, xi: 0.0, alpha: C64::new(0.0, 0.0),
        };
        let tau = 2.0 * std::f64::consts::PI;
        let r = anisotropy_mc(&model, tau).unwrap();
        let bound = oracles::qfi_ghz(0.1 * (1.0 + dk), 6, tau, 0.0);
        for v in &r.values {
            prop_assert!(*v <= bound * (1.0 + 1e-12));
        }
        prop_assert_eq!(r.values.len(), 8);
    }
}
