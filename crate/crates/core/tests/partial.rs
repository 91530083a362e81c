use ehsched::lp::{build_fixed_drop_program, solve_lp, LpStatus};
use ehsched::model::costs_agree;
use ehsched::partial::{allocate_partial_cesi, ChannelDistribution};
use ehsched::{DropSet, Economics, Instance};
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = ChannelDistribution> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|mean| ChannelDistribution::Exponential { mean }),
        (0.5f64..4.0, 0.2f64..3.0).prop_map(|(m, mean)| ChannelDistribution::Nakagami { m, mean }),
        (0.1f64..2.0, 0.2f64..3.0)
            .prop_map(|(sigma2, mean)| ChannelDistribution::LogNormal { sigma2, mean }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cost_non_increasing_in_eps(
        dist in distribution(),
        arrivals in prop::collection::vec(0.0f64..5.0, 1..30),
        e1 in 0.01f64..0.99,
        e2 in 0.01f64..0.99,
    ) {
        let econ = Economics::default();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = allocate_partial_cesi(&dist, &econ, lo, &arrivals, 0.0).unwrap();
        let b = allocate_partial_cesi(&dist, &econ, hi, &arrivals, 0.0).unwrap();
        prop_assert!(b.total_cost <= a.total_cost + 1e-9 * a.total_cost.max(1.0));
    }

    #[test]
    fn future_arrivals_do_not_change_the_past(
        dist in distribution(),
        arrivals in prop::collection::vec(0.0f64..5.0, 2..30),
        cut in 1usize..30,
        eps in 0.01f64..0.99,
        storage in 0.0f64..3.0,
    ) {
        let econ = Economics::default();
        let cut = cut.min(arrivals.len());
        let full = allocate_partial_cesi(&dist, &econ, eps, &arrivals, storage).unwrap();
        let head = allocate_partial_cesi(&dist, &econ, eps, &arrivals[..cut], storage).unwrap();
        prop_assert_eq!(&full.allocation.renew[..cut], &head.allocation.renew[..]);
        prop_assert_eq!(&full.allocation.conv[..cut], &head.allocation.conv[..]);
    }

    #[test]
    fn matches_the_fixed_power_program(
        dist in distribution(),
        arrivals in prop::collection::vec(0.0f64..5.0, 1..12),
        eps in 0.01f64..0.99,
        storage in 0.0f64..3.0,
    ) {
        let econ = Economics::default();
        let sched = allocate_partial_cesi(&dist, &econ, eps, &arrivals, storage).unwrap();
        let n = arrivals.len();
        let inst = Instance::from_inversion_powers(econ, &vec![sched.power; n], arrivals, storage).unwrap();
        let sol = solve_lp(&build_fixed_drop_program(&inst, &DropSet::empty()).unwrap()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(costs_agree(sched.total_cost, sol.objective_value), "{} vs {}", sched.total_cost, sol.objective_value);
    }
}

#[test]
fn plentiful_arrivals_cost_only_harvested_energy() {
    let econ = Economics::default();
    let dist = ChannelDistribution::Nakagami { m: 2.0, mean: 1.0 };
    let sched = allocate_partial_cesi(&dist, &econ, 0.1, &[1e6; 50], 0.0).unwrap();
    let want = econ.price_renew * 50.0 * sched.power;
    assert!((sched.total_cost - want).abs() <= 1e-9 * want);
    assert!(sched.allocation.conv.iter().all(|&c| c == 0.0));
}

#[test]
fn invalid_eps_is_rejected() {
    let econ = Economics::default();
    let dist = ChannelDistribution::Exponential { mean: 1.0 };
    for eps in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(allocate_partial_cesi(&dist, &econ, eps, &[1.0], 0.0).is_err());
    }
}
