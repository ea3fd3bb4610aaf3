use levymax::contours::{contour_pair_clearing, ContourOptions, Family};
use levymax::oracle::bm_joint_cdf;
use levymax::whf::{phi_minus, phi_plus};
use levymax::{price, Complex64 as C64, LaplaceScheme, LevyModel, Payoff, PricingTask};
use proptest::prelude::*;

fn kobol(nu: f64) -> LevyModel {
    LevyModel::kobol_calibrated(nu, 1.0, -2.0, 0.1, 0.0).unwrap()
}

fn cpdf(m: LevyModel, t: f64, pts: &[(f64, f64)]) -> Vec<f64> {
    let payoffs = pts.iter().map(|&(a1, a2)| Payoff::Cpdf { x1: 0.0, x2: 0.0, a1, a2 }).collect();
    price(&PricingTask::new(m, t, payoffs, 1e-10), &LaplaceScheme::sinh(Family::I)).unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cpdf_is_a_monotone_probability(
        nu in prop::sample::select(vec![0.2, 1.2]),
        t in 0.05f64..2.0,
        a1 in -0.3f64..0.2,
        a2 in 0.0f64..0.3,
        d1 in 0.0f64..0.1,
        d2 in 0.0f64..0.1,
    ) {
        let a1 = a1.min(a2);
        let v = cpdf(kobol(nu), t, &[(a1, a2), (a1 + d1, a2 + d2), (a1.min(a2) + d1.min(d2), a2 + d2)]);
        for x in &v {
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(x));
        }
        prop_assert!(v[0] <= v[1] + 1e-10);
        prop_assert!(v[0] <= v[2] + 1e-10);
    }

    #[test]
    fn no_touch_is_cpdf_on_the_diagonal(nu in prop::sample::select(vec![0.2, 1.2]), t in 0.05f64..2.0, a in 0.0f64..0.3) {
        let m = kobol(nu);
        let payoffs = vec![
            Payoff::NoTouch { x1: 0.0, x2: 0.0, a2: a },
            Payoff::Cpdf { x1: 0.0, x2: 0.0, a1: a, a2: a },
        ];
        let v = price(&PricingTask::new(m, t, payoffs, 1e-10), &LaplaceScheme::sinh(Family::I)).unwrap().values;
        prop_assert!((v[0] - v[1]).abs() <= 1e-8, "{} vs {}", v[0], v[1]);
    }

    #[test]
    fn brownian_joint_cdf_is_bounded_by_marginals(
        sigma in 0.05f64..0.8,
        mu in -0.3f64..0.3,
        t in 0.01f64..5.0,
        a1 in -1.0f64..1.0,
        a2 in 0.0f64..1.0,
    ) {
        let a1 = a1.min(a2);
        let f = bm_joint_cdf(sigma, mu, t, a1, a2);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f <= bm_joint_cdf(sigma, mu, t, a1, 50.0) + 1e-15);
        prop_assert!(f <= bm_joint_cdf(sigma, mu, t, a2, a2) + 1e-15);
    }

    #[test]
    fn factors_satisfy_the_identity(
        nu in prop::sample::select(vec![0.2, 1.2]),
        r in 0.1f64..50.0,
        arg in -1.2f64..1.2,
        x in -20.0f64..20.0,
        f in 0.0f64..1.0,
    ) {
        let m = kobol(nu);
        let q = C64::from_polar(r, arg);
        let (lo, hi) = m.profile.working_strip(2.0);
        let band = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        let (plus, minus) = contour_pair_clearing(&m.profile, (lo, hi), band, &ContourOptions::new(1e-14, Family::I)).unwrap();
        let xi = [C64::new(x, band.0 + f * (band.1 - band.0))];
        let fp = phi_plus(&m, q, &xi, &minus).unwrap()[0];
        let fm = phi_minus(&m, q, &xi, &plus).unwrap()[0];
        let defect = (fp * fm * (q + m.psi(xi[0]).unwrap()) / q - 1.0).norm();
        prop_assert!(defect <= 1e-11, "{defect:e}");
    }
}
