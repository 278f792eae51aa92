use genfn_core::eps_core::DyadicGrid;
use genfn_core::genfunc::{
    association, default_battery, pair, Association, GenFunction1D, Smooth, TestFunction, DEFAULT_DOMAIN,
};
use genfn_core::numerics::richardson;
use genfn_core::profiles::{preset_dirac, preset_heaviside, DIRAC_TAGS, HEAVISIDE_TAGS};
use proptest::prelude::*;

const SMOOTH_TAGS: [&str; 3] = ["tanh", "erf", "skewed"];

fn leaf() -> impl Strategy<Value = GenFunction1D> {
    prop_oneof![
        prop::collection::vec(-2.0..2.0f64, 1..4).prop_map(|c| GenFunction1D::smooth(Smooth::Poly(c), DEFAULT_DOMAIN)),
        (0.5..3.0f64, -1.0..1.0f64).prop_map(|(k, p)| GenFunction1D::smooth(
            Smooth::Sin {
                amplitude: 1.0,
                freq: k,
                phase: p
            },
            DEFAULT_DOMAIN
        )),
        (0usize..3, -0.2..0.2f64).prop_map(|(i, c)| GenFunction1D::heaviside(
            c,
            preset_heaviside(SMOOTH_TAGS[i]).unwrap(),
            DEFAULT_DOMAIN
        )),
        (-0.2..0.2f64).prop_map(|c| GenFunction1D::dirac(c, preset_dirac("bump").unwrap(), DEFAULT_DOMAIN)),
    ]
}

fn tree() -> impl Strategy<Value = GenFunction1D> {
    leaf().prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), -2.0..2.0f64).prop_map(|(a, c)| a.scale(c)),
            (inner, 2u32..4).prop_map(|(a, n)| a.pow(n).unwrap()),
        ]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leibniz_rule(u in tree(), v in tree(), x in -0.5..0.5f64, eps in 0.05..0.5f64) {
        let lhs = u.mul(&v).derivative().unwrap();
        let rhs = u.derivative().unwrap().mul(&v).add(&u.mul(&v.derivative().unwrap()));
        let (a, b) = (lhs.evaluate(x, eps).unwrap(), rhs.evaluate(x, eps).unwrap());
        prop_assert!(close(a, b, 1e-8), "{a} vs {b}");
    }

    #[test]
    fn derivative_matches_central_difference(u in tree(), x in -0.5..0.5f64, eps in 0.2..0.5f64) {
        let du = u.derivative().unwrap().evaluate(x, eps).unwrap();
        let h = 1e-5;
        let fd = (u.evaluate(x + h, eps).unwrap() - u.evaluate(x - h, eps).unwrap()) / (2.0 * h);
        let scale = [x - h, x, x + h].iter().map(|&y| u.evaluate(y, eps).unwrap().abs()).fold(1.0, f64::max);
        prop_assert!((du - fd).abs() <= 1e-4 * scale.max(du.abs()), "{du} vs {fd}");
    }

    #[test]
    fn embedding_is_multiplicative_on_smooth_functions(
        f in prop::collection::vec(-2.0..2.0f64, 1..4),
        g in prop::collection::vec(-2.0..2.0f64, 1..4),
        x in -3.0..3.0f64,
        eps in 1e-12..0.5f64,
    ) {
        let mut fg = vec![0.0; f.len() + g.len() - 1];
        for (i, a) in f.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                fg[i + j] += a * b;
            }
        }
        let prod = GenFunction1D::smooth(Smooth::Poly(f), DEFAULT_DOMAIN)
            .mul(&GenFunction1D::smooth(Smooth::Poly(g), DEFAULT_DOMAIN));
        let embedded = GenFunction1D::smooth(Smooth::Poly(fg), DEFAULT_DOMAIN);
        let (a, b) = (prod.evaluate(x, eps).unwrap(), embedded.evaluate(x, eps).unwrap());
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn dirac_sampling(i in 0usize..3, x0 in -0.3..0.3f64, c in -1.0..1.0f64, w in 0.5..1.5f64) {
        let phi = TestFunction::new(c, w).unwrap();
        prop_assume!((x0 - c).abs() < 0.8 * w);
        let u = GenFunction1D::dirac(x0, preset_dirac(DIRAC_TAGS[i]).unwrap(), DEFAULT_DOMAIN);
        let vals: Vec<f64> = (6..12).map(|k| pair(&u, &phi, 0.5f64.powi(k)).unwrap()).collect();
        let lim = richardson(&vals, 1.0, 1.0);
        prop_assert!((lim - phi.eval(x0)).abs() < 1e-6 * phi.peak().max(1.0), "{lim} vs {}", phi.eval(x0));
    }
}

fn grid() -> DyadicGrid {
    DyadicGrid::coarse(0.5, 40, 12)
}

#[test]
fn heaviside_powers_are_associated_but_not_equal() {
    let battery = default_battery(DEFAULT_DOMAIN).unwrap();
    for tag in HEAVISIDE_TAGS {
        let h = GenFunction1D::heaviside(0.0, preset_heaviside(tag).unwrap(), DEFAULT_DOMAIN);
        for n in 2..=5 {
            let v = association(&h.pow(n).unwrap(), &h, &battery, &grid()).unwrap();
            assert_eq!(v.aggregate, Association::AssociatedNotEqual, "{tag}, N = {n}");
        }
    }
}

#[test]
fn association_is_symmetric_and_reflexive() {
    let battery = default_battery(DEFAULT_DOMAIN).unwrap();
    let h = GenFunction1D::heaviside(0.0, preset_heaviside("erf").unwrap(), DEFAULT_DOMAIN);
    let d = GenFunction1D::dirac(0.0, preset_dirac("bump").unwrap(), DEFAULT_DOMAIN);
    let catalogue = [h.clone(), h.pow(3).unwrap(), d.clone(), d.pow(2).unwrap(), h.mul(&d)];
    for u in &catalogue {
        assert_eq!(
            association(u, u, &battery, &grid()).unwrap().aggregate,
            Association::EqualInG
        );
        for v in &catalogue {
            let uv = association(u, v, &battery, &grid()).unwrap().aggregate;
            let vu = association(v, u, &battery, &grid()).unwrap().aggregate;
            assert_eq!(uv, vu, "{u} vs {v}");
        }
    }
}

#[test]
fn heaviside_times_dirac_is_half_dirac() {
    // H delta ~ delta / 2 for profiles with K' = psi: the product pairs to
    // phi(0) int K K' = phi(0) / 2.
    let battery = default_battery(DEFAULT_DOMAIN).unwrap();
    let h = GenFunction1D::heaviside(0.0, preset_heaviside("tanh").unwrap(), DEFAULT_DOMAIN);
    let dh = h.derivative().unwrap();
    let v = association(&h.mul(&dh), &dh.scale(0.5), &battery, &grid()).unwrap();
    assert_eq!(v.aggregate, Association::AssociatedNotEqual);
}
