use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stabledt::fourier::Spectrum;
use stabledt::tree::random_tree;
use stabledt::{dist, spectrum, BoolFn, CompletedTree, Restriction};

fn table(max_n: usize) -> impl Strategy<Value = BoolFn> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), 1 << n)
            .prop_map(move |bits| BoolFn::from_fn(n, |x| bits[x]).unwrap())
    })
}

fn restriction(n: usize) -> impl Strategy<Value = Restriction> {
    proptest::collection::vec(any::<Option<bool>>(), n).prop_map(|picks| {
        let a = picks
            .into_iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|b| (i + 1, if b { 1 } else { -1 })))
            .collect();
        Restriction::new(a).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parseval(f in table(10)) {
        prop_assert!((spectrum(&f).second_moment() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wht_round_trip(f in table(10)) {
        let back = spectrum(&f).to_values();
        for (v, &t) in back.iter().zip(f.table()) {
            prop_assert!((v - f64::from(t)).abs() < 1e-9);
        }
        let again = Spectrum::from_values(&back);
        prop_assert_eq!(again.coeffs().len(), 1 << f.n());
    }

    #[test]
    fn restrict_in_stages((f, rho, cut) in table(8).prop_flat_map(|f| {
        let n = f.n();
        (Just(f), restriction(n), 0..=n)
    })) {
        let (a, b) = rho.assignments().split_at(cut.min(rho.len()));
        let first = Restriction::new(a.to_vec()).unwrap();
        let second = Restriction::new(b.to_vec()).unwrap();
        let staged = f.restrict_global(&first).unwrap().restrict_global(&second).unwrap();
        let direct = f.restrict_global(&rho).unwrap();
        prop_assert_eq!(staged.table(), direct.table());
        prop_assert_eq!(staged.vars(), direct.vars());
    }

    #[test]
    fn dist_is_a_metric((f, g, h) in (1usize..=8).prop_flat_map(|n| {
        let t = move || proptest::collection::vec(any::<bool>(), 1 << n)
            .prop_map(move |bits| BoolFn::from_fn(n, |x| bits[x]).unwrap());
        (t(), t(), t())
    })) {
        prop_assert_eq!(dist(&f, &f).unwrap(), 0.0);
        prop_assert_eq!(dist(&f, &g).unwrap(), dist(&g, &f).unwrap());
        prop_assert!(dist(&f, &h).unwrap() <= dist(&f, &g).unwrap() + dist(&g, &h).unwrap() + 1e-15);
    }

    #[test]
    fn sexpr_round_trip(n in 1usize..=8, size in 1usize..=20, seed in any::<u64>()) {
        let size = size.min(1 << n);
        let tree = random_tree(n, size, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let text = tree.to_sexpr();
        let parsed = CompletedTree::parse_with_n(&text, n).unwrap();
        prop_assert_eq!(parsed.to_sexpr(), text);
        for x in 0..1usize << n {
            prop_assert_eq!(parsed.evaluate(x), tree.evaluate(x));
        }
    }
}
