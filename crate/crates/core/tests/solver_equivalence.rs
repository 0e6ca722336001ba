mod common;

use fastpls::{fit_ikpls1, fit_ikpls2_dataset, fit_nipals, PreprocessSpec};

#[test]
fn nipals_and_both_kernel_algorithms_agree() {
    let mut worst = 0.0f64;
    let mut seed = 100;
    for n in [50, 200] {
        for k in [10, 50] {
            for m in [1, 3] {
                for weighted in [false, true] {
                    seed += 1;
                    let d = common::regression(n, k, m, weighted, seed);
                    for spec in PreprocessSpec::all() {
                        let nip = fit_nipals(&d, &spec, 10).unwrap();
                        let one = fit_ikpls1(&d, &spec, 10).unwrap();
                        let two = fit_ikpls2_dataset(&d, &spec, 10).unwrap();
                        let e1 = common::max_b_diff(&nip, &one);
                        let e2 = common::max_b_diff(&nip, &two);
                        let e3 = common::max_b_diff(&one, &two);
                        let e = e1.max(e2).max(e3);
                        worst = worst.max(e);
                        assert!(
                            e <= 1e-8,
                            "n={n} k={k} m={m} weighted={weighted} flags={spec}: {e1:.3e} {e2:.3e} {e3:.3e}"
                        );
                    }
                }
            }
        }
    }
    eprintln!("worst B difference {worst:.3e}");
}
