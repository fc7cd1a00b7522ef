//! Prints every gallery check's residual at default parameters.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twistorlab::gallery::{build, case_keys, CheckParams};

fn main() {
    let params = CheckParams::default();
    for key in case_keys() {
        let case = build(key).expect("case builds");
        for check in case.checks() {
            let t0 = std::time::Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let res = check.run(&params, &mut rng);
            let dt = t0.elapsed().as_secs_f64();
            match res {
                Ok(r) => {
                    let ok = check.passes(r, check.tol());
                    println!(
                        "{:30} {:42} {:>12.3e} tol {:>8.1e} {:>7} {:>6.2}s",
                        key,
                        check.name(),
                        r,
                        check.tol(),
                        if ok { "pass" } else { "FAIL" },
                        dt
                    );
                }
                Err(e) => println!("{key:30} {:42} ERROR {e} {dt:.2}s", check.name()),
            }
        }
    }
}
