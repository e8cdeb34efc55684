#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64 as C64;
use opnorm::expr::parse_operator;
use opnorm::spaces::{FiniteSpace, NormType};

fuzz_target!(|data: &str| {
    let space = FiniteSpace::real(3, NormType::L2);
    if let Ok(op) = parse_operator(data, &space, None) {
        let _ = op.eval(&[C64::new(0.5, 0.0), C64::new(-1.0, 0.0), C64::new(2.0, 0.0)]);
    }
});
