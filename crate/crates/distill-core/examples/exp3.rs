use distill_core::codegen::{emit_code, Target};
use distill_core::pipeline::*;
use std::time::Instant;

fn main() {
    let t = Instant::now();
    let d = maxsat_pipeline(8, 4, 0).unwrap();
    println!("pipeline (8,4): {:?}", t.elapsed());
    println!("{}", emit_code(&d.program, Target::PythonText));
}
