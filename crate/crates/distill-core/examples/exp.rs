use distill_core::generalize::instantiate;
use distill_core::interp::{interpret_program, Array, ProgOutput};
use distill_core::pipeline::*;
use distill_core::tasks::{self, OrientBaseline, OrientKind};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

fn absmax_check(p: &distill_core::ir::Program, n: usize, trials: usize) -> usize {
    let mut rng = StdRng::seed_from_u64(3);
    let mut wrong = 0;
    for _ in 0..trials {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let truth = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
        let out = interpret_program(p, &[Array::vector(v.clone())], 1).unwrap();
        let ok = match out {
            ProgOutput::Choice { choice, .. } => label_name(p, choice) == truth.to_string(),
            _ => false,
        };
        if !ok {
            wrong += 1;
        }
    }
    wrong
}

fn orient_check(g: &distill_core::ir::Program, n: usize, kind: OrientKind, count: usize) -> usize {
    let imgs = tasks::gen_orientation(n, kind, count, 7).unwrap();
    let mut wrong = 0;
    for img in &imgs {
        if orientation_predict(g, img, 1).unwrap() != img.horizontal {
            wrong += 1;
        }
    }
    wrong
}

fn main() {
    // CA arms
    let d = elementary_pipeline(30, 9, 300, 0).unwrap();
    let ds = tasks::gen_elementary_ca(30, 9, 512, 1).unwrap();
    println!("rule30 n=9 acc={}", dataset_accuracy(&d.program, &ds, 1).unwrap());
    let d = elementary_pipeline(110, 9, 300, 0).unwrap();
    let ds = tasks::gen_elementary_ca(110, 9, 512, 1).unwrap();
    println!("rule110 n=9 acc={}", dataset_accuracy(&d.program, &ds, 1).unwrap());
    let d = all_rules_pipeline(&[30, 110, 90], 3, 0).unwrap();
    let ds = tasks::gen_all_rules_ca(&[30, 110, 90], 3).unwrap();
    println!("all-rules n=3 acc={}", dataset_accuracy(&d.program, &ds, 1).unwrap());
    let d = game_of_life_pipeline(0).unwrap();
    let ds = tasks::gen_game_of_life_exhaustive(3).unwrap();
    println!("gol acc={}", dataset_accuracy(&d.program, &ds, 1).unwrap());

    // absmax
    let d = absmax_pipeline(20, 0).unwrap();
    println!("absmax fixed @20: wrong={}/500", absmax_check(&d.program, 20, 500));
    let g = absmax_generalized(&[18, 19, 20], 0).unwrap();
    let p20 = instantiate(&g, &[("n".into(), 20)]).unwrap();
    println!("absmax roundtrip@20: {}", p20 == d.program);
    let p100 = instantiate(&g, &[("n".into(), 100)]).unwrap();
    println!("absmax @100: wrong={}/500", absmax_check(&p100, 100, 500));

    // orientation
    let g = orientation_generalized(&[8, 9, 10], 0).unwrap();
    println!("orientation generalized small: ok");
    let g2 = orientation_generalized(&[26, 27, 28], 0).unwrap();
    let d28 = orientation_pipeline(28, 0).unwrap();
    let p28 = instantiate(&g2, &[("n".into(), 28)]).unwrap();
    println!("orientation roundtrip@28: {}", p28 == d28.program);
    println!(
        "orientation full-line@50: wrong={}/100",
        orient_check(&g2, 50, OrientKind::FullLine, 100)
    );
    println!(
        "orientation dotted@50: wrong={}/500",
        orient_check(&g2, 50, OrientKind::Dotted, 500)
    );
    let imgs = tasks::gen_orientation(50, OrientKind::Dotted, 500, 7).unwrap();
    let conv_wrong = imgs
        .iter()
        .filter(|im| tasks::orientation_baseline(im, OrientBaseline::Convolution) != im.horizontal)
        .count();
    println!("orientation dotted@50 conv baseline: wrong={conv_wrong}/500");
    drop(g);

    // maxsat
    let g = maxsat_generalized(&[(8, 4), (9, 5), (10, 6), (10, 4)], 0).unwrap();
    println!("maxsat generalized: ok ({} stmts)", g.stmts.len());
}
