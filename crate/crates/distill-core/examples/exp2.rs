use distill_core::pipeline::*;
use distill_core::tasks::{self, MaxsatBaseline, MaxsatTestMode};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let g = maxsat_generalized(&[(8, 4), (9, 5), (10, 6), (10, 4)], 0).unwrap();
    println!("distill: {:?}", t0.elapsed());

    let formulas = tasks::gen_maxsat_test(100, 10, 500, MaxsatTestMode::ThreeSat, 42).unwrap();
    println!("formulas: {}", formulas.len());

    let t1 = Instant::now();
    let mut policy = maxsat_program_policy(&g);
    let mut dist_means = Vec::new();
    let mut greedy_means = Vec::new();
    let mut tq_means = Vec::new();
    let mut diff_tq = Vec::new();
    for seed in 0..20u64 {
        let mut d = 0usize;
        let mut pg = 0usize;
        let mut tq = 0usize;
        for f in &formulas {
            d += tasks::solve_maxsat_sequential(f, &mut policy, seed).1;
            pg += tasks::solve_maxsat_sequential(
                f,
                &mut |c| tasks::maxsat_baseline(c, MaxsatBaseline::PureGreedy),
                seed,
            )
            .1;
            tq += tasks::solve_maxsat_sequential(
                f,
                &mut |c| tasks::maxsat_baseline(c, MaxsatBaseline::ThreeQuarter),
                seed,
            )
            .1;
        }
        let nf = formulas.len() as f64;
        dist_means.push(d as f64 / nf);
        greedy_means.push(pg as f64 / nf);
        tq_means.push(tq as f64 / nf);
        diff_tq.push((d as f64 - tq as f64) / nf);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
            / (v.len() as f64).sqrt()
    };
    println!("eval: {:?}", t1.elapsed());
    println!(
        "distilled={:.3} greedy={:.3} threequarter={:.3}",
        mean(&dist_means),
        mean(&greedy_means),
        mean(&tq_means)
    );
    println!(
        "distilled-greedy={:.3} distilled-tq={:.3} (se {:.3})",
        mean(&dist_means) - mean(&greedy_means),
        mean(&diff_tq),
        se(&diff_tq)
    );
}
