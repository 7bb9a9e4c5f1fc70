//! Wilcoxon signed-rank and rank-sum tests, exact and normal-approximation.

use counterfact::stats::{rank_sum, wilcoxon_signed_rank, TestMode};

fn main() -> counterfact::Result<()> {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], TestMode::Exact)?;
    println!("signed-rank [1,2,3]: W = {}, p = {}", r.statistic, r.p_value);

    let effects: Vec<f64> = (0..20).map(|i| (i as f64 - 4.0) * 0.7).collect();
    for mode in [TestMode::Exact, TestMode::NormalApprox] {
        let r = wilcoxon_signed_rank(&effects, mode)?;
        println!("signed-rank n=20 {mode:?}: W = {}, p = {:.5}", r.statistic, r.p_value);
    }

    let r = rank_sum(&[1.0, 2.0], &[3.0, 4.0], TestMode::Exact)?;
    println!("rank-sum [1,2] vs [3,4]: U = {}, p = {:.4}", r.statistic, r.p_value);

    let treated: Vec<f64> = (0..30).map(|i| -90.0 + (i % 7) as f64).collect();
    let control: Vec<f64> = (0..30).map(|i| -3.0 + (i % 5) as f64).collect();
    let r = rank_sum(&treated, &control, TestMode::Auto)?;
    println!("rank-sum treated vs control (n=60, exact={}): p = {:.3e}", r.exact, r.p_value);
    Ok(())
}
