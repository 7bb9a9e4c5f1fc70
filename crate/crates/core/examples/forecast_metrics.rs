//! Point and probabilistic accuracy metrics on small hand-checkable inputs.

use counterfact::metrics::{crps, crps_mean, equispaced_grid, msis, wape, wrmspe, MetricConfig};
use counterfact::probnet::extract_quantiles;

fn main() -> counterfact::Result<()> {
    let actual = [10.0, 20.0, 30.0];
    let forecast = [12.0, 18.0, 33.0];
    println!("wape   {:.5}  (7/60)", wape(&actual, &forecast)?);
    println!("wrmspe {:.5}  (sqrt(17/3)/20)", wrmspe(&actual, &forecast)?);

    let cfg = MetricConfig {
        seasonality: 1,
        ..Default::default()
    };
    let history = [0.0, 5.0, 10.0, 5.0];
    println!(
        "msis   {:.3}  (width 10, in-sample naive MAE 5)",
        msis(&[3.0, 7.0], &[0.0, 0.0], &[10.0, 10.0], &history, &cfg)?
    );

    // CRPS of a standard-uniform fan at y = 0 approaches 1/3 as the grid refines.
    for n in [9, 99, 999, 9999] {
        let grid = equispaced_grid(n);
        println!("crps uniform fan, {n:>5} levels: {:.5}", crps(0.0, &grid, &grid)?);
    }

    // Fan from samples, scored over a short horizon.
    let grid = MetricConfig::default().tau_grid;
    let paths: Vec<Vec<f64>> = (0..500).map(|i| vec![i as f64 / 50.0, 10.0 - i as f64 / 50.0]).collect();
    let fan = extract_quantiles(&paths, &grid)?;
    println!("crps_mean of a two-step fan: {:.4}", crps_mean(&[5.0, 5.0], &fan, &grid)?);
    Ok(())
}
