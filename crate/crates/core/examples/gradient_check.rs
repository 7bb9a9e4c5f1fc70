//! Compare the analytic backward pass of the LSTM network against central
//! finite differences on one random window.

use counterfact::panel::{compute_scale, TrainingWindow};
use counterfact::probnet::network::loss_and_grad;
use counterfact::probnet::{forward_loss, NetConfig, NetworkParams};

fn main() -> counterfact::Result<()> {
    let cfg = NetConfig {
        hidden: 8,
        ..Default::default()
    };
    let params = NetworkParams::init(cfg, 3);
    let context: Vec<f64> = (0..12).map(|t| 100.0 + 20.0 * (t as f64 / 2.0).sin()).collect();
    let window = TrainingWindow {
        unit_id: "demo".into(),
        scale: compute_scale(&context),
        context,
        target: vec![110.0, 95.0, 102.0, 118.0],
        start_time: 0,
        step_secs: 3600,
        utc_offset_secs: 0,
        start_index: 0,
    };

    let (loss, grad) = loss_and_grad(&window, &params)?;
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let mut up = params.clone();
        up.as_mut_slice()[i] += eps;
        let mut down = params.clone();
        down.as_mut_slice()[i] -= eps;
        let fd = (forward_loss(&window, &up)?.0 - forward_loss(&window, &down)?.0) / (2.0 * eps);
        worst = worst.max((fd - grad[i]).abs() / 1e-7f64.max(fd.abs()));
    }
    println!("loss {loss:.6}, {} parameters, worst relative error {worst:.2e}", grad.len());
    Ok(())
}
