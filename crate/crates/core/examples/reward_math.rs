// Frame success ratio and rate-weighted reward for every MCS.

use ratelab::domain::{compute_fsr, compute_reward, FrameStats, McsIndex, McsTable};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let before = FrameStats::new(1_200, 1_500);
    let after = FrameStats::new(1_245, 1_550);
    let fsr = compute_fsr(before, after)?;
    println!("window: 45 of 50 frames delivered, fsr = {fsr}");
    println!("{:>4} {:>10} {:>8}", "mcs", "rate_mbps", "reward");
    for mcs in McsIndex::all() {
        let reward = compute_reward(fsr, mcs)?;
        println!("{:>4} {:>10} {:>8.4}", mcs, McsTable::RATES_MBPS[mcs.as_usize()], reward.value());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
