#[allow(dead_code)]
mod reward_math {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/reward_math.rs"));
}

#[test]
fn reward_math_runs() {
    reward_math::run_example().expect("reward_math example should run");
}

#[allow(dead_code)]
mod link_oracle {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/link_oracle.rs"));
}

#[test]
fn link_oracle_runs() {
    link_oracle::run_example().expect("link_oracle example should run");
}

#[allow(dead_code)]
mod parse_strategies {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parse_strategies.rs"));
}

#[test]
fn parse_strategies_runs() {
    parse_strategies::run_example().expect("parse_strategies example should run");
}

#[allow(dead_code)]
mod bench_parsers {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bench_parsers.rs"));
}

#[test]
fn bench_parsers_runs() {
    bench_parsers::run_example().expect("bench_parsers example should run");
}

#[allow(dead_code)]
mod stage_profile {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/stage_profile.rs"));
}

#[test]
fn stage_profile_runs() {
    stage_profile::run_example().expect("stage_profile example should run");
}

#[allow(dead_code)]
mod staleness_floor {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/staleness_floor.rs"));
}

#[test]
fn staleness_floor_runs() {
    staleness_floor::run_example().expect("staleness_floor example should run");
}

#[allow(dead_code)]
mod qlearning_convergence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/qlearning_convergence.rs"));
}

#[test]
fn qlearning_convergence_runs() {
    qlearning_convergence::run_example().expect("qlearning_convergence example should run");
}

#[allow(dead_code)]
mod dqn_checkpoint {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dqn_checkpoint.rs"));
}

#[test]
fn dqn_checkpoint_runs() {
    dqn_checkpoint::run_example().expect("dqn_checkpoint example should run");
}

#[allow(dead_code)]
mod preset_comparison {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/preset_comparison.rs"));
}

#[test]
fn preset_comparison_runs() {
    preset_comparison::run_example().expect("preset_comparison example should run");
}
