"""Small end-to-end sweep with fairness reporting.

Runs two algorithms over two antenna counts and a couple of user drops via
the experiment harness, then tabulates the fairness metrics per antenna
count. All outputs land under demo_output/sweep/.
"""

from pathlib import Path

from slnrbeam.harness import (
    ExperimentConfig,
    default_scenario_dict,
    report_fairness,
    run_experiment,
)

config = ExperimentConfig(
    scenario=default_scenario_dict(Q=4, users=3),
    algorithms=["gm", "baseline"],
    antennas=[16, 36],
    power_dbm=[24.0],
    n_seeds=3,
    base_seed=1,
    output_dir="demo_output/sweep",
    options={"max_iterations": 40},
)

files = run_experiment(config)
print(f"wrote {len(files)} files under {config.output_dir}")

fairness = report_fairness(config.output_dir)
print(f"fairness table: {fairness}")
print()
print(Path(fairness).read_text())
