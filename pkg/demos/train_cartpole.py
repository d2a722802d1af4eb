"""SMAC against plain actor-critic SGD on Cartpole, one seed each.

Takes about a minute.  Writes the per-iteration logs, the summary table and
the learning-curve plot under ``demo_out/``.
"""

from smac_rl.harness import ExperimentSpec, run_experiment

spec = ExperimentSpec.grid(["cartpole"], ["smac", "sgd"], seeds=[0], out_dir="demo_out")
result = run_experiment(spec)

print(open("demo_out/summary.txt").read())
for rec in result.records:
    last = rec.logs[-1]
    print(f"{rec.config['optimizer_id']:>5}: {len(rec.episodes)} episodes, "
          f"final critic loss {last.critic_loss:.2f}, actor time {rec.actor_time:.1f}s")
print("plot: demo_out/plots/cartpole_returns.svg")
