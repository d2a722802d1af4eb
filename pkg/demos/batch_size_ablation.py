"""One Sherman-Morrison step per transition versus one per rollout.

Runs B = 1, 100 and 1000 on Cartpole for 100k steps and reports the time
spent in actor updates.  Sizes below the rollout length use a tenth of the
batch step size.
"""

from smac_rl.harness import ablation_batch_size, format_ablation

report = ablation_batch_size("cartpole", sizes=(1, 100, 1000), seeds=(0,),
                             total_timesteps=100_000, out_dir="demo_out/ablation")
print(format_ablation(report), end="")
