# %% [markdown]
# Pessimism traps a policy at a local optimum
#
# The default bandit has a narrow bump at a = 0 (reward about 1.0) and a broad,
# higher one at a = 3.5 (reward 1.3).  Both agents start near 0.  The actor
# climbs a pessimistic bound (beta_LB = -3.65) using only its own samples, and
# once its spread has shrunk onto the narrow bump those samples see a slope
# pointing home.  The optimistic agent acts with a Gaussian shifted toward
# where the upper bound rises, so its data keeps reaching past the bump.
#
# A few seeds take about a minute.

# %%
import numpy as np

from oac.critic import critic_slice
from oac.envs import RbfBandit
from oac.trainer import TrainConfig, train

env = RbfBandit()
a_star, r_star = env.optimum()
print(f"global optimum {r_star:.3f} at a = {a_star:.2f}; local bump pays {env.reward(0.0):.3f}")

setup = dict(hidden=(32, 32), batch=64, lr=1e-3, alpha=0.01, initial_random_steps=0,
             total_env_steps=5000, eval_interval=500, eval_episodes=1,
             shift_multiplier=2.0, beta_ub=4.66, beta_lb=-3.65)

logs = {}
for mode in ("oac", "sac_ablation"):
    for seed in range(4):
        log = train(TrainConfig(mode=mode, seed=seed, **setup), RbfBandit())
        logs[mode, seed] = log
        mu = log.policy.params(np.zeros(1))[0][0]
        print(f"{mode:13s} seed {seed}: final mean action {mu:6.2f}, reward {log.return_raw[-1]:.3f}")

# %% [markdown]
# How the critics see it, along the action axis, for a pessimistic run that
# stayed home.  The lower bound (last column) is what the actor climbs.  It can
# rate the far side higher and still hold the policy: the actor only follows
# the local slope at its own samples, and the valley around a = 1 points back
# to the narrow bump.

# %%
stuck = next((log for (mode, _), log in logs.items()
              if mode == "sac_ablation" and abs(log.policy.params(np.zeros(1))[0][0]) < 0.5), None)
if stuck is not None:
    rows = critic_slice(stuck.critic, [0.0], [0.0], [1.0], 5.0, 11, 4.66, -3.65, [-5.0], [5.0])
    print("   a      mean      ub        lb")
    for off, mean, ub, lb in rows:
        print(f"{off:5.1f} {mean:9.3f} {ub:9.3f} {lb:9.3f}")
