# %% [markdown]
# Why the policy variance collapses
#
# Take the critic Q(a) = -a^2 and a 1-D Gaussian policy N(mu, sigma^2).  The
# expected value is -(mu^2 + sigma^2), so exact gradient ascent shrinks sigma
# geometrically: sigma_k = sigma_0 (1 - 2 lr)^k.  An entropy bonus alpha log sigma
# stops the collapse at sigma = sqrt(alpha / 2).

# %%
import numpy as np

from oac.cli import epg_trajectory

lr = 0.1
plain = np.array(epg_trajectory(200, lr, alpha=0.0))
entropic = np.array(epg_trajectory(200, lr, alpha=0.2))

for k in (0, 5, 10, 20, 50, 200):
    print(f"step {k:3d}   sigma (alpha=0) {plain[k, 2]:.3e}   sigma (alpha=0.2) {entropic[k, 2]:.6f}")

print("closed form at 200:", (1 - 2 * lr) ** 200)
print("entropy floor      :", np.sqrt(0.1))

# %% [markdown]
# The same thing as a CSV from the command line:
#
#     oac epg-demo --steps 200 --lr 0.1 --alpha 0.2 --out runs/epg
