# %% [markdown]
# Pendulum swing-up with the command-line tools
#
# This writes a config, trains briefly with both exploration modes, and then
# asks how quickly each reached a few return levels.  10k steps per run is
# short (about a minute each); the curves keep improving well past that.

# %%
import subprocess
import sys
from pathlib import Path

out = Path("runs/pendulum")
out.mkdir(parents=True, exist_ok=True)
config = out / "pendulum.cfg"
config.write_text("""\
env = pendulum
total_env_steps = 10000
eval_interval = 1000
eval_episodes = 5
shift_multiplier = 3.69
""")


def oac(*args):
    subprocess.run([sys.executable, "-m", "oac", *map(str, args)], check=True)


for mode in ("oac", "sac_ablation"):
    oac("train", "--config", config, "--mode", mode, "--out", out / mode)
    print(mode)
    print((out / mode / "metrics.csv").read_text())

# %%
oac("sample-efficiency", out / "oac" / "metrics.csv", out / "sac_ablation" / "metrics.csv",
    "--thresholds=-1200,-900,-600,-300")
oac("plot", out / "oac" / "metrics.csv", out / "sac_ablation" / "metrics.csv", "--out", out)
print("plot data in", out / "plot.dat")
