"""Command-line front end.

Subcommands: train, sweep, slice, epg-demo, sample-efficiency, plot.
Exit status is 0 on success, 2 for configuration or usage errors and 1 for
anything else.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .critic import TwinCritic, critic_slice
from .actor import GaussianPolicy
from .envs import ENVS, make_env
from .funcapprox import AdamState, MlpParams
from .trainer import MODES, TrainConfig, TrainLog, train

METRICS_HEADER = ",".join(TrainLog.COLUMNS)
SWEEP_KEYS = ("shift_multiplier", "beta_ub", "beta_lb", "alpha")
Z90 = 1.645
NET_ORDER = ("policy", "critic_online1", "critic_online2", "critic_target1", "critic_target2")

# environment keywords accepted in a config file, per environment
ENV_KEYS = {"rbf_bandit": ("bumps", "slope"), "quadratic_bandit": (), "pendulum": ("max_episode_steps",)}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config files

def _parse_bool(text):
    low = text.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_bumps(text):
    bumps = []
    for triple in filter(None, (t.strip() for t in text.split(";"))):
        parts = [float(v) for v in triple.split(",")]
        if len(parts) != 3:
            raise ValueError(f"bump {triple!r} needs three numbers c,h,w")
        bumps.append(tuple(parts))
    if not bumps:
        raise ValueError("bump list is empty")
    return tuple(bumps)


def _parse_hidden(text):
    return tuple(int(v) for v in text.split(","))


_TRAIN_TYPES = {f.name: f.type for f in fields(TrainConfig)}
_PARSERS = {"int": int, "float": float, "bool": _parse_bool, "str": str, "tuple": _parse_hidden}
_ENV_PARSERS = {"bumps": _parse_bumps, "slope": float, "max_episode_steps": int}


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    env: str = "rbf_bandit"
    env_params: dict = field(default_factory=dict)

    def make_env(self):
        return make_env(self.env, **self.env_params)


def _fmt_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; errors name the offending line."""
    train_kw, env_kw, env_name, seen = {}, {}, None, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        try:
            if key == "env":
                if value not in ENVS:
                    raise ValueError(f"unknown environment {value!r}; choose from {sorted(ENVS)}")
                env_name = value
            elif key in _TRAIN_TYPES:
                train_kw[key] = _PARSERS[_TRAIN_TYPES[key]](value)
                TrainConfig(**{key: train_kw[key]})
            elif key in _ENV_PARSERS:
                env_kw[key] = _ENV_PARSERS[key](value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None

    env_name = env_name or "rbf_bandit"
    for key in env_kw:
        if key not in ENV_KEYS[env_name]:
            raise ConfigError(f"line {seen[key]}: key {key!r} does not apply to env {env_name}")
    try:
        cfg = RunConfig(TrainConfig(**train_kw), env_name, env_kw)
        cfg.make_env()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    lines = [f"env = {cfg.env}"]
    for key, value in cfg.env_params.items():
        if key == "bumps":
            value = ";".join(",".join(repr(float(x)) for x in b) for b in value)
        lines.append(f"{key} = {_fmt_value(value)}")
    for f in fields(TrainConfig):
        value = getattr(cfg.train, f.name)
        if f.name == "hidden":
            value = ",".join(str(h) for h in value)
        lines.append(f"{f.name} = {_fmt_value(value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- outputs

def _g(x) -> str:
    return format(float(x), ".6g")


def metrics_csv(log: TrainLog) -> str:
    lines = [METRICS_HEADER]
    for row in log.rows():
        lines.append(",".join([str(row[0])] + [_g(v) for v in row[1:]]))
    return "\n".join(lines) + "\n"


def _networks(log: TrainLog):
    c = log.critic
    return dict(zip(NET_ORDER, (log.policy.trunk, c.online1, c.online2, c.target1, c.target2)))


def write_params(out_dir: Path, log: TrainLog) -> None:
    """``params.bin`` holds every network back to back as little-endian float64;
    ``params.json`` lists each network's offset and layer shapes."""
    manifest = {"dtype": "<f8", "layer_shape": "(out, in)", "obs_dim": log.critic.obs_dim,
                "act_dim": log.critic.act_dim, "networks": {}}
    chunks, offset = [], 0
    for name, net in _networks(log).items():
        manifest["networks"][name] = {"offset": offset, "size": int(net.vector.size),
                                      "shapes": [list(s) for s in net.shapes]}
        chunks.append(net.vector.astype("<f8"))
        offset += net.vector.size
    (out_dir / "params.bin").write_bytes(np.concatenate(chunks).tobytes())
    (out_dir / "params.json").write_text(json.dumps(manifest, indent=1) + "\n")


def read_params(path):
    """Load (policy, critic) from a params.bin path or the directory containing it."""
    path = Path(path)
    bin_path = path / "params.bin" if path.is_dir() else path
    man_path = bin_path.with_name("params.json")
    try:
        manifest = json.loads(man_path.read_text())
        flat = np.frombuffer(bin_path.read_bytes(), dtype=manifest["dtype"]).astype(np.float64)
    except OSError as exc:
        raise FileNotFoundError(f"missing parameter dump: {exc.filename}") from None
    nets = {}
    for name in NET_ORDER:
        entry = manifest["networks"][name]
        chunk = flat[entry["offset"]:entry["offset"] + entry["size"]]
        nets[name] = MlpParams.from_vector(entry["shapes"], chunk)
    obs_dim, act_dim = manifest["obs_dim"], manifest["act_dim"]
    policy = GaussianPolicy(nets["policy"], act_dim, AdamState.for_params(nets["policy"]))
    critic = TwinCritic(nets["critic_online1"], nets["critic_online2"], nets["critic_target1"],
                        nets["critic_target2"], AdamState.for_params(nets["critic_online1"]),
                        AdamState.for_params(nets["critic_online2"]), obs_dim, act_dim)
    return policy, critic


def _emit(text: str, out_dir, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _csv_floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------- commands

def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    if overrides:
        cfg = replace(cfg, train=replace(cfg.train, **overrides))
    return cfg


def cmd_train(args) -> None:
    cfg = _run_config(args)
    log = train(cfg.train, cfg.make_env())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics_csv(log))
    (out / "config.txt").write_text(serialize_config(cfg))
    write_params(out, log)


def sweep_rows(cfg: RunConfig, key: str, values, seeds):
    """Final smoothed return for every (value, seed) cell, plus a per-value summary."""
    if key not in SWEEP_KEYS:
        raise ConfigError(f"cannot sweep {key!r}; choose from {', '.join(SWEEP_KEYS)}")
    cells, summary = [], []
    for value in values:
        finals = []
        for seed in seeds:
            try:
                tc = replace(cfg.train, **{key: value, "seed": seed})
            except ValueError as exc:
                raise ConfigError(f"{key} = {value}: {exc}") from None
            log = train(tc, cfg.make_env())
            if not log.return_smooth:
                raise ConfigError("total_env_steps is below eval_interval; no evaluation to report")
            finals.append(log.return_smooth[-1])
            cells.append((value, seed, log.return_smooth[-1]))
        n = len(finals)
        half = Z90 * np.std(finals, ddof=1) / np.sqrt(n) if n > 1 else float("nan")
        summary.append((value, n, float(np.mean(finals)), half))
    return cells, summary


def cmd_sweep(args) -> None:
    cfg = _run_config(args)
    values = _csv_floats(args.values, "--values")
    seeds = [int(s) for s in _csv_floats(args.seeds, "--seeds")]
    if not values or not seeds:
        raise ConfigError("need at least one value and one seed")
    cells, summary = sweep_rows(cfg, args.key, values, seeds)
    runs = [f"{args.key},seed,final_return_smooth"] + [f"{_g(v)},{s},{_g(r)}" for v, s, r in cells]
    summ = [f"{args.key},n,mean,halfwidth90"] + [f"{_g(v)},{n},{_g(m)},{_g(h)}" for v, n, m, h in summary]
    _emit("\n".join(runs) + "\n", args.out, "sweep.csv")
    _emit("\n".join(summ) + "\n", args.out, "sweep_summary.csv")


def slice_rows(policy, critic, cfg: RunConfig, state, n_rays: int, points: int, halfwidth=None):
    env = cfg.make_env()
    low, high = env.spec.action_low, env.spec.action_high
    if halfwidth is None:
        halfwidth = float(np.max(high - low))
    mu = policy.params(state)[0]
    if critic.act_dim == 1:
        directions = np.array([[1.0], [-1.0]])
    else:
        if n_rays < 1:
            raise ConfigError("--rays must be >= 1")
        directions = np.random.default_rng(cfg.train.seed).standard_normal((n_rays, critic.act_dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    rows = []
    for k, d in enumerate(directions):
        block = critic_slice(critic, state, mu, d, halfwidth, points, cfg.train.beta_ub, cfg.train.beta_lb,
                             low, high)
        rows.extend((k, *r) for r in block)
    return rows


def cmd_slice(args) -> None:
    cfg = _run_config(args)
    policy, critic = read_params(args.params)
    if args.state is None:
        state = cfg.make_env().reset(0)
    else:
        state = np.array(_csv_floats(args.state, "--state"))
    if state.shape != (critic.obs_dim,):
        raise ConfigError(f"--state needs {critic.obs_dim} numbers")
    rows = slice_rows(policy, critic, cfg, state, args.rays, args.points, args.halfwidth)
    lines = ["ray,offset,mean,ub,lb"] + [",".join([str(r[0])] + [_g(v) for v in r[1:]]) for r in rows]
    _emit("\n".join(lines) + "\n", args.out, "slice.csv")


def epg_trajectory(steps: int, lr: float, alpha: float, mu0: float = 1.0, sigma0: float = 1.0):
    """Exact gradient ascent on -(mu^2 + sigma^2) + alpha log sigma."""
    if not 0 < 2.0 * lr < 1.0:
        raise ConfigError(f"lr must satisfy 0 < 2 lr < 1, got {lr}")
    if sigma0 <= 0 or alpha < 0 or steps < 0:
        raise ConfigError("need sigma0 > 0, alpha >= 0 and steps >= 0")
    mu, sigma = float(mu0), float(sigma0)
    traj = [(0, mu, sigma)]
    for k in range(1, steps + 1):
        mu, sigma = mu + lr * (-2.0 * mu), sigma + lr * (-2.0 * sigma + alpha / sigma)
        traj.append((k, mu, sigma))
    return traj


def cmd_epg_demo(args) -> None:
    traj = epg_trajectory(args.steps, args.lr, args.alpha, args.mu0, args.sigma0)
    lines = ["step,mu,sigma"] + [f"{k},{mu!r},{sigma!r}" for k, mu, sigma in traj]
    _emit("\n".join(lines) + "\n", args.out, "epg.csv")


def read_metrics(path) -> dict:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(TrainLog.COLUMNS):
                raise ValueError(f"{path}: not a metrics file (header {header})")
            rows = [[float(v) for v in r] for r in reader if r]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None
    cols = np.array(rows, dtype=np.float64).reshape(-1, len(TrainLog.COLUMNS))
    return {name: cols[:, i] for i, name in enumerate(TrainLog.COLUMNS)}


def steps_to_reach(metrics: dict, threshold: float):
    hit = np.nonzero(metrics["return_smooth"] >= threshold)[0]
    return int(metrics["env_step"][hit[0]]) if hit.size else "never"


def cmd_sample_efficiency(args) -> None:
    runs = [read_metrics(p) for p in args.metrics]
    thresholds = _csv_floats(args.thresholds, "--thresholds")
    lines = ["threshold," + ",".join(f"run{i}" for i in range(len(runs)))]
    for th in thresholds:
        lines.append(",".join([_g(th)] + [str(steps_to_reach(m, th)) for m in runs]))
    _emit("\n".join(lines) + "\n", args.out, "sample_efficiency.csv")


def plot_data(paths) -> str:
    """gnuplot data: one block per run, then a mean/std block when there are several runs."""
    runs = [read_metrics(p) for p in paths]
    if any(len(m["env_step"]) == 0 for m in runs):
        raise ValueError("empty metrics file")
    blocks = []
    # blocks are labelled by argument position so the output does not depend on where files live
    for i, m in enumerate(runs):
        body = "\n".join(f"{int(s)} {_g(r)}" for s, r in zip(m["env_step"], m["return_smooth"]))
        blocks.append(f"# run {i}\n# env_step return_smooth\n{body}")
    if len(runs) > 1:
        steps = sorted(set.intersection(*(set(m["env_step"]) for m in runs)))
        vals = np.array([[m["return_smooth"][m["env_step"] == s][0] for s in steps] for m in runs])
        mean, std = vals.mean(axis=0), vals.std(axis=0)
        body = "\n".join(f"{int(s)} {_g(a)} {_g(a - d)} {_g(a + d)}" for s, a, d in zip(steps, mean, std))
        blocks.append(f"# mean over {len(runs)} runs\n# env_step mean mean-std mean+std\n{body}")
    return "\n\n\n".join(blocks) + "\n"


def cmd_plot(args) -> None:
    _emit(plot_data(args.metrics), args.out, "plot.dat")
    if args.image:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not available; wrote plot data only", file=sys.stderr)
            return
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, path in enumerate(args.metrics):
            m = read_metrics(path)
            ax.plot(m["env_step"], m["return_smooth"], label=f"run {i}")
        ax.set_xlabel("environment steps")
        ax.set_ylabel("smoothed return")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.image)
        plt.close(fig)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration")
    common.add_argument("--out", help="output directory (stdout when omitted, where allowed)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--mode", choices=MODES, help="overrides the config mode")

    parser = argparse.ArgumentParser(prog="oac", description="Optimistic actor-critic experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one agent; writes metrics.csv and params")
    p.set_defaults(func=cmd_train, needs_out=True)

    p = sub.add_parser("sweep", parents=[common], help="final smoothed return across values and seeds")
    p.add_argument("--key", required=True, help=f"one of {', '.join(SWEEP_KEYS)}")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", default="0", help="comma-separated seeds (default 0)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slice", parents=[common], help="critic bounds along rays through the policy mean")
    p.add_argument("--params", required=True, help="params.bin or the train output directory")
    p.add_argument("--state", help="comma-separated observation (default: the env's reset state)")
    p.add_argument("--rays", type=int, default=4, help="random rays for act_dim > 1 (default 4)")
    p.add_argument("--points", type=int, default=101, help="points per ray (default 101)")
    p.add_argument("--halfwidth", type=float, help="ray half-length (default: widest box side)")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("epg-demo", parents=[common], help="policy variance under exact gradients on -a^2")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--mu0", type=float, default=1.0)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.set_defaults(func=cmd_epg_demo)

    p = sub.add_parser("sample-efficiency", parents=[common], help="first step reaching each threshold")
    p.add_argument("metrics", nargs="+", help="metrics.csv files")
    p.add_argument("--thresholds", required=True, help="comma-separated return levels")
    p.set_defaults(func=cmd_sample_efficiency)

    p = sub.add_parser("plot", parents=[common], help="gnuplot-style learning-curve data")
    p.add_argument("metrics", nargs="+", help="metrics.csv files")
    p.add_argument("--image", help="also render a PNG here (needs matplotlib)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "needs_out", False) and not args.out:
            raise ConfigError(f"{args.command} needs --out")
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # reported, not re-raised: the exit code carries the failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
