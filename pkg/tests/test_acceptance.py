"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in the pytest terminal summary. Outside pytest, run
``python -m tests.test_acceptance`` from the repository root.
"""
import time
from dataclasses import replace

import numpy as np

from oac import cli
from oac.actor import GaussianPolicy, actor_objective, make_policy
from oac.critic import bound_estimates, bounds, make_twin_critic, q_values, ub_action_gradient
from oac.envs import Pendulum, RbfBandit
from oac.explorer import kl_gaussian_diag, oac_exploration, oac_exploration_det, oracle_solve
from oac.funcapprox import init_mlp, mlp_backward, mlp_forward
from oac.trainer import TrainConfig, evaluate, eval_seed_base, init_agent, train

from .oracles import central_difference, max_rel_error

# the bandit experiment of criterion 8; only the three exploration constants are fixed by the criterion
BANDIT = dict(hidden=(32, 32), batch=64, lr=1e-3, alpha=0.01, initial_random_steps=0, total_env_steps=5000,
              eval_interval=5000, eval_episodes=1, shift_multiplier=2.0, beta_ub=4.66, beta_lb=-3.65)


# filled as criteria run; conftest prints it in the pytest summary
RESULTS = []


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, f"criterion {n}: {detail}"


def angle(u, v):
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    return 2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v))


def random_instances(seed, n=1000):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        d = int(rng.integers(1, 9))
        yield (rng.normal(size=d), np.exp(rng.uniform(np.log(0.01), np.log(10.0), size=d)),
               rng.normal(size=d), rng.uniform(0.01, 72.0))


def test_criterion_1_oracle_equivalence():
    start = time.perf_counter()
    worst = 0.0
    for mu, sigma, g, delta in random_instances(1):
        closed = oac_exploration(mu, sigma, g, np.sqrt(2 * delta)).mu_e
        brute = oracle_solve(mu, sigma, g, delta)
        worst = max(worst, float(np.max(np.abs(closed - brute) / np.maximum(np.abs(brute), 1e-300))))
    secs = time.perf_counter() - start
    report(1, worst < 1e-6 and secs < 10, f"max relative error {worst:.2e} over 1000 instances in {secs:.1f}s")


def test_criterion_2_constraint_tightness():
    worst, bitwise = 0.0, True
    for mu, sigma, g, delta in random_instances(1):
        pe = oac_exploration(mu, sigma, g, np.sqrt(2 * delta))
        worst = max(worst, abs(kl_gaussian_diag(pe.mu_e, pe.sigma_e, mu, sigma) - delta))
        bitwise &= pe.sigma_e.tobytes() == sigma.tobytes()
    report(2, worst < 1e-9 and bitwise, f"max |KL - delta| {worst:.2e}, covariance bitwise equal: {bitwise}")


def test_criterion_3_deterministic_variant():
    worst_sq, worst_angle = 0.0, 0.0
    for mu, _, g, delta in random_instances(3):
        shift = oac_exploration_det(mu, g, np.sqrt(2 * delta)) - mu
        worst_sq = max(worst_sq, abs(shift @ shift - 2 * delta))
        worst_angle = max(worst_angle, angle(shift, g))
    report(3, worst_sq < 1e-9 and worst_angle < 1e-9,
           f"max |shift^2 - 2 delta| {worst_sq:.2e}, max angle {worst_angle:.2e} rad")


def test_criterion_4_bound_identities():
    rng = np.random.default_rng(4)
    q1, q2 = rng.normal(size=(2, 10 ** 5))
    est = bound_estimates(q1, q2, 1.0, -1.0)
    err_min = np.max(np.abs(est.mean - est.std - np.minimum(q1, q2)))
    err_max = np.max(np.abs(est.mean + est.std - np.maximum(q1, q2)))
    err_lb = np.max(np.abs(est.lb_prime - np.minimum(q1, q2)))
    ok = max(err_min, err_max, err_lb) <= 1e-12
    report(4, ok, f"errors: mean-std vs min {err_min:.1e}, mean+std vs max {err_max:.1e}, "
                  f"beta_lb=-1 vs min {err_lb:.1e}")


def test_criterion_5_gradient_suite():
    rng = np.random.default_rng(5)
    worst = {"mlp_backward": 0.0, "ub_action_gradient": 0.0, "actor_surrogate": 0.0}
    for _ in range(50):
        sizes = [int(v) for v in rng.integers(1, 7, size=int(rng.integers(2, 5)))]
        p = init_mlp(sizes, rng)
        x, up = rng.normal(size=p.in_dim), rng.normal(size=p.out_dim)
        g = mlp_backward(p, x, up)

        def f_params(vec):
            q = p.copy()
            q.set_flat(vec)
            return float(up @ mlp_forward(q, x))

        err = max(max_rel_error(g.params.vector, central_difference(f_params, p.flat())),
                  max_rel_error(g.input, central_difference(lambda z: float(up @ mlp_forward(p, z)), x)))
        worst["mlp_backward"] = max(worst["mlp_backward"], err)

    checked = 0
    while checked < 50:
        c = make_twin_critic(3, 2, (8, 8), rng)
        s, a, beta = rng.normal(size=3), rng.normal(size=2), rng.uniform(0, 6)
        q1, q2 = q_values(c, s, a)
        if abs(q1 - q2) <= 1e-6:
            continue
        fd = central_difference(lambda z: float(bounds(c, s, z, beta, -1.0).ub), a)
        worst["ub_action_gradient"] = max(worst["ub_action_gradient"],
                                          max_rel_error(ub_action_gradient(c, s, a, beta), fd))
        checked += 1

    for _ in range(50):
        pol = make_policy(2, 2, (5,), rng)
        c = make_twin_critic(2, 2, (6,), rng)
        s, eps = rng.normal(size=(3, 2)), rng.standard_normal((3, 2))
        grads = actor_objective(pol, c, s, eps, 0.2, -3.65)[1]

        def f_theta(vec):
            q = pol.trunk.copy()
            q.set_flat(vec)
            return actor_objective(GaussianPolicy(q, 2, pol.adam), c, s, eps, 0.2, -3.65)[0]

        worst["actor_surrogate"] = max(worst["actor_surrogate"],
                                       max_rel_error(grads.vector, central_difference(f_theta, pol.trunk.flat())))
    ok = max(worst.values()) < 1e-4
    report(5, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (50 cases each)")


def trajectory(beta_ub):
    digests = []

    def record(step, policy, critic):
        digests.append(np.concatenate([policy.trunk.vector] + [n.vector for n in critic.nets()]).tobytes())

    cfg = TrainConfig(**{**BANDIT, "shift_multiplier": 0.0, "beta_ub": beta_ub, "total_env_steps": 2000,
                         "eval_interval": 500})
    log = train(cfg, RbfBandit(), callback=record)
    return digests, log.rows()


def test_criterion_6_optimism_isolation():
    a, rows_a = trajectory(0.0)
    b, rows_b = trajectory(4.66)
    same = len(a) == len(b) == 2000 and all(x == y for x, y in zip(a, b)) and rows_a == rows_b
    report(6, same, f"{len(a)} per-step parameter snapshots compared for beta_ub in {{0, 4.66}}")


def test_criterion_7_variance_collapse(tmp_path):
    assert cli.main(["epg-demo", "--steps", "200", "--lr", "0.1", "--alpha", "0", "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["epg-demo", "--steps", "200", "--lr", "0.1", "--alpha", "0.2",
                     "--out", str(tmp_path / "b")]) == 0
    collapse = np.loadtxt(tmp_path / "a" / "epg.csv", delimiter=",", skiprows=1)
    floor = np.loadtxt(tmp_path / "b" / "epg.csv", delimiter=",", skiprows=1)
    err = np.max(np.abs(collapse[:, 2] - 0.8 ** collapse[:, 0]))
    gap = abs(floor[-1, 2] - np.sqrt(0.1))
    report(7, len(collapse) == 201 and err <= 1e-12 and gap < 1e-6,
           f"alpha=0 max error vs (1-2lr)^k {err:.1e}; alpha=0.2 final sigma off sqrt(0.1) by {gap:.1e}")


def test_criterion_8_underexploration():
    start = time.perf_counter()
    env = RbfBandit()
    a_star, r_star = env.optimum()
    wins, stuck = {}, {}
    for mode in ("oac", "sac_ablation"):
        finals = [train(TrainConfig(**BANDIT, mode=mode, seed=seed), RbfBandit()).return_raw[-1]
                  for seed in range(20)]
        wins[mode] = sum(r >= 0.95 * r_star for r in finals)
        # the narrow local bump at 0 pays about 1.02
        stuck[mode] = sum(abs(r - env.reward(0.0)) < 0.01 for r in finals)
    secs = time.perf_counter() - start
    report(8, wins["oac"] > wins["sac_ablation"] and secs < 300,
           f"within 5% of optimum {r_star:.3f} at a={a_star:.2f}: oac {wins['oac']}/20, "
           f"sac_ablation {wins['sac_ablation']}/20; at the local optimum: oac {stuck['oac']}, "
           f"sac_ablation {stuck['sac_ablation']}; {secs:.0f}s")


def test_criterion_9_pendulum_smoke():
    start = time.perf_counter()
    cfg = TrainConfig(shift_multiplier=3.69, total_env_steps=30_000, hidden=(64, 64), seed=0)
    untrained_policy, _ = init_agent(cfg, Pendulum(), np.random.default_rng(cfg.seed))
    untrained = evaluate(untrained_policy, Pendulum(), cfg.eval_episodes, eval_seed_base(cfg.seed))
    oac = train(cfg, Pendulum())
    oac_secs = time.perf_counter() - start
    finite = all(np.isfinite(v) for row in oac.rows() for v in row)
    # calibration: the margin is half the improvement the pessimistic baseline reaches on the same budget
    sac = train(replace(cfg, mode="sac_ablation"), Pendulum())
    margin = 0.5 * (sac.return_smooth[-1] - untrained)
    gain = oac.return_smooth[-1] - untrained
    ok = finite and margin > 0 and gain >= margin and oac_secs < 900
    report(9, ok, f"untrained {untrained:.1f}, oac {oac.return_smooth[-1]:.1f}, "
                  f"sac_ablation {sac.return_smooth[-1]:.1f}; gain {gain:.1f} vs margin {margin:.1f}; "
                  f"oac run {oac_secs:.0f}s")


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("env = rbf_bandit\ntotal_env_steps = 200\neval_interval = 20\neval_episodes = 1\n"
                   "initial_random_steps = 50\nhidden = 8,8\nbatch = 16\nshift_multiplier = 2\n")
    pcfg = tmp_path / "pend.cfg"
    pcfg.write_text("env = pendulum\ntotal_env_steps = 400\neval_interval = 200\neval_episodes = 1\n"
                    "initial_random_steps = 100\nhidden = 8\nbatch = 16\n")

    def commands(out):
        return [
            (["train", "--config", str(cfg), "--out", str(out / "t")], ["t/metrics.csv"]),
            (["train", "--config", str(pcfg), "--out", str(out / "p")], ["p/metrics.csv"]),
            (["sweep", "--config", str(cfg), "--out", str(out / "s"), "--key", "beta_ub", "--values", "0,4.66",
              "--seeds", "0,1"], ["s/sweep.csv", "s/sweep_summary.csv"]),
            (["slice", "--config", str(pcfg), "--params", str(out / "p"), "--out", str(out / "sl")],
             ["sl/slice.csv"]),
            (["epg-demo", "--alpha", "0.2", "--out", str(out / "e")], ["e/epg.csv"]),
            (["sample-efficiency", str(out / "t" / "metrics.csv"), "--thresholds", "0,0.5,1,2",
              "--out", str(out / "se")], ["se/sample_efficiency.csv"]),
            (["plot", str(out / "t" / "metrics.csv"), str(out / "p" / "metrics.csv"), "--out", str(out / "pl")],
             ["pl/plot.dat"]),
        ]

    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        files = {}
        for argv, produced in commands(out):
            assert cli.main(argv) == 0, argv
            files.update({name: (out / name).read_bytes() for name in produced})
        outputs.append(files)
    same = outputs[0] == outputs[1]
    report(10, same, f"{len(outputs[0])} CSV/data files from 6 commands byte-identical across reruns")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [fn for name, fn in list(globals().items()) if name.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    raise SystemExit(1 if failed else 0)
