"""Command-line runner: ``rwre <command> [--config FILE] [--seed S] [--out DIR] [--threads K]``.

Each command validates its config, writes reports plus ``manifest.json`` to
the output directory and exits with 0 when every asserted check passes, 1
when a check fails, 2 on a config error, 3 on numerical non-convergence and
4 when the memory or event budget is exhausted.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
import warnings

import numpy as np

from . import config as cfgmod
from ._parallel import default_workers
from .env import Environment, box_points, check_balanced, make_counterexample, periodize
from .errors import BudgetExceeded, ConfigError, ExplosionSuspect, NonConvergence
from .geometry import epsilon_batch, epsilon_n, mahler_check, symmetrize
from .io import Manifest, write_csv, write_json

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONV, EXIT_BUDGET = 0, 1, 2, 3, 4


def _env(cfg):
    return Environment.from_descriptor(cfg["env"])


def cmd_check_env(cfg, man, workers):
    env, p = _env(cfg), cfg["params"]
    grid = box_points(p["radius"], env.d)
    x = np.tile(grid, (p["times"], 1))
    n = np.repeat(np.arange(p["times"]), grid.shape[0])
    bal = check_balanced(env, x, n)
    W = env.weights(n, x)
    eps_a = epsilon_batch(env.U, W, env.U.size)
    e_n = epsilon_n(env, np.zeros(env.d, dtype=np.int64), p["steps"])
    V = W[0][:, None] * env.U.vectors
    mah = mahler_check(symmetrize(V)) if env.d <= 3 and np.ptp(V, axis=0).min() > 0 else None
    report = {"env": cfg["env"], "points": int(x.shape[0]), "max_abs_drift": bal.max_abs_drift,
              "worst_point": bal.worst_point, "balanced": bal.passed, "min_eps_a": float(eps_a.min()),
              "eps_n_origin": e_n.to_dict(), "elliptic_fraction": float((eps_a > 0).mean())}
    if mah is not None:
        report["mahler_origin"] = {"product": mah.product, "bound": mah.bound, "passed": mah.passed}
    write_json(man.path("check_env.json"), report, man.config_hash)
    man.check("balanced", bal.passed, max_abs_drift=bal.max_abs_drift)
    if mah is not None:
        man.check("mahler", mah.passed, product=mah.product)


def cmd_simulate(cfg, man, workers):
    from .walk import simulate_many
    env, p = _env(cfg), cfg["params"]
    start = p.get("start")
    paths = simulate_many(env, p["horizon"], cfg["seed"], p["replicas"], start=start, record=True)
    rows = []
    for r in range(p["replicas"]):
        for k in range(paths.shape[0]):
            rows.append({"replica": r, "n": k, **{f"x{i + 1}": int(paths[k, r, i]) for i in range(env.d)}})
    write_csv(man.path("paths.csv"), rows, man.config_hash)
    write_json(man.path("simulate.json"), {"replicas": p["replicas"], "horizon": p["horizon"],
                                           "final": paths[-1]}, man.config_hash)
    man.check("simulated", True, replicas=p["replicas"])


def cmd_invariant(cfg, man, workers):
    from .invariant import build_chain, covariance_A, stationary
    env, p = _env(cfg), cfg["params"]
    pe = periodize(env, p["N"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sm = stationary(build_chain(pe), tol=p["tol"], max_iter=p["max_iter"], seed=cfg["seed"])
    cov = covariance_A(sm, pe)
    name = f"phi-{man.config_hash[:12]}"
    head = sm.dump(man.path(name + ".bin"), man.path(name + ".json"), {"config_hash": man.config_hash})
    dev = float(np.abs(sm.phi - 1.0 / sm.phi.size).max())
    write_json(man.path("invariant.json"), {
        "N": p["N"], "residual": sm.residual, "init_gap": sm.init_gap, "iterations": sm.iterations,
        "closed_classes": sm.n_classes, "A": cov.A, "max_deviation_from_uniform": dev,
        "checksum": head["checksum"]}, man.config_hash)
    man.check("residual", sm.residual <= p["tol"], residual=sm.residual)
    if sm.irreducible:
        man.check("initializations_agree", sm.init_gap <= 1e-10, init_gap=sm.init_gap)


def cmd_covariance(cfg, man, workers):
    from .walk import empirical_covariance, gaussianity_report
    env, p = _env(cfg), cfg["params"]
    est = empirical_covariance(env, p["M"], p["n"], cfg["seed"])
    gauss = gaussianity_report(est.samples)
    rep = {"covariance": est.to_dict(), "gaussianity": gauss.to_dict()}
    drift_ok = bool(np.all(np.abs(est.mean) <= 4 * est.mean_stderr))
    man.check("zero_drift", drift_ok, mean=est.mean, stderr=est.mean_stderr)
    if "expected" in p:
        exp = np.asarray(p["expected"], dtype=np.float64)
        err = float(np.abs(est.matrix - exp).max())
        rep["max_abs_error"] = err
        man.check("covariance", err <= p["tolerance"], max_abs_error=err)
    write_json(man.path("covariance.json"), rep, man.config_hash)


def cmd_maxprinciple(cfg, man, workers):
    from .parabolic.battery import grid_battery, random_battery, summarize
    p = cfg["params"]
    res = random_battery(p["instances"], cfg["seed"], p["R_max"], p["T_max"], workers)
    if res:
        write_csv(man.path("maxprinciple.csv"), [r.to_dict() for r in res], man.config_hash)
        s = summarize(res)
        man.check("pure_max_principle", s["all_pure_pass"])
        man.check("abp_inequality", s["all_passed"], max_normalized=max(s["max_normalized"],
                                                                        s["max_adversarial_normalized"]))
        man.check("solver_residual", s["max_residual"] <= 1e-12, max_residual=s["max_residual"])
    if p["grid"]:
        g = grid_battery(workers, n_random=p["grid_random"], seed=cfg["seed"])
        write_csv(man.path("grid_battery.csv"), [r.to_dict() for r in g], man.config_hash)
        s = summarize(g)
        man.check("grid_abp", s["max_normalized"] <= 1.0, max_normalized=s["max_normalized"])
        man.check("grid_pure", s["all_pure_pass"])


def _contact_instance(args):
    from .parabolic.battery import random_environment
    from .parabolic.contact import contact_sets, lambda_inclusion_check, sample_cone, step2_bound_check
    from .parabolic.domain import ParabolicDomain
    seed, i, R_max, T_max, k = args
    rng = np.random.default_rng([seed, i, 7])
    env = random_environment(rng, int(rng.integers(2**31)))
    dom = ParabolicDomain.cylinder(env, float(rng.uniform(1.0, R_max)), int(rng.integers(2, T_max + 1)))
    f = np.where(rng.random(dom.nD) < 0.3, rng.exponential(size=dom.nD), 0.0)
    u = dom.solve(f, -rng.random(dom.nB))
    M = float(u[: dom.nD].max())
    row = {"instance": i, "R": dom.R, "T": dom.T, "n_D": dom.nD, "M": M}
    if M <= 0:
        row.update(lambda_checked=0, lambda_pass=True, gamma_plus=0, undecided=0, step2_max_ratio=0.0,
                   step2_pass=True, witnesses_ok=True)
        return row
    lam = lambda_inclusion_check(dom, u, sample_cone(M, dom.R, dom.d, k, seed + i))
    cs = contact_sets(dom, u)
    st = step2_bound_check(dom, u, cs)
    row.update(lambda_checked=lam.n_checked, lambda_pass=lam.passed, gamma_plus=int(cs.gamma_plus_indices.size),
               undecided=len(cs.undecided), step2_max_ratio=st.max_ratio, step2_pass=st.passed,
               witnesses_ok=True)
    return row


def cmd_contact(cfg, man, workers):
    from ._parallel import pmap
    p = cfg["params"]
    rows = pmap(_contact_instance, [(cfg["seed"], i, p["R_max"], p["T_max"], p["samples"])
                                    for i in range(p["instances"])], workers, chunksize=1)
    write_csv(man.path("contact.csv"), rows, man.config_hash)
    man.check("lambda_inclusion", all(r["lambda_pass"] for r in rows),
              samples=sum(r["lambda_checked"] for r in rows))
    man.check("step2_bound", all(r["step2_pass"] for r in rows),
              max_ratio=max(r["step2_max_ratio"] for r in rows))
    man.check("gamma_plus_decided", all(r["undecided"] == 0 for r in rows))


def cmd_counterexample(cfg, man, workers):
    from .walk import empirical_covariance
    p = cfg["params"]
    targets = {"xi": np.diag([0.5, 0.5]), "xi_prime": np.diag([1 / 3, 2 / 3])}
    for variant, target in targets.items():
        env = make_counterexample(variant)
        est = empirical_covariance(env, p["M"], p["n"], cfg["seed"])
        err = float(np.abs(est.matrix - target).max())
        write_json(man.path(f"covariance_{variant}.json"), {"variant": variant, "expected": target,
                                                           "max_abs_error": err, **est.to_dict()},
                   man.config_hash)
        man.check(f"covariance_{variant}", err <= p["tolerance"], max_abs_error=err)


def _ct_env(spec, seed):
    from .ctime import ConstantRates, IIDRates, ModulatedRates
    from .env import JumpRange
    U = JumpRange.nearest_neighbor(int(spec.get("d", 2)), lazy=False)
    kind = spec["kind"]
    if kind == "constant":
        return ConstantRates(U, spec.get("rates"), seed)
    if kind == "iid":
        kw = {k: spec[k] for k in ("low", "high", "dt", "law", "shape") if k in spec}
        return IIDRates(U, seed, **kw)
    kw = {k: spec[k] for k in ("amplitude", "frequency") if k in spec}
    return ModulatedRates(U, spec.get("rates"), seed=seed, **kw)


def cmd_ctime(cfg, man, workers):
    from .ctime import ct_covariance, explosion_report, simulate_ct, slowed_paths
    p = cfg["params"]
    env = _ct_env(p["ct_env"], cfg["seed"])
    path = simulate_ct(env, p["horizon"], cfg["seed"])
    with open(man.path("events.csv"), "w", newline="") as fh:
        fh.write(f"# config_hash={man.config_hash}\n")
        path.write_log(fh)
    rep = {"jumps": int(path.times.size - 1), "rejections": path.rejections}
    if env.piecewise_constant:
        man.check("exact_event_times", path.rejections == 0, rejections=path.rejections)
    if p["slowed"]:
        sp = slowed_paths(env, p["horizon"], cfg["seed"], p["replicas"])
        cp = p["horizon"] * np.array([0.25, 0.5, 0.75, 1.0])
        T = np.array([s.T(cp) for s in sp])
        er = explosion_report(cp, T, np.array([s.positions.shape[0] - 1 for s in sp]),
                              np.array([s.exploded for s in sp]))
        rep["slowed"] = er.to_dict()
        slopes_ok = bool(np.all(np.diff(T, axis=1) > 0) and np.all(T <= cp + 1e-12))
        man.check("clock_monotone", slopes_ok)
    cov = ct_covariance(env, p["M"], p["horizon"], cfg["seed"])
    rep["covariance"] = cov.to_dict()
    man.check("zero_drift", bool(np.all(np.abs(cov.mean) <= 4 * cov.mean_stderr)), mean=cov.mean)
    if p["ct_env"]["kind"] == "constant":
        r = np.asarray(env.r)
        expected = (env.U.vectors.T * r) @ env.U.vectors
        err = float(np.abs(cov.matrix - expected).max())
        rep["expected_covariance"] = expected
        man.check("covariance", err <= p["tolerance"], max_abs_error=err)
    write_json(man.path("ctime.json"), rep, man.config_hash)


def cmd_zrp(cfg, man, workers):
    from .ctime import (RateFunction, moment_condition_ct, occupation_law, sample_mu_alpha, simulate_zero_range,
                        zrp_sampler, zrp_slowed_walkers)
    p = cfg["params"]
    g = RateFunction.from_spec(p["g"])
    pmf, Z, K = occupation_law(g, p["alpha"])
    state = sample_mu_alpha(g, p["alpha"], p["L"], p["d"], cfg["seed"])
    write_json(man.path("zrp_config.json"), {"L": p["L"], "d": p["d"], "g": g.to_spec(), "alpha": p["alpha"],
                                             "u": p["u"], "seed": cfg["seed"], "truncation": K,
                                             "partition_function": Z}, man.config_hash)
    t_stat = min(p["horizon"], 1000.0)
    times, src, dst, final = simulate_zero_range(state, t_stat, cfg["seed"])
    n_sites = final.eta.size
    emp = np.bincount(final.eta, minlength=4)[:4] / n_sites
    se = np.sqrt(pmf[:4] * (1 - pmf[:4]) / n_sites)
    stat_ok = bool(np.all(np.abs(emp - pmf[:4]) <= 4 * se))
    mom = moment_condition_ct(zrp_sampler(g, p["alpha"], p["u"], p["d"]), p["samples"], cfg["seed"])
    rep = {"truncation": K, "events": int(times.size), "particles": state.particles,
           "final_particles": final.particles, "occupancy": {"empirical": emp, "mu_alpha": pmf[:4], "se": se},
           "moment_condition": mom.to_dict()}
    man.check("particle_conservation", state.particles == final.particles)
    man.check("stationarity", stat_ok)
    man.check("moment_condition_finite", mom.finite, mean=mom.mean)
    if p["walkers"]:
        res = zrp_slowed_walkers(p["L"], g, p["alpha"], p["u"], p["horizon"], p["walkers"], cfg["seed"], p["d"])
        er = res.report()
        rep["walkers"] = {**er.to_dict(), "conserved": res.conserved, "zrp_events": res.zrp_events}
        man.check("walker_particle_conservation", res.conserved)
        man.check("clock_ratio", er.stabilized and er.in_unit_interval and er.band < p["band"],
                  limit=er.limit, band=er.band)
    write_json(man.path("zrp.json"), rep, man.config_hash)


def cmd_moment(cfg, man, workers):
    from .ctime import make_sampler, moment_condition_ct
    p = cfg["params"]
    rep = moment_condition_ct(make_sampler(p["sampler"]), p["M"], cfg["seed"])
    write_json(man.path("moment.json"), rep.to_dict(), man.config_hash)
    man.check("moment_finite", rep.finite, mean=rep.mean, max_sum_ratio=rep.max_sum_ratio)


def cmd_nsweep(cfg, man, workers):
    from .invariant import n_sweep
    env, p = _env(cfg), cfg["params"]
    rep = n_sweep(env, p["N"], p["tol"])
    write_json(man.path("n_sweep.json"), rep.to_dict(), man.config_hash)
    man.check("residuals", max(rep.residuals) <= p["tol"], max_residual=max(rep.residuals))


COMMANDS = {
    "check-env": cmd_check_env, "simulate": cmd_simulate, "invariant": cmd_invariant,
    "covariance": cmd_covariance, "maxprinciple": cmd_maxprinciple, "contact-diagnostics": cmd_contact,
    "counterexample": cmd_counterexample, "ctime-simulate": cmd_ctime, "zrp-env": cmd_zrp,
    "moment-check": cmd_moment, "n-sweep": cmd_nsweep,
}


def _origin(exc):
    """``module.function`` of the innermost package frame that raised ``exc``."""
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f"{os.sep}rwre{os.sep}" in f.filename]
    if not frames:
        return "rwre"
    f = frames[-1]
    mod = os.path.splitext(f.filename.split(f"{os.sep}rwre{os.sep}")[-1])[0].replace(os.sep, ".")
    return f"{mod}.{f.name}"


def build_parser():
    ap = argparse.ArgumentParser(prog="rwre", description="Balanced random walks in random environments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int, help="seed (overrides the config)")
    ap.add_argument("--out", default=None, help="output directory (default: out/<command>)")
    ap.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    return ap


def run(command, raw_config=None, seed=None, out=None, threads=None):
    """Run one command; returns the exit code."""
    try:
        raw = None
        if raw_config is not None:
            raw = raw_config if isinstance(raw_config, dict) else json.loads(raw_config)
        cfg = cfgmod.load(command, raw, seed)
    except (ConfigError, json.JSONDecodeError) as e:
        print(f"rwre {command}: config error in config.load: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = out or (raw or {}).get("out") or os.path.join("out", command)
    workers = threads or (raw or {}).get("threads") or default_workers()
    os.makedirs(out, exist_ok=True)
    man = Manifest(command, cfgmod.config_hash(cfg), cfg["seed"], out)
    write_json(man.path("config.json"), cfg, man.config_hash)
    try:
        COMMANDS[command](cfg, man, workers)
    except ConfigError as e:
        msg = f"config error in {_origin(e)}: {e}"
        man.write("config_error", msg)
        print(f"rwre {command}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as e:
        msg = f"non-convergence in {_origin(e)}: {e}"
        man.write("non_convergence", msg)
        print(f"rwre {command}: {msg}", file=sys.stderr)
        return EXIT_NONCONV
    except (BudgetExceeded, ExplosionSuspect, MemoryError) as e:
        msg = f"budget exhausted in {_origin(e)}: {e}"
        man.write("budget_exhausted", msg)
        print(f"rwre {command}: {msg}", file=sys.stderr)
        return EXIT_BUDGET
    man.write()
    for name, c in man.checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {name}")
    return EXIT_OK if man.passed else EXIT_FAIL


def main(argv=None):
    args = build_parser().parse_args(argv)
    raw = None
    if args.config:
        try:
            with open(args.config) as fh:
                raw = fh.read()
        except OSError as e:
            print(f"rwre {args.command}: config error in cli.main: {e}", file=sys.stderr)
            return EXIT_CONFIG
    return run(args.command, raw, args.seed, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
