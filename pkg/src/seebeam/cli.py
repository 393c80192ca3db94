"""Command-line front door: single-instance solves, Monte Carlo sweeps, the
arithmetic-cost table, and a fast self-test."""

from __future__ import annotations

import sys
import time

import click
import numpy as np

from . import algorithms as alg
from . import complexity as cx
from . import experiments as xp
from .channel import UncertaintyBall, draw_channels, sample_ball, worst_case_quadratic
from .errors import SeebeamError
from .model import SystemConfig, w_to_dbm

ALGO_CHOICES = xp.ALL_ALGOS


def _load_cfg(path) -> SystemConfig:
    if path is None:
        return SystemConfig()
    loaded = xp.load_config(path)
    if isinstance(loaded, xp.ExperimentSpec):
        return loaded.config
    return loaded


@click.group()
def main():
    """Robust secrecy-energy-efficiency beamforming toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML scenario file; defaults to the built-in scenario.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--algo", type=click.Choice(ALGO_CHOICES), default="sdp",
              show_default=True)
def solve(config_path, seed, algo):
    """Solve one channel realization and print the metrics report."""
    cfg = _load_cfg(config_path)
    channels = draw_channels(cfg, seed)
    t0 = time.perf_counter()
    if algo.startswith("srm-"):
        out = alg.srm_solve(channels, cfg, algo.removeprefix("srm-"))
    else:
        out = alg.TSBAJ[algo](channels, cfg)
    dt = time.perf_counter() - t0
    click.echo(f"algorithm      : {out.algorithm}")
    click.echo(f"seed           : {seed}")
    if out.outage:
        click.echo("outage         : yes (demands unmeetable within the power budget)")
        return
    click.echo(f"t* (nats/s)    : {out.t_star:.6e}   (t_max {out.t_max:.6e})")
    click.echo(f"radiated power : {out.f_star:.4f} W  "
               f"({w_to_dbm(out.f_star):.2f} dBm of {w_to_dbm(cfg.p_max_w):.2f} dBm budget)")
    click.echo(f"total power    : {out.total_power_w:.4f} W")
    click.echo(f"SEE            : {out.see_star:.2f} nats/joule")
    rep = out.report
    for n, (r, s) in enumerate(zip(rep.rates_lue, rep.secrecy_rates)):
        click.echo(f"  user {n}: rate {r:.6e} nats/s   secrecy {s:.6e} nats/s")
    for m, row in enumerate(rep.leakage):
        worst = max(row)
        click.echo(f"  eavesdropper {m}: worst stream leakage {worst:.6e} nats/s "
                   f"(cap {cfg.r_aux_nats_s:.6e})")
    for i, p in enumerate(rep.harvested_w):
        click.echo(f"  harvester {i}: {p:.6e} W (demand {cfg.p_req_w:.6e} W)")
    click.echo(f"grid points    : {len(out.trace)}   solve time {dt:.1f} s")
    if out.warnings:
        for w in out.warnings:
            click.echo(f"warning: {w}", err=True)


@main.command()
@click.argument("experiment", type=click.Choice(xp.EXPERIMENTS))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=None,
              help="Trial count; defaults per experiment (200 sweeps / 500 outage).")
@click.option("--out", "out_dir", type=click.Path(), default="sweep_out",
              show_default=True)
@click.option("--algo", "algos", type=click.Choice(ALGO_CHOICES), multiple=True,
              help="Restrict to these algorithms (repeatable).")
@click.option("--workers", type=int, default=1, show_default=True)
def sweep(experiment, config_path, seed, trials, out_dir, algos, workers):
    """Run a Monte Carlo sweep and write trial + aggregate CSV files."""
    cfg = _load_cfg(config_path)
    spec = xp.default_spec(experiment, cfg, trials=trials, master_seed=seed,
                           algorithms=tuple(algos) or None, workers=workers)
    t0 = time.perf_counter()
    result = xp.run(spec)
    trials_path, agg_path = xp.emit_csv(result, out_dir)
    click.echo(f"{experiment}: {spec.trials} trials x {len(spec.grid)} grid points "
               f"in {time.perf_counter() - t0:.1f} s")
    click.echo(f"wrote {trials_path}")
    click.echo(f"wrote {agg_path}")


@main.command()
@click.option("--n-tx", type=int, default=7, show_default=True)
@click.option("--n-lue", type=int, default=3, show_default=True)
@click.option("--n-eve", type=int, default=2, show_default=True)
@click.option("--n-ehn", type=int, default=2, show_default=True)
@click.option("--epsilon", type=float, default=1e-7, show_default=True)
@click.option("--t-search", type=int, default=1, show_default=True)
def complexity(n_tx, n_lue, n_eve, n_ehn, epsilon, t_search):
    """Print the arithmetic-cost table for the three designs."""
    inputs = cx.ComplexityInputs(n_tx=n_tx, n_lue=n_lue, n_eve=n_eve, n_ehn=n_ehn,
                                 epsilon=epsilon, t_search=t_search)
    click.echo(cx.table(inputs))


def _selftest_checks():
    from . import sdpcore
    from .model import BeamformingSolution, jain_index

    rng = np.random.default_rng(0)

    def check_embedding():
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = 0.5 * (a + a.conj().T)
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = 0.5 * (b + b.conj().T)
        lhs = np.trace(sdpcore.embed_hermitian(a) @ sdpcore.embed_hermitian(b))
        return abs(lhs - 2 * np.trace(a @ b).real) < 1e-10

    def check_worst_case_oracle():
        g = rng.normal(size=3) + 1j * rng.normal(size=3)
        ball = UncertaintyBall(g, 0.8)
        hi, _ = worst_case_quadratic(ball, np.eye(3), "max")
        exact = (np.linalg.norm(g) + 0.8) ** 2
        pts = sample_ball(ball, 4000, 1)
        vals = np.real(np.einsum("ki,ij,kj->k", pts.conj(), np.eye(3), pts))
        return (abs(hi - exact) < 1e-10 * exact
                and vals.max() <= hi + 1e-9
                and vals.max() >= 0.9 * hi)

    def check_solver_closed_form():
        h = rng.normal(size=4) + 1j * rng.normal(size=4)
        p = sdpcore.ConicProblem()
        w = p.add_psd_block(4)
        p.add_objective_term(w, np.eye(4))
        hm = np.outer(h, h.conj())
        p.add_linear_constraint([(w, hm)], ">=", 1.0)
        sol = sdpcore.solve(p)
        return (sol.status == "optimal"
                and abs(sol.objective - 1.0 / np.linalg.norm(h) ** 2) < 1e-6)

    def check_recoveries():
        cfg = SystemConfig()
        ch = draw_channels(cfg, 11)
        res = alg.solve_power_min(1.5e5, ch, cfg)
        if not res.ok:
            return False
        tight = alg.feasibility_recovery(res.solution, 1.5e5, ch, cfg)
        ranked = alg.rank_one_recovery(tight, ch, cfg)
        power_ok = abs(ranked.transmit_power() - res.solution.transmit_power()) \
            < 1e-9 * res.solution.transmit_power()
        rank_ok = max(sdpcore.rank_ratio(w.m) for w in ranked.w_mats) <= 1e-6
        return power_ok and rank_ok

    def check_zero_forcing():
        cfg = SystemConfig()
        ch = draw_channels(cfg, 12)
        phi, xis = alg.zfbf_bases(ch)
        ok = all(np.abs(h.conj() @ phi).max() < 1e-10 for h in ch.h)
        for n, xi in enumerate(xis):
            for k, h in enumerate(ch.h):
                if k != n:
                    ok = ok and np.abs(h.conj() @ xi).max() < 1e-10
        return ok

    def check_fairness_index():
        return (abs(jain_index((0.5, 0.5)) - 1.0) < 1e-12
                and abs(jain_index((1.0, 0.0)) - 0.5) < 1e-12)

    return [
        ("hermitian embedding trace identity", check_embedding),
        ("worst-case oracle dominates sampling", check_worst_case_oracle),
        ("conic solver matches closed form", check_solver_closed_form),
        ("recovery procedures preserve power and rank", check_recoveries),
        ("zero-forcing bases null the right channels", check_zero_forcing),
        ("fairness index formula", check_fairness_index),
    ]


@main.command()
def selftest():
    """Run fast end-to-end sanity checks; exits nonzero on any failure."""
    failures = 0
    for name, fn in _selftest_checks():
        try:
            ok = fn()
        except SeebeamError as exc:
            ok = False
            click.echo(f"FAIL {name}: {exc}")
            failures += 1
            continue
        click.echo(("PASS " if ok else "FAIL ") + name)
        failures += 0 if ok else 1
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
