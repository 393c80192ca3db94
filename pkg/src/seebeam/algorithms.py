"""Beamforming algorithms: robust power minimization at a fixed sum secrecy
rate, the two-stage search that maximizes secrecy energy efficiency, the
tightness and rank-one recovery procedures, reduced-complexity zero-forcing
variants, and max-rate baselines.

All solvers work on noise-normalized channels (unit receiver noise), which
keeps the conic data well-scaled; covariances stay in watts throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lmi, sdpcore
from .channel import ChannelSet
from .errors import ContractError, DomainError, InvalidConfigError
from .model import (
    BeamformingSolution,
    HermitianMatrix,
    MetricsReport,
    SystemConfig,
    circuit_power,
    metrics_report,
    quad_form,
    total_power_from_radiated,
)

RANK_TOL = 1e-6
PSR_ACTIVE_TOL = 1e-6


@dataclass(frozen=True)
class PowerMinResult:
    """Outcome of one inner power-minimization solve at fixed t."""

    status: str                      # optimal | infeasible | numerical-failure
    t: float
    f_t: float                       # radiated power; +inf unless optimal
    solution: BeamformingSolution | None
    zetas: tuple | None = None       # leakage auxiliaries, row-major (m, n)
    etas: tuple | None = None
    reduced: tuple | None = None     # ZFBF-family reduced blocks, if any
    diagnostics: object = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass(frozen=True)
class SearchSpec:
    """One-dimensional search policy for the two-stage algorithms.

    The marching grid uses t_max / 10 by default; two halving refinement
    passes around the incumbent bring the final resolution to t_max / 40
    while the trace stays short enough to converge in at most 15 points.
    """

    dt: float | None = None          # grid step; default t_max / 10
    refine_passes: int = 2           # halve dt and probe the incumbent's neighbors
    converge_rel: float = 1e-4       # running-max improvement deemed negligible
    converge_window: int = 3         # consecutive negligible improvements to stop
    solver_tol: float = 1e-7


@dataclass(frozen=True)
class GridPoint:
    t: float
    f_t: float
    total_power_w: float
    see: float
    asee: float
    status: str


@dataclass(frozen=True)
class TmaxResult:
    t_max: float
    origin_feasible: bool        # t = 0 fits the budget
    f_origin: float
    at_tmax: PowerMinResult | None
    n_solves: int
    feasible: bool = True        # some t >= 0 fits the budget
    t_lo: float = 0.0            # start of the affordable window


@dataclass(frozen=True)
class SeeSolution:
    """Result of a two-stage run (or a max-rate baseline)."""

    algorithm: str
    outage: bool
    t_star: float
    see_star: float
    f_star: float
    total_power_w: float
    t_max: float
    solution: BeamformingSolution | None
    trace: tuple[GridPoint, ...]
    report: MetricsReport | None
    zetas: tuple | None = None
    etas: tuple | None = None
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# normalized problem data


class _Normalized:
    """Channels scaled to unit receiver noise, plus shared constants."""

    def __init__(self, channels: ChannelSet, config: SystemConfig):
        if channels.n_lue != config.n_lue or len(channels.g_e_bar) != config.n_eve \
                or len(channels.g_h_bar) != config.n_ehn or channels.n_tx != config.n_tx:
            raise InvalidConfigError("channel set does not match the configuration")
        self.config = config
        self.nt = config.n_tx
        su = np.sqrt(config.noise_lue_w)
        se = np.sqrt(config.noise_eve_w)
        sh = np.sqrt(config.noise_ehn_w)
        self.h = [np.asarray(h) / su for h in channels.h]
        self.hmat = [np.outer(h, h.conj()) for h in self.h]
        self.ge = [np.asarray(g) / se for g in channels.g_e_bar]
        self.th_e = [t / se for t in channels.theta_e]
        self.gh = [np.asarray(g) / sh for g in channels.g_h_bar]
        self.th_h = [t / sh for t in channels.theta_h]
        self.harvest_floor = config.p_req_w / config.eh_eff / config.noise_ehn_w
        self.r_tilde = config.r_aux_tilde
        self.leak_coef = (lmi.leakage_coefficient(self.r_tilde)
                          if config.n_eve and self.r_tilde > 0 else None)
        if config.n_eve and self.r_tilde <= 0:
            raise DomainError(
                "a zero auxiliary rate forbids any leakage; no finite certificate exists")

    def thetas(self, t: float) -> list[float]:
        cfg = self.config
        return [lmi.theta(t, cfg.psr_ratios[n], cfg.bandwidth_hz, cfg.r_aux_nats_s)
                for n in range(cfg.n_lue)]


def _clip_psd(mat: np.ndarray) -> np.ndarray:
    """Zero out the (tolerance-level) negative eigenvalues of a solver block."""
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    if w[0] >= 0.0:
        return mat
    w = np.maximum(w, 0.0)
    return (v * w[None, :]) @ v.conj().T


def _leak_corner(nt: int) -> np.ndarray:
    c = np.zeros((nt + 1, nt + 1), dtype=complex)
    c[-1, -1] = 1.0
    return c


# ---------------------------------------------------------------------------
# inner solvers


def _solve_with_retry(problem, tol):
    """Solve, retrying once at ten times the tolerance on numerical failure.

    Double precision cannot always certify 1e-7 on badly conditioned
    instances (huge-power optima); the retry trades one decade of certified
    accuracy for an answer instead of a failure, and the diagnostics keep
    the achieved residuals.
    """
    sol = sdpcore.solve(problem, tol=tol)
    if sol.status == "numerical-failure":
        sol = sdpcore.solve(problem, tol=min(10.0 * tol, 1e-5))
    return sol


def solve_power_min(t: float, channels: ChannelSet, config: SystemConfig, *,
                    tol: float = 1e-7) -> PowerMinResult:
    """Minimum radiated power meeting every constraint at sum secrecy rate t.

    Full-space robust design: per-user covariances, jamming covariance, one
    certificate block per (eavesdropper, user) pair and per harvester.
    Infeasibility is reported, not raised: with aggressive demands the
    certificate system can be unsatisfiable.
    """
    norm = _Normalized(channels, config)
    nt, nl, ne, nh = norm.nt, config.n_lue, config.n_eve, config.n_ehn
    thetas = norm.thetas(t)

    p = sdpcore.ConicProblem()
    ws = [p.add_psd_block(nt, f"W{n}") for n in range(nl)]
    q = p.add_psd_block(nt, "Q")
    zetas = [[p.add_nonneg_scalar(f"zeta{m}_{n}") for n in range(nl)] for m in range(ne)]
    etas = [p.add_nonneg_scalar(f"eta{i}") for i in range(nh)]
    eye = np.eye(nt)
    for b in ws:
        p.add_objective_term(b, eye)
    p.add_objective_term(q, eye)

    for n in range(nl):
        th = thetas[n]
        if th <= lmi.THETA_VACUOUS_EPS:
            continue
        hm = norm.hmat[n]
        # (1+th)/th tr(H W_n) - sum_k tr(H W_k) - tr(H Q) >= 1
        terms = []
        for k in range(nl):
            coef = (1.0 + th) / th - 1.0 if k == n else -1.0
            terms.append((ws[k], coef * hm))
        terms.append((q, -hm))
        p.add_linear_constraint(terms, ">=", 1.0)

    for m in range(ne):
        gt = lmi.gtilde(norm.ge[m])
        ball = lmi.ball_matrix(nt, norm.th_e[m] ** 2)
        for n in range(nl):
            terms = []
            for k in range(nl):
                coef = -(norm.leak_coef - 1.0) if k == n else 1.0
                terms.append((ws[k], gt, coef))
            terms.append((q, gt, 1.0))
            terms.append((zetas[m][n], ball))
            p.add_lmi(nt + 1, _leak_corner(nt), terms)

    for i in range(nh):
        gt = lmi.gtilde(norm.gh[i])
        ball = lmi.ball_matrix(nt, norm.th_h[i] ** 2)
        corner = np.zeros((nt + 1, nt + 1), dtype=complex)
        corner[-1, -1] = -norm.harvest_floor
        terms = [(b, gt, 1.0) for b in ws + [q]]
        terms.append((etas[i], ball))
        p.add_lmi(nt + 1, corner, terms)

    sol = _solve_with_retry(p, tol)
    if sol.status != "optimal":
        status = "infeasible" if sol.status == "infeasible" else "numerical-failure"
        return PowerMinResult(status=status, t=t, f_t=np.inf, solution=None,
                              diagnostics=sol)
    bf = BeamformingSolution.from_arrays([_clip_psd(sol.block(b)) for b in ws],
                                         _clip_psd(sol.block(q)))
    return PowerMinResult(
        status="optimal", t=t, f_t=sol.objective, solution=bf,
        zetas=tuple(tuple(sol.block(zetas[m][n]) for n in range(nl)) for m in range(ne)),
        etas=tuple(sol.block(e) for e in etas),
        diagnostics=sol)


def zfbf_bases(channels: ChannelSet) -> tuple[np.ndarray, list[np.ndarray]]:
    """Null-space bases: jamming basis orthogonal to every user, and per-user
    beam bases orthogonal to every *other* user."""
    nt, nl = channels.n_tx, channels.n_lue
    if nt <= nl:
        raise InvalidConfigError(
            f"zero-forcing needs n_tx > n_lue, got {nt} <= {nl}")
    hstack = np.column_stack(channels.h)
    phi = sdpcore.null_space_basis(hstack)
    xis = []
    for n in range(nl):
        rest = [channels.h[k] for k in range(nl) if k != n]
        if rest:
            xis.append(sdpcore.null_space_basis(np.column_stack(rest)))
        else:
            xis.append(np.eye(nt, dtype=complex))
    return phi, xis


def solve_zfbf_power_min(t: float, channels: ChannelSet, config: SystemConfig, *,
                         tol: float = 1e-7) -> PowerMinResult:
    """Power minimization with beams confined to interference null spaces.

    Reduced covariances live in the null-space coordinates; the per-user rate
    demands become equalities because zero-forcing leaves no interference to
    trade against.  Rank-one recovery runs on the reduced blocks before the
    full-size covariances are reassembled.
    """
    norm = _Normalized(channels, config)
    nt, nl, ne, nh = norm.nt, config.n_lue, config.n_eve, config.n_ehn
    thetas = norm.thetas(t)
    phi, xis = zfbf_bases(channels)
    dw = nt - nl + 1
    dq = nt - nl

    p = sdpcore.ConicProblem()
    wbars = [p.add_psd_block(dw, f"Wbar{n}") for n in range(nl)]
    qbar = p.add_psd_block(dq, "Qbar")
    zetas = [[p.add_nonneg_scalar(f"zeta{m}_{n}") for n in range(nl)] for m in range(ne)]
    etas = [p.add_nonneg_scalar(f"eta{i}") for i in range(nh)]
    for b in wbars:
        p.add_objective_term(b, np.eye(dw))
    p.add_objective_term(qbar, np.eye(dq))

    hbar = [xis[n].conj().T @ norm.h[n] for n in range(nl)]
    for n in range(nl):
        p.add_linear_constraint([(wbars[n], np.outer(hbar[n], hbar[n].conj()))],
                                "==", thetas[n])

    for m in range(ne):
        gt = lmi.gtilde(norm.ge[m])
        ball = lmi.ball_matrix(nt, norm.th_e[m] ** 2)
        lefts = [xis[k].conj().T @ gt for k in range(nl)]
        left_q = phi.conj().T @ gt
        for n in range(nl):
            terms = []
            for k in range(nl):
                coef = -(norm.leak_coef - 1.0) if k == n else 1.0
                terms.append((wbars[k], lefts[k], coef))
            terms.append((qbar, left_q, 1.0))
            terms.append((zetas[m][n], ball))
            p.add_lmi(nt + 1, _leak_corner(nt), terms)

    for i in range(nh):
        gt = lmi.gtilde(norm.gh[i])
        ball = lmi.ball_matrix(nt, norm.th_h[i] ** 2)
        corner = np.zeros((nt + 1, nt + 1), dtype=complex)
        corner[-1, -1] = -norm.harvest_floor
        terms = [(wbars[k], xis[k].conj().T @ gt, 1.0) for k in range(nl)]
        terms.append((qbar, phi.conj().T @ gt, 1.0))
        terms.append((etas[i], ball))
        p.add_lmi(nt + 1, corner, terms)

    sol = _solve_with_retry(p, tol)
    if sol.status != "optimal":
        status = "infeasible" if sol.status == "infeasible" else "numerical-failure"
        return PowerMinResult(status=status, t=t, f_t=np.inf, solution=None,
                              diagnostics=sol)

    red_w = [_clip_psd(sol.block(b)) for b in wbars]
    red_q = _clip_psd(sol.block(qbar))
    # rank-one recovery in reduced coordinates, against the projected
    # channels; the split-off remainders cannot live in the reduced jamming
    # block (different null-space basis), so they rejoin the full-size
    # jamming covariance, where they are invisible to every user
    try:
        red_w, rests = _rank_one_project(
            red_w, [xis[n].conj().T @ np.asarray(channels.h[n]) for n in range(nl)])
    except ContractError as exc:
        return PowerMinResult(status="numerical-failure", t=t, f_t=np.inf,
                              solution=None, diagnostics=exc)
    full_w = [xis[n] @ red_w[n] @ xis[n].conj().T for n in range(nl)]
    full_q = phi @ red_q @ phi.conj().T
    for n, rest in enumerate(rests):
        if rest is not None:
            full_q = full_q + xis[n] @ rest @ xis[n].conj().T
    bf = BeamformingSolution.from_arrays([_clip_psd(w) for w in full_w],
                                         _clip_psd(full_q))
    return PowerMinResult(
        status="optimal", t=t, f_t=sol.objective, solution=bf,
        zetas=tuple(tuple(sol.block(zetas[m][n]) for n in range(nl)) for m in range(ne)),
        etas=tuple(sol.block(e) for e in etas),
        reduced=(tuple(HermitianMatrix(w) for w in red_w), HermitianMatrix(red_q)),
        diagnostics=sol)


def mrt_zfbf_powers(t: float, channels: ChannelSet, config: SystemConfig
                    ) -> tuple[np.ndarray, list[np.ndarray]]:
    """Closed-form per-user powers and beams: match the user channel inside
    its zero-forcing subspace, with the power pinned by the rate demand."""
    norm = _Normalized(channels, config)
    _, xis = zfbf_bases(channels)
    thetas = norm.thetas(t)
    powers = np.empty(config.n_lue)
    beams = []
    for n in range(config.n_lue):
        proj = xis[n] @ (xis[n].conj().T @ np.asarray(channels.h[n]))
        gain = np.linalg.norm(xis[n].conj().T @ np.asarray(channels.h[n]))
        if gain == 0.0:
            raise ContractError("user channel lies entirely in the nulled subspace")
        powers[n] = thetas[n] * config.noise_lue_w / gain ** 2
        beams.append(np.sqrt(powers[n]) * proj / gain)
    return powers, beams


def solve_mrt_zfbf_an(t: float, channels: ChannelSet, config: SystemConfig, *,
                      tol: float = 1e-7) -> PowerMinResult:
    """Jamming-only solve with beams fixed by the matched-filter construction.

    The only matrix variable is the reduced jamming covariance; the fixed
    beams contribute constants to every certificate block.  Infeasible
    instances (beams leak too much for any jamming) are reported as such.
    """
    norm = _Normalized(channels, config)
    nt, nl, ne, nh = norm.nt, config.n_lue, config.n_eve, config.n_ehn
    phi, _ = zfbf_bases(channels)
    dq = nt - nl
    powers, beams = mrt_zfbf_powers(t, channels, config)
    wfix = [np.outer(b, b.conj()) for b in beams]    # watts, like the variable blocks

    p = sdpcore.ConicProblem()
    qbar = p.add_psd_block(dq, "Qbar")
    zetas = [[p.add_nonneg_scalar(f"zeta{m}_{n}") for n in range(nl)] for m in range(ne)]
    etas = [p.add_nonneg_scalar(f"eta{i}") for i in range(nh)]
    p.add_objective_term(qbar, np.eye(dq))
    p.obj_offset = float(np.sum(powers))

    for m in range(ne):
        gt = lmi.gtilde(norm.ge[m])
        ball = lmi.ball_matrix(nt, norm.th_e[m] ** 2)
        left_q = phi.conj().T @ gt
        for n in range(nl):
            fixed = -(norm.leak_coef - 1.0) * wfix[n]
            for k in range(nl):
                if k != n:
                    fixed = fixed + wfix[k]
            const = _leak_corner(nt) + gt.conj().T @ fixed @ gt
            p.add_lmi(nt + 1, const,
                      [(qbar, left_q, 1.0), (zetas[m][n], ball)])

    ysum = sum(wfix)
    for i in range(nh):
        gt = lmi.gtilde(norm.gh[i])
        ball = lmi.ball_matrix(nt, norm.th_h[i] ** 2)
        corner = np.zeros((nt + 1, nt + 1), dtype=complex)
        corner[-1, -1] = -norm.harvest_floor
        const = corner + gt.conj().T @ ysum @ gt
        p.add_lmi(nt + 1, const, [(qbar, phi.conj().T @ gt, 1.0), (etas[i], ball)])

    sol = _solve_with_retry(p, tol)
    if sol.status != "optimal":
        status = "infeasible" if sol.status == "infeasible" else "numerical-failure"
        return PowerMinResult(status=status, t=t, f_t=np.inf, solution=None,
                              diagnostics=sol)
    red_q = _clip_psd(sol.block(qbar))
    full_q = phi @ red_q @ phi.conj().T
    bf = BeamformingSolution.from_arrays(
        [np.outer(b, b.conj()) for b in beams], _clip_psd(full_q))
    return PowerMinResult(
        status="optimal", t=t, f_t=sol.objective, solution=bf,
        zetas=tuple(tuple(sol.block(zetas[m][n]) for n in range(nl)) for m in range(ne)),
        etas=tuple(sol.block(e) for e in etas),
        reduced=((), HermitianMatrix(red_q)),
        diagnostics=sol)


INNER_SOLVERS = {
    "sdp": solve_power_min,
    "zfbf": solve_zfbf_power_min,
    "mrt-zfbf": solve_mrt_zfbf_an,
}


# ---------------------------------------------------------------------------
# recovery procedures


def feasibility_recovery(sol: BeamformingSolution, t: float, channels: ChannelSet,
                         config: SystemConfig) -> BeamformingSolution:
    """Rescale the user covariances so every rate demand binds exactly.

    The removed fractions move into the jamming covariance, so the radiated
    power, the harvest-side sum and the per-user received totals are all
    preserved; the leakage certificates only gain slack.
    """
    ys = []
    for n in range(config.n_lue):
        psr = lmi.build_psr(n, t, channels.h[n], config)
        if psr.vacuous:
            ys.append(1.0)
            continue
        signal = quad_form(channels.h[n], sol.w_mats[n])
        if signal <= 0.0:
            raise ContractError(
                f"user {n} receives no signal power; input cannot be optimal")
        y = psr.theta / (1.0 + psr.theta) * psr.rhs(sol) / signal
        if y > 1.0 + 1e-6 or y <= 0.0:
            raise ContractError(
                f"tightening factor y_{n} = {y:.6g} outside (0, 1]; "
                "input does not satisfy the rate demand")
        ys.append(min(y, 1.0))

    new_w = [y * w.m for y, w in zip(ys, sol.w_mats)]
    new_q = sol.an_cov.m.copy()
    for y, w in zip(ys, sol.w_mats):
        new_q = new_q + (1.0 - y) * w.m
    return BeamformingSolution.from_arrays(new_w, new_q)


def _rank_one_project(w_list, h_vecs):
    """Split each covariance into the rank-one part visible to its user and
    the remainder (which is jamming in disguise: its kernel contains the
    user's channel).  Returns (kept, remainders); remainders are None where
    nothing was split off."""
    kept, rests = [], []
    for w, h in zip(w_list, h_vecs):
        w = np.asarray(w, dtype=complex)
        tr = float(np.trace(w).real)
        if tr <= 0.0 or sdpcore.rank_ratio(w) <= RANK_TOL:
            kept.append(w)
            rests.append(None)
            continue
        h = np.asarray(h, dtype=complex).ravel()
        wh = w @ h
        denom = float(np.real(h.conj() @ wh))
        if denom <= 1e-12 * tr * float(np.real(h.conj() @ h)):
            raise ContractError(
                "covariance carries rank but no power toward its user; "
                "input cannot be optimal")
        keep = np.outer(wh, wh.conj()) / denom
        kept.append(keep)
        rests.append(_clip_psd(w - keep))
    return kept, rests


def rank_one_recovery(sol: BeamformingSolution, channels: ChannelSet,
                      config: SystemConfig) -> BeamformingSolution:
    """Strip the jamming-equivalent part out of each user covariance.

    At an optimum every covariance splits into one beam visible to its user
    plus components invisible to it; the latter serve only as jamming and are
    moved into the jamming covariance.  Preserved exactly: radiated power,
    the harvest-side sum, every user's received signal and total.  Raises if
    the reshuffle changes a rate-demand residual, which flags a non-optimal
    input.
    """
    def received_total(bf):
        return [sum(quad_form(channels.h[n], w) for w in bf.w_mats)
                + quad_form(channels.h[n], bf.an_cov) for n in range(config.n_lue)]

    before = received_total(sol)
    sig_before = [quad_form(channels.h[n], sol.w_mats[n]) for n in range(config.n_lue)]
    new_w, rests = _rank_one_project([w.m for w in sol.w_mats], channels.h)
    new_q = sol.an_cov.m.copy()
    for rest in rests:
        if rest is not None:
            new_q = new_q + rest
    out = BeamformingSolution.from_arrays(new_w, new_q)
    power_drift = abs(out.transmit_power() - sol.transmit_power())
    if power_drift > 1e-9 * max(1.0, sol.transmit_power()):
        raise ContractError(f"radiated power drifted by {power_drift:.2e} during recovery")
    after = received_total(out)
    for n in range(config.n_lue):
        sig_after = quad_form(channels.h[n], out.w_mats[n])
        scale = max(1.0, abs(before[n]))
        if abs(after[n] - before[n]) > 1e-7 * scale \
                or abs(sig_after - sig_before[n]) > 1e-7 * max(1.0, sig_before[n]):
            raise ContractError("rank-one recovery perturbed a rate-demand residual")
    return out


# ---------------------------------------------------------------------------
# one-dimensional search


class _FCache:
    """Memoized f(t) evaluations for one (channels, config, solver) triple."""

    def __init__(self, inner, channels, config, tol):
        self.inner = inner
        self.channels = channels
        self.config = config
        self.tol = tol
        self.hits: dict[float, PowerMinResult] = {}
        self.warnings: list[str] = []

    def __call__(self, t: float) -> PowerMinResult:
        if t not in self.hits:
            res = self.inner(t, self.channels, self.config, tol=self.tol)
            if res.status == "numerical-failure":
                self.warnings.append(
                    f"solver failure at t={t:.6g}: "
                    f"{getattr(res.diagnostics, 'message', '')}")
            self.hits[t] = res
        return self.hits[t]


# probe ladder (in bandwidths) for an affordable window when t = 0 is not:
# the reduced designs pin their rate demands as equalities, so their power
# need not be monotone in t and can dip under the budget at positive rates
FEASIBLE_PROBES = (0.5, 1.0, 2.0, 3.0, 4.0, 6.0)


def feasible_probe(cache: _FCache, pmax: float, bandwidth_hz: float) -> float | None:
    """First ladder point whose minimum power fits the budget, if any."""
    for mult in FEASIBLE_PROBES:
        r = cache(mult * bandwidth_hz)
        if r.ok and r.f_t <= pmax:
            return mult * bandwidth_hz
    return None


def budget_envelope(channels: ChannelSet, config: SystemConfig, *,
                    inner=solve_power_min, tol: float = 1e-7,
                    monotone: bool = False) -> float:
    """Smallest radiated power over the rate ladder (just f(0) for solvers
    whose power is provably nondecreasing in t)."""
    cache = _FCache(inner, channels, config, tol)
    r0 = cache(0.0)
    best = r0.f_t if r0.ok else np.inf
    if monotone:
        return best
    for mult in FEASIBLE_PROBES:
        r = cache(mult * config.bandwidth_hz)
        if r.ok:
            best = min(best, r.f_t)
    return best


def find_tmax(channels: ChannelSet, config: SystemConfig, *,
              inner=solve_power_min, tol: float = 1e-7,
              f_cache: _FCache | None = None) -> TmaxResult:
    """Largest t whose minimum radiated power fits the budget.

    The bracket shrinks by bisection with a secant proposal until f at the
    feasible end is within 1e-4 (relative) of the budget and the bracket is
    resolved to 1e-6 relative in t.  When t = 0 itself exceeds the budget, a
    rate ladder probes for an affordable window at positive t (the reduced
    designs' power can dip before it grows); only when that fails too is the
    instance declared infeasible.
    """
    cache = f_cache or _FCache(inner, channels, config, tol)
    pmax = config.p_max_w
    r0 = cache(0.0)
    origin_ok = r0.ok and r0.f_t <= pmax

    t_lo = 0.0
    if origin_ok:
        lo, f_lo = 0.0, r0.f_t
        hi = config.bandwidth_hz
    else:
        probe = feasible_probe(cache, pmax, config.bandwidth_hz)
        if probe is None:
            return TmaxResult(t_max=0.0, origin_feasible=False, feasible=False,
                              f_origin=r0.f_t, at_tmax=None,
                              n_solves=len(cache.hits))
        # lower edge of the affordable window
        bad, good = 0.0, probe
        for _ in range(40):
            if good - bad <= 1e-3 * max(good, 1e-12):
                break
            mid = 0.5 * (bad + good)
            r = cache(mid)
            if r.ok and r.f_t <= pmax:
                good = mid
            else:
                bad = mid
        t_lo = good
        lo, f_lo = good, cache(good).f_t
        hi = max(2.0 * good, config.bandwidth_hz)

    f_hi = np.inf
    for _ in range(60):
        r = cache(hi)
        f_hi = r.f_t if r.ok else np.inf
        if f_hi > pmax:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
    else:
        raise ContractError("budget crossing not bracketed; f(t) looks bounded")

    for _ in range(200):
        tight_f = f_lo >= pmax * (1.0 - 1e-4)
        tight_t = (hi - lo) <= 1e-6 * max(hi, 1e-12)
        if tight_f and tight_t:
            break
        if np.isfinite(f_hi) and f_hi > f_lo:
            mid = lo + (pmax - f_lo) * (hi - lo) / (f_hi - f_lo)
            span = hi - lo
            mid = min(max(mid, lo + 0.05 * span), hi - 0.05 * span)
        else:
            mid = 0.5 * (lo + hi)
        r = cache(mid)
        fm = r.f_t if r.ok else np.inf
        if fm > pmax:
            hi, f_hi = mid, fm
        else:
            lo, f_lo = mid, fm
    return TmaxResult(t_max=lo, origin_feasible=origin_ok, feasible=True,
                      f_origin=r0.f_t, at_tmax=cache(lo), t_lo=t_lo,
                      n_solves=len(cache.hits))


def _outage_result(algorithm: str, tmax: TmaxResult, warnings) -> SeeSolution:
    return SeeSolution(algorithm=algorithm, outage=True, t_star=0.0, see_star=0.0,
                       f_star=np.inf, total_power_w=np.inf, t_max=0.0,
                       solution=None, trace=(), report=None,
                       warnings=tuple(warnings))


def _finalize(algorithm: str, t_star: float, res: PowerMinResult,
              channels: ChannelSet, config: SystemConfig, tmax: TmaxResult,
              trace, warnings) -> SeeSolution:
    pcir = circuit_power(config.p_sp_w, config.n_tx)
    sol = res.solution
    # tightness recovery (full-space solver can leave demands slack)
    needs_tighten = False
    for n in range(config.n_lue):
        psr = lmi.build_psr(n, t_star, channels.h[n], config)
        if not psr.vacuous and psr.relative_residual(sol) > PSR_ACTIVE_TOL:
            needs_tighten = True
            break
    if needs_tighten:
        sol = feasibility_recovery(sol, t_star, channels, config)
    if any(sdpcore.rank_ratio(w.m) > RANK_TOL for w in sol.w_mats):
        sol = rank_one_recovery(sol, channels, config)
    ptot = total_power_from_radiated(res.f_t, config.amp_eff, pcir)
    report = metrics_report(channels.h, channels.g_e_bar, channels.g_h_bar,
                            sol, config)
    return SeeSolution(
        algorithm=algorithm, outage=False, t_star=t_star,
        see_star=t_star / ptot, f_star=res.f_t, total_power_w=ptot,
        t_max=tmax.t_max, solution=sol, trace=tuple(trace), report=report,
        zetas=res.zetas, etas=res.etas, warnings=tuple(warnings))


def _tsbaj(channels: ChannelSet, config: SystemConfig, inner, algorithm: str,
           search: SearchSpec, cache: "_FCache | None" = None,
           tmax: TmaxResult | None = None) -> SeeSolution:
    """Two-stage loop: march t along a grid, track the running-best SEE, then
    locally refine around the incumbent and recover a tight rank-one point."""
    cache = cache or _FCache(inner, channels, config, search.solver_tol)
    if tmax is None:
        tmax = find_tmax(channels, config, inner=inner, tol=search.solver_tol,
                         f_cache=cache)
    if not tmax.feasible:
        return _outage_result(algorithm, tmax, cache.warnings)

    pcir = circuit_power(config.p_sp_w, config.n_tx)
    pmax = config.p_max_w
    span = tmax.t_max - tmax.t_lo
    if search.dt is not None:
        dt = search.dt
        steps = max(int(np.floor(span / dt)), 0) if dt > 0 else 0
    else:
        steps = 10
        dt = span / steps if steps else 0.0

    def see_of(t, f):
        return t / total_power_from_radiated(f, config.amp_eff, pcir)

    def grid_t(k):
        # exact multiples, and the final point is exactly the cached budget
        # crossing so its feasibility is by construction, not re-solved
        if dt > 0 and k == steps and search.dt is None:
            return tmax.t_max
        return min(tmax.t_lo + k * dt, tmax.t_max)

    trace: list[GridPoint] = []
    asee = 0.0
    best_t, best_see = tmax.t_lo, 0.0
    flat = 0
    k = 0
    while True:
        t = grid_t(k)
        res = cache(t)
        if res.status == "numerical-failure":
            trace.append(GridPoint(t, np.inf, np.inf, 0.0, asee, res.status))
            if dt == 0.0 or grid_t(k + 1) <= t:
                break
            k += 1
            continue
        if not res.ok or res.f_t > pmax:
            break
        see_t = see_of(t, res.f_t)
        prev = asee
        asee = max(asee, see_t)
        if see_t >= best_see:
            best_t, best_see = t, see_t
        trace.append(GridPoint(t, res.f_t,
                               total_power_from_radiated(res.f_t, config.amp_eff, pcir),
                               see_t, asee, res.status))
        if prev > 0.0:
            flat = flat + 1 if (asee - prev) <= search.converge_rel * prev else 0
            if flat >= search.converge_window:
                break
        if dt == 0.0 or grid_t(k + 1) <= t:
            break
        k += 1

    for _ in range(search.refine_passes):
        dt /= 2.0
        if dt <= 0.0:
            break
        for cand in (best_t - dt, best_t + dt):
            if cand < tmax.t_lo or cand > tmax.t_max * (1 + 1e-12):
                continue
            res = cache(cand)
            if res.ok and res.f_t <= pmax:
                see_c = see_of(cand, res.f_t)
                asee = max(asee, see_c)
                trace.append(GridPoint(
                    cand, res.f_t,
                    total_power_from_radiated(res.f_t, config.amp_eff, pcir),
                    see_c, asee, res.status))
                if see_c > best_see:
                    best_t, best_see = cand, see_c

    best = cache(best_t)
    if not best.ok:
        return _outage_result(algorithm, tmax,
                              list(cache.warnings) + ["no grid point solved cleanly"])
    return _finalize(algorithm, best_t, best, channels, config, tmax, trace,
                     cache.warnings)


def sdp_tsbaj(channels: ChannelSet, config: SystemConfig,
              search: SearchSpec = SearchSpec()) -> SeeSolution:
    """Optimal two-stage design: full-space robust solve per grid point."""
    return _tsbaj(channels, config, solve_power_min, "sdp", search)


def zfbf_tsbaj(channels: ChannelSet, config: SystemConfig,
               search: SearchSpec = SearchSpec()) -> SeeSolution:
    """Two-stage design with the zero-forcing inner solver."""
    return _tsbaj(channels, config, solve_zfbf_power_min, "zfbf", search)


def mrt_zfbf_tsbaj(channels: ChannelSet, config: SystemConfig,
                   search: SearchSpec = SearchSpec()) -> SeeSolution:
    """Two-stage design with fixed matched-filter beams (jamming-only solve)."""
    return _tsbaj(channels, config, solve_mrt_zfbf_an, "mrt-zfbf", search)


TSBAJ = {
    "sdp": sdp_tsbaj,
    "zfbf": zfbf_tsbaj,
    "mrt-zfbf": mrt_zfbf_tsbaj,
}


def _srm_from_cache(channels, config, variant, cache, tmax) -> SeeSolution:
    algorithm = f"srm-{variant}"
    if not tmax.feasible:
        return _outage_result(algorithm, tmax, cache.warnings)
    res = tmax.at_tmax
    pcir = circuit_power(config.p_sp_w, config.n_tx)
    ptot = total_power_from_radiated(res.f_t, config.amp_eff, pcir)
    point = GridPoint(tmax.t_max, res.f_t, ptot, tmax.t_max / ptot,
                      tmax.t_max / ptot, res.status)
    return _finalize(algorithm, tmax.t_max, res, channels, config, tmax,
                     [point], cache.warnings)


def srm_solve(channels: ChannelSet, config: SystemConfig, variant: str = "sdp",
              search: SearchSpec = SearchSpec()) -> SeeSolution:
    """Max-rate baseline: run the chosen inner solver at the largest t the
    budget allows and score the SEE it happens to achieve there."""
    if variant not in INNER_SOLVERS:
        raise DomainError(f"unknown variant {variant!r}; expected one of "
                          f"{sorted(INNER_SOLVERS)}")
    inner = INNER_SOLVERS[variant]
    cache = _FCache(inner, channels, config, search.solver_tol)
    tmax = find_tmax(channels, config, inner=inner, tol=search.solver_tol,
                     f_cache=cache)
    return _srm_from_cache(channels, config, variant, cache, tmax)


def paired_solve(channels: ChannelSet, config: SystemConfig, variant: str,
                 search: SearchSpec = SearchSpec()
                 ) -> tuple[SeeSolution, SeeSolution]:
    """Two-stage result and its max-rate baseline from one shared f(t) cache."""
    if variant not in INNER_SOLVERS:
        raise DomainError(f"unknown variant {variant!r}; expected one of "
                          f"{sorted(INNER_SOLVERS)}")
    inner = INNER_SOLVERS[variant]
    cache = _FCache(inner, channels, config, search.solver_tol)
    tmax = find_tmax(channels, config, inner=inner, tol=search.solver_tol,
                     f_cache=cache)
    two_stage = _tsbaj(channels, config, inner, variant, search, cache=cache,
                       tmax=tmax)
    baseline = _srm_from_cache(channels, config, variant, cache, tmax)
    return two_stage, baseline
