"""Channel generation under the indoor pathloss / Rayleigh model, bounded-error
CSI containers, and an exact worst-case oracle over the uncertainty ball.

The oracle solves max/min of (g+d)^H X (g+d) over ||d|| <= radius as a
trust-region subproblem in the eigenbasis of X.  It shares no code with the
LMI/SDP machinery, so the two paths can validate each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DimensionError, DomainError
from .model import SystemConfig

_HARD_CASE_EPS = 1e-13


def pathloss_db(carrier_hz: float, distance_m: float) -> float:
    """Indoor attenuation in dB: 17.3 + 24.9 log10(f/GHz) + 38.3 log10(d/m)."""
    if carrier_hz <= 0 or distance_m <= 0:
        raise DomainError("carrier frequency and distance must be positive")
    f_ghz = carrier_hz / 1e9
    return 17.3 + 24.9 * np.log10(f_ghz) + 38.3 * np.log10(distance_m)


def pathloss_linear(carrier_hz: float, distance_m: float) -> float:
    """Attenuation as a linear power ratio (large number)."""
    return 10.0 ** (pathloss_db(carrier_hz, distance_m) / 10.0)


@dataclass(frozen=True)
class UncertaintyBall:
    """Euclidean ball of channel vectors around an estimate."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=complex).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if self.radius < 0:
            raise DomainError(f"radius must be nonnegative, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class ChannelSet:
    """One realization: exact LUE channels plus estimated EVE/EHN channels
    with their uncertainty radii."""

    h: tuple[np.ndarray, ...]
    g_e_bar: tuple[np.ndarray, ...]
    g_h_bar: tuple[np.ndarray, ...]
    theta_e: tuple[float, ...]
    theta_h: tuple[float, ...]

    def __post_init__(self):
        vecs = self.h + self.g_e_bar + self.g_h_bar
        if not vecs:
            raise DimensionError("channel set must contain at least one vector")
        n = vecs[0].size
        if any(v.size != n for v in vecs):
            raise DimensionError("all channel vectors must share the antenna count")
        if len(self.theta_e) != len(self.g_e_bar) or len(self.theta_h) != len(self.g_h_bar):
            raise DimensionError("one radius per estimated channel required")
        if any(t < 0 for t in self.theta_e + self.theta_h):
            raise DomainError("uncertainty radii must be nonnegative")

    @property
    def n_tx(self) -> int:
        return self.h[0].size

    @property
    def n_lue(self) -> int:
        return len(self.h)

    def eve_ball(self, m: int) -> UncertaintyBall:
        return UncertaintyBall(self.g_e_bar[m], self.theta_e[m])

    def ehn_ball(self, i: int) -> UncertaintyBall:
        return UncertaintyBall(self.g_h_bar[i], self.theta_h[i])


def _draw_cscg(rng: np.random.Generator, variance: float, n: int) -> np.ndarray:
    s = np.sqrt(variance / 2.0)
    return rng.normal(scale=s, size=n) + 1j * rng.normal(scale=s, size=n)


def draw_channels(config: SystemConfig, seed) -> ChannelSet:
    """Draw one channel realization; deterministic for a given seed.

    Each entry is i.i.d. CSCG with per-antenna variance equal to the inverse
    linear attenuation of the link.  Uncertainty radii follow
    Theta^2 = uncertainty_fraction * variance.
    """
    rng = np.random.default_rng(seed)
    n = config.n_tx

    def var(dist):
        return 1.0 / pathloss_linear(config.carrier_hz, dist)

    h = tuple(_draw_cscg(rng, var(d), n) for d in config.lue_dist_m)
    g_e = tuple(_draw_cscg(rng, var(d), n) for d in config.eve_dist_m)
    g_h = tuple(_draw_cscg(rng, var(d), n) for d in config.ehn_dist_m)
    th_e = tuple(np.sqrt(config.uncertainty_fraction * var(d)) for d in config.eve_dist_m)
    th_h = tuple(np.sqrt(config.uncertainty_fraction * var(d)) for d in config.ehn_dist_m)
    for v in h + g_e + g_h:
        v.setflags(write=False)
    return ChannelSet(h=h, g_e_bar=g_e, g_h_bar=g_h, theta_e=th_e, theta_h=th_h)


def sample_ball(ball: UncertaintyBall, count: int, seed) -> np.ndarray:
    """Uniform samples of the closed ball, returned as rows g_bar + d.

    Direction uniform on the complex sphere, radius proportional to
    u**(1/(2 n)) so the volume measure is uniform in the 2n real dimensions.
    """
    rng = np.random.default_rng(seed)
    n = ball.dim
    z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = ball.radius * rng.random(count) ** (1.0 / (2 * n))
    return ball.center[None, :] + z / norms * radii[:, None]


def _trs_min(lam: np.ndarray, beta: np.ndarray, radius: float) -> tuple[np.ndarray, float]:
    """Minimize sum(lam |w|^2 + 2 Re(conj(beta) w)) over ||w|| <= radius.

    Returns (w, mu) satisfying (lam + mu) w = -beta, mu >= max(0, -lam_min),
    mu * (||w|| - radius) = 0, solved to machine precision via a safeguarded
    Newton iteration on the reciprocal-norm secular equation.
    """
    lmin = float(lam.min())
    scale = max(1.0, float(np.abs(lam).max()), float(np.abs(beta).max()))
    babs = np.abs(beta)

    def w_of(mu):
        d = lam + mu
        w = np.zeros_like(beta)
        ok = d > 0
        w[ok] = -beta[ok] / d[ok]
        return w

    # Interior candidate (mu = 0) only available when the curvature is PSD.
    if lmin >= -_HARD_CASE_EPS * scale:
        null = lam <= _HARD_CASE_EPS * scale
        if np.all(babs[null] <= _HARD_CASE_EPS * scale):
            w0 = np.zeros_like(beta)
            pos = ~null
            w0[pos] = -beta[pos] / lam[pos]
            if np.linalg.norm(w0) <= radius:
                return w0, 0.0

    if radius == 0.0:
        return np.zeros_like(beta), max(0.0, -lmin)

    mu_lo = max(0.0, -lmin)
    # Hard case: no coordinate with lam == lam_min carries a linear term, and
    # the regularized solution at mu = -lam_min is already inside the ball.
    at_floor = lam - lmin <= _HARD_CASE_EPS * scale
    if mu_lo > 0 and np.all(babs[at_floor] <= _HARD_CASE_EPS * scale):
        w = np.zeros_like(beta)
        free = ~at_floor
        w[free] = -beta[free] / (lam[free] + mu_lo)
        nrm = np.linalg.norm(w)
        if nrm <= radius:
            k = int(np.argmax(at_floor))
            w[k] += np.sqrt(max(radius * radius - nrm * nrm, 0.0))
            return w, mu_lo

    # Easy case: ||w(mu)|| decreases from above radius to 0 on (mu_lo, inf).
    mu_hi = mu_lo + max(scale, np.linalg.norm(beta) / radius)
    while np.linalg.norm(w_of(mu_hi)) > radius:
        mu_hi = 2.0 * mu_hi + scale
    mu = 0.5 * (mu_lo + mu_hi) if mu_lo > 0 else min(mu_hi, np.linalg.norm(beta) / radius)
    if mu <= mu_lo:
        mu = 0.5 * (mu_lo + mu_hi)
    for _ in range(200):
        d = lam + mu
        w = -beta / d
        nrm = np.linalg.norm(w)
        if nrm > radius:
            mu_lo = max(mu_lo, mu)
        else:
            mu_hi = min(mu_hi, mu)
        err = 1.0 / nrm - 1.0 / radius
        if abs(err) <= 1e-15 / radius:
            break
        # Newton on 1/||w(mu)|| - 1/radius, which is nearly linear in mu.
        slope = float(np.sum(babs * babs / d ** 3)) / nrm ** 3
        if slope <= 0:
            mu = 0.5 * (mu_lo + mu_hi)
            continue
        step = -err / slope
        mu_new = mu + step
        if not (mu_lo < mu_new < mu_hi):
            mu_new = 0.5 * (mu_lo + mu_hi)
        if mu_new == mu:
            break
        mu = mu_new
    w = w_of(mu)
    nrm = np.linalg.norm(w)
    if nrm > 0:
        w *= radius / nrm
    return w, mu


def worst_case_quadratic(ball: UncertaintyBall, x, sense: str) -> tuple[float, np.ndarray]:
    """Exact extremum of (g+d)^H X (g+d) over ||d|| <= radius.

    Returns (value, d_star).  ``sense`` is "max" or "min".  Independent of the
    solver path: eigendecomposition plus a secular-equation root find, refined
    until the stationarity residual ||(X + mu I) d + X g|| is below 1e-10 of
    the problem scale.
    """
    m = np.asarray(getattr(x, "m", x), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] != ball.dim:
        raise DimensionError(f"matrix dim {m.shape[0]} vs ball dim {ball.dim}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-9 * scale:
        raise ContractError("worst_case_quadratic requires a Hermitian matrix")
    if sense not in ("max", "min"):
        raise DomainError(f"sense must be 'max' or 'min', got {sense!r}")

    g = ball.center
    if ball.radius == 0.0:
        return float(np.real(g.conj() @ m @ g)), np.zeros_like(g)

    sign = -1.0 if sense == "max" else 1.0
    a = sign * 0.5 * (m + m.conj().T)
    lam, u = np.linalg.eigh(a)
    beta = u.conj().T @ (a @ g)

    w, mu = _trs_min(lam, beta, ball.radius)
    d = u @ w
    value = float(np.real((g + d).conj() @ m @ (g + d)))

    qscale = max(1.0, float(np.abs(lam).max(initial=0.0)) * (np.linalg.norm(g) + ball.radius))
    resid = np.linalg.norm(a @ d + mu * d + a @ g)
    if resid > 1e-10 * qscale:
        raise ContractError(f"trust-region stationarity residual {resid:.2e} above tolerance")
    return value, d
