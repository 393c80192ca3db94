"""Constraint objects for the robust power-minimization problems: linear
proportional-secrecy-rate rows, and the ball-robust leakage / harvest
constraints in their finite LMI form.

Each robust constraint on a quadratic of the true channel g = g_bar + d,
||d|| <= Theta, is certified by one (N_t+1) x (N_t+1) PSD block built from
G~ = [I, g_bar] plus a nonnegative auxiliary scalar; the numeric builders
here evaluate those blocks for concrete matrices so solutions can be
re-verified independently of the solver's own feasibility report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .model import BeamformingSolution, HermitianMatrix, SystemConfig, quad_form

THETA_VACUOUS_EPS = 1e-300


def theta(t: float, phi_n: float, bandwidth_hz: float, r_aux_nats_s: float) -> float:
    """Target SINR theta_n(t) = exp(phi_n t / BW + R_aux/BW) - 1."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if phi_n < 0 or r_aux_nats_s < 0 or bandwidth_hz <= 0:
        raise DomainError("phi_n, r_aux must be nonnegative and bandwidth positive")
    return float(np.expm1(phi_n * t / bandwidth_hz + r_aux_nats_s / bandwidth_hz))


def leakage_coefficient(r_tilde: float) -> float:
    """Weight 1 / (1 - exp(-R~)) applied to the probed user's covariance."""
    if r_tilde <= 0:
        raise DomainError("auxiliary rate must be positive (zero allows no leakage)")
    return float(1.0 / -np.expm1(-r_tilde))


def gtilde(g_bar: np.ndarray) -> np.ndarray:
    """[I, g_bar]: lifts N_t x N_t quadratics onto the (N_t+1)-dim LMI space."""
    g = np.asarray(g_bar, dtype=complex).ravel()
    return np.hstack([np.eye(g.size, dtype=complex), g[:, None]])


def ball_matrix(n_tx: int, theta_sq: float) -> np.ndarray:
    """diag(I, -Theta^2): the auxiliary scalar's coefficient in each LMI."""
    d = np.eye(n_tx + 1, dtype=complex)
    d[-1, -1] = -theta_sq
    return d


@dataclass(frozen=True)
class PsrConstraint:
    """Linearized per-user rate demand at a given t.

    ((1+theta)/theta) tr(H_n W_n) >= sum_k tr(H_n W_k) + tr(H_n Q) + noise.
    A zero theta (no auxiliary rate, t = 0) demands nothing and is flagged
    vacuous instead of dividing by zero.
    """

    n: int
    theta: float
    h_n: np.ndarray
    noise_w: float

    def __post_init__(self):
        if self.theta < 0:
            raise DomainError("theta must be nonnegative")
        if self.noise_w <= 0:
            raise DomainError("noise power must be positive")
        h = np.asarray(self.h_n, dtype=complex).ravel()
        h.setflags(write=False)
        object.__setattr__(self, "h_n", h)

    @property
    def vacuous(self) -> bool:
        return self.theta <= THETA_VACUOUS_EPS

    def lhs(self, sol: BeamformingSolution) -> float:
        if self.vacuous:
            return 0.0
        return (1.0 + self.theta) / self.theta * quad_form(self.h_n, sol.w_mats[self.n])

    def rhs(self, sol: BeamformingSolution) -> float:
        if self.vacuous:
            return 0.0
        acc = sum(quad_form(self.h_n, w) for w in sol.w_mats)
        return acc + quad_form(self.h_n, sol.an_cov) + self.noise_w

    def residual(self, sol: BeamformingSolution) -> float:
        """lhs - rhs; nonnegative iff satisfied, zero iff active."""
        if self.vacuous:
            return 0.0
        return self.lhs(sol) - self.rhs(sol)

    def relative_residual(self, sol: BeamformingSolution) -> float:
        if self.vacuous:
            return 0.0
        return self.residual(sol) / self.rhs(sol)

    def is_active(self, sol: BeamformingSolution, rel_tol: float = 1e-6) -> bool:
        return abs(self.relative_residual(sol)) <= rel_tol


def build_psr(n: int, t: float, h_n: np.ndarray, config: SystemConfig) -> PsrConstraint:
    th = theta(t, config.psr_ratios[n], config.bandwidth_hz, config.r_aux_nats_s)
    return PsrConstraint(n=n, theta=th, h_n=h_n, noise_w=config.noise_lue_w)


def build_xn(n: int, w_mats, q, r_tilde: float) -> HermitianMatrix:
    """Leakage-side composite: coef * W_n - sum_k W_k - Q.

    ``r_tilde`` is the per-bandwidth auxiliary rate (nats); zero means the
    eavesdroppers may learn nothing, which has no finite LMI form.
    """
    coef = leakage_coefficient(r_tilde)
    w_n = w_mats[n]
    acc = coef * np.asarray(w_n.m if isinstance(w_n, HermitianMatrix) else w_n,
                            dtype=complex)
    for w in w_mats:
        acc = acc - np.asarray(w.m if isinstance(w, HermitianMatrix) else w)
    acc = acc - np.asarray(q.m if isinstance(q, HermitianMatrix) else q)
    return HermitianMatrix(acc)


def build_y(w_mats, q) -> HermitianMatrix:
    """Harvest-side composite: sum_k W_k + Q."""
    acc = np.asarray(q.m if isinstance(q, HermitianMatrix) else q, dtype=complex).copy()
    for w in w_mats:
        acc = acc + np.asarray(w.m if isinstance(w, HermitianMatrix) else w)
    return HermitianMatrix(acc)


@dataclass(frozen=True)
class LmiBlock:
    """One evaluated certificate block plus its required auxiliary sign."""

    matrix: HermitianMatrix
    aux: float

    def is_psd(self, tol: float = 1e-8) -> bool:
        return self.aux >= -tol and self.matrix.is_psd(tol)

    def min_eig(self) -> float:
        return float(self.matrix.eigvalsh()[0])


def _wrap_ball(inner: np.ndarray, g_bar: np.ndarray, theta_radius: float,
               corner: float, aux: float, sign: float) -> LmiBlock:
    g = np.asarray(g_bar, dtype=complex).ravel()
    nt = g.size
    if inner.shape != (nt, nt):
        raise DimensionError(
            f"inner matrix must be {nt}x{nt} to match the channel, got {inner.shape}")
    gt = gtilde(g)
    block = aux * ball_matrix(nt, theta_radius ** 2)
    block[-1, -1] += corner
    block += sign * (gt.conj().T @ inner @ gt)
    return LmiBlock(matrix=HermitianMatrix(block), aux=aux)


def build_leakage_lmi(m: int, n: int, g_e_bar: np.ndarray, theta_e: float,
                      x_n: HermitianMatrix, zeta: float,
                      noise_eve_w: float) -> LmiBlock:
    """Certificate that (g+d)^H X_n (g+d) <= noise for every ||d|| <= theta_e.

    PSD of the returned block together with zeta >= 0 is equivalent to the
    robust leakage constraint of eavesdropper ``m`` on stream ``n``.
    """
    if noise_eve_w <= 0:
        raise DomainError("eavesdropper noise power must be positive")
    if theta_e < 0:
        raise DomainError("uncertainty radius must be nonnegative")
    return _wrap_ball(np.asarray(x_n.m if isinstance(x_n, HermitianMatrix) else x_n),
                      g_e_bar, theta_e, noise_eve_w, zeta, -1.0)


def build_harvest_lmi(i: int, g_h_bar: np.ndarray, theta_h: float,
                      y: HermitianMatrix, eta: float, p_req_w: float,
                      eh_eff: float) -> LmiBlock:
    """Certificate that (g+d)^H Y (g+d) >= p_req/eff for every ||d|| <= theta_h."""
    if not 0.0 < eh_eff <= 1.0:
        raise DomainError(f"eh_eff must lie in (0, 1], got {eh_eff}")
    if p_req_w < 0:
        raise DomainError("harvest demand must be nonnegative")
    if theta_h < 0:
        raise DomainError("uncertainty radius must be nonnegative")
    return _wrap_ball(np.asarray(y.m if isinstance(y, HermitianMatrix) else y),
                      g_h_bar, theta_h, -p_req_w / eh_eff, eta, +1.0)
