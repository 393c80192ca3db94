"""Domain types and closed-form link metrics for the MISOME-SWIPT downlink.

All internal arithmetic is in W, Hz and nats; dBm values are converted on
the way in.  Rates use the natural logarithm so the efficiency metric comes
out in nats/joule.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, InfeasibleDemandError, InvalidConfigError

# Matrix accepted as PSD when lambda_min >= -PSD_TOL * max(1, lambda_max).
PSD_TOL = 1e-8


def dbm_to_w(p_dbm: float) -> float:
    """Convert dBm to watts: P_W = 10**((P_dBm - 30)/10)."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def w_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise DomainError(f"power must be positive to express in dBm, got {p_w}")
    return 10.0 * np.log10(p_w) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters.  Defaults reproduce the standard scenario:
    7-antenna BST, 3 LUEs / 2 EVEs / 2 EHNs at 900 MHz over 200 kHz."""

    n_tx: int = 7                      # BST antennas N_t
    n_lue: int = 3                     # legitimate users N
    n_eve: int = 2                     # eavesdroppers M
    n_ehn: int = 2                     # energy harvesters I
    bandwidth_hz: float = 200e3
    carrier_hz: float = 900e6
    noise_lue_w: float = dbm_to_w(-30.0)   # sigma^2_u
    noise_eve_w: float = dbm_to_w(-30.0)   # sigma^2_e
    noise_ehn_w: float = dbm_to_w(-30.0)   # sigma^2_h
    p_max_w: float = dbm_to_w(43.0)        # transmit power budget
    p_sp_w: float = 1.0                    # baseband processing power (not pinned by the scenario tables)
    amp_eff: float = 0.8                   # power amplifier efficiency, (0, 1]
    eh_eff: float = 0.8                    # energy conversion efficiency xi, (0, 1]
    p_req_w: float = dbm_to_w(-5.0)        # per-EHN harvested-power demand
    r_aux_nats_s: float = 100e3            # auxiliary-message rate cap for leakage
    psr_ratios: tuple[float, ...] = (0.4, 0.3, 0.3)
    lue_dist_m: tuple[float, ...] = (16.0, 19.0, 22.0)
    eve_dist_m: tuple[float, ...] = (8.0, 8.0)
    ehn_dist_m: tuple[float, ...] = (6.0, 6.0)
    uncertainty_fraction: float = 0.05     # Theta^2 as a fraction of per-antenna channel variance

    def __post_init__(self):
        if min(self.n_tx, self.n_lue) < 1 or min(self.n_eve, self.n_ehn) < 0:
            raise InvalidConfigError("counts must be positive (n_eve/n_ehn may be zero)")
        if self.n_tx < self.n_lue + 1:
            raise InvalidConfigError(
                f"n_tx={self.n_tx} must be >= n_lue+1={self.n_lue + 1} for nonempty null spaces")
        for name in ("bandwidth_hz", "carrier_hz", "noise_lue_w", "noise_eve_w",
                     "noise_ehn_w", "p_max_w", "p_sp_w"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be strictly positive")
        for name in ("amp_eff", "eh_eff"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvalidConfigError(f"{name} must lie in (0, 1], got {v}")
        if self.p_req_w < 0 or self.r_aux_nats_s < 0:
            raise InvalidConfigError("demands must be nonnegative")
        if self.uncertainty_fraction < 0:
            raise InvalidConfigError("uncertainty_fraction must be nonnegative")
        if len(self.psr_ratios) != self.n_lue:
            raise InvalidConfigError("psr_ratios must have one entry per LUE")
        if any(r < 0 for r in self.psr_ratios):
            raise InvalidConfigError("psr_ratios must be nonnegative")
        if abs(sum(self.psr_ratios) - 1.0) > 1e-9:
            raise InvalidConfigError(f"psr_ratios must sum to 1, got {sum(self.psr_ratios)}")
        if len(self.lue_dist_m) != self.n_lue:
            raise InvalidConfigError("lue_dist_m must have one entry per LUE")
        if len(self.eve_dist_m) != self.n_eve:
            raise InvalidConfigError("eve_dist_m must have one entry per EVE")
        if len(self.ehn_dist_m) != self.n_ehn:
            raise InvalidConfigError("ehn_dist_m must have one entry per EHN")
        if any(d <= 0 for d in self.lue_dist_m + self.eve_dist_m + self.ehn_dist_m):
            raise InvalidConfigError("distances must be strictly positive")

    @property
    def r_aux_tilde(self) -> float:
        """Auxiliary rate normalized by bandwidth (nats)."""
        return self.r_aux_nats_s / self.bandwidth_hz

    def with_(self, **kw) -> "SystemConfig":
        """Copy with selected fields replaced (validation re-runs)."""
        return replace(self, **kw)


class HermitianMatrix:
    """Complex Hermitian matrix value.

    Construction symmetrizes the input so A == A^H holds exactly; wildly
    non-Hermitian input is rejected instead of silently averaged away.
    """

    __slots__ = ("m",)

    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        if np.abs(a - a.conj().T).max(initial=0.0) > 1e-6 * scale:
            raise DomainError("matrix is not Hermitian within tolerance")
        m = 0.5 * (a + a.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def zeros(cls, n: int) -> "HermitianMatrix":
        return cls(np.zeros((n, n), dtype=complex))

    @classmethod
    def identity(cls, n: int) -> "HermitianMatrix":
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def from_outer(cls, v: np.ndarray) -> "HermitianMatrix":
        v = np.asarray(v, dtype=complex).ravel()
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.m)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.m)

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        ev = self.eigvalsh()
        return bool(ev[0] >= -tol * max(1.0, ev[-1]))

    def trace(self) -> float:
        return float(np.trace(self.m).real)

    def inner(self, other: "HermitianMatrix | np.ndarray") -> float:
        """Real inner product Re Tr(A B); both arguments Hermitian."""
        b = other.m if isinstance(other, HermitianMatrix) else np.asarray(other)
        return float(np.tensordot(self.m, b.conj(), axes=2).real)

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.m + other.m)

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.m - other.m)

    def __mul__(self, a: float) -> "HermitianMatrix":
        return HermitianMatrix(self.m * float(a))

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"


def quad_form(g: np.ndarray, a: HermitianMatrix | np.ndarray) -> float:
    """g^H A g as a real scalar."""
    m = a.m if isinstance(a, HermitianMatrix) else np.asarray(a)
    g = np.asarray(g, dtype=complex).ravel()
    if m.shape[0] != g.size:
        raise DimensionError(f"vector length {g.size} vs matrix dim {m.shape[0]}")
    return float(np.real(g.conj() @ m @ g))


@dataclass(frozen=True)
class BeamformingSolution:
    """Per-LUE transmit covariances plus the jamming covariance."""

    w_mats: tuple[HermitianMatrix, ...]
    an_cov: HermitianMatrix

    def __post_init__(self):
        n = self.an_cov.dim
        for w in self.w_mats:
            if w.dim != n:
                raise DimensionError("all covariance blocks must share the antenna dimension")
            if not w.is_psd():
                raise DomainError("beamforming covariance is not PSD within tolerance")
        if not self.an_cov.is_psd():
            raise DomainError("jamming covariance is not PSD within tolerance")

    @classmethod
    def from_arrays(cls, w_mats: Sequence[np.ndarray], an_cov: np.ndarray) -> "BeamformingSolution":
        return cls(tuple(HermitianMatrix(w) for w in w_mats), HermitianMatrix(an_cov))

    @property
    def n_tx(self) -> int:
        return self.an_cov.dim

    @property
    def n_lue(self) -> int:
        return len(self.w_mats)

    def transmit_power(self) -> float:
        """Radiated power: sum of all covariance traces."""
        return sum(w.trace() for w in self.w_mats) + self.an_cov.trace()

    def total_covariance(self) -> HermitianMatrix:
        acc = self.an_cov.m.copy()
        for w in self.w_mats:
            acc += w.m
        return HermitianMatrix(acc)

    @classmethod
    def zero(cls, n_tx: int, n_lue: int) -> "BeamformingSolution":
        z = HermitianMatrix.zeros(n_tx)
        return cls((z,) * n_lue, z)


def sinr_lue(h_n: np.ndarray, sol: BeamformingSolution, n: int, noise_w: float) -> float:
    """Received SINR of LUE ``n``: signal trace over interference + AN + noise."""
    if noise_w <= 0:
        raise InvalidConfigError(f"noise power must be positive, got {noise_w}")
    h_n = np.asarray(h_n, dtype=complex).ravel()
    if h_n.size != sol.n_tx:
        raise DimensionError(f"channel length {h_n.size} vs n_tx {sol.n_tx}")
    if not 0 <= n < sol.n_lue:
        raise DimensionError(f"LUE index {n} out of range")
    signal = quad_form(h_n, sol.w_mats[n])
    interf = sum(quad_form(h_n, sol.w_mats[k]) for k in range(sol.n_lue) if k != n)
    denom = interf + quad_form(h_n, sol.an_cov) + noise_w
    return max(signal, 0.0) / denom


def rate_lue(sinr: float, bandwidth_hz: float) -> float:
    """Link rate BW * ln(1 + SINR) in nats/s."""
    if sinr < 0:
        raise DomainError(f"sinr must be nonnegative, got {sinr}")
    return bandwidth_hz * np.log1p(sinr)


def leakage_rate(g_e: np.ndarray, sol: BeamformingSolution, n: int,
                 noise_w: float, bandwidth_hz: float) -> float:
    """Rate at which LUE ``n``'s stream leaks over channel ``g_e`` (nats/s)."""
    return rate_lue(sinr_lue(g_e, sol, n, noise_w), bandwidth_hz)


def harvested_power(g_h: np.ndarray, sol: BeamformingSolution, eh_eff: float) -> float:
    """Power collected by a harvester with channel ``g_h`` (W)."""
    if not 0.0 < eh_eff <= 1.0:
        raise InvalidConfigError(f"eh_eff must lie in (0, 1], got {eh_eff}")
    g_h = np.asarray(g_h, dtype=complex).ravel()
    if g_h.size != sol.n_tx:
        raise DimensionError(f"channel length {g_h.size} vs n_tx {sol.n_tx}")
    rx = sum(quad_form(g_h, w) for w in sol.w_mats) + quad_form(g_h, sol.an_cov)
    return eh_eff * rx


def secrecy_rate(rate_nats_s: float, r_aux_nats_s: float) -> float:
    """(R - R_aux)^+ : rate in excess of the auxiliary-message rate."""
    return max(rate_nats_s - r_aux_nats_s, 0.0)


def circuit_power(p_sp_w: float, n_tx: int) -> float:
    """Static circuit power: P_SP * (0.87 + 0.1 N_t + 0.03 N_t^2)."""
    if p_sp_w <= 0 or n_tx < 1:
        raise InvalidConfigError("p_sp_w must be positive and n_tx >= 1")
    return p_sp_w * (0.87 + 0.1 * n_tx + 0.03 * n_tx * n_tx)


def total_power(sol: BeamformingSolution, amp_eff: float, circuit_w: float) -> float:
    """Consumed power: radiated power over amplifier efficiency plus circuit."""
    if not 0.0 < amp_eff <= 1.0:
        raise InvalidConfigError(f"amp_eff must lie in (0, 1], got {amp_eff}")
    return sol.transmit_power() / amp_eff + circuit_w


def total_power_from_radiated(radiated_w: float, amp_eff: float, circuit_w: float) -> float:
    if not 0.0 < amp_eff <= 1.0:
        raise InvalidConfigError(f"amp_eff must lie in (0, 1], got {amp_eff}")
    if radiated_w < 0:
        raise DomainError("radiated power must be nonnegative")
    return radiated_w / amp_eff + circuit_w


def see(sum_secrecy_nats_s: float, total_power_w: float) -> float:
    """Secrecy energy efficiency in nats/joule."""
    if total_power_w <= 0:
        raise DomainError(f"total power must be positive, got {total_power_w}")
    return sum_secrecy_nats_s / total_power_w


def jain_index(ratios: Sequence[float]) -> float:
    """Jain's fairness index (sum x)^2 / (n sum x^2); 1 iff all equal."""
    x = np.asarray(ratios, dtype=float)
    if x.size == 0:
        raise DomainError("jain_index needs at least one ratio")
    if np.any(x < 0):
        raise DomainError("ratios must be nonnegative")
    denom = x.size * float(np.sum(x * x))
    if denom == 0:
        raise DomainError("jain_index undefined for all-zero ratios")
    return float(np.sum(x)) ** 2 / denom


def nonlinear_eh_required_input(p_req_w: float, xi: float, a: float, b: float,
                                m_sat_w: float) -> float:
    """Input power at which a saturating (logistic) harvester delivers ``p_req_w``.

    Maps a nonlinear-harvester demand onto the equivalent linear threshold:
    (xi/a) * ln((M + P e^{ab}) / (M - P)).  Raises when the demand reaches or
    exceeds the saturation level M.
    """
    if not 0.0 < xi <= 1.0:
        raise InvalidConfigError(f"xi must lie in (0, 1], got {xi}")
    if a <= 0 or m_sat_w <= 0:
        raise InvalidConfigError("shaping parameter a and saturation M must be positive")
    if p_req_w < 0:
        raise DomainError("demand must be nonnegative")
    if p_req_w >= m_sat_w:
        raise InfeasibleDemandError(
            f"demand {p_req_w} W is at or above harvester saturation {m_sat_w} W")
    return (xi / a) * np.log((m_sat_w + p_req_w * np.exp(a * b)) / (m_sat_w - p_req_w))


@dataclass(frozen=True)
class MetricsReport:
    """Closed-form link/power metrics of one solution on one channel draw."""

    rates_lue: tuple[float, ...]          # nats/s per LUE
    leakage: tuple[tuple[float, ...], ...]  # [m][n] leakage of stream n to EVE m, nats/s
    secrecy_rates: tuple[float, ...]      # nats/s per LUE
    harvested_w: tuple[float, ...]        # W per EHN
    total_power_w: float
    see_nats_per_joule: float

    def __post_init__(self):
        if min(self.rates_lue, default=0.0) < 0 or min(self.secrecy_rates, default=0.0) < 0:
            raise DomainError("rates must be nonnegative")

    @property
    def sum_secrecy_nats_s(self) -> float:
        return float(sum(self.secrecy_rates))


def metrics_report(h: Sequence[np.ndarray], g_e: Sequence[np.ndarray],
                   g_h: Sequence[np.ndarray], sol: BeamformingSolution,
                   config: SystemConfig) -> MetricsReport:
    """Evaluate every closed-form metric on explicit channel vectors.

    ``g_e``/``g_h`` are whatever the caller wants to score against (estimates
    or worst-case realizations); no uncertainty handling happens here.
    """
    bw = config.bandwidth_hz
    rates = tuple(rate_lue(sinr_lue(h[n], sol, n, config.noise_lue_w), bw)
                  for n in range(sol.n_lue))
    leak = tuple(tuple(leakage_rate(g, sol, n, config.noise_eve_w, bw)
                       for n in range(sol.n_lue)) for g in g_e)
    sec = tuple(secrecy_rate(r, config.r_aux_nats_s) for r in rates)
    harv = tuple(harvested_power(g, sol, config.eh_eff) for g in g_h)
    pcir = circuit_power(config.p_sp_w, config.n_tx)
    ptot = total_power(sol, config.amp_eff, pcir)
    return MetricsReport(
        rates_lue=rates,
        leakage=leak,
        secrecy_rates=sec,
        harvested_w=harv,
        total_power_w=ptot,
        see_nats_per_joule=see(sum(sec), ptot),
    )
