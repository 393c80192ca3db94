"""Primal-dual interior-point engine for conic programs over products of
complex-Hermitian PSD cones and a nonnegative orthant.

Solves   minimize    c'x
         subject to  A x = b
                     G x + s = h,   s in K
via a Mehrotra predictor-corrector iteration on the homogeneous self-dual
embedding with Nesterov-Todd scaling, so primal/dual infeasibility is
detected through certificates rather than divergence.

Hermitian matrices travel in "hvec" coordinates: the real diagonal followed
by sqrt(2)-scaled real and imaginary parts of the upper triangle, which
makes <A, B> = Re tr(AB) an ordinary dot product.  Cones are grouped by
dimension; G is kept both as a flat real matrix (for BLAS mat-vec products)
and as complex tensors (for the per-iteration scaling congruences).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from threadpoolctl import threadpool_limits

_SQRT2 = np.sqrt(2.0)
_STEP = 0.99


@lru_cache(maxsize=64)
def _triu_cache(d: int):
    ar = np.arange(d)
    iu, ju = np.triu_indices(d, 1)
    return ar, iu, ju


def hvec(m: np.ndarray) -> np.ndarray:
    """Batched Hermitian -> real coordinates; last two axes are the matrix."""
    d = m.shape[-1]
    ar, iu, ju = _triu_cache(d)
    out = np.empty(m.shape[:-2] + (d * d,), dtype=float)
    out[..., :d] = m[..., ar, ar].real
    off = m[..., iu, ju]
    k = d * (d - 1) // 2
    out[..., d:d + k] = _SQRT2 * off.real
    out[..., d + k:] = _SQRT2 * off.imag
    return out


def unhvec(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`hvec`; returns exactly Hermitian matrices."""
    ar, iu, ju = _triu_cache(d)
    m = np.zeros(v.shape[:-1] + (d, d), dtype=complex)
    m[..., ar, ar] = v[..., :d]
    k = d * (d - 1) // 2
    off = (v[..., d:d + k] + 1j * v[..., d + k:]) / _SQRT2
    m[..., iu, ju] = off
    m[..., ju, iu] = off.conj()
    return m


def _sym(m):
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def _eigh_floor(m, floor_rel):
    """Push eigenvalues up so the matrix sits strictly inside the cone."""
    w, v = np.linalg.eigh(_sym(np.asarray(m, dtype=complex)))
    top = np.maximum(w.max(axis=-1, keepdims=True), 1.0)
    w = np.maximum(w, floor_rel * top)
    return (v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _btrace(a, b) -> float:
    """sum_k Re tr(a_k b_k) for stacks of Hermitian matrices."""
    return float(np.sum(a * np.conj(b)).real)


@dataclass
class PsdGroup:
    """All PSD cones of one dimension, with iteration state.

    ``gt[k, p]`` holds the G-side coefficient (already negated constraint
    coefficient) of variable ``p`` in cone ``k``; ``gf`` is the same data
    as a flat real (count*d*d, n) matrix in hvec coordinates.
    """

    dim: int
    gt: np.ndarray            # (count, n, d, d) complex
    ht: np.ndarray            # (count, d, d) complex
    gf: np.ndarray = field(default=None, repr=False)
    s: np.ndarray = field(default=None, repr=False)
    z: np.ndarray = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return self.gt.shape[0]

    def finalize(self):
        cnt, n = self.gt.shape[0], self.gt.shape[1]
        self.gf = np.ascontiguousarray(
            hvec(self.gt).transpose(0, 2, 1).reshape(cnt * self.dim ** 2, n))
        return self

    def flatten(self, mats) -> np.ndarray:
        return hvec(mats).reshape(-1)

    def unflatten(self, v) -> np.ndarray:
        return unhvec(v.reshape(self.count, self.dim ** 2), self.dim)


@dataclass
class IpmResult:
    status: str               # optimal | infeasible | unbounded | numerical-failure
    x: np.ndarray | None
    s_l: np.ndarray | None
    z_l: np.ndarray | None
    s_psd: list | None
    z_psd: list | None
    y: np.ndarray | None
    primal_objective: float
    dual_objective: float
    gap: float
    relative_gap: float
    primal_residual: float
    dual_residual: float
    certificate_residual: float
    iterations: int
    message: str = ""


class _Scaling:
    """Nesterov-Todd scaling of the current (s, z) pair.

    For each PSD cone  r^H Z r = r^-1 S r^-H = diag(lam)  with lam > 0, and
        W z = r^H Z r,   W^-T s = r^-1 S r^-H,   W^T u = r U r^H.
    """

    def __init__(self, s_l, z_l, groups):
        self.w_l = np.sqrt(s_l / z_l)
        self.lam_l = np.sqrt(s_l * z_l)
        self.rt = []
        for g in groups:
            sw, sv = np.linalg.eigh(_sym(g.s))
            sw = np.maximum(sw, 1e-300)
            svh = np.conj(sv.swapaxes(1, 2))
            shalf = (sv * np.sqrt(sw)[:, None, :]) @ svh
            sinvh = (sv / np.sqrt(sw)[:, None, :]) @ svh
            dw, dv = np.linalg.eigh(_sym(shalf @ g.z @ shalf))
            dw = np.maximum(dw, 1e-300)
            lam = np.sqrt(dw)
            qrt = dw ** 0.25
            r = shalf @ dv / qrt[:, None, :]                      # S^1/2 V D^-1/4
            rinv = (np.conj(dv.swapaxes(1, 2)) @ sinvh) * qrt[:, :, None]
            self.rt.append({"r": r, "rh": np.conj(r.swapaxes(1, 2)),
                            "rinv": rinv, "rinvh": np.conj(rinv.swapaxes(1, 2)),
                            "lam": lam})


def _jordan_div(lam, rhs):
    """Solve diag(lam) o U = rhs for U (o = symmetrized product)."""
    den = 0.5 * (lam[:, :, None] + lam[:, None, :])
    return rhs / den


def _max_step_psd(lam, direction):
    """Largest alpha keeping diag(lam) + alpha * direction PSD (batched).

    A non-finite direction (numerical blow-up upstream) maps to a zero step
    so the caller's stall handling takes over instead of a LAPACK error.
    """
    if direction.size == 0:
        return np.inf
    scale = 1.0 / np.sqrt(lam)
    m = _sym(direction) * scale[:, :, None] * scale[:, None, :]
    if not np.isfinite(m).all():
        return 0.0
    worst = np.linalg.eigvalsh(m)[:, 0].min()
    return np.inf if worst >= 0 else 1.0 / (-worst)


def _max_step_l(vals, dirs):
    neg = dirs < 0
    if not np.any(neg):
        return np.inf
    return float((vals[neg] / -dirs[neg]).min())


class _Kkt:
    """Factorization of the reduced Newton system at one NT scaling.

    solve(bx, by, bz) returns (ux, uy, uz) with
        A^T uy + G^T uz = bx,    A ux = by,    G ux - W^T W uz = bz.
    """

    def __init__(self, data, sc):
        self.d = data
        self.sc = sc
        n = data.n
        parts = []
        self.gl_s = data.gl / sc.w_l[:, None] if data.l else None
        if self.gl_s is not None:
            parts.append(self.gl_s)
        self.gf_s = []
        for g, rt in zip(data.groups, sc.rt):
            cnt, ncol, dd = g.count, g.gt.shape[1], g.dim
            scaled = np.empty_like(g.gt)
            for k in range(cnt):
                u = g.gt[k].transpose(1, 0, 2).reshape(dd, ncol * dd)
                s1 = (rt["rinv"][k] @ u).reshape(dd, ncol, dd)
                s2 = s1.transpose(1, 0, 2).reshape(ncol * dd, dd) @ rt["rinvh"][k]
                scaled[k] = s2.reshape(ncol, dd, dd)
            flat = np.ascontiguousarray(
                hvec(scaled).transpose(0, 2, 1).reshape(-1, n))
            self.gf_s.append(flat)
            parts.append(flat)
        gs = np.vstack(parts) if parts else np.zeros((0, n))
        h = gs.T @ gs
        diag = np.einsum("ii->i", h)
        jitter = 0.0
        base = 1e-14 * max(1.0, float(diag.max(initial=0.0)))
        for attempt in range(5):
            try:
                self.h_chol = sla.cho_factor(h, lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                jitter = base * 10.0 ** attempt
                h = h + jitter * np.eye(n)
        else:
            raise np.linalg.LinAlgError("KKT Gram matrix not positive definite")
        if data.has_eq:
            hia = sla.cho_solve(self.h_chol, data.a_mat.T, check_finite=False)
            schur = data.a_mat @ hia
            self.schur_chol = sla.cho_factor(schur, lower=True, check_finite=False)
        else:
            self.schur_chol = None

    # -- scaled helpers ----------------------------------------------------

    def _wmt_flat(self, v_l, v_groups):
        """W^-T applied to a z-layout quantity, returned flat per group."""
        out_l = v_l / self.sc.w_l if v_l is not None else None
        out_g = []
        for g, rt, m in zip(self.d.groups, self.sc.rt, v_groups):
            out_g.append(g.flatten(rt["rinv"] @ m @ rt["rinvh"]))
        return out_l, out_g

    def _gs_dot(self, vt_l, vt_groups_flat):
        acc = np.zeros(self.d.n)
        if self.gl_s is not None and vt_l is not None:
            acc += self.gl_s.T @ vt_l
        for flat, v in zip(self.gf_s, vt_groups_flat):
            acc += flat.T @ v
        return acc

    def solve(self, bx, by, bz_l, bz_groups, refine=1):
        ux, uy = self._solve_reduced(bx, by, bz_l, bz_groups)
        for _ in range(refine):
            rx, ry = self._reduced_residual(ux, uy, bx, by, bz_l, bz_groups)
            cx, cy = self._solve_reduced(
                rx, ry, None, [np.zeros_like(b) for b in bz_groups])
            ux = ux + cx
            if uy is not None:
                uy = uy + cy
        uz_l, uz_groups = self._recover_uz(ux, bz_l, bz_groups)
        return ux, uy, uz_l, uz_groups

    def _solve_reduced(self, bx, by, bz_l, bz_groups):
        vt_l, vt_g = self._wmt_flat(bz_l, bz_groups)
        rhs = bx + self._gs_dot(vt_l, vt_g)
        if self.schur_chol is not None:
            hr = sla.cho_solve(self.h_chol, rhs, check_finite=False)
            uy = sla.cho_solve(self.schur_chol, self.d.a_mat @ hr - by,
                               check_finite=False)
            ux = sla.cho_solve(self.h_chol, rhs - self.d.a_mat.T @ uy,
                               check_finite=False)
        else:
            uy = None
            ux = sla.cho_solve(self.h_chol, rhs, check_finite=False)
        return ux, uy

    def _recover_uz(self, ux, bz_l, bz_groups):
        uz_l = None
        if self.d.l:
            v = self.d.gl @ ux
            if bz_l is not None:
                v = v - bz_l
            uz_l = v / (self.sc.w_l ** 2)
        uz_groups = []
        for g, rt, bz in zip(self.d.groups, self.sc.rt, bz_groups):
            v = g.unflatten(g.gf @ ux) - bz
            vt = rt["rinv"] @ v @ rt["rinvh"]
            uz_groups.append(_sym(rt["rinvh"] @ vt @ rt["rinv"]))
        return uz_l, uz_groups

    def _reduced_residual(self, ux, uy, bx, by, bz_l, bz_groups):
        """Residual of the (x, y) block equations; uz satisfies its rows exactly."""
        uz_l, uz_g = self._recover_uz(ux, bz_l, bz_groups)
        rx = np.array(bx, dtype=float, copy=True)
        if self.d.l:
            rx -= self.d.gl.T @ uz_l
        for g, uz in zip(self.d.groups, uz_g):
            rx -= g.gf.T @ g.flatten(uz)
        if self.d.has_eq:
            rx -= self.d.a_mat.T @ uy
            ry = by - self.d.a_mat @ ux
        else:
            ry = by
        return rx, ry


class _Data:
    """Problem data with flat/tensor views and fast products."""

    def __init__(self, c, gl, hl, groups, a_mat, b_vec):
        self.c = np.asarray(c, dtype=float)
        self.n = self.c.size
        self.l = gl.shape[0] if gl is not None else 0
        self.gl = gl if self.l else np.zeros((0, self.n))
        self.hl = hl if self.l else np.zeros(0)
        self.groups = [g.finalize() for g in groups]
        self.has_eq = a_mat is not None and a_mat.shape[0] > 0
        self.a_mat = a_mat if self.has_eq else None
        self.b_vec = b_vec if self.has_eq else np.zeros(0)
        self.degree = self.l + sum(g.dim * g.count for g in self.groups) + 1
        self.norm_c = max(1.0, np.linalg.norm(self.c))
        self.norm_h = max(1.0, np.sqrt(
            np.linalg.norm(self.hl) ** 2
            + sum(np.linalg.norm(g.ht) ** 2 for g in self.groups)))
        self.norm_b = max(1.0, np.linalg.norm(self.b_vec))

    def gx(self, v):
        parts_l = self.gl @ v if self.l else np.zeros(0)
        return parts_l, [g.unflatten(g.gf @ v) for g in self.groups]

    def gtz(self, v_l, v_groups):
        acc = self.gl.T @ v_l if self.l else np.zeros(self.n)
        for g, m in zip(self.groups, v_groups):
            acc = acc + g.gf.T @ g.flatten(m)
        return acc

    def cone_dot(self, u_l, u_g, v_l, v_g):
        acc = float(u_l @ v_l) if self.l else 0.0
        for a_m, b_m in zip(u_g, v_g):
            acc += _btrace(a_m, b_m)
        return acc

    def h_dot(self, v_l, v_groups):
        acc = float(self.hl @ v_l) if self.l else 0.0
        for g, m in zip(self.groups, v_groups):
            acc += _btrace(g.ht, m)
        return acc


def solve_hsde(c, gl, hl, groups, a_mat, b_vec, *, tol=1e-7, max_iter=100,
               warm=None):
    """Run the homogeneous-embedding predictor-corrector loop.

    BLAS pools are pinned to one thread for the duration: the matrices here
    are small enough that multithreaded kernels lose badly to their own
    synchronization, and callers parallelize across problem instances.
    """
    with threadpool_limits(limits=1), np.errstate(over="ignore", invalid="ignore"):
        return _solve_hsde_impl(c, gl, hl, groups, a_mat, b_vec, tol=tol,
                                max_iter=max_iter, warm=warm)


def _solve_hsde_impl(c, gl, hl, groups, a_mat, b_vec, *, tol, max_iter, warm):
    d = _Data(c, gl, hl, groups, a_mat, b_vec)
    n, l, has_eq = d.n, d.l, d.has_eq
    groups = d.groups

    x = np.zeros(n)
    y = np.zeros(d.b_vec.size)
    s_l = np.ones(l)
    z_l = np.ones(l)
    for g in groups:
        eye = np.repeat(np.eye(g.dim, dtype=complex)[None], g.count, axis=0)
        g.s, g.z = eye.copy(), eye.copy()
    tau, kappa = 1.0, 1.0
    if warm is not None:
        x = np.array(warm["x"], dtype=float)
        if has_eq and warm.get("y") is not None and np.size(warm["y"]) == d.b_vec.size:
            y = np.array(warm["y"], dtype=float)
        if l:
            floor = 1e-9 * max(1.0, float(np.max(warm["s_l"], initial=0.0)),
                               float(np.max(warm["z_l"], initial=0.0)))
            s_l = np.maximum(np.asarray(warm["s_l"], dtype=float), floor)
            z_l = np.maximum(np.asarray(warm["z_l"], dtype=float), floor)
        for g, sw, zw in zip(groups, warm["s_psd"], warm["z_psd"]):
            g.s = _eigh_floor(sw, 1e-9)
            g.z = _eigh_floor(zw, 1e-9)
        kappa = max(1e-9, float(warm.get("kappa", 1e-6)))

    best = None
    status, message, cert_out = "numerical-failure", "iteration limit reached", np.inf
    iters_done = 0
    tried_centering = False
    stall = 0

    for it in range(max_iter + 1):
        iters_done = it
        if not (np.isfinite(x).all() and np.isfinite(tau) and np.isfinite(kappa)
                and all(np.isfinite(g.s).all() and np.isfinite(g.z).all()
                        for g in groups)
                and (not l or (np.isfinite(s_l).all() and np.isfinite(z_l).all()))):
            message = "iterates became non-finite"
            break
        gx_l, gx_g = d.gx(x)
        rz_l = (d.hl * tau - gx_l - s_l) if l else np.zeros(0)
        rz_g = [g.ht * tau - gm - g.s for g, gm in zip(groups, gx_g)]
        ry = (d.b_vec * tau - d.a_mat @ x) if has_eq else np.zeros(0)
        aty = d.a_mat.T @ y if has_eq else np.zeros(n)
        gz_vec = d.gtz(z_l, [g.z for g in groups])
        rx = aty + gz_vec + d.c * tau
        hz = d.h_dot(z_l, [g.z for g in groups])
        by_val = float(d.b_vec @ y) if has_eq else 0.0
        cx_val = float(d.c @ x)
        rtau = -cx_val - by_val - hz - kappa

        gap = d.cone_dot(s_l, [g.s for g in groups], z_l, [g.z for g in groups])
        mu = (gap + tau * kappa) / d.degree

        pcost = cx_val / tau
        dcost = -(by_val + hz) / tau
        resz = np.sqrt(np.linalg.norm(rz_l) ** 2
                       + sum(np.linalg.norm(m) ** 2 for m in rz_g))
        pres = max((np.linalg.norm(ry) / d.norm_b if has_eq else 0.0),
                   resz / d.norm_h) / tau
        dres = np.linalg.norm(rx) / (tau * d.norm_c)
        relgap = (gap / tau ** 2) / max(1.0, abs(pcost))

        snapshot = dict(pres=pres, dres=dres, relgap=relgap, pcost=pcost,
                        dcost=dcost, gap=gap / tau ** 2)
        score = pres + dres + relgap
        if best is None or score < best["score"]:
            best = dict(score=score, x=x / tau, y=y / tau,
                        s_l=s_l / tau, z_l=z_l / tau,
                        s_psd=[g.s / tau for g in groups],
                        z_psd=[g.z / tau for g in groups], **snapshot)
            stall = 0
        else:
            stall += 1
            if score > 1e3 * best["score"] or stall >= 8:
                message = ("residuals diverged from the best iterate"
                           if score > 1e3 * best["score"]
                           else "no progress over several iterations")
                break

        if pres <= tol and dres <= tol and relgap <= tol:
            status, message = "optimal", ""
            best = dict(score=0.0, x=x / tau, y=y / tau, s_l=s_l / tau,
                        z_l=z_l / tau, s_psd=[g.s / tau for g in groups],
                        z_psd=[g.z / tau for g in groups], **snapshot)
            break

        minus_dobj = by_val + hz
        if minus_dobj < 0:
            cert = np.linalg.norm(aty + gz_vec) / (d.norm_c * -minus_dobj)
            if cert <= tol:
                scale = -1.0 / minus_dobj
                best = dict(score=0.0, x=None, y=y * scale, s_l=None,
                            z_l=z_l * scale, s_psd=None,
                            z_psd=[g.z * scale for g in groups],
                            pres=pres, dres=dres, relgap=relgap,
                            pcost=np.nan, dcost=np.nan, gap=np.nan)
                status, message, cert_out = ("infeasible",
                                             "primal infeasibility certificate", cert)
                break
        if cx_val < 0:
            gxs_sq = (np.linalg.norm(gx_l + s_l) ** 2 if l else 0.0) \
                + sum(np.linalg.norm(gm + g.s) ** 2 for g, gm in zip(groups, gx_g))
            dcert = max((np.linalg.norm(d.a_mat @ x) if has_eq else 0.0),
                        np.sqrt(gxs_sq)) / (d.norm_h * -cx_val)
            if dcert <= tol:
                scale = -1.0 / cx_val
                best = dict(score=0.0, x=x * scale, y=None, s_l=s_l * scale,
                            z_l=z_l * scale, s_psd=[g.s * scale for g in groups],
                            z_psd=None, pres=pres, dres=dres, relgap=relgap,
                            pcost=np.nan, dcost=np.nan, gap=np.nan)
                status, message, cert_out = ("unbounded",
                                             "dual infeasibility certificate", dcert)
                break

        if it == max_iter:
            break

        try:
            sc = _Scaling(s_l, z_l, groups)
            kkt = _Kkt(d, sc)
        except np.linalg.LinAlgError as exc:
            message = f"KKT factorization failed: {exc}"
            break
        refine = 2 if mu < 1e-5 else 1
        x1, y1, zl1, zg1 = kkt.solve(-d.c, d.b_vec if has_eq else np.zeros(0),
                                     d.hl if l else None,
                                     [g.ht for g in groups], refine=refine)
        cxy1 = float(d.c @ x1) + (float(d.b_vec @ y1) if has_eq else 0.0) \
            + (float(d.hl @ zl1) if l else 0.0) \
            + sum(_btrace(g.ht, zg) for g, zg in zip(groups, zg1))

        eye_g = [np.eye(g.dim) for g in groups]
        lam_sq_g = [rt["lam"][:, :, None] * eye * rt["lam"][:, None, :]
                    for rt, eye in zip(sc.rt, eye_g)]

        def newton(eta, sigma_mu, corr_l, corr_g, corr_tk):
            ds_rhs_l = (sigma_mu - sc.lam_l ** 2 - corr_l) if l else np.zeros(0)
            ds_rhs_g = []
            for eye, lsq, cg in zip(eye_g, lam_sq_g, corr_g):
                m = eye * sigma_mu - lsq
                if cg is not None:
                    m = m - cg
                ds_rhs_g.append(m)
            dk_rhs = sigma_mu - tau * kappa - corr_tk

            bz_l = (eta * rz_l - sc.w_l * (ds_rhs_l / sc.lam_l)) if l else None
            bz_g = []
            for rt, rhs, rzg in zip(sc.rt, ds_rhs_g, rz_g):
                u = _jordan_div(rt["lam"], rhs)
                bz_g.append(eta * rzg - rt["r"] @ u @ rt["rh"])

            x2, y2, zl2, zg2 = kkt.solve(-eta * rx,
                                         eta * ry if has_eq else np.zeros(0),
                                         bz_l, bz_g, refine=refine)
            cxy2 = float(d.c @ x2) + (float(d.b_vec @ y2) if has_eq else 0.0) \
                + (float(d.hl @ zl2) if l else 0.0) \
                + sum(_btrace(g.ht, zg) for g, zg in zip(groups, zg2))
            denom = cxy1 - kappa / tau
            dtau = (eta * rtau - dk_rhs / tau - cxy2) / denom
            dx = x2 + dtau * x1
            dy = (y2 + dtau * y1) if has_eq else np.zeros(0)
            dz_l = (zl2 + dtau * zl1) if l else np.zeros(0)
            dz_g = [a2 + dtau * a1 for a2, a1 in zip(zg2, zg1)]
            dkappa = (dk_rhs - kappa * dtau) / tau

            dzt_l = sc.w_l * dz_l if l else np.zeros(0)
            dst_l = (ds_rhs_l / sc.lam_l - dzt_l) if l else np.zeros(0)
            ds_l = sc.w_l * dst_l if l else np.zeros(0)
            dzt_g, dst_g, ds_g = [], [], []
            for rt, rhs, dzm in zip(sc.rt, ds_rhs_g, dz_g):
                dzt = _sym(rt["rh"] @ dzm @ rt["r"])
                dst = _jordan_div(rt["lam"], rhs) - dzt
                ds_g.append(_sym(rt["r"] @ dst @ rt["rh"]))
                dzt_g.append(dzt)
                dst_g.append(dst)
            return dict(dx=dx, dy=dy, dz_l=dz_l, dz_g=dz_g, ds_l=ds_l,
                        ds_g=ds_g, dst_l=dst_l, dst_g=dst_g, dzt_l=dzt_l,
                        dzt_g=dzt_g, dtau=dtau, dkappa=dkappa)

        def max_step(dd):
            alpha = np.inf
            if l:
                alpha = min(alpha, _max_step_l(sc.lam_l, dd["dst_l"]))
                alpha = min(alpha, _max_step_l(sc.lam_l, dd["dzt_l"]))
            for rt, dst, dzt in zip(sc.rt, dd["dst_g"], dd["dzt_g"]):
                alpha = min(alpha, _max_step_psd(rt["lam"], dst))
                alpha = min(alpha, _max_step_psd(rt["lam"], dzt))
            if dd["dtau"] < 0:
                alpha = min(alpha, tau / -dd["dtau"])
            if dd["dkappa"] < 0:
                alpha = min(alpha, kappa / -dd["dkappa"])
            return alpha

        no_corr = [None] * len(groups)
        try:
            aff = newton(1.0, 0.0, 0.0, no_corr, 0.0)
            alpha_aff = min(1.0, max_step(aff))
            sigma = float(np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0))

            corr_l = aff["dst_l"] * aff["dzt_l"] if l else 0.0
            corr_g = [_sym(0.5 * (dst @ dzt + dzt @ dst))
                      for dst, dzt in zip(aff["dst_g"], aff["dzt_g"])]
            corr_tk = aff["dtau"] * aff["dkappa"]
            comb = newton(1.0 - sigma, sigma * mu, corr_l, corr_g, corr_tk)
            alpha = min(1.0, _STEP * max_step(comb))
        except np.linalg.LinAlgError as exc:
            message = f"direction computation failed: {exc}"
            break
        if not np.isfinite(alpha) or alpha <= 1e-11:
            if tried_centering:
                message = "step length collapsed"
                break
            # one recovery attempt: take a pure centering step
            tried_centering = True
            try:
                comb = newton(0.0, mu, 0.0, no_corr, 0.0)
                alpha = min(1.0, _STEP * max_step(comb))
            except np.linalg.LinAlgError:
                alpha = 0.0
            if not np.isfinite(alpha) or alpha <= 1e-11:
                message = "step length collapsed"
                break
        else:
            tried_centering = False

        x = x + alpha * comb["dx"]
        if has_eq:
            y = y + alpha * comb["dy"]
        if l:
            s_l = s_l + alpha * comb["ds_l"]
            z_l = z_l + alpha * comb["dz_l"]
        for g, ds, dz in zip(groups, comb["ds_g"], comb["dz_g"]):
            g.s = _sym(g.s + alpha * ds)
            g.z = _sym(g.z + alpha * dz)
        tau = tau + alpha * comb["dtau"]
        kappa = kappa + alpha * comb["dkappa"]
        if tau <= 0 or kappa <= 0:
            message = "embedding variables left their cone"
            break

    b = best
    return IpmResult(
        status=status,
        x=b["x"], s_l=b["s_l"], z_l=b["z_l"], s_psd=b["s_psd"],
        z_psd=b["z_psd"], y=b["y"],
        primal_objective=b["pcost"], dual_objective=b["dcost"],
        gap=b["gap"], relative_gap=b["relgap"],
        primal_residual=b["pres"], dual_residual=b["dres"],
        certificate_residual=cert_out,
        iterations=iters_done, message=message,
    )
