"""Conic problem container, solver facade and eigenstructure utilities.

A :class:`ConicProblem` owns decision blocks (complex Hermitian PSD matrices
and nonnegative scalars), a linear objective, scalar linear constraints and
linear matrix inequalities whose PSD-block terms are congruences
``coef * L^H X L``.  ``solve`` canonicalizes to the cone form consumed by
:mod:`seebeam._ipm` (inequalities become equalities with slack cones) and
maps the result back to block values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _ipm
from .errors import DimensionError, DomainError
from ._ipm import hvec, unhvec

PSD = "psd"
NONNEG = "nonneg"


@lru_cache(maxsize=32)
def _hermitian_basis(dim: int) -> np.ndarray:
    basis = unhvec(np.eye(dim * dim), dim)
    basis.setflags(write=False)
    return basis


def embed_hermitian(a) -> np.ndarray:
    """Real-symmetric embedding [[Re A, -Im A], [Im A, Re A]] of a Hermitian A.

    PSD-ness is preserved both ways and tr(embed(A) embed(B)) = 2 Re tr(AB).
    """
    m = np.asarray(getattr(a, "m", a), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected square matrix, got {m.shape}")
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def dominant_eig(a) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of a Hermitian matrix."""
    m = np.asarray(getattr(a, "m", a), dtype=complex)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return float(w[-1]), v[:, -1]


def rank_ratio(a) -> float:
    """lambda_2 / lambda_1 of a (near-)PSD matrix; 0 for the zero matrix."""
    m = np.asarray(getattr(a, "m", a), dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    w = np.abs(w[np.argsort(np.abs(w))[::-1]])
    if w[0] == 0.0:
        return 0.0
    return float(w[1] / w[0]) if w.size > 1 else 0.0


def null_space_basis(a: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of {v : A^H v = 0} via SVD of A."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.shape[1] == 0:
        return np.eye(a.shape[0], dtype=complex)
    u, sv, _ = np.linalg.svd(a, full_matrices=True)
    tol = rtol * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > max(tol, 0.0)))
    return u[:, rank:]


@dataclass(frozen=True)
class _Block:
    kind: str
    dim: int          # 1 for scalars
    offset: int       # first column in the parameter vector
    name: str


@dataclass(frozen=True)
class _Linear:
    terms: tuple      # ((block_index, coefficient), ...)
    sense: str        # "<=", ">=", "=="
    rhs: float


@dataclass(frozen=True)
class _Lmi:
    dim: int
    constant: np.ndarray
    psd_terms: tuple      # ((block_index, left, coef), ...)
    scalar_terms: tuple   # ((block_index, matrix), ...)


@dataclass
class ConicSolution:
    """Solve outcome; ``blocks`` holds Hermitian arrays / floats when optimal."""

    status: str
    blocks: list | None
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    message: str = ""
    raw: object = field(default=None, repr=False)

    def block(self, index: int):
        if self.blocks is None:
            raise DomainError(f"no primal blocks available for status {self.status!r}")
        return self.blocks[index]


class ConicProblem:
    """Standard-form conic problem over PSD blocks and nonnegative scalars."""

    def __init__(self):
        self.blocks: list[_Block] = []
        self._obj: dict[int, object] = {}
        self.obj_offset: float = 0.0
        self.linear: list[_Linear] = []
        self.lmis: list[_Lmi] = []
        self._ncols = 0

    # -- construction -----------------------------------------------------

    def add_psd_block(self, dim: int, name: str = "") -> int:
        if dim < 1:
            raise DimensionError("PSD block dimension must be >= 1")
        self.blocks.append(_Block(PSD, dim, self._ncols, name or f"psd{len(self.blocks)}"))
        self._ncols += dim * dim
        return len(self.blocks) - 1

    def add_nonneg_scalar(self, name: str = "") -> int:
        self.blocks.append(_Block(NONNEG, 1, self._ncols, name or f"s{len(self.blocks)}"))
        self._ncols += 1
        return len(self.blocks) - 1

    def _check_coef(self, idx: int, coef):
        blk = self.blocks[idx]
        if blk.kind == NONNEG:
            return float(coef)
        c = np.asarray(coef, dtype=complex)
        if c.shape != (blk.dim, blk.dim):
            raise DimensionError(
                f"coefficient for block {blk.name} must be {blk.dim}x{blk.dim}, got {c.shape}")
        if np.abs(c - c.conj().T).max(initial=0.0) > 1e-9 * max(1.0, np.abs(c).max(initial=0.0)):
            raise DomainError("coefficient matrices must be Hermitian")
        return 0.5 * (c + c.conj().T)

    def add_objective_term(self, block: int, coef) -> None:
        """Accumulate <coef, X_block> (PSD) or coef * x_block (scalar)."""
        coef = self._check_coef(block, coef)
        if block in self._obj:
            prev = self._obj[block]
            coef = prev + coef
        self._obj[block] = coef

    def add_linear_constraint(self, terms: Sequence[tuple], sense: str, rhs: float) -> None:
        """Scalar constraint sum_terms <op> rhs with <op> in {<=, >=, ==}."""
        if sense not in ("<=", ">=", "=="):
            raise DomainError(f"unknown sense {sense!r}")
        checked = tuple((i, self._check_coef(i, c)) for i, c in terms)
        self.linear.append(_Linear(checked, sense, float(rhs)))

    def add_lmi(self, dim: int, constant, terms: Sequence[tuple]) -> None:
        """Require constant + sum of terms to be PSD.

        PSD-block terms are ``(block, left, coef)`` contributing
        ``coef * left^H X left`` with ``left`` of shape (block_dim, dim);
        scalar terms are ``(block, matrix)`` contributing ``x * matrix``.
        """
        const = np.asarray(constant, dtype=complex)
        if const.shape != (dim, dim):
            raise DimensionError(f"LMI constant must be {dim}x{dim}")
        psd_terms, scalar_terms = [], []
        for t in terms:
            blk = self.blocks[t[0]]
            if blk.kind == PSD:
                _, left, coef = t
                left = np.asarray(left, dtype=complex)
                if left.shape != (blk.dim, dim):
                    raise DimensionError(
                        f"LMI left factor for {blk.name} must be {blk.dim}x{dim}, got {left.shape}")
                psd_terms.append((t[0], left, float(coef)))
            else:
                _, mat = t
                mat = np.asarray(mat, dtype=complex)
                if mat.shape != (dim, dim):
                    raise DimensionError(f"scalar LMI term must be {dim}x{dim}")
                scalar_terms.append((t[0], 0.5 * (mat + mat.conj().T)))
        self.lmis.append(_Lmi(dim, 0.5 * (const + const.conj().T),
                              tuple(psd_terms), tuple(scalar_terms)))

    # -- canonicalization --------------------------------------------------

    @property
    def n_params(self) -> int:
        return self._ncols

    @staticmethod
    def _basis(dim: int) -> np.ndarray:
        """Hermitian basis matrices matching the hvec parametrization."""
        return _hermitian_basis(dim)

    def _objective_vector(self) -> np.ndarray:
        c = np.zeros(self._ncols)
        for idx, coef in self._obj.items():
            blk = self.blocks[idx]
            if blk.kind == NONNEG:
                c[blk.offset] = coef
            else:
                c[blk.offset:blk.offset + blk.dim ** 2] = hvec(coef)
        return c

    def _linear_row(self, con: _Linear) -> tuple[np.ndarray, float]:
        row = np.zeros(self._ncols)
        for idx, coef in con.terms:
            blk = self.blocks[idx]
            if blk.kind == NONNEG:
                row[blk.offset] += coef
            else:
                row[blk.offset:blk.offset + blk.dim ** 2] += hvec(coef)
        return row, con.rhs

    def canonicalize(self):
        """Build (c, Gl, hl, psd groups, A, b) plus extraction metadata."""
        n = self._ncols
        c = self._objective_vector()

        gl_rows, hl_vals = [], []
        for blk in self.blocks:
            if blk.kind == NONNEG:
                row = np.zeros(n)
                row[blk.offset] = -1.0
                gl_rows.append(row)
                hl_vals.append(0.0)
        eq_rows, eq_rhs = [], []
        for con in self.linear:
            row, rhs = self._linear_row(con)
            if con.sense == "==":
                eq_rows.append(row)
                eq_rhs.append(rhs)
            elif con.sense == "<=":
                gl_rows.append(row)
                hl_vals.append(rhs)
            else:
                gl_rows.append(-row)
                hl_vals.append(-rhs)

        # every PSD decision block is itself a cone membership "LMI"
        cones = []
        for bi, blk in enumerate(self.blocks):
            if blk.kind == PSD:
                cones.append(_Lmi(blk.dim, np.zeros((blk.dim, blk.dim), dtype=complex),
                                  ((bi, np.eye(blk.dim, dtype=complex), 1.0),), ()))
        cones.extend(self.lmis)

        by_dim: dict[int, list[int]] = {}
        for k, cone in enumerate(cones):
            by_dim.setdefault(cone.dim, []).append(k)

        groups = []
        group_order = []
        for dim in sorted(by_dim):
            members = by_dim[dim]
            cnt = len(members)
            gt = np.zeros((cnt, n, dim, dim), dtype=complex)
            ht = np.zeros((cnt, dim, dim), dtype=complex)
            basis_cache = {}
            for slot, k in enumerate(members):
                cone = cones[k]
                ht[slot] = cone.constant
                for bi, left, coef in cone.psd_terms:
                    blk = self.blocks[bi]
                    basis = basis_cache.get(blk.dim)
                    if basis is None:
                        basis = self._basis(blk.dim)
                        basis_cache[blk.dim] = basis
                    f = coef * (left.conj().T[None] @ basis @ left)
                    gt[slot, blk.offset:blk.offset + blk.dim ** 2] -= f
                for bi, mat in cone.scalar_terms:
                    blk = self.blocks[bi]
                    gt[slot, blk.offset] -= mat
                scale = max(np.abs(gt[slot]).max(initial=0.0),
                            np.abs(ht[slot]).max(initial=0.0))
                if scale > 0:
                    gt[slot] /= scale
                    ht[slot] /= scale
            groups.append(_ipm.PsdGroup(dim=dim, gt=gt, ht=ht))
            group_order.append(members)

        gl = np.array(gl_rows) if gl_rows else None
        hl = np.array(hl_vals) if gl_rows else None
        if gl is not None:
            row_scale = np.maximum(np.abs(gl).max(axis=1), np.abs(hl))
            row_scale[row_scale == 0] = 1.0
            gl = gl / row_scale[:, None]
            hl = hl / row_scale
        a_mat = np.array(eq_rows) if eq_rows else None
        b_vec = np.array(eq_rhs) if eq_rows else None
        if a_mat is not None:
            escale = np.maximum(np.abs(a_mat).max(axis=1), np.abs(b_vec))
            escale[escale == 0] = 1.0
            a_mat = a_mat / escale[:, None]
            b_vec = b_vec / escale
        obj_scale = max(1.0, np.abs(c).max(initial=0.0))
        return dict(c=c / obj_scale, gl=gl, hl=hl, groups=groups,
                    a_mat=a_mat, b_vec=b_vec, obj_scale=obj_scale,
                    group_order=group_order, cones=cones)


def solve(problem: ConicProblem, tol: float = 1e-7, max_iter: int = 100,
          warm_start: ConicSolution | None = None) -> ConicSolution:
    """Solve a :class:`ConicProblem`.

    ``status == "optimal"`` guarantees primal/dual residuals and relative
    gap at most ``tol`` (on the internally scaled data); anything the
    iteration cannot certify comes back as ``numerical-failure`` with
    diagnostics rather than a silent wrong answer.
    """
    can = problem.canonicalize()
    warm = warm_start.raw.get("warm") if (warm_start is not None and warm_start.raw) else None
    res = _ipm.solve_hsde(can["c"], can["gl"], can["hl"], can["groups"],
                          can["a_mat"], can["b_vec"], tol=tol,
                          max_iter=max_iter, warm=warm)

    blocks = None
    objective = np.nan
    if res.status == "optimal":
        blocks = []
        for blk in problem.blocks:
            if blk.kind == NONNEG:
                blocks.append(float(res.x[blk.offset]))
            else:
                blocks.append(unhvec(res.x[blk.offset:blk.offset + blk.dim ** 2], blk.dim))
        objective = float(res.primal_objective * can["obj_scale"]) + problem.obj_offset
        recomputed = problem.obj_offset
        for idx, coef in problem._obj.items():
            if problem.blocks[idx].kind == NONNEG:
                recomputed += coef * blocks[idx]
            else:
                recomputed += float(np.tensordot(coef, blocks[idx].conj(), axes=2).real)
        if abs(recomputed - objective) > 100 * tol * max(1.0, abs(objective)):
            res = _ipm.IpmResult(**{**res.__dict__, "status": "numerical-failure",
                                    "message": "objective self-check failed"})
            blocks, objective = None, np.nan
    elif res.status == "unbounded":
        objective = -np.inf

    warm_data = None
    if res.status == "optimal":
        warm_data = dict(x=res.x, y=res.y, s_l=res.s_l, z_l=res.z_l,
                         s_psd=res.s_psd, z_psd=res.z_psd, kappa=1e-8)
    return ConicSolution(
        status=res.status,
        blocks=blocks,
        objective=objective,
        primal_residual=res.primal_residual,
        dual_residual=(res.certificate_residual
                       if res.status in ("infeasible", "unbounded") else res.dual_residual),
        gap=res.gap,
        iterations=res.iterations,
        message=res.message,
        raw=dict(ipm=res, warm=warm_data),
    )


def dump_problem(problem: ConicProblem, fp) -> None:
    """Write the canonicalized problem as self-describing sparse text."""
    can = problem.canonicalize()

    def w(line=""):
        fp.write(line + "\n")

    w("seebeam-conic v1")
    w("# minimize c'x  s.t.  A x = b,  G x + s = h,  s in K")
    w("# K = R+^l x (complex Hermitian PSD cones, hvec coordinates)")
    w(f"nvars {problem.n_params}")
    nn = can["gl"].shape[0] if can["gl"] is not None else 0
    w(f"nonneg_rows {nn}")
    dims = [(g.dim, g.count) for g in can["groups"]]
    w("psd_cones " + " ".join(f"{d}:{cnt}" for d, cnt in dims))
    w("c_triplets")
    for j, v in enumerate(can["c"]):
        if v != 0.0:
            w(f"{j} {v!r}")
    if nn:
        w("G_nonneg_triplets")
        rows, cols = np.nonzero(can["gl"])
        for r, cc in zip(rows, cols):
            w(f"{r} {cc} {can['gl'][r, cc]!r}")
        w("h_nonneg")
        for r, v in enumerate(can["hl"]):
            w(f"{r} {v!r}")
    for gi, g in enumerate(can["groups"]):
        w(f"psd_group {gi} dim {g.dim} count {g.count}")
        w("G_entries cone col row_in_block col_in_block re im")
        k, n_, _, _ = g.gt.shape
        cones, cols, ri, ci = np.nonzero(g.gt)
        for a, b_, r_, c_ in zip(cones, cols, ri, ci):
            v = g.gt[a, b_, r_, c_]
            w(f"{a} {b_} {r_} {c_} {v.real!r} {v.imag!r}")
        w("h_entries cone row col re im")
        cones, ri, ci = np.nonzero(g.ht)
        for a, r_, c_ in zip(cones, ri, ci):
            v = g.ht[a, r_, c_]
            w(f"{a} {r_} {c_} {v.real!r} {v.imag!r}")
    if can["a_mat"] is not None:
        w("A_triplets")
        rows, cols = np.nonzero(can["a_mat"])
        for r, cc in zip(rows, cols):
            w(f"{r} {cc} {can['a_mat'][r, cc]!r}")
        w("b_entries")
        for r, v in enumerate(can["b_vec"]):
            w(f"{r} {v!r}")
    w("end")
