"""Dense matrix norms, SVD, and polar factors.

Everything in this module is a pure function of float64 numpy arrays. The
SVD is a one-sided (Hestenes) Jacobi iteration with a fixed cyclic sweep
order, so repeated calls on the same input are bit-identical; that
determinism is relied on by the training loop and the reproducibility
contract of the experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ENTRYWISE = "entrywise"
SCHATTEN = "schatten"

_FAMILY_ALIASES = {"ew": ENTRYWISE, "sch": SCHATTEN}
_FAMILY_SHORT = {ENTRYWISE: "ew", SCHATTEN: "sch"}

# Singular values below RANK_CUTOFF * sigma_max count as zero for rank
# decisions (rank-1 per-sample gradients need a stable cut).
RANK_CUTOFF = 1e-12

MAX_JACOBI_DIM = 512
_JACOBI_SWEEPS = 60
_JACOBI_REL_TOL = 1e-14


class SvdConvergenceError(RuntimeError):
    """Jacobi sweeps exhausted; carries the remaining off-diagonal residual."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"jacobi_svd did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


@dataclass(frozen=True)
class NormSpec:
    """A matrix norm: entry-wise or Schatten, with exponent p in [1, inf].

    The textual form used in configs and on the command line is
    ``"ew:p"`` / ``"sch:p"`` with ``p`` a decimal or ``"inf"``.
    """

    family: str
    p: float

    def __post_init__(self):
        if self.family not in (ENTRYWISE, SCHATTEN):
            raise ValueError(f"unknown norm family: {self.family!r}")
        if not (self.p >= 1.0):
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")

    @property
    def q(self) -> float:
        """Dual exponent: 1/p + 1/q = 1 (1 <-> inf)."""
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    @property
    def dual(self) -> "NormSpec":
        return NormSpec(self.family, self.q)

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        try:
            fam, pstr = text.strip().split(":")
            family = _FAMILY_ALIASES[fam]
            p = math.inf if pstr == "inf" else float(pstr)
        except (ValueError, KeyError):
            raise ValueError(f"bad norm spec {text!r}; expected 'ew:p' or 'sch:p'")
        return cls(family, p)

    def __str__(self) -> str:
        pstr = "inf" if math.isinf(self.p) else f"{self.p:g}"
        return f"{_FAMILY_SHORT[self.family]}:{pstr}"


@dataclass(frozen=True)
class Svd:
    """Thin SVD A = U diag(sigma) V^T with r = min(rows, cols) columns.

    sigma is nonincreasing, U and V have orthonormal columns (zero singular
    values get deterministically completed basis vectors), and the
    largest-magnitude entry of each U column is nonnegative.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def r(self) -> int:
        return self.sigma.shape[0]

    def rank(self) -> int:
        """Numerical rank under the shared RANK_CUTOFF convention."""
        if self.sigma.size == 0 or self.sigma[0] == 0.0:
            return 0
        return int(np.sum(self.sigma > RANK_CUTOFF * self.sigma[0]))


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def entrywise_norm(a, p: float) -> float:
    """Entry-wise p-norm: (sum |a_ij|^p)^(1/p); p=inf gives max |a_ij|."""
    m = as_matrix(a)
    if not (p >= 1.0):
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    absm = np.abs(m)
    if math.isinf(p):
        return float(absm.max(initial=0.0))
    if p == 1.0:
        return float(absm.sum())
    if p == 2.0:
        return float(np.sqrt(np.sum(m * m)))
    top = float(absm.max(initial=0.0))
    if top == 0.0:
        return 0.0
    # scale by the max entry so large p does not overflow
    return top * float(np.sum((absm / top) ** p)) ** (1.0 / p)


def _vector_pnorm(v: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(v.max(initial=0.0))
    if p == 1.0:
        return float(v.sum())
    top = float(v.max(initial=0.0))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((v / top) ** p)) ** (1.0 / p)


def jacobi_svd(a, max_sweeps: int = _JACOBI_SWEEPS) -> Svd:
    """One-sided Jacobi SVD with cyclic column-pair ordering.

    Deterministic for a given input: pairs (i, j), i < j, are visited in a
    fixed order each sweep and rotations are applied immediately. Converges
    when the largest off-diagonal Gram entry drops below
    1e-14 * ||A||_F^2; raises SvdConvergenceError after ``max_sweeps``.
    """
    m0 = as_matrix(a)
    rows, cols = m0.shape
    if min(rows, cols) > MAX_JACOBI_DIM:
        raise ValueError(f"min(rows, cols) must be <= {MAX_JACOBI_DIM} for jacobi_svd")
    transposed = rows < cols
    b = np.array(m0.T if transposed else m0, dtype=np.float64, order="F")
    nwork = b.shape[1]
    v = np.eye(nwork, order="F")
    thresh = _JACOBI_REL_TOL * float(np.sum(m0 * m0))

    converged = False
    off = 0.0
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(nwork - 1):
            for j in range(i + 1, nwork):
                bi = b[:, i]
                bj = b[:, j]
                gram = float(bi @ bj)
                mag = abs(gram)
                if mag > off:
                    off = mag
                if mag <= thresh:
                    continue
                alpha = float(bi @ bi)
                beta = float(bj @ bj)
                zeta = (beta - alpha) / (2.0 * gram)
                if zeta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                cs = 1.0 / math.hypot(1.0, t)
                sn = cs * t
                new_i = cs * bi - sn * bj
                new_j = sn * bi + cs * bj
                b[:, i] = new_i
                b[:, j] = new_j
                vi = cs * v[:, i] - sn * v[:, j]
                vj = sn * v[:, i] + cs * v[:, j]
                v[:, i] = vi
                v[:, j] = vj
        if off <= thresh:
            converged = True
            break
    if not converged:
        raise SvdConvergenceError(off, max_sweeps)

    sigma = np.sqrt(np.sum(b * b, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    b = b[:, order]
    v = v[:, order]

    u = np.zeros_like(b)
    cutoff = RANK_CUTOFF * (float(sigma[0]) if sigma.size else 0.0)
    small = []
    for j in range(nwork):
        if sigma[j] > cutoff:
            u[:, j] = b[:, j] / sigma[j]
        else:
            small.append(j)
    # complete an orthonormal basis in the (near) null columns: project
    # standard basis vectors against the columns built so far
    for j in small:
        for e in range(b.shape[0]):
            cand = np.zeros(b.shape[0])
            cand[e] = 1.0
            cand -= u @ (u.T @ cand)
            nc = float(np.linalg.norm(cand))
            if nc > 0.5:
                u[:, j] = cand / nc
                break

    if transposed:
        u, v = v, u

    # sign convention: largest-magnitude entry of each U column nonnegative
    for j in range(u.shape[1]):
        lead = int(np.argmax(np.abs(u[:, j])))
        if u[lead, j] < 0.0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]

    return Svd(u=np.ascontiguousarray(u), sigma=sigma, v=np.ascontiguousarray(v))


def singular_values(a) -> np.ndarray:
    return jacobi_svd(a).sigma


def schatten_norm(a, p: float) -> float:
    """Schatten p-norm: p-norm of the singular value vector."""
    if not (p >= 1.0):
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    if p == 2.0:
        # Frobenius identity; skip the SVD
        return entrywise_norm(a, 2.0)
    return _vector_pnorm(singular_values(a), p)


def matrix_norm(a, spec: NormSpec) -> float:
    if spec.family == ENTRYWISE:
        return entrywise_norm(a, spec.p)
    return schatten_norm(a, spec.p)


def dual_norm(a, spec: NormSpec) -> float:
    """Dual norm within the same family: exponent p maps to q = p/(p-1)."""
    return matrix_norm(a, spec.dual)


def newton_schulz_polar(a, iters: int = 40, tol: float = 1e-8) -> np.ndarray:
    """Polar factor U V^T via the cubic Newton-Schulz iteration.

    Pre-scales by the Frobenius norm so all singular values start in (0, 1],
    then iterates X <- 1.5 X - 0.5 X X^T X. Stops early once
    ||X X^T X - X||_F <= 0.75*tol, which pins every nonzero singular value of
    X into [1-tol, 1+tol] while ignoring exact null directions.
    """
    m = as_matrix(a)
    fro = entrywise_norm(m, 2.0)
    if fro == 0.0:
        raise ValueError("newton_schulz_polar requires a nonzero matrix")
    x = m / fro
    tall = x.shape[0] >= x.shape[1]
    for _ in range(iters):
        if tall:
            xxt_x = x @ (x.T @ x)
        else:
            xxt_x = (x @ x.T) @ x
        if float(np.sqrt(np.sum((xxt_x - x) ** 2))) <= 0.75 * tol:
            return x
        x = 1.5 * x - 0.5 * xxt_x
    return x


def frobenius_cosine(a, b) -> float:
    """<a, b> / (||a||_F ||b||_F); both inputs must be nonzero."""
    ma = as_matrix(a)
    mb = as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    na = entrywise_norm(ma, 2.0)
    nb = entrywise_norm(mb, 2.0)
    if na == 0.0 or nb == 0.0:
        raise ValueError("frobenius_cosine requires nonzero matrices")
    c = float(np.sum(ma * mb)) / (na * nb)
    return min(1.0, max(-1.0, c))
