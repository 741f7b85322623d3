"""Steepest-descent directions under entry-wise and Schatten norms.

``steepest_map(g, spec)`` returns the unit-norm matrix maximizing the trace
inner product with ``g`` over the unit ball of ``spec``:

* entry-wise p in (1, inf): sign(g) |g|^(q-1) / ||g||_q^(q-1), q = p/(p-1)
* entry-wise inf:           sign(g)            (SignSGD; sign(0) = 0)
* entry-wise 1:             +/-1 on the first maximal-|entry| position
* Schatten p in (1, inf):   U diag(s^(q-1)/||s||_q^(q-1)) V^T
* Schatten inf:             U V^T over nonzero singular values (Muon family)
* Schatten 1:               leading singular dyad u1 v1^T

The inner product attained equals the dual norm of ``g`` in every case.
Maximizers are not unique at p in {1, inf}; the tie-breaks above fix one
deterministic representative. ``steepest_map(0) = 0`` so that a caller can
treat an exactly stationary signal as a no-op.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import (
    ENTRYWISE,
    NormSpec,
    as_matrix,
    entrywise_norm,
    jacobi_svd,
    newton_schulz_polar,
)

__all__ = ["NormSpec", "steepest_map", "single_sample_spectral_equals_frobenius"]

POLAR_SVD = "svd"
POLAR_NEWTON_SCHULZ = "newton-schulz"


def _entrywise_map(g: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        return np.sign(g)
    if p == 1.0:
        flat = int(np.argmax(np.abs(g)))  # row-major first maximum
        out = np.zeros_like(g)
        out.flat[flat] = math.copysign(1.0, g.flat[flat])
        return out
    q = p / (p - 1.0)
    dual = entrywise_norm(g, q)
    return np.sign(g) * (np.abs(g) / dual) ** (q - 1.0)


def _schatten_map(g: np.ndarray, p: float, polar_method: str) -> np.ndarray:
    if math.isinf(p) and polar_method == POLAR_NEWTON_SCHULZ:
        return newton_schulz_polar(g)
    svd = jacobi_svd(g)
    rank = svd.rank()
    u = svd.u[:, :rank]
    v = svd.v[:, :rank]
    s = svd.sigma[:rank]
    if math.isinf(p):
        return u @ v.T
    if p == 1.0:
        return np.outer(svd.u[:, 0], svd.v[:, 0])
    q = p / (p - 1.0)
    top = float(s[0])
    w = (s / top) ** (q - 1.0)
    w /= float(np.sum(w ** p)) ** (1.0 / p)  # unit Schatten-p norm directly
    return (u * w) @ v.T


def steepest_map(g, spec: NormSpec, polar_method: str = POLAR_SVD) -> np.ndarray:
    """Unit-norm direction maximizing <g, .> over the unit ball of ``spec``.

    Returns the zero matrix when ``g`` is zero. ``polar_method`` selects the
    Schatten-inf path: exact SVD (default) or the Newton-Schulz iteration.
    """
    m = as_matrix(g)
    if polar_method not in (POLAR_SVD, POLAR_NEWTON_SCHULZ):
        raise ValueError(f"unknown polar method {polar_method!r}")
    if not np.any(m):
        return np.zeros_like(m)
    if spec.family == ENTRYWISE:
        return _entrywise_map(m, spec.p)
    return _schatten_map(m, spec.p, polar_method)


def single_sample_spectral_equals_frobenius(w, ds, i: int):
    """Spectral and Frobenius maps of one per-sample gradient.

    Per-sample gradients of the linear classifier are rank one, so the two
    maps coincide; this returns both so the caller can assert
    ||a - b||_F <= 1e-6. Raises on a zero gradient.
    """
    from .model import grad

    g = grad(w, ds, np.array([i]), kind="cross_entropy")
    if not np.any(g):
        raise ValueError(f"per-sample gradient for sample {i} is zero")
    a = steepest_map(-g, NormSpec("schatten", math.inf))
    b = steepest_map(-g, NormSpec("entrywise", 2.0))
    return a, b
