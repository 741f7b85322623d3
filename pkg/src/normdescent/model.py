"""Multi-class linear classifier: datasets, losses, gradients, margins.

The classifier is logits = W x with W of shape (k, d) and samples stored as
columns of a (d, n) matrix. Cross-entropy and multi-class exponential loss
are supported; both come with full-batch, mini-batch and per-sample
gradients, the softmax-complement proxy used throughout the convergence
analysis, and an exact minimum-margin report.

Numerical conventions that matter here:

* softmax is computed with column-max subtraction;
* the target-class entry of every per-sample gradient vector is formed as
  minus the sum of the off-target probabilities rather than ``p_y - 1``.
  At large margins ``p_y`` rounds to 1.0 and the naive difference loses the
  target component entirely, which visibly corrupts normalized per-sample
  update directions late in training;
* the proxy averages the off-target probability mass directly, for the
  same reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NormSpec, as_matrix, matrix_norm

CROSS_ENTROPY = "cross_entropy"
EXPONENTIAL = "exponential"
LOSS_KINDS = (CROSS_ENTROPY, EXPONENTIAL)

#: Sentinel for "use every sample" in gradient/loss batch arguments.
ALL = None

# exp() arguments beyond this are treated as divergence of the EXP loss
_EXP_GUARD = 700.0


class LossOverflowError(ArithmeticError):
    """Exponential-loss overflow; remembers which sample diverged."""

    def __init__(self, sample: int, argument: float):
        super().__init__(
            f"exponential loss overflow at sample {sample}: exp argument {argument:.1f} > {_EXP_GUARD:g}"
        )
        self.sample = sample
        self.argument = argument


def _check_kind(kind: str):
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


@dataclass(frozen=True)
class Dataset:
    """Classification data: columns of ``x`` are samples, ``y`` class ids.

    ``r_bound`` caches max_i ||x_i||_1, the data-scale constant appearing in
    every noise and stability bound.
    """

    x: np.ndarray
    y: np.ndarray
    k: int
    r_bound: float

    @property
    def d(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @staticmethod
    def from_arrays(x, y, k: int) -> "Dataset":
        xm = as_matrix(x)
        ya = np.asarray(y, dtype=np.int64)
        if ya.ndim != 1 or ya.shape[0] != xm.shape[1]:
            raise ValueError("y must be 1-D with one label per column of x")
        if k < 1 or ya.min(initial=0) < 0 or (ya.size and ya.max() >= k):
            raise ValueError("labels must lie in [0, k)")
        present = np.unique(ya)
        if present.size != k:
            missing = sorted(set(range(k)) - set(present.tolist()))
            raise ValueError(f"every class must appear at least once; missing {missing}")
        r = float(np.abs(xm).sum(axis=0).max())
        return Dataset(x=xm, y=ya, k=k, r_bound=r)


def _as_batch(ds: Dataset, batch) -> np.ndarray:
    if batch is ALL:
        return np.arange(ds.n)
    idx = np.asarray(batch, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("batch must be nonempty")
    if idx.min() < 0 or idx.max() >= ds.n:
        raise ValueError("batch indices out of range")
    # batches are index sets: evaluate in sorted order so the result does
    # not depend on shuffle order (a full permuted batch then reproduces
    # the full gradient bit for bit)
    return np.sort(idx)


def _softmax_cols(z: np.ndarray) -> np.ndarray:
    zs = z - z.max(axis=0, keepdims=True)
    p = np.exp(zs)
    p /= p.sum(axis=0, keepdims=True)
    return p


def _offtarget_probs(w: np.ndarray, ds: Dataset, idx: np.ndarray) -> np.ndarray:
    """Softmax probabilities with the target entry zeroed, shape (k, |idx|)."""
    p = _softmax_cols(w @ ds.x[:, idx])
    p[ds.y[idx], np.arange(idx.size)] = 0.0
    return p


def _exp_weights(w: np.ndarray, ds: Dataset, idx: np.ndarray) -> np.ndarray:
    """exp(z_c - z_y) for c != y (zero at the target entry), shape (k, |idx|)."""
    z = w @ ds.x[:, idx]
    zy = z[ds.y[idx], np.arange(idx.size)]
    arg = z - zy[None, :]
    arg[ds.y[idx], np.arange(idx.size)] = -np.inf
    _guard_exp(arg, idx)
    return np.exp(arg)


def _guard_exp(arg: np.ndarray, samples: np.ndarray):
    """Raise for the lowest-index sample whose exp argument exceeds the guard."""
    over = arg > _EXP_GUARD
    if over.any():
        col = int(np.nonzero(over.any(axis=0))[0][0])
        raise LossOverflowError(int(samples[col]), float(arg[:, col].max()))


def loss(w, ds: Dataset, kind: str = CROSS_ENTROPY) -> float:
    """Average loss over the full dataset.

    Cross-entropy uses max-subtracted softmax with a log1p path once the
    target logit is maximal, so tiny losses keep full relative precision.
    The exponential loss raises LossOverflowError past exp(700).
    """
    _check_kind(kind)
    wm = as_matrix(w)
    z = wm @ ds.x
    cols = np.arange(ds.n)
    zy = z[ds.y, cols]
    if kind == EXPONENTIAL:
        arg = z - zy[None, :]
        arg[ds.y, cols] = -np.inf
        _guard_exp(arg, cols)
        return float(np.exp(arg).sum() / ds.n)
    zmax = z.max(axis=0)
    rel = np.exp(z - zmax[None, :])
    rel[ds.y, cols] = 0.0
    off = rel.sum(axis=0)
    # -log softmax_y = (zmax - z_y) + log(exp(z_y - zmax) + off)
    at_top = zy == zmax
    per = np.where(
        at_top,
        np.log1p(off),
        (zmax - zy) + np.log(np.exp(zy - zmax) + off),
    )
    return float(per.mean())


def grad(w, ds: Dataset, batch=ALL, kind: str = CROSS_ENTROPY) -> np.ndarray:
    """Mean loss gradient over ``batch`` (ALL for the full dataset)."""
    _check_kind(kind)
    wm = as_matrix(w)
    idx = _as_batch(ds, batch)
    if kind == CROSS_ENTROPY:
        coeff = _offtarget_probs(wm, ds, idx)
    else:
        coeff = _exp_weights(wm, ds, idx)
    # target entry = -(sum of off-target mass): exact column-sum-zero identity
    coeff[ds.y[idx], np.arange(idx.size)] = -coeff.sum(axis=0)
    return (coeff @ ds.x[:, idx].T) / idx.size


def proxy_g(w, ds: Dataset, kind: str = CROSS_ENTROPY) -> float:
    """Gradient-scale proxy: mean off-target softmax mass (CE), or the loss (EXP)."""
    _check_kind(kind)
    wm = as_matrix(w)
    if kind == EXPONENTIAL:
        return loss(wm, ds, kind)
    p = _offtarget_probs(wm, ds, np.arange(ds.n))
    return float(p.sum() / ds.n)


@dataclass(frozen=True)
class MarginReport:
    """Exact minimum pairwise logit gap and its norm-scaled version."""

    unnormalized_min: float
    weight_norm: float
    normalized: float
    argmin_sample: int
    argmin_class: int


def margin_report(w, ds: Dataset, spec: NormSpec) -> MarginReport:
    """Minimum of (e_y - e_c)^T W x_i over all i and c != y_i.

    Ties break toward the lexicographically smallest (sample, class). When
    ``w`` is zero the normalized margin is reported as -inf.
    """
    wm = as_matrix(w)
    z = wm @ ds.x
    cols = np.arange(ds.n)
    gaps = z[ds.y, cols][None, :] - z  # (k, n): gap[c, i] = z_y - z_c
    gaps[ds.y, cols] = np.inf
    flat = gaps.T.reshape(-1)  # sample-major so argmin tie-break is (i, c)
    pos = int(np.argmin(flat))
    i, c = divmod(pos, ds.k)
    unnorm = float(flat[pos])
    wnorm = matrix_norm(wm, spec)
    normalized = unnorm / wnorm if wnorm > 0.0 else -np.inf
    return MarginReport(
        unnormalized_min=unnorm,
        weight_norm=wnorm,
        normalized=normalized,
        argmin_sample=i,
        argmin_class=c,
    )


def gradient_noise_bound_check(w, ds: Dataset, batch) -> tuple[float, float]:
    """Both sides of the mini-batch noise bound ||grad_B - grad||_1 <= 2(m-1) R G(W).

    Requires |batch| to divide n so m = n/|batch| is an integer.
    """
    idx = _as_batch(ds, batch)
    if ds.n % idx.size != 0:
        raise ValueError(f"batch size {idx.size} must divide n = {ds.n}")
    m = ds.n // idx.size
    diff = grad(w, ds, idx) - grad(w, ds, ALL)
    lhs = float(np.abs(diff).sum())
    rhs = 2.0 * (m - 1) * ds.r_bound * proxy_g(w, ds)
    return lhs, rhs


# --- text serialization ----------------------------------------------------
#
# Dataset files: first line "d n k", then n lines "label v1 ... vd".
# Matrix files: first line "rows cols", then one line per row.
# Values are written with repr(), which round-trips float64 exactly.


def _fmt(v: float) -> str:
    return repr(float(v))


def save_dataset(ds: Dataset, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{ds.d} {ds.n} {ds.k}\n")
        for i in range(ds.n):
            vals = " ".join(_fmt(v) for v in ds.x[:, i])
            fh.write(f"{int(ds.y[i])} {vals}\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: expected header 'd n k'")
        d, n, k = (int(t) for t in header)
        x = np.zeros((d, n))
        y = np.zeros(n, dtype=np.int64)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}: sample line {i} has {len(parts)} fields, expected {d + 1}")
            y[i] = int(parts[0])
            x[:, i] = [float(t) for t in parts[1:]]
    return Dataset.from_arrays(x, y, k)


def save_matrix(w, path):
    wm = as_matrix(w)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{wm.shape[0]} {wm.shape[1]}\n")
        for row in wm:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        rows, cols = (int(t) for t in fh.readline().split())
        out = np.zeros((rows, cols))
        for r in range(rows):
            out[r] = [float(t) for t in fh.readline().split()]
    return out
