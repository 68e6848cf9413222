"""Dense complex matrix substrate.

Everything in gmult is finite dimensional: operators are complex
``numpy`` arrays, adjoint means conjugate transpose, and every rank
decision goes through one relative threshold (see :class:`Tolerances`).
The stacked coefficient space is described by :class:`SpaceLayout`.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from gmult.errors import InvalidInputError, ShapeMismatchError, SingularOperatorError

__all__ = [
    "Tolerances",
    "get_tolerances",
    "use_tolerances",
    "as_cmatrix",
    "adjoint",
    "svd",
    "herm_eig",
    "pinv",
    "proj_kernel",
    "proj_range",
    "rank",
    "op_norm",
    "cond",
    "inv",
    "SpaceLayout",
]


@dataclass(frozen=True)
class Tolerances:
    """Global numerical policy.

    ``rank`` is the relative singular-value cutoff used for every
    kernel/range split, ``invertibility`` the relative cutoff used to
    call a square operator invertible.
    """

    rank: float = 1e-10
    invertibility: float = 1e-10

    def __post_init__(self):
        for name in ("rank", "invertibility"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise InvalidInputError(f"{name} tolerance must lie in (0, 1), got {value!r}")


_TOLERANCES: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "gmult_tolerances", default=Tolerances()
)


def get_tolerances() -> Tolerances:
    return _TOLERANCES.get()


@contextlib.contextmanager
def use_tolerances(**overrides) -> Iterator[Tolerances]:
    """Temporarily override tolerances for the current context.

    >>> with use_tolerances(rank=1e-8):
    ...     get_tolerances().rank
    1e-08
    """
    tol = replace(get_tolerances(), **overrides)
    token = _TOLERANCES.set(tol)
    try:
        yield tol
    finally:
        _TOLERANCES.reset(token)


def _rank_tol(rank_tol):
    if rank_tol is None:
        return get_tolerances().rank
    if not (0.0 < rank_tol < 1.0):
        raise InvalidInputError(f"rank_tol must lie in (0, 1), got {rank_tol!r}")
    return rank_tol


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (a copy)."""
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def svd(a):
    """Thin SVD ``a = u @ diag(s) @ vh`` with ``s`` descending."""
    a = as_cmatrix(a)
    if a.size == 0:
        r, c = a.shape
        return np.zeros((r, 0), complex), np.zeros(0), np.zeros((0, c), complex)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return u, s, vh


def herm_eig(a, hermitian_tol: float = 1e-10):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized before decomposition; anything further than
    ``hermitian_tol * ||a||`` from Hermitian is rejected.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"herm_eig needs a square matrix, got {a.shape}")
    scale = np.linalg.norm(a, 2) if a.size else 0.0
    skew = np.linalg.norm(a - adjoint(a), 2) if a.size else 0.0
    if skew > hermitian_tol * max(scale, np.finfo(float).tiny):
        raise InvalidInputError(f"matrix is not Hermitian (skew part {skew:.3e}, norm {scale:.3e})")
    w, v = np.linalg.eigh(0.5 * (a + adjoint(a)))
    return w, v


def rank(a, rank_tol=None) -> int:
    s = svd(a)[1]
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > _rank_tol(rank_tol) * s[0]))


def pinv(a, rank_tol=None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    a = as_cmatrix(a)
    u, s, vh = svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[::-1], dtype=complex)
    keep = s > _rank_tol(rank_tol) * s[0]
    return (adjoint(vh[keep]) / s[keep]) @ adjoint(u[:, keep])


def proj_kernel(a, rank_tol=None) -> np.ndarray:
    """Orthogonal projector onto ``ker(a)`` (a ``cols x cols`` matrix)."""
    a = as_cmatrix(a)
    cols = a.shape[1]
    # full right singular basis: the thin one misses the kernel when rows < cols
    if a.size == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > _rank_tol(rank_tol) * s[0]))
    null = adjoint(vh[r:])
    p = null @ adjoint(null)
    return 0.5 * (p + adjoint(p))


def proj_range(a, rank_tol=None) -> np.ndarray:
    """Orthogonal projector onto ``ran(a)`` (a ``rows x rows`` matrix)."""
    u, s, _ = svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((u.shape[0], u.shape[0]), dtype=complex)
    q = u[:, s > _rank_tol(rank_tol) * s[0]]
    return q @ adjoint(q)


def op_norm(a) -> float:
    s = svd(a)[1]
    return float(s[0]) if s.size else 0.0


def cond(a, rank_tol=None) -> float:
    """Spectral condition number; ``inf`` when the smallest singular value
    falls below the rank cutoff."""
    s = svd(a)[1]
    if s.size == 0 or s[0] == 0.0:
        return float("inf")
    if s[-1] <= _rank_tol(rank_tol) * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


def inv(a, name: str = "operator") -> np.ndarray:
    """Inverse of a square matrix, refusing numerically singular input."""
    a = as_cmatrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got {a.shape}")
    s = svd(a)[1]
    if s.size == 0 or s[-1] <= get_tolerances().invertibility * s[0]:
        raise SingularOperatorError(f"{name} is not invertible")
    return scipy.linalg.inv(a)


@dataclass(frozen=True)
class SpaceLayout:
    """Block bookkeeping for the stacked space ``C^K``, ``K = sum(block_sizes)``.

    Blocks are indexed from 0.
    """

    block_sizes: tuple[int, ...]

    def __init__(self, block_sizes: Sequence[int]):
        sizes = tuple(int(k) for k in block_sizes)
        if not sizes:
            raise InvalidInputError("layout needs at least one block")
        if any(k < 1 for k in sizes):
            raise InvalidInputError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return (0, *np.cumsum(self.block_sizes).tolist())

    @property
    def total(self) -> int:
        return self.offsets[-1]

    @property
    def m(self) -> int:
        return len(self.block_sizes)

    def __len__(self):
        return self.m

    def block_slice(self, i: int) -> slice:
        if not 0 <= i < self.m:
            raise InvalidInputError(f"block index {i} out of range for {self.m} blocks")
        return slice(self.offsets[i], self.offsets[i + 1])

    def embed(self, i: int, x) -> np.ndarray:
        """Zero-padded injection of block ``i`` into the stacked space."""
        sl = self.block_slice(i)
        x = np.asarray(x, dtype=complex)
        if x.shape[0] != self.block_sizes[i]:
            raise ShapeMismatchError(
                f"block {i} has size {self.block_sizes[i]}, got leading dimension {x.shape[0]}"
            )
        out = np.zeros((self.total, *x.shape[1:]), dtype=complex)
        out[sl] = x
        return out

    def extract(self, i: int, y) -> np.ndarray:
        """Coordinate projection onto block ``i``."""
        sl = self.block_slice(i)
        y = np.asarray(y)
        if y.shape[0] != self.total:
            raise ShapeMismatchError(f"stacked object must have {self.total} rows, got {y.shape[0]}")
        return np.array(y[sl], dtype=complex)

    def split(self, y) -> list[np.ndarray]:
        return [self.extract(i, y) for i in range(self.m)]
