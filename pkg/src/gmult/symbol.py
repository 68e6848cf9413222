"""Block-diagonal symbols ``U = diag(u_1, ..., u_m)`` on the stacked space."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from gmult.errors import FactorizationError, InvalidInputError, NotSemiNormalizedError, ShapeMismatchError
from gmult.gframe import GFrame
from gmult.opspace import SpaceLayout, adjoint, as_cmatrix, get_tolerances, herm_eig, svd

__all__ = [
    "Symbol",
    "SemiNormalization",
    "as_operator",
    "is_semi_normalized",
    "invert",
    "factor_positive",
    "column_sup",
    "require_semi_normalized",
    "random_symbol",
]


@dataclass(frozen=True, eq=False)
class Symbol:
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) == 0:
            raise InvalidInputError("a symbol needs at least one block")
        blocks = []
        for i, u in enumerate(self.blocks):
            u = as_cmatrix(u, f"symbol block {i}")
            if u.shape[0] != u.shape[1] or u.shape[0] < 1:
                raise ShapeMismatchError(f"symbol block {i} must be square, got {u.shape}")
            u.setflags(write=False)
            blocks.append(u)
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_weights(cls, weights, layout=None) -> "Symbol":
        """Scalar weights ``u_i = m_i Id``; layout defaults to all ones."""
        weights = np.asarray(weights, dtype=complex).ravel()
        if layout is None:
            layout = SpaceLayout([1] * len(weights))
        elif not isinstance(layout, SpaceLayout):
            layout = SpaceLayout(layout)
        if len(weights) != layout.m:
            raise ShapeMismatchError(f"{len(weights)} weights for {layout.m} blocks")
        return cls(tuple(w * np.eye(k) for w, k in zip(weights, layout.block_sizes)))

    @classmethod
    def identity(cls, layout) -> "Symbol":
        layout = layout if isinstance(layout, SpaceLayout) else SpaceLayout(layout)
        return cls.from_weights(np.ones(layout.m), layout)

    @cached_property
    def layout(self) -> SpaceLayout:
        return SpaceLayout([u.shape[0] for u in self.blocks])

    @property
    def m(self) -> int:
        return len(self.blocks)

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.blocks[i]

    def __repr__(self):
        return f"Symbol(block_sizes={self.layout.block_sizes})"

    def adjoint(self) -> "Symbol":
        return Symbol(tuple(adjoint(u) for u in self.blocks))

    def weights(self):
        """Scalar weights if every block is a multiple of the identity, else ``None``."""
        out = []
        for u in self.blocks:
            w = u[0, 0]
            if not np.array_equal(u, w * np.eye(u.shape[0])):
                return None
            out.append(w)
        return np.array(out)

    def apply(self, frame: GFrame) -> GFrame:
        """The sequence ``{u_i F_i}``."""
        if frame.layout != self.layout:
            raise ShapeMismatchError(f"symbol layout {self.layout} does not match frame layout {frame.layout}")
        return GFrame(tuple(u @ b for u, b in zip(self.blocks, frame.blocks)))


def as_operator(symbol: Symbol) -> np.ndarray:
    return scipy.linalg.block_diag(*symbol.blocks).astype(complex)


class SemiNormalization(NamedTuple):
    ok: bool
    norm: float
    inv_norm: float

    @property
    def lower(self) -> float:
        """``1 / ||U^{-1}||``, the smallest block singular value."""
        return 0.0 if np.isinf(self.inv_norm) else 1.0 / self.inv_norm

    @property
    def upper(self) -> float:
        return self.norm


def is_semi_normalized(symbol: Symbol, tol=None) -> SemiNormalization:
    """Every block invertible, measured relative to the largest block norm.

    Returns ``(ok, ||U||, ||U^{-1}||)`` with ``inf`` for the inverse norm when
    some block is singular.
    """
    tol = get_tolerances().invertibility if tol is None else tol
    svals = [svd(u)[1] for u in symbol.blocks]
    smax = max(float(s[0]) for s in svals)
    smin = min(float(s[-1]) for s in svals)
    ok = smax > 0.0 and smin > tol * smax
    return SemiNormalization(ok, smax, 1.0 / smin if ok else float("inf"))


def require_semi_normalized(symbol: Symbol) -> SemiNormalization:
    sn = is_semi_normalized(symbol)
    if not sn.ok:
        raise NotSemiNormalizedError("symbol has a singular block")
    return sn


def invert(symbol: Symbol) -> Symbol:
    require_semi_normalized(symbol)
    return Symbol(tuple(scipy.linalg.inv(u) for u in symbol.blocks))


def factor_positive(symbol: Symbol, tol: float = 1e-10) -> Symbol:
    """Blockwise Hermitian PSD square roots ``v_i`` with ``v_i^* v_i = u_i``."""
    roots = []
    for i, u in enumerate(symbol.blocks):
        try:
            w, v = herm_eig(u, hermitian_tol=tol)
        except InvalidInputError as exc:
            raise FactorizationError(f"symbol block {i} is not Hermitian") from exc
        scale = max(abs(w[-1]), abs(w[0]))
        if w[0] < -tol * scale:
            raise FactorizationError(f"symbol block {i} is indefinite (eigenvalue {w[0]:.3e})")
        roots.append((v * np.sqrt(np.clip(w, 0.0, None))) @ adjoint(v))
    return Symbol(tuple(roots))


def column_sup(symbol: Symbol) -> float:
    """Largest Euclidean column norm of the assembled operator."""
    return float(max(np.linalg.norm(u, axis=0).max() for u in symbol.blocks))


def random_symbol(
    layout: SpaceLayout | Sequence[int],
    seed=None,
    kind: str = "general",
    spread: float = 4.0,
) -> Symbol:
    """Random semi-normalized symbol.

    ``kind`` is one of ``"general"`` (singular values in ``[1/sqrt(spread),
    sqrt(spread)]``), ``"unitary"``, ``"psd"`` or ``"weights"`` (complex scalars).
    """
    layout = layout if isinstance(layout, SpaceLayout) else SpaceLayout(layout)
    rng = np.random.default_rng(seed)
    lo, hi = -0.5 * np.log(spread), 0.5 * np.log(spread)
    blocks = []
    for k in layout.block_sizes:
        if kind == "weights":
            w = np.exp(rng.uniform(lo, hi)) * np.exp(2j * np.pi * rng.uniform())
            blocks.append(w * np.eye(k))
            continue
        q1 = _unitary(rng, k)
        if kind == "unitary":
            blocks.append(q1)
            continue
        s = np.exp(rng.uniform(lo, hi, size=k))
        if kind == "psd":
            blocks.append((q1 * s) @ adjoint(q1))
        elif kind == "general":
            blocks.append((q1 * s) @ _unitary(rng, k))
        else:
            raise InvalidInputError(f"unknown symbol kind {kind!r}")
    return Symbol(tuple(blocks))


def _unitary(rng, k):
    z = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
