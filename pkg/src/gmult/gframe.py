"""Finite g-frames and their basic operators.

A g-frame on ``C^n`` is a list of blocks ``L_i`` of shape ``(k_i, n)``.
Stacking the blocks vertically gives the analysis matrix (``K x n``);
its adjoint is the synthesis matrix and ``S = T T^*`` the frame operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from gmult.errors import InvalidInputError, NotDualError, ShapeMismatchError, SingularFrameError
from gmult.opspace import (
    SpaceLayout,
    adjoint,
    as_cmatrix,
    cond,
    get_tolerances,
    herm_eig,
    proj_kernel,
    rank,
)

__all__ = [
    "GFrame",
    "FrameBounds",
    "BESSEL",
    "FRAME",
    "RIESZ",
    "synthesis_matrix",
    "analysis_matrix",
    "frame_operator",
    "frame_bounds",
    "canonical_dual",
    "excess",
    "dual_frame",
    "is_dual_pair",
    "DualCheck",
    "random_gframe",
    "require_frame",
]

BESSEL = "g-Bessel-only"
FRAME = "g-frame"
RIESZ = "g-Riesz-basis"


def _as_layout(layout) -> SpaceLayout:
    return layout if isinstance(layout, SpaceLayout) else SpaceLayout(layout)


@dataclass(frozen=True, eq=False)
class GFrame:
    """A finite sequence of operator blocks over a shared ambient space.

    Blocks are stored as read-only complex arrays.
    """

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) == 0:
            raise InvalidInputError("a g-frame needs at least one block")
        blocks = []
        for i, b in enumerate(self.blocks):
            b = as_cmatrix(b, f"block {i}")
            b.setflags(write=False)
            blocks.append(b)
        n = blocks[0].shape[1]
        if n < 1:
            raise InvalidInputError("ambient dimension must be positive")
        for i, b in enumerate(blocks):
            if b.shape[1] != n:
                raise ShapeMismatchError(f"block {i} has {b.shape[1]} columns, expected {n}")
            if b.shape[0] < 1:
                raise InvalidInputError(f"block {i} has no rows")
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_analysis(cls, analysis, layout) -> "GFrame":
        """Cut a stacked ``K x n`` analysis matrix into blocks."""
        layout = _as_layout(layout)
        analysis = as_cmatrix(analysis, "analysis matrix")
        if analysis.shape[0] != layout.total:
            raise ShapeMismatchError(
                f"analysis matrix has {analysis.shape[0]} rows, layout needs {layout.total}"
            )
        return cls(tuple(layout.split(analysis)))

    @property
    def n(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @cached_property
    def layout(self) -> SpaceLayout:
        return SpaceLayout([b.shape[0] for b in self.blocks])

    @property
    def K(self) -> int:
        return self.layout.total

    @cached_property
    def analysis(self) -> np.ndarray:
        a = np.vstack(self.blocks)
        a.setflags(write=False)
        return a

    @property
    def synthesis(self) -> np.ndarray:
        return adjoint(self.analysis)

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.blocks[i]

    def __repr__(self):
        return f"GFrame(n={self.n}, block_sizes={self.layout.block_sizes})"

    def scaled(self, c) -> "GFrame":
        return GFrame(tuple(c * b for b in self.blocks))

    def allclose(self, other: "GFrame", atol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and self.layout == other.layout
            and np.allclose(self.analysis, other.analysis, rtol=0.0, atol=atol)
        )


def check_compatible(*frames: GFrame) -> None:
    first = frames[0]
    for f in frames[1:]:
        if f.n != first.n or f.layout != first.layout:
            raise ShapeMismatchError(
                f"frames do not share ambient space and layout: {first!r} vs {f!r}"
            )


def synthesis_matrix(frame: GFrame) -> np.ndarray:
    """``[L_1^* | ... | L_m^*]``, an ``n x K`` matrix."""
    return frame.synthesis


def analysis_matrix(frame: GFrame) -> np.ndarray:
    return frame.analysis


def frame_operator(frame: GFrame) -> np.ndarray:
    a = frame.analysis
    s = adjoint(a) @ a
    return 0.5 * (s + adjoint(s))


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    classification: str

    @property
    def is_frame(self) -> bool:
        return self.classification != BESSEL

    @property
    def is_riesz(self) -> bool:
        return self.classification == RIESZ

    @property
    def ratio(self) -> float:
        return self.upper / self.lower if self.lower > 0 else float("inf")


def frame_bounds(frame: GFrame) -> FrameBounds:
    """Optimal bounds, i.e. the extreme eigenvalues of the frame operator."""
    w, _ = herm_eig(frame_operator(frame))
    lower = max(float(w[0]), 0.0)
    upper = max(float(w[-1]), 0.0)
    if upper == 0.0 or lower <= get_tolerances().rank * upper:
        kind = BESSEL
    elif frame.K == frame.n:
        kind = RIESZ
    else:
        kind = FRAME
    return FrameBounds(lower, upper, kind)


def require_frame(frame: GFrame, what: str = "sequence") -> FrameBounds:
    fb = frame_bounds(frame)
    if not fb.is_frame:
        raise SingularFrameError(f"{what} is not a g-frame (lower bound {fb.lower:.3e})")
    return fb


def canonical_dual(frame: GFrame) -> GFrame:
    """Blocks ``L_i S^{-1}``."""
    require_frame(frame)
    s = frame_operator(frame)
    # L_i S^{-1} = (S^{-1} L_i^*)^*; solve instead of inverting
    dual_analysis = adjoint(np.linalg.solve(s, frame.synthesis))
    return GFrame.from_analysis(dual_analysis, frame.layout)


def excess(frame: GFrame) -> int:
    """``dim ker(T)`` for the synthesis operator ``T``."""
    return frame.K - rank(frame.synthesis)


def dual_frame(frame: GFrame, psi=None) -> GFrame:
    """The dual ``L~_i + pi_i Psi``.

    ``psi`` (``K x n``) is first projected onto ``ker(T)`` so that any input
    gives a valid dual; ``None`` gives the canonical dual.
    """
    can = canonical_dual(frame)
    if psi is None:
        return can
    psi = as_cmatrix(psi, "psi")
    if psi.shape != (frame.K, frame.n):
        raise ShapeMismatchError(f"psi must be {(frame.K, frame.n)}, got {psi.shape}")
    p = proj_kernel(frame.synthesis)
    return GFrame.from_analysis(can.analysis + p @ psi, frame.layout)


@dataclass(frozen=True)
class DualCheck:
    ok: bool
    residual: float
    bound: float

    def __bool__(self):
        return self.ok


def is_dual_pair(frame: GFrame, dual: GFrame) -> DualCheck:
    """Whether ``sum_i F_i^* D_i`` is the identity, up to a condition-scaled bound."""
    check_compatible(frame, dual)
    recon = frame.synthesis @ dual.analysis
    residual = float(np.linalg.norm(recon - np.eye(frame.n), 2))
    bound = 1e-8 * max(1.0, cond(frame_operator(frame)))
    return DualCheck(residual <= bound, residual, bound)


def require_dual(frame: GFrame, dual: GFrame) -> None:
    check = is_dual_pair(frame, dual)
    if not check:
        raise NotDualError(
            f"not a dual pair: reconstruction residual {check.residual:.3e} > {check.bound:.3e}"
        )


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_complex_gaussian(rng, (n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_gframe(
    n: int,
    layout: SpaceLayout | Sequence[int],
    condition_cap: float = 100.0,
    seed=None,
) -> GFrame:
    """Random g-frame with ``B / A <= condition_cap``.

    The analysis matrix is ``W diag(s) V^*`` with Haar-random isometries
    and squared singular values drawn log-uniformly from ``[1, cap]``
    times a random overall scale, so the cap holds by construction.
    """
    layout = _as_layout(layout)
    K = layout.total
    if n < 1:
        raise InvalidInputError("ambient dimension must be positive")
    if K < n:
        raise InvalidInputError(f"a g-frame on C^{n} needs K >= n, got K = {K}")
    if condition_cap < 1.0:
        raise InvalidInputError(f"condition_cap must be >= 1, got {condition_cap}")
    rng = np.random.default_rng(seed)
    w = _haar_unitary(rng, K)[:, :n]
    v = _haar_unitary(rng, n)
    s2 = np.exp(rng.uniform(0.0, np.log(condition_cap), size=n))
    s2 *= np.exp(rng.uniform(np.log(0.5), np.log(2.0)))
    analysis = (w * np.sqrt(s2)) @ adjoint(v)
    return GFrame.from_analysis(analysis, layout)
