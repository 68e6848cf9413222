"""Multipliers ``M = T_L U T_G^*`` with block-diagonal symbols.

Besides assembly and spectral diagnostics this module holds the
constructions around invertible multipliers: all ``G`` producing a given
invertible ``M`` (and the minimal-norm one), all ``L`` for a positive
symbol, and the g-Riesz case where ``M`` determines ``U`` and inverts in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmult.errors import NotRieszError, ShapeMismatchError, SingularFrameError
from gmult.gframe import (
    GFrame,
    canonical_dual,
    check_compatible,
    excess,
    frame_bounds,
    frame_operator,
    require_frame,
)
from gmult.opspace import adjoint, as_cmatrix, get_tolerances, inv, op_norm, proj_kernel, svd
from gmult.symbol import (
    Symbol,
    as_operator,
    column_sup,
    factor_positive,
    invert,
)

__all__ = [
    "MultiplierReport",
    "assemble",
    "multiplier_matrix",
    "NecessaryConditions",
    "necessary_conditions",
    "construct_gamma",
    "minimal_norm_gamma",
    "minimal_norm_ratio",
    "extract_phi",
    "construct_lambda",
    "ExcessComparison",
    "excess_match",
    "riesz_inverse",
    "RecoveredSymbol",
    "recover_symbol",
    "NormBracket",
    "norm_bracket",
]


def _check_symbol(frame: GFrame, symbol: Symbol) -> None:
    if symbol.layout != frame.layout:
        raise ShapeMismatchError(
            f"symbol layout {symbol.layout.block_sizes} does not match frame layout "
            f"{frame.layout.block_sizes}"
        )


def multiplier_matrix(lam: GFrame, symbol: Symbol, gam: GFrame) -> np.ndarray:
    """``sum_i L_i^* u_i G_i`` summed block by block."""
    check_compatible(lam, gam)
    _check_symbol(lam, symbol)
    m = np.zeros((lam.n, lam.n), dtype=complex)
    for li, ui, gi in zip(lam.blocks, symbol.blocks, gam.blocks):
        m += adjoint(li) @ ui @ gi
    return m


@dataclass(frozen=True, eq=False)
class MultiplierReport:
    M: np.ndarray
    sigma_min: float
    sigma_max: float
    invertible: bool
    cond: float
    assembly_residual: float
    lower_bracket: float | None = None
    upper_bracket: float | None = None

    @property
    def singular_values(self) -> np.ndarray:
        return svd(self.M)[1]


def assemble(lam: GFrame, symbol: Symbol, gam: GFrame) -> MultiplierReport:
    """Assemble the multiplier in product form and check it against the block sum."""
    check_compatible(lam, gam)
    _check_symbol(lam, symbol)
    m = lam.synthesis @ as_operator(symbol) @ gam.analysis
    blockwise = multiplier_matrix(lam, symbol, gam)
    scale = max(op_norm(lam.synthesis) * op_norm(as_operator(symbol)) * op_norm(gam.analysis), 1.0)
    residual = float(np.linalg.norm(m - blockwise, 2)) / scale
    s = svd(m)[1]
    smax, smin = float(s[0]), float(s[-1])
    invertible = smax > 0.0 and smin > get_tolerances().invertibility * smax
    lower = upper = None
    if frame_bounds(lam).is_riesz and frame_bounds(gam).is_riesz:
        br = norm_bracket(lam, symbol, gam, _m=m)
        lower, upper = br.lower, br.upper
    return MultiplierReport(
        M=m,
        sigma_min=smin,
        sigma_max=smax,
        invertible=invertible,
        cond=smax / smin if invertible else float("inf"),
        assembly_residual=residual,
        lower_bracket=lower,
        upper_bracket=upper,
    )


@dataclass(frozen=True)
class NecessaryConditions:
    """Lower frame bounds of ``L``, ``G``, ``{u_i G_i}`` and ``{u_i^* L_i}``."""

    lambda_lower: float
    gamma_lower: float
    u_gamma_lower: float
    u_star_lambda_lower: float
    all_frames: bool
    invertible: bool

    @property
    def consistent(self) -> bool:
        """Invertibility implies that all four sequences are g-frames."""
        return self.all_frames or not self.invertible


def necessary_conditions(lam, symbol, gam, report: MultiplierReport | None = None) -> NecessaryConditions:
    report = assemble(lam, symbol, gam) if report is None else report
    bounds = [
        frame_bounds(lam),
        frame_bounds(gam),
        frame_bounds(symbol.apply(gam)),
        frame_bounds(symbol.adjoint().apply(lam)),
    ]
    return NecessaryConditions(
        *(b.lower for b in bounds),
        all_frames=all(b.is_frame for b in bounds),
        invertible=report.invertible,
    )


def _project_phi(lam: GFrame, phi) -> np.ndarray:
    if phi is None:
        return np.zeros((lam.K, lam.n), dtype=complex)
    phi = as_cmatrix(phi, "phi")
    if phi.shape != (lam.K, lam.n):
        raise ShapeMismatchError(f"phi must be {(lam.K, lam.n)}, got {phi.shape}")
    return proj_kernel(lam.synthesis) @ phi


def construct_gamma(lam: GFrame, symbol: Symbol, t, phi=None) -> GFrame:
    """The sequence ``G_i = u_i^{-1} (L_i S^{-1} T + pi_i Phi)``.

    ``phi`` is projected onto ``ker(T_L)`` first, which makes
    ``M(L, U, G) = T`` hold for every input.
    """
    require_frame(lam, "Lambda")
    _check_symbol(lam, symbol)
    uinv = invert(symbol)
    t = as_cmatrix(t, "T")
    if t.shape != (lam.n, lam.n):
        raise ShapeMismatchError(f"T must be {(lam.n, lam.n)}, got {t.shape}")
    inv(t, "T")
    s = frame_operator(lam)
    u_gamma = lam.analysis @ np.linalg.solve(s, t) + _project_phi(lam, phi)
    return GFrame.from_analysis(as_operator(uinv) @ u_gamma, lam.layout)


def minimal_norm_gamma(lam: GFrame, symbol: Symbol, t) -> GFrame:
    """``construct_gamma`` with ``Phi = 0``: ``{u_i G_i}`` has the least analysis norm."""
    return construct_gamma(lam, symbol, t, None)


def minimal_norm_ratio(lam: GFrame, symbol: Symbol, t) -> float:
    """``||T_{UG0}^*||^2 * A_L * ||T^{-1}||^2`` for the minimal-norm ``G0``.

    Always ``>= 1``; equal to one when ``T T^*`` is a multiple of the identity.
    """
    g0 = minimal_norm_gamma(lam, symbol, t)
    ug = as_operator(symbol) @ g0.analysis
    a = frame_bounds(lam).lower
    return op_norm(ug) ** 2 * a * op_norm(inv(t, "T")) ** 2


def extract_phi(lam: GFrame, symbol: Symbol, gam: GFrame, m=None) -> np.ndarray:
    """``Phi = U T_G^* - T_L^* S_L^{-1} M``; lies in ``ker(T_L)`` when ``M = T_L U T_G^*``."""
    m = multiplier_matrix(lam, symbol, gam) if m is None else as_cmatrix(m, "M")
    s = frame_operator(lam)
    return as_operator(symbol) @ gam.analysis - lam.analysis @ np.linalg.solve(s, m)


def construct_lambda(gam: GFrame, symbol: Symbol, psi, t1, t2) -> GFrame:
    """``T_L = T1 (M_GG^{-1} T_G + T2^{-1} Psi (Id - U T_G^* M_GG^{-1} T_G))``.

    ``M_GG = M(G, U, G)``; it is invertible because it equals the frame
    operator of ``{v_i G_i}`` where ``u_i = v_i^* v_i``.  ``psi`` maps the
    stacked space into ``C^n`` (shape ``n x K``).
    """
    require_frame(gam, "Gamma")
    _check_symbol(gam, symbol)
    v = factor_positive(symbol)
    if not frame_bounds(v.apply(gam)).is_frame:
        raise SingularFrameError("{v_i Gamma_i} is not a g-frame")
    n, K = gam.n, gam.K
    psi = np.zeros((n, K), dtype=complex) if psi is None else as_cmatrix(psi, "psi")
    if psi.shape != (n, K):
        raise ShapeMismatchError(f"psi must be {(n, K)}, got {psi.shape}")
    t1 = as_cmatrix(t1, "T1")
    t2 = as_cmatrix(t2, "T2")
    inv(t1, "T1")
    t2inv = inv(t2, "T2")
    u = as_operator(symbol)
    tg = gam.synthesis
    mgg = tg @ u @ gam.analysis
    mgg_inv_tg = np.linalg.solve(mgg, tg)
    t_lam = t1 @ (mgg_inv_tg + t2inv @ psi @ (np.eye(K) - u @ gam.analysis @ mgg_inv_tg))
    return GFrame.from_analysis(adjoint(t_lam), gam.layout)


@dataclass(frozen=True)
class ExcessComparison:
    match: bool
    excess_lambda: int
    excess_gamma: int

    def __bool__(self):
        return self.match


def excess_match(lam: GFrame, gam: GFrame) -> ExcessComparison:
    check_compatible(lam, gam)
    el, eg = excess(lam), excess(gam)
    return ExcessComparison(el == eg, el, eg)


def _require_riesz(frame: GFrame, name: str):
    fb = frame_bounds(frame)
    if not fb.is_riesz:
        raise NotRieszError(f"{name} is not a g-Riesz basis ({fb.classification})")
    return fb


def riesz_inverse(lam: GFrame, symbol: Symbol, gam: GFrame) -> np.ndarray:
    """``M(L, U, G)^{-1}`` written as ``M(G~, U^{-1}, L~)``."""
    _require_riesz(lam, "Lambda")
    _require_riesz(gam, "Gamma")
    _check_symbol(lam, symbol)
    return multiplier_matrix(canonical_dual(gam), invert(symbol), canonical_dual(lam))


@dataclass(frozen=True, eq=False)
class RecoveredSymbol:
    matrix: np.ndarray
    symbol: Symbol
    off_block_residual: float


def recover_symbol(lam: GFrame, gam: GFrame, m) -> RecoveredSymbol:
    """Solve ``M = T_L U T_G^*`` for ``U`` on a g-Riesz pair.

    The full ``K x K`` solution is returned together with its block-diagonal
    part and the spectral norm of what lies off the diagonal blocks.
    """
    _require_riesz(lam, "Lambda")
    _require_riesz(gam, "Gamma")
    check_compatible(lam, gam)
    m = as_cmatrix(m, "M")
    if m.shape != (lam.n, lam.n):
        raise ShapeMismatchError(f"M must be {(lam.n, lam.n)}, got {m.shape}")
    # U = T_L^{-1} M (T_G^*)^{-1}
    u = np.linalg.solve(lam.synthesis, m)
    u = adjoint(np.linalg.solve(adjoint(gam.analysis), adjoint(u)))
    layout = lam.layout
    blocks = tuple(u[layout.block_slice(i), layout.block_slice(i)] for i in range(layout.m))
    symbol = Symbol(blocks)
    off = float(np.linalg.norm(u - as_operator(symbol), 2))
    return RecoveredSymbol(u, symbol, off)


@dataclass(frozen=True)
class NormBracket:
    lower: float
    upper: float
    norm: float

    def holds(self, slack: float = 1e-9) -> bool:
        return self.lower - slack <= self.norm <= self.upper + slack


def norm_bracket(lam: GFrame, symbol: Symbol, gam: GFrame, _m=None) -> NormBracket:
    """``column_sup(U) sqrt(A_L A_G) <= ||M|| <= sqrt(B_L B_G) ||U||`` on g-Riesz pairs."""
    fl = _require_riesz(lam, "Lambda")
    fg = _require_riesz(gam, "Gamma")
    m = multiplier_matrix(lam, symbol, gam) if _m is None else _m
    lower = column_sup(symbol) * np.sqrt(fl.lower * fg.lower)
    upper = np.sqrt(fl.upper * fg.upper) * op_norm(as_operator(symbol))
    return NormBracket(float(lower), float(upper), op_norm(m))
