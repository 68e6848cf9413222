"""Representing ``M^{-1}`` as a multiplier with the reciprocal symbol.

For invertible ``M = M(L, U, G)`` the sequence ``G+_i = u_i^* L_i M^{-*}``
is a dual of ``G`` and ``M^{-1} = M(G+, U^{-1}, Ld)`` for every dual ``Ld``
of ``L``.  No other dual of ``G`` has this property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmult.errors import SingularOperatorError
from gmult.gframe import (
    GFrame,
    canonical_dual,
    dual_frame,
    frame_operator,
    is_dual_pair,
    require_frame,
)
from gmult.multiplier import assemble, multiplier_matrix
from gmult.opspace import adjoint, herm_eig, inv, op_norm, proj_kernel
from gmult.symbol import Symbol, as_operator, invert, require_semi_normalized

__all__ = [
    "DualReport",
    "gamma_dagger",
    "canonical_inverse_diagnostics",
    "representation_residual",
    "random_duals",
    "uniqueness_margins",
    "verify_uniqueness",
    "q_equivalence_residual",
]

EXPOSURE_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class DualReport:
    gamma_dagger: GFrame
    psi: np.ndarray
    psi_norm: float
    upper_opt_dagger: float
    inv_lower_gamma: float
    canonical_flag: bool
    m_inv: np.ndarray
    duality_residual: float
    representation_residual: float
    decomposition_residual: float

    @property
    def sandwich_lower(self) -> float:
        return self.inv_lower_gamma

    @property
    def sandwich_upper(self) -> float:
        return self.inv_lower_gamma + self.psi_norm**2

    def sandwich_holds(self, slack: float = 1e-9) -> bool:
        scale = max(1.0, self.sandwich_upper)
        return (
            self.sandwich_lower - slack * scale
            <= self.upper_opt_dagger
            <= self.sandwich_upper + slack * scale
        )


def random_duals(lam: GFrame, count: int, seed=None) -> list[GFrame]:
    """``count`` random duals ``L~ + pi Psi`` with ``Psi`` of the canonical dual's scale."""
    rng = np.random.default_rng(seed)
    can = canonical_dual(lam)
    scale = op_norm(can.analysis)
    out = []
    for _ in range(count):
        z = rng.standard_normal((lam.K, lam.n)) + 1j * rng.standard_normal((lam.K, lam.n))
        out.append(dual_frame(lam, scale * z / np.linalg.norm(z, 2)))
    return out


def representation_residual(m_inv, dagger: GFrame, symbol: Symbol, dual: GFrame) -> float:
    """``||M^{-1} - M(G+, U^{-1}, Ld)||``."""
    return float(np.linalg.norm(m_inv - multiplier_matrix(dagger, invert(symbol), dual), 2))


def gamma_dagger(lam: GFrame, symbol: Symbol, gam: GFrame, n_duals: int = 10, seed=0) -> DualReport:
    """Build ``G+`` and measure duality, representation and decomposition residuals.

    The representation residual is the largest over the canonical dual of
    ``L`` and ``n_duals`` random duals.
    """
    require_semi_normalized(symbol)
    report = assemble(lam, symbol, gam)
    if not report.invertible:
        raise SingularOperatorError(
            f"multiplier is not invertible (sigma_min {report.sigma_min:.3e}, sigma_max {report.sigma_max:.3e})"
        )
    m_inv = inv(report.M, "M")
    dagger = GFrame.from_analysis(
        as_operator(symbol.adjoint()) @ lam.analysis @ adjoint(m_inv), lam.layout
    )
    duality = is_dual_pair(gam, dagger).residual

    duals = [canonical_dual(lam), *random_duals(lam, n_duals, seed)]
    rep = max(representation_residual(m_inv, dagger, symbol, d) for d in duals)

    fg = require_frame(gam, "Gamma")
    can_g = canonical_dual(gam)
    psi = dagger.analysis - can_g.analysis
    psi_norm = op_norm(psi)
    decomposition = op_norm(gam.synthesis @ psi)
    upper_dagger = float(herm_eig(frame_operator(dagger))[0][-1])
    return DualReport(
        gamma_dagger=dagger,
        psi=psi,
        psi_norm=psi_norm,
        upper_opt_dagger=upper_dagger,
        inv_lower_gamma=1.0 / fg.lower,
        canonical_flag=psi_norm <= 1e-8 * op_norm(can_g.analysis),
        m_inv=m_inv,
        duality_residual=duality,
        representation_residual=rep,
        decomposition_residual=decomposition,
    )


def canonical_inverse_diagnostics(lam: GFrame, symbol: Symbol, gam: GFrame, seed=0) -> DualReport:
    """Same report; callers read ``psi``, the sandwich and ``canonical_flag``.

    ``S_{G+} = S_G^{-1} + psi^* psi`` with both terms positive, so the
    largest eigenvalue of ``S_{G+}`` sits between ``1/A_G`` and
    ``1/A_G + ||psi||^2``; ``psi = 0`` exactly when ``G+`` is the
    canonical dual of ``G``.
    """
    return gamma_dagger(lam, symbol, gam, seed=seed)


def uniqueness_margins(
    lam: GFrame,
    symbol: Symbol,
    gam: GFrame,
    report: DualReport,
    trials: int = 50,
    seed=0,
    n_duals: int = 10,
    min_size: float = 1e-4,
) -> np.ndarray:
    """Exposure margin of each competing dual of ``G``.

    A competitor is ``G+ + P_ker(T_G) R`` with perturbation norm at least
    ``min_size``; its margin is the largest ``||M^{-1} - M(competitor, U^{-1}, Ld)||``
    over the canonical dual and ``n_duals`` random duals ``Ld`` of ``L``.
    An empty array means ``G`` has no other duals.
    """
    p = proj_kernel(gam.synthesis)
    if np.linalg.norm(p) == 0.0:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    duals = [canonical_dual(lam), *random_duals(lam, n_duals, rng)]
    margins = np.empty(trials)
    for t in range(trials):
        z = rng.standard_normal((gam.K, gam.n)) + 1j * rng.standard_normal((gam.K, gam.n))
        pz = p @ z
        size = min_size * 10.0 ** rng.uniform(0.0, 4.0)
        pert = size * pz / np.linalg.norm(pz, 2)
        competitor = GFrame.from_analysis(report.gamma_dagger.analysis + pert, gam.layout)
        margins[t] = max(representation_residual(report.m_inv, competitor, symbol, d) for d in duals)
    return margins


def verify_uniqueness(lam, symbol, gam, report: DualReport, trials: int = 50, seed=0) -> bool:
    """True iff every sampled competitor is exposed by some dual of ``L``."""
    margins = uniqueness_margins(lam, symbol, gam, report, trials=trials, seed=seed)
    return bool(np.all(margins > EXPOSURE_MARGIN))


def q_equivalence_residual(lam: GFrame, symbol: Symbol, gam: GFrame) -> float:
    """Relative distance of ``{u_i G_i}`` from ``{L_i S_L^{-1} Q}`` with ``Q = M(L, U, G)``."""
    m = multiplier_matrix(lam, symbol, gam)
    ug = as_operator(symbol) @ gam.analysis
    target = lam.analysis @ np.linalg.solve(frame_operator(lam), m)
    return op_norm(ug - target) / max(op_norm(ug), 1e-300)
