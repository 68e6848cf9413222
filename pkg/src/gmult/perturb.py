"""Perturbations of the analysis frame that keep a multiplier fixed.

If ``L'`` is close to ``L`` (``||T_L - T_L'|| = mu < sqrt(A_L)``) one can
move ``G`` to ``G'`` so that ``M(L', U, G') = M(L, U, G)`` while
``||T_G' - T_G|| <= lam * mu``.  The module also covers the sufficient
invertibility test built from blockwise deviations of ``u_i^* G_i`` from
``L_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmult.errors import ConditionNotMetError, PerturbationTooLargeError, ShapeMismatchError
from gmult.gframe import (
    GFrame,
    canonical_dual,
    check_compatible,
    excess,
    frame_bounds,
    frame_operator,
    require_dual,
    require_frame,
)
from gmult.multiplier import multiplier_matrix
from gmult.opspace import adjoint, op_norm, proj_kernel, svd
from gmult.symbol import Symbol, as_operator, invert, require_semi_normalized

__all__ = [
    "perturbation_distance",
    "perturbed_lower_bound",
    "PerturbReport",
    "transfer_gamma",
    "BestApproxRecord",
    "best_approx_check",
    "SufficiencyReport",
    "sufficient_condition",
    "random_perturbation",
    "gamma_with_mu",
]


def perturbation_distance(lam: GFrame, lam_prime: GFrame) -> float:
    """``||T_L - T_L'||``, the smallest ``mu`` for which ``L'`` is a ``mu``-perturbation."""
    check_compatible(lam, lam_prime)
    return op_norm(lam.synthesis - lam_prime.synthesis)


def perturbed_lower_bound(lower: float, mu: float) -> float:
    """Guaranteed lower frame bound ``(sqrt(A) - mu)^2`` of a ``mu``-perturbation."""
    limit = float(np.sqrt(lower))
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    if mu >= limit:
        raise PerturbationTooLargeError(f"mu = {mu:.6g} is not below sqrt(A) = {limit:.6g}", mu, limit)
    return (limit - mu) ** 2


@dataclass(frozen=True, eq=False)
class PerturbReport:
    mu: float
    lambda_const: float
    gamma_prime: GFrame
    multiplier_residual: float
    transfer_distance: float
    identity_residual: float
    guaranteed_lower: float
    measured_lower: float
    a: float
    b: float

    @property
    def bound(self) -> float:
        return self.lambda_const * self.mu

    def distance_ok(self, slack: float = 1e-10) -> bool:
        return self.transfer_distance <= self.bound + slack


def transfer_gamma(lam: GFrame, symbol: Symbol, gam: GFrame, lam_prime: GFrame) -> PerturbReport:
    """Move ``G`` to ``G'`` so that the multiplier survives replacing ``L`` by ``L'``.

    ``T_G'^* = T_G^* + U^{-1} T_L'^* S_L'^{-1} (T_L - T_L') U T_G^*``.
    """
    check_compatible(lam, gam, lam_prime)
    fl = require_frame(lam, "Lambda")
    fg = require_frame(gam, "Gamma")
    sn = require_semi_normalized(symbol)
    mu = perturbation_distance(lam, lam_prime)
    guaranteed = perturbed_lower_bound(fl.lower, mu)

    u = as_operator(symbol)
    uinv = as_operator(invert(symbol))
    s_prime = frame_operator(lam_prime)
    diff = lam.synthesis - lam_prime.synthesis
    delta = uinv @ lam_prime.analysis @ np.linalg.solve(s_prime, diff @ u @ gam.analysis)
    gamma_prime = GFrame.from_analysis(gam.analysis + delta, lam.layout)

    m = multiplier_matrix(lam, symbol, gam)
    m_prime = multiplier_matrix(lam_prime, symbol, gamma_prime)
    # right-hand side of the adjoint identity, built from the canonical dual of L'
    dual_prime = canonical_dual(lam_prime)
    rhs = gam.synthesis @ adjoint(u) @ adjoint(diff) @ dual_prime.synthesis @ adjoint(uinv)
    identity_residual = op_norm((gamma_prime.synthesis - gam.synthesis) - rhs)

    a, b = sn.lower, sn.upper
    lam_const = b * np.sqrt(fg.upper) / (a * (np.sqrt(fl.lower) - mu))
    return PerturbReport(
        mu=mu,
        lambda_const=float(lam_const),
        gamma_prime=gamma_prime,
        multiplier_residual=op_norm(m_prime - m),
        transfer_distance=op_norm(gamma_prime.synthesis - gam.synthesis),
        identity_residual=identity_residual,
        guaranteed_lower=guaranteed,
        measured_lower=frame_bounds(lam_prime).lower,
        a=a,
        b=b,
    )


@dataclass(frozen=True)
class BestApproxRecord:
    margin: float
    trials: int
    asserted: bool

    @property
    def holds(self) -> bool:
        """Minimality verdict; always true when the check is report-only."""
        return (not self.asserted) or self.margin >= -1e-10


def _is_unitary_symbol(symbol: Symbol, tol: float = 1e-10) -> bool:
    return all(np.allclose(adjoint(u) @ u, np.eye(u.shape[0]), rtol=0.0, atol=tol) for u in symbol.blocks)


def best_approx_check(
    lam: GFrame,
    symbol: Symbol,
    gam: GFrame,
    lam_prime: GFrame,
    report: PerturbReport,
    trials: int = 200,
    seed=0,
) -> BestApproxRecord:
    """Compare ``G'`` with random ``G''`` that also keep the multiplier.

    ``G''`` adds to ``T_G'^*`` a random matrix with range in
    ``ker(T_L' U)``.  The margin is the minimum over samples of
    ``||T_G'' - T_G|| - ||T_G' - T_G||``; it is asserted nonnegative only
    for unitary symbol blocks.
    """
    u = as_operator(symbol)
    asserted = _is_unitary_symbol(symbol)
    if excess(lam_prime) == 0:
        return BestApproxRecord(float("inf"), 0, asserted)
    p = proj_kernel(lam_prime.synthesis @ u)
    rng = np.random.default_rng(seed)
    base = gam.analysis
    d_prime = report.gamma_prime.analysis - base
    dist_prime = op_norm(d_prime)
    scale = max(dist_prime, 1e-3 * op_norm(base))
    margin = float("inf")
    for _ in range(trials):
        z = rng.standard_normal((gam.K, gam.n)) + 1j * rng.standard_normal((gam.K, gam.n))
        pz = p @ z
        nz = np.linalg.norm(pz, 2)
        if nz == 0.0:
            continue
        pz *= scale * 10.0 ** rng.uniform(-3.0, 1.0) / nz
        margin = min(margin, op_norm(d_prime + pz) - dist_prime)
    return BestApproxRecord(margin, trials, asserted)


@dataclass(frozen=True, eq=False)
class SufficiencyReport:
    lambda_sum: float
    mu_sum: float
    invertible: bool
    inv_norm_lo: float
    inv_norm_hi: float
    gamma_lower: float
    gamma_upper: float
    M: np.ndarray | None = None
    singular_values: np.ndarray | None = None
    measured_gamma_lower: float | None = None
    measured_gamma_upper: float | None = None

    def checks(self, slack: float = 1e-9) -> dict[str, bool]:
        s = self.singular_values
        mu = self.mu_sum
        inv_s = 1.0 / s
        return {
            "singular_values_in_band": bool(np.all(s >= 1 - mu - slack) and np.all(s <= 1 + mu + slack)),
            "inverse_norm_upper": bool(inv_s.max() <= self.inv_norm_hi + slack),
            "inverse_norm_lower": bool(inv_s.min() >= self.inv_norm_lo - slack),
            "gamma_lower_bound": bool(self.measured_gamma_lower >= self.gamma_lower - slack),
            "gamma_upper_bound": bool(self.measured_gamma_upper <= self.gamma_upper + slack),
        }


def sufficient_condition(lam: GFrame, lam_dual: GFrame, gam: GFrame, symbol: Symbol) -> SufficiencyReport:
    """Test ``mu = sum ||L_i - u_i^* G_i|| ||Ld_i|| < 1`` and fill in the guaranteed brackets.

    With ``M = M(G, U, Ld)`` one has ``||Id - M|| <= mu``; hence ``M`` is
    invertible with ``1/(1+mu) <= ||M^{-1} x|| / ||x|| <= 1/(1-mu)``, and ``G``
    is a g-frame with bounds ``(1-mu)^2 / (||U||^2 B_Ld)`` and
    ``(sqrt(B_L) + sqrt(lambda))^2`` where ``lambda = sum ||L_i - G_i||^2``.
    Raises :class:`ConditionNotMetError` (carrying the report) when ``mu >= 1``.
    """
    check_compatible(lam, lam_dual, gam)
    if symbol.layout != lam.layout:
        raise ShapeMismatchError("symbol layout does not match the frames")
    fl = require_frame(lam, "Lambda")
    require_dual(lam, lam_dual)
    lam_sum = sum(op_norm(li - gi) ** 2 for li, gi in zip(lam.blocks, gam.blocks))
    mu = sum(
        op_norm(li - adjoint(ui) @ gi) * op_norm(di)
        for li, ui, gi, di in zip(lam.blocks, symbol.blocks, gam.blocks, lam_dual.blocks)
    )
    u_norm = op_norm(as_operator(symbol))
    b_dual = frame_bounds(lam_dual).upper
    upper = (np.sqrt(fl.upper) + np.sqrt(lam_sum)) ** 2
    if mu >= 1.0:
        partial = SufficiencyReport(lam_sum, mu, False, 1.0 / (1.0 + mu), float("inf"), 0.0, upper)
        raise ConditionNotMetError(f"mu = {mu:.6g} is not below 1", partial)
    m = multiplier_matrix(gam, symbol, lam_dual)
    fgam = frame_bounds(gam)
    return SufficiencyReport(
        lambda_sum=float(lam_sum),
        mu_sum=float(mu),
        invertible=True,
        inv_norm_lo=1.0 / (1.0 + mu),
        inv_norm_hi=1.0 / (1.0 - mu),
        gamma_lower=float((1.0 - mu) ** 2 / (u_norm**2 * b_dual)),
        gamma_upper=float(upper),
        M=m,
        singular_values=svd(m)[1],
        measured_gamma_lower=fgam.lower,
        measured_gamma_upper=fgam.upper,
    )


def random_perturbation(lam: GFrame, target_mu: float, seed=None) -> GFrame:
    """``L'`` with ``||T_L - T_L'||`` equal to ``target_mu`` (random direction)."""
    if target_mu < 0:
        raise ValueError(f"target_mu must be nonnegative, got {target_mu}")
    if target_mu == 0:
        return GFrame(lam.blocks)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((lam.K, lam.n)) + 1j * rng.standard_normal((lam.K, lam.n))
    z *= target_mu / np.linalg.norm(z, 2)
    return GFrame.from_analysis(lam.analysis + z, lam.layout)


def gamma_with_mu(lam: GFrame, lam_dual: GFrame, symbol: Symbol, target_mu: float, seed=None) -> GFrame:
    """A ``G`` whose deviation sum ``sum ||L_i - u_i^* G_i|| ||Ld_i||`` equals ``target_mu``.

    Draws random blocks ``E_i`` and sets ``G_i = u_i^{-*} (L_i - t E_i)`` with
    ``t`` chosen to hit the target exactly.
    """
    require_semi_normalized(symbol)
    rng = np.random.default_rng(seed)
    errs = []
    for li in lam.blocks:
        e = rng.standard_normal(li.shape) + 1j * rng.standard_normal(li.shape)
        errs.append(e / op_norm(e))
    weight = sum(op_norm(e) * op_norm(d) for e, d in zip(errs, lam_dual.blocks))
    t = target_mu / weight if weight > 0 else 0.0
    blocks = tuple(
        np.linalg.solve(adjoint(ui), li - t * e) for li, ui, e in zip(lam.blocks, symbol.blocks, errs)
    )
    return GFrame(blocks)
