"""Invariant suite run by ``gmult verify``.

Each check is a measured quantity compared against a bound; all bounds
are scaled by the relevant condition numbers so that the suite is
meaningful across the random instances it is designed for (``n <= 8``,
``m <= 6``, ``k_i <= 4``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmult import dualizer, gframe, multiplier, opspace, perturb
from gmult import symbol as sym
from gmult.errors import GMultError
from gmult.gframe import GFrame
from gmult.opspace import adjoint, op_norm
from gmult.symbol import Symbol, as_operator

__all__ = ["Check", "run_invariants", "random_instance"]


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    bound: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "measured": self.measured, "bound": self.bound, "pass": self.passed}


class _Recorder:
    def __init__(self):
        self.checks: list[Check] = []

    def le(self, name, measured, bound):
        measured, bound = float(measured), float(bound)
        self.checks.append(Check(name, measured, bound, bool(measured <= bound)))

    def ge(self, name, measured, bound):
        measured, bound = float(measured), float(bound)
        self.checks.append(Check(name, measured, bound, bool(measured >= bound)))

    def true(self, name, ok):
        self.checks.append(Check(name, float(bool(ok)), 1.0, bool(ok)))


def _cgauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _rel(a, b):
    return op_norm(a - b) / max(op_norm(b), 1e-300)


def _opspace_checks(rec: _Recorder, lam: GFrame):
    t = lam.synthesis
    p = opspace.pinv(t)
    na, np_ = op_norm(t), op_norm(p)
    penrose = max(
        op_norm(t @ p @ t - t) / na,
        op_norm(p @ t @ p - p) / np_,
        op_norm(adjoint(t @ p) - t @ p),
        op_norm(adjoint(p @ t) - p @ t),
    )
    rec.le("opspace.penrose_identities", penrose, 1e-9)
    partition = op_norm(opspace.proj_kernel(t) + p @ t - np.eye(lam.K))
    rec.le("opspace.kernel_range_partition", partition, 1e-9)
    w, _ = opspace.herm_eig(adjoint(t) @ t)
    s = opspace.svd(t)[1]
    s2 = np.concatenate([s**2, np.zeros(lam.K - s.size)])
    rec.le("opspace.eig_equals_svd_squared", np.max(np.abs(np.sort(w) - np.sort(s2))) / s[0] ** 2, 1e-9)


def _gframe_checks(rec: _Recorder, lam: GFrame, rng):
    fb = gframe.frame_bounds(lam)
    rec.true("gframe.is_gframe", fb.is_frame)
    if not fb.is_frame:
        return False
    s = gframe.frame_operator(lam)
    kappa = opspace.cond(s)
    can = gframe.canonical_dual(lam)
    recon = op_norm(lam.synthesis @ can.analysis - np.eye(lam.n))
    rec.le("gframe.reconstruction", recon, 1e-9 * kappa)
    cb = gframe.frame_bounds(can)
    rec.le(
        "gframe.canonical_dual_bounds",
        max(abs(cb.lower * fb.upper - 1.0), abs(cb.upper * fb.lower - 1.0)),
        1e-9,
    )
    x = _cgauss(rng, (lam.n, 1000))
    x /= np.linalg.norm(x, axis=0)
    energy = np.sum(np.abs(lam.analysis @ x) ** 2, axis=0)
    rec.ge("gframe.lower_bound_respected", energy.min() - fb.lower, -1e-9 * max(1.0, fb.upper))
    rec.le("gframe.upper_bound_respected", energy.max() - fb.upper, 1e-9 * max(1.0, fb.upper))
    w, v = opspace.herm_eig(s)
    attained = np.sum(np.abs(lam.analysis @ v[:, [0, -1]]) ** 2, axis=0)
    rec.le(
        "gframe.bounds_attained",
        max(abs(attained[0] - fb.lower), abs(attained[1] - fb.upper)),
        1e-8 * max(1.0, fb.upper),
    )
    back = gframe.canonical_dual(can)
    rec.le("gframe.canonical_dual_involution", _rel(back.analysis, lam.analysis), 1e-8 * kappa**2)
    riesz = lam.K == lam.n and opspace.svd(lam.synthesis)[1][-1] > opspace.get_tolerances().rank * op_norm(s) ** 0.5
    rec.true(
        "gframe.riesz_classification",
        (fb.is_riesz == riesz) and (fb.is_riesz == (gframe.excess(lam) == 0)),
    )
    rec.true("gframe.excess_is_K_minus_n", gframe.excess(lam) == lam.K - lam.n)
    d = gframe.dual_frame(lam, _cgauss(rng, (lam.K, lam.n)))
    rec.le("gframe.random_dual_reconstruction", op_norm(lam.synthesis @ d.analysis - np.eye(lam.n)), 1e-9 * kappa)
    return True


def _symbol_checks(rec: _Recorder, u: Symbol, rng):
    sn = sym.is_semi_normalized(u)
    uop = as_operator(u)
    x = _cgauss(rng, (uop.shape[0], 1000))
    ratio = np.linalg.norm(uop @ x, axis=0) / np.linalg.norm(x, axis=0)
    if sn.ok:
        rec.ge("symbol.lower_norm_bound", ratio.min() - sn.lower, -1e-9 * sn.upper)
    rec.le("symbol.upper_norm_bound", ratio.max() - sn.upper, 1e-9 * sn.upper)
    rec.le("symbol.column_sup_below_norm", sym.column_sup(u) - op_norm(uop), 1e-12 * max(1.0, op_norm(uop)))
    psd = Symbol(tuple(adjoint(b) @ b for b in u.blocks))
    v = sym.factor_positive(psd)
    rec.le(
        "symbol.factor_positive_squares_back",
        max(_rel(adjoint(vb) @ vb, pb) for vb, pb in zip(v.blocks, psd.blocks)),
        1e-9,
    )
    if sn.ok:
        back = as_operator(sym.invert(u)) @ uop
        rec.le("symbol.invert_residual", op_norm(back - np.eye(uop.shape[0])), 1e-9 * opspace.cond(uop))
    return sn.ok


def _multiplier_checks(rec: _Recorder, lam, u, gam, rng):
    report = multiplier.assemble(lam, u, gam)
    rec.le("multiplier.assembly_consistency", report.assembly_residual, 1e-12)
    nc = multiplier.necessary_conditions(lam, u, gam, report)
    rec.true("multiplier.necessary_conditions", nc.consistent)
    uop = as_operator(u)
    scale_lu = opspace.cond(gframe.frame_operator(lam)) ** 0.5 * opspace.cond(uop)

    t = _cgauss(rng, (lam.n, lam.n))
    phi = _cgauss(rng, (lam.K, lam.n))
    g = multiplier.construct_gamma(lam, u, t, phi)
    rec.le(
        "multiplier.construct_gamma_residual",
        _rel(multiplier.multiplier_matrix(lam, u, g), t),
        1e-9 * scale_lu * opspace.cond(t),
    )
    g0 = multiplier.minimal_norm_gamma(lam, u, t)
    ug0 = uop @ g0.analysis
    ug = uop @ g.analysis
    phi_p = ug - ug0
    xs = _cgauss(rng, (lam.n, 20))
    lhs = np.linalg.norm(ug @ xs, axis=0) ** 2
    rhs = np.linalg.norm(ug0 @ xs, axis=0) ** 2 + np.linalg.norm(phi_p @ xs, axis=0) ** 2
    rec.le("multiplier.pythagorean_identity", np.max(np.abs(lhs - rhs) / rhs), 1e-8)
    fl = gframe.frame_bounds(lam)
    g_id = multiplier.minimal_norm_gamma(lam, u, np.eye(lam.n))
    rec.le(
        "multiplier.minimal_norm_identity_T",
        abs(op_norm(uop @ g_id.analysis) ** 2 * fl.lower - 1.0),
        1e-8,
    )

    if report.invertible:
        m_inv = opspace.inv(report.M)
        phi_x = multiplier.extract_phi(lam, u, gam, report.M)
        rec.le(
            "multiplier.phi_in_kernel",
            op_norm(lam.synthesis @ phi_x),
            1e-9 * max(1.0, op_norm(lam.synthesis) * op_norm(uop @ gam.analysis)),
        )
        rebuilt = multiplier.construct_gamma(lam, u, report.M, phi_x)
        rec.le("multiplier.phi_reconstructs_gamma", _rel(rebuilt.analysis, gam.analysis), 1e-8 * scale_lu)
        lower = op_norm(uop @ gam.analysis) ** 2 * op_norm(m_inv) ** 2 * fl.lower
        rec.ge("multiplier.minimal_norm_lower_bound", lower, 1.0 - 1e-8)

    psd = Symbol(tuple(adjoint(b) @ b for b in u.blocks))
    v = sym.factor_positive(psd)
    if gframe.frame_bounds(v.apply(gam)).is_frame:
        t1, t2 = _cgauss(rng, (lam.n, lam.n)), _cgauss(rng, (lam.n, lam.n))
        psi = _cgauss(rng, (lam.n, lam.K))
        new = multiplier.construct_lambda(gam, psd, psi, t1, t2)
        rec.le(
            "multiplier.construct_lambda_residual",
            _rel(multiplier.multiplier_matrix(new, psd, gam), t1),
            1e-8 * opspace.cond(t1) * opspace.cond(t2) * opspace.cond(gframe.frame_operator(v.apply(gam))),
        )
        rec.le(
            "multiplier.psd_symbol_frame_operator",
            _rel(multiplier.multiplier_matrix(gam, psd, gam), gframe.frame_operator(v.apply(gam))),
            1e-9,
        )

    fg = gframe.frame_bounds(gam)
    if fl.is_riesz and sym.is_semi_normalized(u).ok:
        rec.true("multiplier.riesz_invertibility_iff", report.invertible == fg.is_riesz)
        broken = GFrame((np.zeros_like(gam.blocks[0]), *gam.blocks[1:]))
        rec.true("multiplier.riesz_deficient_gamma_singular", not multiplier.assemble(lam, u, broken).invertible)
    if fl.is_riesz and fg.is_riesz and sym.is_semi_normalized(u).ok:
        r_inv = multiplier.riesz_inverse(lam, u, gam)
        rec.le("multiplier.riesz_inverse", op_norm(r_inv @ report.M - np.eye(lam.n)), 1e-8 * report.cond)
        br = multiplier.norm_bracket(lam, u, gam)
        rec.true("multiplier.norm_bracket", br.holds(1e-9))
        rs = multiplier.recover_symbol(lam, gam, report.M)
        tol = 1e-8 * opspace.cond(lam.synthesis) * opspace.cond(gam.synthesis) * max(1.0, op_norm(uop))
        rec.le("multiplier.symbol_recovery", op_norm(rs.matrix - uop), tol)
        rec.le("multiplier.symbol_off_block", rs.off_block_residual, tol)
    return report


def _dualizer_checks(rec: _Recorder, lam, u, gam, report, seed, trials):
    d = dualizer.gamma_dagger(lam, u, gam, seed=seed)
    kappa_m = report.cond
    kappa_sg = opspace.cond(gframe.frame_operator(gam))
    rec.le("dualizer.duality", d.duality_residual, 1e-8 * kappa_m * kappa_sg)
    rec.le(
        "dualizer.representation",
        d.representation_residual,
        1e-8 * kappa_m * max(1.0, op_norm(d.m_inv)),
    )
    rec.le(
        "dualizer.decomposition",
        d.decomposition_residual,
        1e-9 * max(1.0, op_norm(gam.synthesis) * op_norm(d.gamma_dagger.analysis)),
    )
    rec.true("dualizer.sandwich", d.sandwich_holds(1e-9))
    rec.true("dualizer.uniqueness", dualizer.verify_uniqueness(lam, u, gam, d, trials=trials, seed=seed))


def _perturb_checks(rec: _Recorder, lam, u, gam, rng, seed):
    fl = gframe.frame_bounds(lam)
    mu = 0.5 * np.sqrt(fl.lower)
    lp = perturb.random_perturbation(lam, mu, seed)
    rec.le("perturb.distance_matches_target", abs(perturb.perturbation_distance(lam, lp) - mu) / mu, 1e-6)
    pr = perturb.transfer_gamma(lam, u, gam, lp)
    m = multiplier.multiplier_matrix(lam, u, gam)
    rec.le(
        "perturb.multiplier_preserved",
        pr.multiplier_residual,
        1e-8 * max(1.0, op_norm(m)) * opspace.cond(gframe.frame_operator(lp)),
    )
    rec.le("perturb.transfer_distance", pr.transfer_distance, pr.bound + 1e-10)
    rec.le(
        "perturb.adjoint_identity",
        pr.identity_residual,
        1e-9 * max(1.0, pr.transfer_distance),
    )
    rec.ge("perturb.perturbed_lower_bound", pr.measured_lower - pr.guaranteed_lower, -1e-9)

    ld = gframe.dual_frame(lam, _cgauss(rng, (lam.K, lam.n)))
    g = perturb.gamma_with_mu(lam, ld, u, 0.5, seed)
    sr = perturb.sufficient_condition(lam, ld, g, u)
    for name, ok in sr.checks().items():
        rec.true(f"perturb.sufficient.{name}", ok)


def run_invariants(lam: GFrame, gam: GFrame | None = None, u: Symbol | None = None, seed: int = 0, trials: int = 10):
    """Run every applicable invariant on one instance and return the checks."""
    gam = lam if gam is None else gam
    u = Symbol.identity(lam.layout) if u is None else u
    rng = np.random.default_rng(seed)
    rec = _Recorder()
    try:
        _opspace_checks(rec, lam)
        if not _gframe_checks(rec, lam, rng):
            return rec.checks
        semi = _symbol_checks(rec, u, rng)
        if not semi:
            return rec.checks
        report = _multiplier_checks(rec, lam, u, gam, rng)
        if report.invertible and gframe.frame_bounds(gam).is_frame:
            _dualizer_checks(rec, lam, u, gam, report, seed, trials)
        if gframe.frame_bounds(gam).is_frame:
            _perturb_checks(rec, lam, u, gam, rng, seed)
    except GMultError as exc:
        rec.checks.append(Check(f"error.{type(exc).__name__}", 1.0, 0.0, False))
    return rec.checks


def random_instance(rng: np.random.Generator, max_n: int = 6, condition_cap: float = 50.0):
    """Random ``(Lambda, Gamma, U)``; roughly a third are g-Riesz pairs."""
    n = int(rng.integers(2, max_n + 1))
    if rng.uniform() < 1 / 3:
        sizes = []
        left = n
        while left:
            k = int(rng.integers(1, min(4, left) + 1))
            sizes.append(k)
            left -= k
    else:
        while True:
            m = int(rng.integers(1, 7))
            sizes = [int(k) for k in rng.integers(1, 5, size=m)]
            if sum(sizes) > n:
                break
    layout = opspace.SpaceLayout(sizes)
    seeds = rng.integers(0, 2**31, size=3)
    lam = gframe.random_gframe(n, layout, condition_cap, int(seeds[0]))
    gam = gframe.random_gframe(n, layout, condition_cap, int(seeds[1]))
    kind = ["general", "weights", "unitary", "psd"][int(rng.integers(0, 4))]
    u = sym.random_symbol(layout, int(seeds[2]), kind=kind)
    return lam, gam, u
