import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmult.errors import (
    FactorizationError,
    NotRieszError,
    NotSemiNormalizedError,
    ShapeMismatchError,
    SingularOperatorError,
)
from gmult.gframe import GFrame, canonical_dual, excess, frame_bounds, frame_operator, random_gframe
from gmult.multiplier import (
    assemble,
    construct_gamma,
    construct_lambda,
    excess_match,
    extract_phi,
    minimal_norm_gamma,
    minimal_norm_ratio,
    multiplier_matrix,
    necessary_conditions,
    norm_bracket,
    recover_symbol,
    riesz_inverse,
)
from gmult.opspace import cond, op_norm, pinv
from gmult.symbol import Symbol, as_operator, factor_positive, random_symbol

from oracles import blockwise_sum, cgauss


def _invertible(n, rng):
    q, _ = np.linalg.qr(cgauss(rng, (n, n)))
    return q @ np.diag(np.exp(rng.uniform(-1, 1, n)))


# ---- assembly ----------------------------------------------------------------

def test_assemble_examples(ONB2, MERC, DIAG3):
    r = assemble(ONB2, Symbol.from_weights([2, 3]), ONB2)
    assert np.allclose(r.M, np.diag([2, 3]))
    assert r.invertible and r.sigma_max == pytest.approx(3) and r.sigma_min == pytest.approx(2)
    assert r.cond == pytest.approx(1.5)
    assert np.allclose(r.singular_values, [3, 2])
    r = assemble(MERC, Symbol.identity(MERC.layout), MERC)
    assert np.allclose(r.M, 1.5 * np.eye(2))
    assert r.lower_bracket is None
    u = random_symbol(DIAG3.layout, seed=3)
    r = assemble(DIAG3, u, DIAG3)
    ref = blockwise_sum(DIAG3.blocks, u.blocks, DIAG3.blocks)
    assert np.linalg.norm(r.M - ref) <= 1e-12 * max(1.0, np.linalg.norm(ref))
    assert r.assembly_residual <= 1e-12


def test_assemble_rejects_mismatched_inputs(ONB2, MERC):
    with pytest.raises(ShapeMismatchError):
        assemble(ONB2, Symbol.identity((1, 1)), MERC)
    with pytest.raises(ShapeMismatchError):
        assemble(MERC, Symbol.identity((1, 1)), MERC)


def test_singular_multiplier_is_flagged(ONB2):
    r = assemble(ONB2, Symbol.from_weights([1, 0]), ONB2)
    assert not r.invertible and r.cond == np.inf


def test_assembly_forms_agree_up_to_K_32():
    rng = np.random.default_rng(1)
    for K in (8, 16, 32):
        sizes = [4] * (K // 4)
        lam = random_gframe(8, sizes, 50, seed=int(rng.integers(1e9)))
        gam = random_gframe(8, sizes, 50, seed=int(rng.integers(1e9)))
        u = random_symbol(sizes, seed=int(rng.integers(1e9)))
        assert assemble(lam, u, gam).assembly_residual <= 1e-12


# ---- necessary conditions ----------------------------------------------------

def test_necessary_conditions_examples(ONB2):
    nc = necessary_conditions(ONB2, Symbol.from_weights([2, 3]), ONB2)
    assert nc.invertible and nc.all_frames and nc.consistent
    assert min(nc.lambda_lower, nc.gamma_lower, nc.u_gamma_lower, nc.u_star_lambda_lower) > 0
    nc = necessary_conditions(ONB2, Symbol.from_weights([1, 0]), ONB2)
    assert not nc.invertible
    assert nc.u_gamma_lower == pytest.approx(0, abs=1e-12)


def test_necessary_conditions_match_bound_oracle():
    lam = random_gframe(3, (2, 2), 20, seed=4)
    gam = random_gframe(3, (2, 2), 20, seed=5)
    u = random_symbol((2, 2), seed=6)
    nc = necessary_conditions(lam, u, gam)
    ug = GFrame(tuple(ui @ g for ui, g in zip(u.blocks, gam.blocks)))
    ul = GFrame(tuple(ui.conj().T @ li for ui, li in zip(u.blocks, lam.blocks)))
    for got, f in zip(
        (nc.lambda_lower, nc.gamma_lower, nc.u_gamma_lower, nc.u_star_lambda_lower), (lam, gam, ug, ul)
    ):
        assert got == pytest.approx(np.linalg.eigvalsh(frame_operator(f)).min(), rel=1e-9)
    assert nc.consistent


# ---- construct_gamma / minimal norm --------------------------------------------

def test_construct_gamma_examples(ONB2, MERC, DIAG3):
    g = construct_gamma(ONB2, Symbol.identity(ONB2.layout), np.eye(2))
    assert g.allclose(ONB2)
    g = construct_gamma(MERC, Symbol.identity(MERC.layout), np.eye(2))
    assert g.allclose(canonical_dual(MERC))
    assert np.allclose(assemble(MERC, Symbol.identity(MERC.layout), g).M, np.eye(2))
    rng = np.random.default_rng(8)
    u = random_symbol(DIAG3.layout, seed=8)
    t = _invertible(3, rng)
    g = construct_gamma(DIAG3, u, t, cgauss(rng, (4, 3)))
    scale = cond(DIAG3.synthesis) * cond(as_operator(u)) * op_norm(t)
    assert op_norm(assemble(DIAG3, u, g).M - t) <= 1e-9 * scale


def test_construct_gamma_errors(MERC):
    u = Symbol.identity(MERC.layout)
    with pytest.raises(SingularOperatorError):
        construct_gamma(MERC, u, np.diag([1.0, 0.0]))
    with pytest.raises(NotSemiNormalizedError):
        construct_gamma(MERC, Symbol.from_weights([1, 0, 1]), np.eye(2))
    with pytest.raises(ShapeMismatchError):
        construct_gamma(MERC, u, np.eye(2), np.zeros((2, 2)))


def test_minimal_norm_gamma_examples(ONB2):
    g0 = minimal_norm_gamma(ONB2, Symbol.from_weights([1, 1]), np.eye(2))
    assert g0.allclose(ONB2)
    assert op_norm(g0.analysis) == pytest.approx(1)
    lam = random_gframe(3, (2, 1, 2), 30, seed=12)
    u = random_symbol(lam.layout, seed=13)
    g0 = minimal_norm_gamma(lam, u, np.eye(3))
    ug0 = as_operator(u) @ g0.analysis
    assert op_norm(ug0) ** 2 == pytest.approx(1 / frame_bounds(lam).lower, rel=1e-8)
    assert minimal_norm_ratio(lam, u, np.eye(3)) == pytest.approx(1.0, rel=1e-8)


def test_minimal_norm_equality_for_scaled_unitary_targets():
    rng = np.random.default_rng(2)
    lam = random_gframe(4, (2, 2, 1), 30, seed=14)
    u = random_symbol(lam.layout, seed=15)
    q, _ = np.linalg.qr(cgauss(rng, (4, 4)))
    assert minimal_norm_ratio(lam, u, 2.5 * q) == pytest.approx(1.0, rel=1e-8)


def test_minimal_norm_equality_fails_for_generic_target():
    lam = random_gframe(3, (2, 2), 30, seed=21)
    u = Symbol.identity(lam.layout)
    ratio = minimal_norm_ratio(lam, u, frame_operator(lam))
    assert ratio > 1.0 + 1e-6


def test_minimal_norm_is_the_douglas_solution():
    lam = random_gframe(3, (2, 2), 30, seed=16)
    u = random_symbol(lam.layout, seed=17)
    t = _invertible(3, np.random.default_rng(3))
    g0 = minimal_norm_gamma(lam, u, t)
    assert np.linalg.norm(as_operator(u) @ g0.analysis - pinv(lam.synthesis) @ t) <= 1e-9 * op_norm(t) * cond(lam.synthesis)


def test_minimal_norm_beats_every_phi():
    rng = np.random.default_rng(4)
    lam = random_gframe(4, (2, 2, 2), 30, seed=18)
    u = random_symbol(lam.layout, seed=19)
    t = _invertible(4, rng)
    uop = as_operator(u)
    base = op_norm(uop @ minimal_norm_gamma(lam, u, t).analysis)
    for _ in range(100):
        g = construct_gamma(lam, u, t, cgauss(rng, (lam.K, lam.n)))
        assert base <= op_norm(uop @ g.analysis) * (1 + 1e-12)


def test_extract_phi_reproduces_gamma():
    lam = random_gframe(3, (2, 2, 1), 20, seed=30)
    gam = random_gframe(3, (2, 2, 1), 20, seed=31)
    u = random_symbol(lam.layout, seed=32)
    m = assemble(lam, u, gam).M
    phi = extract_phi(lam, u, gam)
    assert op_norm(lam.synthesis @ phi) <= 1e-9 * max(1.0, op_norm(phi))
    back = construct_gamma(lam, u, m, phi)
    assert back.allclose(gam, atol=1e-8)


# ---- construct_lambda ----------------------------------------------------------

def test_construct_lambda_examples(ONB2, MERC):
    lam = construct_lambda(ONB2, Symbol.identity(ONB2.layout), None, np.eye(2), np.eye(2))
    assert lam.allclose(ONB2)
    lam = construct_lambda(MERC, Symbol.identity(MERC.layout), None, np.eye(2), np.eye(2))
    assert lam.allclose(canonical_dual(MERC))
    assert np.allclose(assemble(lam, Symbol.identity(MERC.layout), MERC).M, np.eye(2))


def test_construct_lambda_random():
    rng = np.random.default_rng(5)
    gam = random_gframe(4, (2, 3, 1), 20, seed=40)
    u = random_symbol(gam.layout, seed=41, kind="psd")
    t1, t2 = _invertible(4, rng), _invertible(4, rng)
    psi = cgauss(rng, (4, gam.K))
    lam = construct_lambda(gam, u, psi, t1, t2)
    m = assemble(lam, u, gam).M
    scale = cond(t1) * cond(t2) * cond(gam.synthesis) ** 2 * cond(as_operator(u)) * max(1.0, op_norm(psi))
    assert op_norm(m - t1) <= 1e-8 * op_norm(t1) * scale


def test_mgg_is_frame_operator_of_root_sequence():
    gam = random_gframe(3, (2, 2), 20, seed=42)
    u = random_symbol(gam.layout, seed=43, kind="psd")
    v = factor_positive(u)
    assert np.linalg.norm(assemble(gam, u, gam).M - frame_operator(v.apply(gam))) <= 1e-9 * op_norm(frame_operator(gam)) * op_norm(as_operator(u))


def test_construct_lambda_errors(MERC):
    with pytest.raises(FactorizationError):
        construct_lambda(MERC, Symbol.from_weights([1, -1, 1]), None, np.eye(2), np.eye(2))
    with pytest.raises(SingularOperatorError):
        construct_lambda(MERC, Symbol.identity(MERC.layout), None, np.zeros((2, 2)), np.eye(2))
    with pytest.raises(ShapeMismatchError):
        construct_lambda(MERC, Symbol.identity(MERC.layout), np.zeros((3, 2)), np.eye(2), np.eye(2))


# ---- excess --------------------------------------------------------------------

def test_excess_match_examples(ONB2, MERC):
    assert excess_match(ONB2, ONB2)
    zero_row = GFrame((np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.array([[0.0, 0.0]])))
    cmp = excess_match(MERC, zero_row)
    assert cmp.excess_lambda == 1 and cmp.excess_gamma == 1
    deficient = GFrame((np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]]), np.array([[0.0, 0.0]])))
    cmp = excess_match(MERC, deficient)
    assert not cmp and (cmp.excess_lambda, cmp.excess_gamma) == (1, 2)


def test_invertible_multiplier_forces_equal_excess():
    lam = random_gframe(3, (2, 1, 2), 20, seed=50)
    gam = random_gframe(3, (2, 1, 2), 20, seed=51)
    u = random_symbol(lam.layout, seed=52)
    assert assemble(lam, u, gam).invertible
    assert excess_match(lam, gam) and excess(lam) == 2


# ---- g-Riesz pairs -------------------------------------------------------------

def test_riesz_inverse_examples(ONB2):
    inv = riesz_inverse(ONB2, Symbol.from_weights([2, 3]), ONB2)
    assert np.allclose(inv, np.diag([0.5, 1 / 3]))
    lam = random_gframe(3, (2, 1), 20, seed=60)
    u = Symbol.identity(lam.layout)
    assert np.allclose(riesz_inverse(lam, u, lam) @ frame_operator(lam), np.eye(3), atol=1e-10)


def test_riesz_inverse_random():
    lam = random_gframe(4, (2, 1, 1), 30, seed=61)
    gam = random_gframe(4, (2, 1, 1), 30, seed=62)
    u = random_symbol(lam.layout, seed=63)
    r = assemble(lam, u, gam)
    inv = riesz_inverse(lam, u, gam)
    assert op_norm(inv - np.linalg.inv(r.M)) <= 1e-8 * r.cond * op_norm(inv)
    assert op_norm(inv @ r.M - np.eye(4)) <= 1e-8 * r.cond


def test_riesz_operations_reject_redundant_frames(MERC):
    u = Symbol.identity(MERC.layout)
    with pytest.raises(NotRieszError):
        riesz_inverse(MERC, u, MERC)
    with pytest.raises(NotRieszError):
        recover_symbol(MERC, MERC, np.eye(2))
    with pytest.raises(NotRieszError):
        norm_bracket(MERC, u, MERC)


def test_recover_symbol_examples(ONB2):
    rec = recover_symbol(ONB2, ONB2, np.diag([2.0, 3.0]))
    assert np.allclose(rec.symbol.weights(), [2, 3]) and rec.off_block_residual == 0
    rec = recover_symbol(ONB2, ONB2, np.eye(2))
    assert np.allclose(as_operator(rec.symbol), np.eye(2))


def test_recover_symbol_round_trip():
    lam = random_gframe(5, (2, 2, 1), 30, seed=70)
    gam = random_gframe(5, (2, 2, 1), 30, seed=71)
    u = random_symbol(lam.layout, seed=72)
    rec = recover_symbol(lam, gam, assemble(lam, u, gam).M)
    bound = 1e-8 * cond(lam.synthesis) * cond(gam.synthesis)
    assert op_norm(rec.matrix - as_operator(u)) <= bound * op_norm(as_operator(u))
    assert rec.off_block_residual <= bound


def test_recover_symbol_reports_non_diagonal_solutions(ONB2):
    rec = recover_symbol(ONB2, ONB2, np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert rec.off_block_residual == pytest.approx(2.0)


def test_norm_bracket_examples(ONB2):
    br = norm_bracket(ONB2, Symbol.from_weights([2, 3]), ONB2)
    assert (br.lower, br.upper, br.norm) == pytest.approx((3, 3, 3))
    assert br.holds()
    br = norm_bracket(ONB2, Symbol.identity(ONB2.layout), ONB2)
    assert (br.lower, br.upper, br.norm) == pytest.approx((1, 1, 1))
    r = assemble(ONB2, Symbol.from_weights([2, 3]), ONB2)
    assert r.lower_bracket == pytest.approx(3) and r.upper_bracket == pytest.approx(3)


# ---- properties ----------------------------------------------------------------

@st.composite
def riesz_pairs(draw):
    sizes = draw(st.lists(st.integers(1, 3), min_size=1, max_size=4))
    n = sum(sizes)
    seeds = [draw(st.integers(0, 2**32 - 1)) for _ in range(3)]
    kind = draw(st.sampled_from(["general", "unitary", "psd", "weights"]))
    return (
        random_gframe(n, sizes, 30, seeds[0]),
        random_symbol(sizes, seeds[2], kind=kind),
        random_gframe(n, sizes, 30, seeds[1]),
    )


@settings(max_examples=60, deadline=None)
@given(riesz_pairs())
def test_norm_bracket_contains_norm(pair):
    lam, u, gam = pair
    assert norm_bracket(lam, u, gam).holds(1e-9)


@settings(max_examples=40, deadline=None)
@given(riesz_pairs(), st.integers(0, 2**32 - 1))
def test_symbol_to_multiplier_is_injective(pair, seed):
    lam, u1, gam = pair
    u2 = random_symbol(lam.layout, seed=seed)
    d = op_norm(multiplier_matrix(lam, u1, gam) - multiplier_matrix(lam, u2, gam))
    s_lam = np.linalg.svd(lam.synthesis, compute_uv=False)[-1]
    s_gam = np.linalg.svd(gam.synthesis, compute_uv=False)[-1]
    assert d >= s_lam * s_gam * op_norm(as_operator(u1) - as_operator(u2)) - 1e-9


@settings(max_examples=40, deadline=None)
@given(riesz_pairs(), st.booleans())
def test_riesz_invertibility_tracks_gamma(pair, degenerate):
    lam, u, gam = pair
    if degenerate and gam.n > 1:
        a = gam.analysis.copy()
        a[:, -1] = 0.0
        gam = GFrame.from_analysis(a, gam.layout)
    assert assemble(lam, u, gam).invertible == frame_bounds(gam).is_riesz


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_minimal_norm_lower_bound(seed):
    rng = np.random.default_rng(seed)
    lam = random_gframe(3, (2, 1, 2), 30, int(rng.integers(1e9)))
    gam = random_gframe(3, (2, 1, 2), 30, int(rng.integers(1e9)))
    u = random_symbol(lam.layout, int(rng.integers(1e9)))
    r = assemble(lam, u, gam)
    lhs = op_norm(as_operator(u) @ gam.analysis) ** 2 * op_norm(np.linalg.inv(r.M)) ** 2
    assert lhs >= 1 / frame_bounds(lam).lower - 1e-8 * lhs
