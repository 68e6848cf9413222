import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmult.gframe import random_gframe
from gmult.instance import (
    Instance,
    InstanceError,
    canonical_json,
    digest,
    emit_instance,
    load_instance,
    parse_instance,
)
from gmult.symbol import Symbol, random_symbol

from conftest import merc


def _merc_data():
    return emit_instance(Instance(2, (1, 1, 1), {"Lambda": merc()}, Symbol.from_weights([1, 2, 3]), "weights", {}, 4))


def test_parse_minimal_instance():
    inst = load_instance(
        json.dumps(
            {
                "ambient_dim": 2,
                "block_sizes": [1, 1],
                "frames": {"Lambda": [[[[1, 0], [0, 0]]], [[[0, 0], [1, 0]]]]},
                "symbol": {"weights": [[2, 0], [3, 0]]},
                "seed": 0,
                "tolerances": {"rank": 1e-9},
            }
        )
    )
    assert np.allclose(inst.frame("Lambda").synthesis, np.eye(2))
    assert np.allclose(inst.require_symbol().weights(), [2, 3])
    assert inst.tolerances == {"rank": 1e-9}
    assert inst.operators == {}
    with pytest.raises(InstanceError, match="operators.T"):
        inst.operator("T")
    assert np.array_equal(inst.operator("T2", np.eye(2)), np.eye(2))


def test_round_trip_is_exact():
    lam = random_gframe(3, (2, 2), 30, seed=1)
    gam = random_gframe(3, (2, 2), 30, seed=2)
    ops = {"T": np.diag([1.0, 2.0, 3.0j]), "Phi": np.ones((4, 3))}
    inst = Instance(3, (2, 2), {"Lambda": lam, "Gamma": gam}, random_symbol((2, 2), seed=3), "blocks", ops, 9)
    back = parse_instance(emit_instance(inst))
    assert np.array_equal(back.frame("Lambda").analysis, lam.analysis)
    assert np.array_equal(back.frame("Gamma").analysis, gam.analysis)
    for a, b in zip(back.symbol.blocks, inst.symbol.blocks):
        assert np.array_equal(a, b)
    assert np.array_equal(back.operator("T"), ops["T"])
    assert emit_instance(back) == emit_instance(inst)
    text = canonical_json(emit_instance(inst))
    assert canonical_json(emit_instance(load_instance(text))) == text


def test_digest_is_stable():
    assert digest(_merc_data()) == digest(json.loads(canonical_json(_merc_data())))
    other = _merc_data()
    other["seed"] = 5
    assert digest(other) != digest(_merc_data())


def test_canonical_json_encodes_infinities():
    out = json.loads(canonical_json({"a": float("inf"), "b": np.float64(-np.inf), "c": np.int64(3)}))
    assert out == {"a": "inf", "b": "-inf", "c": 3}


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.pop("ambient_dim"), "ambient_dim"),
        (lambda d: d.update(block_sizes=[]), "block_sizes"),
        (lambda d: d["frames"]["Lambda"].pop(), "frames.Lambda"),
        (lambda d: d["frames"]["Lambda"][1][0].append([0, 0]), "frames.Lambda[1]"),
        (lambda d: d.update(symbol={"weights": [[1, 0]]}), "symbol.weights"),
        (lambda d: d.update(symbol={"diag": []}), "symbol"),
        (lambda d: d.update(operators={"X": []}), "operators.X"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d.update(tolerances={"rank": 2.0}), "tolerances.rank"),
        (lambda d: d.update(extra=1), "extra"),
    ],
)
def test_parse_errors_name_the_field(mutate, where):
    data = _merc_data()
    mutate(data)
    with pytest.raises(InstanceError, match=where.replace("[", r"\[").replace("]", r"\]")):
        parse_instance(data)


def test_non_finite_input_is_rejected():
    text = canonical_json(_merc_data()).replace("0.0", "NaN", 1)
    with pytest.raises(InstanceError, match="non-finite"):
        load_instance(text)


def test_syntax_errors_report_position():
    with pytest.raises(InstanceError, match="line 2"):
        load_instance('{\n  "ambient_dim": 2,,\n}')


def test_missing_frame_and_symbol():
    inst = parse_instance({"ambient_dim": 2, "block_sizes": [1, 1]})
    with pytest.raises(InstanceError, match="frames.Gamma"):
        inst.frame("Gamma")
    with pytest.raises(InstanceError, match="symbol"):
        inst.require_symbol()


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(1, 3), min_size=1, max_size=4),
    st.integers(0, 2**32 - 1),
    st.sampled_from(["general", "weights", "unitary", "psd"]),
)
def test_round_trip_property(sizes, seed, kind):
    n = max(1, sum(sizes) - 1)
    lam = random_gframe(n, sizes, 10, seed)
    u = random_symbol(sizes, seed, kind=kind)
    form = "weights" if kind == "weights" else "blocks"
    inst = Instance(n, tuple(sizes), {"Lambda": lam}, u, form, {}, seed)
    back = load_instance(canonical_json(emit_instance(inst)))
    assert np.array_equal(back.frame("Lambda").analysis, lam.analysis)
    assert all(np.array_equal(a, b) for a, b in zip(back.symbol.blocks, u.blocks))
