"""JSON instance files and reports.

An instance file looks like::

    {
      "ambient_dim": 2,
      "block_sizes": [1, 1],
      "frames": {"Lambda": [[[[1, 0], [0, 0]]], [[[0, 0], [1, 0]]]]},
      "symbol": {"weights": [[2, 0], [3, 0]]},
      "operators": {"T": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]},
      "seed": 0,
      "tolerances": {"rank": 1e-10}
    }

Every complex number is a ``[re, im]`` pair and every matrix a list of
rows.  A frame is a list of blocks; the symbol is either scalar
``weights`` or square ``blocks``.  ``operators`` holds the extra inputs
of the construction commands (``T``, ``Phi``, ``Psi``, ``T1``, ``T2``).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from gmult.errors import InvalidInputError
from gmult.gframe import GFrame
from gmult.opspace import SpaceLayout
from gmult.symbol import Symbol

__all__ = [
    "Instance",
    "InstanceError",
    "parse_instance",
    "load_instance",
    "emit_instance",
    "encode_matrix",
    "encode_frame",
    "canonical_json",
    "digest",
]

OPERATOR_NAMES = ("T", "Phi", "Psi", "T1", "T2")


class InstanceError(InvalidInputError):
    """Malformed instance file; the message names the offending field."""


@dataclass(eq=False)
class Instance:
    ambient_dim: int
    block_sizes: tuple[int, ...]
    frames: dict[str, GFrame] = field(default_factory=dict)
    symbol: Symbol | None = None
    symbol_form: str = "weights"
    operators: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int | None = None
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout(self.block_sizes)

    def frame(self, name: str) -> GFrame:
        try:
            return self.frames[name]
        except KeyError:
            raise InstanceError(f"frames.{name}: missing") from None

    def require_symbol(self) -> Symbol:
        if self.symbol is None:
            raise InstanceError("symbol: missing")
        return self.symbol

    def operator(self, name: str, default=None):
        if name in self.operators:
            return self.operators[name]
        if default is None:
            raise InstanceError(f"operators.{name}: missing")
        return default


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InstanceError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise InstanceError(f"{where}: non-finite value {x!r}")
    return float(x)


def _complex(x, where) -> complex:
    if not isinstance(x, list) or len(x) != 2:
        raise InstanceError(f"{where}: expected a [re, im] pair, got {x!r}")
    return complex(_number(x[0], f"{where}[0]"), _number(x[1], f"{where}[1]"))


def _matrix(rows, where, shape=None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InstanceError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InstanceError(f"{where}[{i}]: row has {len(row)} entries, expected {width}")
        for j, x in enumerate(row):
            out[i, j] = _complex(x, f"{where}[{i}][{j}]")
    if shape is not None and out.shape != shape:
        raise InstanceError(f"{where}: shape {out.shape}, expected {shape}")
    return out


def _count(x, where) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise InstanceError(f"{where}: expected a positive integer, got {x!r}")
    return x


def parse_instance(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceError("instance: expected a JSON object")
    n = _count(data.get("ambient_dim"), "ambient_dim")
    sizes = data.get("block_sizes")
    if not isinstance(sizes, list) or not sizes:
        raise InstanceError("block_sizes: expected a non-empty list")
    sizes = tuple(_count(k, f"block_sizes[{i}]") for i, k in enumerate(sizes))
    K = sum(sizes)

    frames = {}
    raw_frames = data.get("frames", {})
    if not isinstance(raw_frames, dict):
        raise InstanceError("frames: expected an object")
    for name in sorted(raw_frames):
        blocks = raw_frames[name]
        where = f"frames.{name}"
        if not isinstance(blocks, list) or len(blocks) != len(sizes):
            raise InstanceError(f"{where}: expected {len(sizes)} blocks")
        frames[name] = GFrame(
            tuple(_matrix(b, f"{where}[{i}]", (k, n)) for i, (b, k) in enumerate(zip(blocks, sizes)))
        )

    symbol, form = None, "weights"
    raw_sym = data.get("symbol")
    if raw_sym is not None:
        if not isinstance(raw_sym, dict) or len(raw_sym) != 1 or next(iter(raw_sym)) not in ("weights", "blocks"):
            raise InstanceError('symbol: expected {"weights": [...]} or {"blocks": [...]}')
        form = next(iter(raw_sym))
        values = raw_sym[form]
        if not isinstance(values, list) or len(values) != len(sizes):
            raise InstanceError(f"symbol.{form}: expected {len(sizes)} entries")
        if form == "weights":
            w = [_complex(x, f"symbol.weights[{i}]") for i, x in enumerate(values)]
            symbol = Symbol.from_weights(w, sizes)
        else:
            symbol = Symbol(
                tuple(_matrix(b, f"symbol.blocks[{i}]", (k, k)) for i, (b, k) in enumerate(zip(values, sizes)))
            )

    shapes = {"T": (n, n), "T1": (n, n), "T2": (n, n), "Phi": (K, n), "Psi": (n, K)}
    operators = {}
    raw_ops = data.get("operators", {})
    if not isinstance(raw_ops, dict):
        raise InstanceError("operators: expected an object")
    for name in sorted(raw_ops):
        if name not in shapes:
            raise InstanceError(f"operators.{name}: unknown operator (expected one of {', '.join(OPERATOR_NAMES)})")
        operators[name] = _matrix(raw_ops[name], f"operators.{name}", shapes[name])

    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise InstanceError(f"seed: expected a nonnegative integer, got {seed!r}")
    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise InstanceError("tolerances: expected an object")
    for key in tolerances:
        if key not in ("rank", "invertibility"):
            raise InstanceError(f"tolerances.{key}: unknown tolerance")
        value = _number(tolerances[key], f"tolerances.{key}")
        if not 0.0 < value < 1.0:
            raise InstanceError(f"tolerances.{key}: must lie in (0, 1)")
    unknown = set(data) - {"ambient_dim", "block_sizes", "frames", "symbol", "operators", "seed", "tolerances"}
    if unknown:
        raise InstanceError(f"{sorted(unknown)[0]}: unknown field")
    return Instance(n, sizes, frames, symbol, form, operators, seed, dict(tolerances))


def _reject_constant(token):
    raise InstanceError(f"non-finite number {token} in JSON input")


def load_instance(text: str) -> Instance:
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_instance(data)


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def encode_frame(frame: GFrame) -> list:
    return [encode_matrix(b) for b in frame.blocks]


def emit_instance(inst: Instance) -> dict:
    out: dict = {"ambient_dim": inst.ambient_dim, "block_sizes": list(inst.block_sizes)}
    out["frames"] = {name: encode_frame(f) for name, f in sorted(inst.frames.items())}
    if inst.symbol is not None:
        weights = inst.symbol.weights() if inst.symbol_form == "weights" else None
        if weights is not None:
            out["symbol"] = {"weights": [[float(w.real), float(w.imag)] for w in weights]}
        else:
            out["symbol"] = {"blocks": [encode_matrix(u) for u in inst.symbol.blocks]}
    if inst.operators:
        out["operators"] = {k: encode_matrix(v) for k, v in sorted(inst.operators.items())}
    if inst.seed is not None:
        out["seed"] = inst.seed
    if inst.tolerances:
        out["tolerances"] = dict(sorted(inst.tolerances.items()))
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return encode_matrix(x) if x.ndim == 2 else [[float(z.real), float(z.imag)] for z in x]
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def canonical_json(obj, indent: int | None = 2) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=indent, allow_nan=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj, indent=None).encode()).hexdigest()
