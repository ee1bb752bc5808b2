"""Instance JSON format.

::

    {"customers": [...], "facilities": [...], "weights": [...],
     "dist": [[row per customer], ...], "numeric_mode": "f64" | "rational"}

In rational mode numbers are strings ``"p/q"`` (or plain integers).
"""

import json
import re
from fractions import Fraction
from pathlib import Path

from .core import InstanceError, MedianInstance

_RATIONAL = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+)\s*)?$")


class InstanceFormatError(InstanceError):
    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


def encode_number(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return f"{x}/1"
    return float(x)


def _parse_rational(v, field):
    if isinstance(v, bool):
        raise InstanceFormatError(f"expected 'p/q', got {v!r}", field)
    if isinstance(v, int):
        if v < 0:
            raise InstanceFormatError("negative entry", field)
        return Fraction(v)
    if not isinstance(v, str):
        raise InstanceFormatError(f"expected 'p/q' string, got {v!r}", field)
    m = _RATIONAL.match(v)
    if not m:
        raise InstanceFormatError(f"malformed rational {v!r}", field)
    q = int(m.group(2)) if m.group(2) is not None else 1
    if q < 1:
        raise InstanceFormatError(f"denominator must be >= 1 in {v!r}", field)
    return Fraction(int(m.group(1)), q)


def _parse_float(v, field):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"expected a number, got {v!r}", field)
    return float(v)


def instance_from_dict(data: dict) -> MedianInstance:
    if not isinstance(data, dict):
        raise InstanceFormatError("top level must be an object")
    for key in ("customers", "facilities", "dist"):
        if key not in data:
            raise InstanceFormatError("missing", key)
    mode = data.get("numeric_mode", "f64")
    if mode not in ("f64", "rational"):
        raise InstanceFormatError(f"unknown numeric_mode {mode!r}", "numeric_mode")
    parse = _parse_rational if mode == "rational" else _parse_float
    customers, facilities = data["customers"], data["facilities"]
    if not isinstance(customers, list):
        raise InstanceFormatError("must be a list", "customers")
    if not isinstance(facilities, list):
        raise InstanceFormatError("must be a list", "facilities")
    rows = data["dist"]
    if not isinstance(rows, list) or len(rows) != len(customers):
        raise InstanceFormatError(f"expected {len(customers)} rows", "dist")
    dist = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(facilities):
            raise InstanceFormatError(f"expected {len(facilities)} entries", f"dist[{i}]")
        dist.append([parse(v, f"dist[{i}][{j}]") for j, v in enumerate(row)])
    weights = data.get("weights")
    if weights is not None:
        if not isinstance(weights, list):
            raise InstanceFormatError("must be a list", "weights")
        weights = [parse(v, f"weights[{i}]") for i, v in enumerate(weights)]
    try:
        return MedianInstance(customers, facilities, dist, weights, mode)
    except InstanceFormatError:
        raise
    except InstanceError as exc:
        raise InstanceFormatError(str(exc)) from None


def instance_to_dict(instance: MedianInstance) -> dict:
    enc = encode_number if instance.exact else float
    out = {
        "customers": list(instance.customers),
        "facilities": list(instance.facilities),
        "dist": [[enc(x) for x in row] for row in instance.dist],
        "numeric_mode": instance.numeric_mode,
    }
    if any(w != 1 for w in instance.weights):
        out["weights"] = [enc(w) for w in instance.weights]
    return out


def loads_instance(text: str) -> MedianInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(exc.msg, line=exc.lineno) from None
    return instance_from_dict(data)


def read_instance(path) -> MedianInstance:
    return loads_instance(Path(path).read_text())


def dumps_instance(instance: MedianInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1) + "\n"


def write_instance(instance: MedianInstance, path) -> None:
    Path(path).write_text(dumps_instance(instance))
