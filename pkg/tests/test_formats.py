import json
from fractions import Fraction

import numpy as np
import pytest

from oblimed.core import MedianInstance
from oblimed.formats import InstanceFormatError, dumps_instance, instance_from_dict, loads_instance
from oblimed.generate import generate_random_metric


def test_rational_round_trip(kl3):
    inst = loads_instance(dumps_instance(kl3.instance))
    assert inst.facilities == kl3.instance.facilities
    assert np.array_equal(inst.dist, kl3.instance.dist)
    assert json.loads(dumps_instance(kl3.instance))["dist"][0][1] == "1/3"


def test_float_round_trip():
    inst = generate_random_metric(4, 3, seed=1, numeric_mode="f64")
    back = loads_instance(dumps_instance(inst))
    assert back.numeric_mode == "f64" and np.array_equal(back.dist, inst.dist)


def test_weights_round_trip():
    inst = MedianInstance(["a", "b"], ["f"], [[1], [2]], weights=[Fraction(1, 2), 2], numeric_mode="rational")
    back = loads_instance(dumps_instance(inst))
    assert list(back.weights) == [Fraction(1, 2), 2]


def test_plain_integers_accepted():
    inst = instance_from_dict({"customers": [0], "facilities": [0], "dist": [[3]], "numeric_mode": "rational"})
    assert inst.dist[0][0] == 3


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"customers": ["a"], "facilities": ["f"], "dist": [["1/0"]], "numeric_mode": "rational"}, "dist[0][0]"),
        ({"customers": ["a"], "facilities": ["f"], "dist": [["-1/2"]], "numeric_mode": "rational"}, "dist[0][0]"),
        ({"customers": ["a"], "facilities": ["f"], "dist": [[0.5]], "numeric_mode": "rational"}, "dist[0][0]"),
        ({"customers": ["a"], "facilities": ["f", "g"], "dist": [["1"]], "numeric_mode": "rational"}, "dist[0]"),
        ({"customers": ["a"], "facilities": ["f"], "dist": [["x"]]}, "dist[0][0]"),
        ({"customers": ["a"], "facilities": ["f"]}, "dist"),
        ({"customers": ["a"], "facilities": ["f"], "dist": [[1]], "numeric_mode": "dec"}, "numeric_mode"),
        ({"customers": ["a"], "facilities": ["f"], "dist": [[1]], "weights": ["z"], "numeric_mode": "rational"}, "weights[0]"),
    ],
)
def test_field_diagnostics(doc, field):
    with pytest.raises(InstanceFormatError) as exc:
        instance_from_dict(doc)
    assert exc.value.field == field


def test_json_syntax_line():
    with pytest.raises(InstanceFormatError) as exc:
        loads_instance('{"customers": ["a"],\n "facilities": [\n')
    assert exc.value.line is not None and exc.value.line >= 2
