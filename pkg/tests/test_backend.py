import json
import os
import subprocess
import sys

import pytest

PROBE = """
import json
from tcres import BACKEND, prufer, radial
from tcres.core import ProblemParams
p = ProblemParams.from_sum_difference(2.0, 1.0, 0.1)
mu = prufer.shooting_eigenvalue(p, 2.0, 3).mu
f = radial.jost_fplus(p, 1.5 - 0.2j, 1.0 + 0.1j)
v = radial.regular_wave(p, 0.8 + 0.1j, 0.5, (0.3, 1.2)).values[1]
print(json.dumps({"backend": BACKEND, "mu": mu, "f": [f.real, f.imag], "v": [v.real, v.imag]}))
"""


def probe(**env):
    full = dict(os.environ)
    full.pop("TCRES_BACKEND", None)
    full.pop("TCRES_NO_NUMBA", None)
    full.update(env)
    res = subprocess.run([sys.executable, "-c", PROBE], env=full, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def compiled():
    return probe()


def test_default_is_numba(compiled):
    assert compiled["backend"] == "numba"


@pytest.mark.parametrize("env", [{"TCRES_BACKEND": "numpy"}, {"TCRES_NO_NUMBA": "1"}])
def test_numpy_backend_matches(env, compiled):
    slow = probe(**env)
    assert slow["backend"] == "numpy"
    assert slow["mu"] == pytest.approx(compiled["mu"], rel=1e-13)
    assert complex(*slow["f"]) == pytest.approx(complex(*compiled["f"]), rel=1e-12)
    assert complex(*slow["v"]) == pytest.approx(complex(*compiled["v"]), rel=1e-12)


def test_no_numba_zero_keeps_numba():
    assert probe(TCRES_NO_NUMBA="0")["backend"] == "numba"
