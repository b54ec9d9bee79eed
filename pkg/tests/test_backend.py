import json
import os
import subprocess
import sys

import numpy as np

SCRIPT = """
import json, sys
import gdrem_mrac
from gdrem_mrac.sim import build_case, run_scenario
case = int(sys.argv[1])
tr = run_scenario(build_case(case).with_overrides(t_final=0.02, record_every=10))
print(json.dumps({"backend": gdrem_mrac.backend(), "data": tr.csv_data.tolist()}))
"""


def run(case, disable):
    env = dict(os.environ)
    env["GDREM_MRAC_DISABLE_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", SCRIPT, str(case)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout)


def test_numpy_fallback_matches_numba():
    for case in (1, 3):
        jit, py = run(case, False), run(case, True)
        assert jit["backend"] == "numba" and py["backend"] == "numpy"
        a, b = np.array(jit["data"]), np.array(py["data"])
        assert a.shape == b.shape
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
