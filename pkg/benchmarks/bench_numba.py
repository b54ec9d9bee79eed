"""Time the closed-loop integrator with and without numba.

Each backend runs in its own interpreter because the switch is read at import:

    python benchmarks/bench_numba.py --case 1 --t-final 0.5 --repeat 3
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = """
import json, sys, time
import gdrem_mrac
from gdrem_mrac.sim import build_case, run_scenario
case, t_final, repeat = int(sys.argv[1]), float(sys.argv[2]), int(sys.argv[3])
cfg = build_case(case).with_overrides(t_final=t_final)
t0 = time.perf_counter()
run_scenario(cfg.with_overrides(t_final=0.01))
first = time.perf_counter() - t0
times = []
for _ in range(repeat):
    t0 = time.perf_counter()
    run_scenario(cfg)
    times.append(time.perf_counter() - t0)
print(json.dumps({"backend": gdrem_mrac.backend(), "first_call": first, "best": min(times), "steps": cfg.n_steps}))
"""


def measure(disable, case, t_final, repeat):
    env = dict(os.environ, GDREM_MRAC_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", CHILD, str(case), str(t_final), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", type=int, default=1, choices=(1, 2, 3))
    ap.add_argument("--t-final", type=float, default=0.5, dest="t_final")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = [measure(flag, args.case, args.t_final, args.repeat) for flag in (False, True)]
    print(f"case {args.case}, {rows[0]['steps']} RK4 steps")
    print(f"{'backend':8} {'first call s':>12} {'best run s':>11} {'us/step':>9}")
    for r in rows:
        print(f"{r['backend']:8} {r['first_call']:12.3f} {r['best']:11.4f} {1e6 * r['best'] / r['steps']:9.2f}")
    print(f"speedup {rows[1]['best'] / rows[0]['best']:.1f}x")


if __name__ == "__main__":
    main()
