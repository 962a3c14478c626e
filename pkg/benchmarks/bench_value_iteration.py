#!/usr/bin/env python3
"""Compare the compiled and pure-Python value-iteration kernels.

Two workloads:
  * raw: the recognition-stage module composed without idle-run reduction
    (every tick is a state; the classic dense case the kernel exists for),
  * reduced: the full four-stage reaction chain after reduction (few states,
    long horizon, duration-weighted edges).

Run:  python benchmarks/bench_value_iteration.py
"""

import sys
import time
from pathlib import Path

from prtspace._kernel import compiled_curve, pure_python_curve
from prtspace.checker import layered_reach_curve
from prtspace.composer import compose
from prtspace.distributions import RECOGNITION_TIME, REACTION_CHAIN

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tests.helpers import chain_network, chain_target, single_module_network  # noqa: E402


def time_kernel(kernel, mdp, target, horizon, repeats=3):
    best = float("inf")
    curve = None
    for _ in range(repeats):
        start = time.perf_counter()
        curve = layered_reach_curve(mdp, target, horizon, "max", kernel=kernel)
        best = min(best, time.perf_counter() - start)
    return best, curve


def bench(name, mdp, target, horizon):
    compiled = compiled_curve()
    t_py, c_py = time_kernel(pure_python_curve, mdp, target, horizon)
    print(f"{name}: {mdp.state_count} states, horizon {horizon}")
    print(f"  python   {t_py * 1000:9.1f} ms")
    if compiled is None:
        print("  compiled     (extension not built)")
        return
    t_c, c_c = time_kernel(compiled, mdp, target, horizon)
    drift = max(abs(a - b) for a, b in zip(c_py, c_c))
    print(f"  compiled {t_c * 1000:9.1f} ms   ({t_py / t_c:5.1f}x, max |diff| {drift:.2e})")


def main():
    raw = compose(
        single_module_network("m", "act", RECOGNITION_TIME), reduce=False
    )
    bench("raw single recognition stage", raw, "flag_m", 2900)

    chain = compose(chain_network(REACTION_CHAIN))
    bench("reduced four-stage chain", chain, chain_target(4), 5000)


if __name__ == "__main__":
    main()
