"""Cyclic placement with aligned coding against grouped repetition.

Both schemes run with every single-straggler pattern; the table shows the
worst measured cost of each.
"""
from cyclicia import SystemParams, build_scheme, run_repetition_scheme, run_simulation
from cyclicia.sim import SimConfig

for kc in (1, 4, 8, 10):
    params = SystemParams(K=12, N=12, Nr=11, Kc=kc, m=3)
    scheme = build_scheme(params, seed=0)
    cyclic = max(run_simulation(SimConfig(scheme, frozenset({s}), seed=s)).normalized_cost
                 for s in range(1, 13))
    grouped = max(run_repetition_scheme(params, {s}, seed=s).normalized_cost for s in range(1, 13))
    print(f"Kc={kc:>2}  cyclic {str(cyclic):>6}  repetition {str(grouped):>6}  ratio {cyclic / grouped}")
