"""Small corpus: how far is the ordered heuristic from the optimum?

Run: python demos/03_heuristic_vs_exact.py [instances-per-cell]
"""
import statistics
import sys

from imgplace.harness import run_corpus

per_cell = int(sys.argv[1]) if len(sys.argv) > 1 else 10
records = run_corpus([25, 50, 75], [4, 8], per_cell, seed=0, heuristic_budget=1.0, exact_budget=10.0)

cells = {}
for r in records:
    cells.setdefault((r.n_nodes, r.n_images), {}).setdefault(r.instance, {})[r.solver] = r

print(f"{'nodes':>5} {'images':>6} {'comparable':>10} {'mean gap':>9} {'heur ms':>8} {'exact ms':>9}")
for (n, k), runs in sorted(cells.items()):
    pairs = [p for p in runs.values() if p["heuristic"].comparable]
    gaps = [p["heuristic"].cost / p["exact"].cost - 1 for p in pairs]
    hms = statistics.mean(p["heuristic"].elapsed_ms for p in runs.values())
    ems = statistics.mean(p["exact"].elapsed_ms for p in runs.values())
    gap = f"{statistics.mean(gaps):9.2%}" if gaps else f"{'-':>9}"
    print(f"{n:5d} {k:6d} {len(pairs):10d} {gap} {hms:8.1f} {ems:9.1f}")
