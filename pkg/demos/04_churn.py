"""Adaptive placement under random churn, compared with re-solving every epoch.

Run: python demos/04_churn.py [epochs]
"""
import statistics
import sys

from imgplace.continuous import Budgets
from imgplace.harness import simulate
from imgplace.scenario import ChurnConfig, GeneratorConfig, generate_instance, image_group

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 50
inst = generate_instance(GeneratorConfig(n_nodes=50, seed=1, storage_distribution=[(1.0, 4000.0)]), image_group(8))
res = simulate(inst, epochs, ChurnConfig(seed=1, epochs=epochs), compare=True, budgets=Budgets(2.0, 10.0))

adaptive = [r for r in res.records if r.solver == "declace" and r.epoch > 1]
fresh = {r.epoch: r for r in res.records if r.solver == "exact"}
paths = [e["path"] for e in res.log[1:]]
print(f"{epochs} epochs, {len(res.churn)} churn events")
print(f"adaptive path: {paths.count('heuristic')} heuristic, {paths.count('exact')} exact fallback")
print(f"mean time: adaptive {statistics.mean(r.elapsed_ms for r in adaptive):.1f} ms, "
      f"re-solve {statistics.mean(fresh[r.epoch].elapsed_ms for r in adaptive):.1f} ms")
print(f"images moved per epoch: {statistics.mean(r.migrations for r in adaptive):.2f}, "
      f"replicas lost per epoch: {statistics.mean(r.replicas_lost for r in adaptive):.2f}")
ratios = [r.cost / fresh[r.epoch].cost for r in adaptive if r.cost and fresh[r.epoch].cost]
print(f"adaptive / optimal cost: mean {statistics.mean(ratios):.3f}, worst {max(ratios):.3f}")
# Kept images are never trimmed: replicas added while a hub was down stay in
# place after it returns, so the adaptive cost can drift well above the
# per-epoch optimum until an epoch invalidates everything again.
