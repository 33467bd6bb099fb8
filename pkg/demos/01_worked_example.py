"""Six-node walk-through: file order vs. fail-first/fail-last order vs. optimum.

Run: python demos/01_worked_example.py
"""
from imgplace import load_example5
from imgplace.eligibility import check_eligible
from imgplace.exact import solve_oipp
from imgplace.heuristic import SearchBudget, order_images, order_nodes, solve_ipp
from imgplace.model import serialize_placement
from imgplace.network import transfer_time

inst = load_example5()
print("nodes:", ", ".join(f"{n.id} ({n.storage:g} MB @ {n.unit_cost})" for n in inst.nodes.values()))

# how long does each destination wait for nginx when it lives only in the cloud?
nginx = inst.image("nginx")
for dst in sorted(inst.nodes):
    t = transfer_time(nginx, "cloud", dst, inst.e2e)
    print(f"  cloud -> {dst}: {t:8.3f} s (budget {nginx.max_transfer_time:g} s)")

naive = SearchBudget(None, list(inst.nodes), [i.id for i in inst.images])
first = solve_ipp(inst, budget=naive)
print("\nfirst placement in file order:", serialize_placement(first.placement).strip())
print(f"  cost {first.cost:.1f}, replica bound {first.replicas_used}")

print("\nimage order:", [i.id for i in order_images(inst.images)])
print("node order: ", order_nodes(inst))
ordered = solve_ipp(inst, budget=SearchBudget.ordered(inst, None))
print("ordered placement:", serialize_placement(ordered.placement).strip())
print(f"  cost {ordered.cost:.1f}")

best = solve_oipp(inst)
print(f"\nexact: {best.status}, cost {best.cost:.1f}, {best.nodes_explored} search nodes")
print("  same as ordered heuristic:", best.placement == ordered.placement)
print("  eligible:", check_eligible(best.placement, inst).eligible)
