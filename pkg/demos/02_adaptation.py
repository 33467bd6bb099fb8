"""Continuous reasoning on the six-node example: lose a node, then add an image.

Run: python demos/02_adaptation.py
"""
from imgplace import load_example5
from imgplace.continuous import WorkflowState, partition_ok_ko, workflow_step
from imgplace.model import ContainerImage, ProblemInstance, serialize_placement


def show(tag, state):
    last = state.last
    print(f"{tag}: path={last['path']} cost={last['cost']:.1f} KO={last['n_ko']} "
          f"migrations={last['migrations']} lost={last['replicas_lost']}")
    print("   ", serialize_placement(state.current).strip())


inst = load_example5()
state = workflow_step(WorkflowState(), inst)
show("epoch 1 (from scratch)", state)

# edge3 goes away; nginx keeps edge2 + edge5, which still reach everyone in time
no_edge3 = ProblemInstance(inst.infrastructure.without_nodes(["edge3"]), inst.images, inst.max_replicas)
print("\npartition after losing edge3:", partition_ok_ko(state.current, no_edge3).ko_images or "nothing invalid")
state = workflow_step(state, no_edge3)
show("epoch 2 (edge3 down)", state)

# a new image arrives; only it is placed, the rest stays where it is
redis = ContainerImage("redis", 149, 60)
more = ProblemInstance(no_edge3.infrastructure, no_edge3.images + (redis,), no_edge3.max_replicas)
state = workflow_step(state, more)
show("epoch 3 (redis added)", state)
print("    provenance:", state.current.provenance)
