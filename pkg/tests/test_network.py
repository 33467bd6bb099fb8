import random

import pytest

from _oracles import random_small_instance, simple_path_e2e
from imgplace import load_example5
from imgplace.model import ContainerImage, DirectLink, Infrastructure, RegistryNode
from imgplace.network import derive_e2e, e2e_to_csv, mean_outgoing_bandwidth, transfer_time


@pytest.fixture
def ex5():
    return load_example5()


def test_example5_paths(ex5):
    e2e = ex5.e2e
    # two hops through edge1, bottleneck on the edge1-edge3 link
    assert (e2e["edge2", "edge3"].latency, e2e["edge2", "edge3"].bandwidth) == (20, 10)
    assert (e2e["cloud", "edge5"].latency, e2e["cloud", "edge5"].bandwidth) == (55, 5)
    assert len(e2e) == 30  # connected, 6 * 5 ordered pairs


def test_transfer_times(ex5):
    nginx = ex5.image("nginx")
    assert transfer_time(nginx, "cloud", "edge3", ex5.e2e) == pytest.approx(192 * 8 / 10 + 35 / 1000)
    assert transfer_time(nginx, "edge2", "edge2", ex5.e2e) == 0.0
    assert transfer_time(ex5.image("nginx"), "cloud", "edge5", ex5.e2e) == pytest.approx(307.255)
    assert transfer_time(ContainerImage("x", 69, 60), "edge2", "edge5", ex5.e2e) == pytest.approx(110.43)


def test_latency_tie_goes_to_wider_path():
    nodes = [RegistryNode(n, 1, 1) for n in "abcd"]
    links = [DirectLink("a", "b", 5, 10), DirectLink("b", "d", 5, 10),
             DirectLink("a", "c", 5, 100), DirectLink("c", "d", 5, 50)]
    e2e = derive_e2e(Infrastructure.build(nodes, links))
    assert (e2e["a", "d"].latency, e2e["a", "d"].bandwidth) == (10, 50)


def test_unreachable_pairs_absent():
    infra = Infrastructure.build([RegistryNode("a", 1, 1), RegistryNode("b", 1, 1)], [DirectLink("a", "b", 1, 1)])
    e2e = derive_e2e(infra)
    assert ("b", "a") not in e2e
    assert transfer_time(ContainerImage("x", 1, 1), "b", "a", e2e) is None


def test_against_simple_path_enumeration():
    rng = random.Random(7)
    for _ in range(200):
        inst = random_small_instance(rng, max_nodes=6)
        got = {k: (v.latency, v.bandwidth) for k, v in inst.e2e.items()}
        want = simple_path_e2e(inst)
        assert got.keys() == want.keys()
        for k in want:
            assert got[k][0] == pytest.approx(want[k][0])
            assert got[k][1] == pytest.approx(want[k][1])


def test_mean_bandwidth_and_csv(ex5):
    assert mean_outgoing_bandwidth("edge5", ex5.e2e) == pytest.approx(5.0)
    text = e2e_to_csv(ex5.e2e)
    assert text.splitlines()[0] == "src,dst,latency_ms,bandwidth_mbps"
    assert len(text.splitlines()) == 31


def test_worked_transfer_examples(ex5):
    ubuntu, nginx = ex5.image("ubuntu"), ex5.image("nginx")
    assert transfer_time(ubuntu, "edge5", "cloud", ex5.e2e) == pytest.approx(110.455)
    assert transfer_time(nginx, "cloud", "edge1", ex5.e2e) == pytest.approx(30.74)
    assert derive_e2e(Infrastructure.build([RegistryNode("solo", 1, 1)])) == {}


def test_complete_graph_with_triangle_inequality_keeps_direct_links():
    rng = random.Random(1)
    pts = {f"p{i}": (rng.uniform(0, 10), rng.uniform(0, 10)) for i in range(6)}
    nodes = [RegistryNode(n, 1, 1) for n in pts]
    links = []
    for a, (xa, ya) in pts.items():
        for b, (xb, yb) in pts.items():
            if a != b:
                links.append(DirectLink(a, b, 1 + ((xa - xb) ** 2 + (ya - yb) ** 2) ** 0.5, rng.randint(10, 100)))
    infra = Infrastructure.build(nodes, links)
    e2e = derive_e2e(infra)
    for (a, b), link in infra.links.items():
        assert (e2e[a, b].latency, e2e[a, b].bandwidth) == (link.latency, link.bandwidth)


def test_removing_a_node_never_helps():
    rng = random.Random(4)
    for _ in range(50):
        inst = random_small_instance(rng, max_nodes=6)
        before = inst.e2e
        for gone in inst.nodes:
            after = inst.infrastructure.without_nodes([gone]).e2e
            for key, link in after.items():
                assert key in before and link.latency >= before[key].latency - 1e-9


def test_transfer_time_monotone(ex5):
    link = ex5.e2e["cloud", "edge3"]
    base = transfer_time(ContainerImage("x", 50, 1), "cloud", "edge3", ex5.e2e)
    bigger = transfer_time(ContainerImage("x", 60, 1), "cloud", "edge3", ex5.e2e)
    assert bigger > base
    slower = {("cloud", "edge3"): type(link)("cloud", "edge3", link.latency + 5, link.bandwidth / 2)}
    assert transfer_time(ContainerImage("x", 50, 1), "cloud", "edge3", slower) > base
