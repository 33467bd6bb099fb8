"""Experiment runners behind the command line: single solves, random corpora
and epoch-by-epoch adaptation runs. Everything here emits ``RunRecord`` rows."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import continuous, exact, heuristic
from .eligibility import check_eligible
from .model import ContainerImage, DirectLink, Infrastructure, Placement, ProblemInstance
from .scenario import ChurnConfig, GeneratorConfig, generate_instance, image_group, step_churn


@dataclass
class RunRecord:
    instance: str
    seed: int | None
    n_nodes: int
    n_images: int
    solver: str  # heuristic | exact | declace
    status: str  # ok | fail | infeasible | timeout
    elapsed_ms: float
    cost: float | None = None
    replicas_used: int | None = None
    migrations: int | None = None
    n_ko: int | None = None
    replicas_lost: int | None = None
    epoch: int | None = None
    comparable: bool | None = None


CSV_COLUMNS = [f.name for f in fields(RunRecord)]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _max_replicas(p: Placement) -> int:
    return max((len(v) for v in p.assignments.values()), default=0)


def _assert_eligible(p: Placement, inst: ProblemInstance):
    report = check_eligible(p, inst)
    if not report.eligible:
        raise AssertionError(f"solver returned an ineligible placement: {report.violations[:5]}")


# ---------------------------------------------------------------------------
# single solves

def run_heuristic(inst, deadline, ordered=True, name="", seed=None):
    budget = heuristic.SearchBudget.ordered(inst, deadline) if ordered else heuristic.SearchBudget(deadline)
    t0 = time.perf_counter()
    try:
        res = heuristic.solve_ipp(inst, None, budget)
        status = "ok" if res is not None else "fail"
    except heuristic.SearchTimeout:
        res, status = None, "timeout"
    rec = RunRecord(name, seed, len(inst.nodes), len(inst.images), "heuristic", status,
                    (time.perf_counter() - t0) * 1000)
    if res is not None:
        _assert_eligible(res.placement, inst)
        rec.cost, rec.replicas_used = res.cost, res.replicas_used
    return (res.placement if res else None), rec


_EXACT_STATUS = {
    exact.OPTIMAL: "ok",
    exact.INFEASIBLE: "infeasible",
    exact.TIMEOUT_WITH_INCUMBENT: "timeout",
    exact.TIMEOUT_NO_INCUMBENT: "timeout",
}


def run_exact(inst, deadline, name="", seed=None):
    t0 = time.perf_counter()
    res = exact.solve_oipp(inst, deadline)
    rec = RunRecord(name, seed, len(inst.nodes), len(inst.images), "exact", _EXACT_STATUS[res.status],
                    (time.perf_counter() - t0) * 1000)
    if res.placement is not None:
        _assert_eligible(res.placement, inst)
        rec.cost, rec.replicas_used = res.cost, _max_replicas(res.placement)
    return res, rec


# ---------------------------------------------------------------------------
# corpus

def _corpus_task(args):
    n, k, seed, hb, eb = args
    inst = generate_instance(GeneratorConfig(n_nodes=n, seed=seed), image_group(k))
    name = f"n{n}-i{k}-s{seed}"
    _, hrec = run_heuristic(inst, hb, name=name, seed=seed)
    eres, erec = run_exact(inst, eb, name=name, seed=seed)
    comparable = hrec.status == "ok" and eres.status == exact.OPTIMAL
    hrec.comparable = erec.comparable = comparable
    return [hrec, erec]


def run_corpus(sizes=(25, 50, 75, 100, 125, 150), image_counts=(4, 8, 12), instances=1000, seed=0,
               heuristic_budget=heuristic.DEFAULT_DEADLINE, exact_budget=exact.DEFAULT_DEADLINE,
               workers=1) -> list[RunRecord]:
    """Heuristic and exact solve of ``instances`` random instances per
    (size, image count) cell. Rows where the heuristic succeeded and the exact
    solver proved optimality are flagged ``comparable``."""
    tasks = [(n, k, seed + i, heuristic_budget, exact_budget)
             for n in sizes for k in image_counts for i in range(instances)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_corpus_task, tasks))
    else:
        chunks = [_corpus_task(t) for t in tasks]
    return [r for chunk in chunks for r in chunk]


# ---------------------------------------------------------------------------
# scripted events and simulation

class ScriptedWorld:
    """Persistent scripted edits (node removal/restoration, image and QoS
    changes) layered under the stochastic churn."""

    def __init__(self, base: ProblemInstance):
        self.base = base
        self.stash: dict[str, tuple] = {}

    def apply(self, event: dict):
        kind = event["type"]
        inst = self.base
        nodes = dict(inst.nodes)
        links = dict(inst.infrastructure.links)
        images = list(inst.images)
        r = inst.max_replicas
        if kind == "remove_node":
            n = event["node"]
            gone = {k: v for k, v in links.items() if n in k}
            self.stash[n] = (nodes.pop(n), gone)
            for k in gone:
                del links[k]
        elif kind == "restore_node":
            node, gone = self.stash.pop(event["node"])
            nodes[node.id] = node
            links.update({k: v for k, v in gone.items() if k[0] in nodes and k[1] in nodes})
        elif kind == "add_image":
            images.append(ContainerImage(event["id"], float(event["size"]), float(event["max"])))
        elif kind == "remove_image":
            images = [i for i in images if i.id != event["id"]]
        elif kind == "set_image":
            images = [replace(i, size=float(event.get("size", i.size)),
                              max_transfer_time=float(event.get("max", i.max_transfer_time)))
                      if i.id == event["id"] else i for i in images]
        elif kind == "set_node":
            old = nodes[event["node"]]
            nodes[old.id] = replace(old, storage=float(event.get("storage", old.storage)),
                                    unit_cost=float(event.get("cost", old.unit_cost)))
        elif kind == "set_link":
            keys = [(event["src"], event["dst"])]
            if event.get("symmetric", True):
                keys.append((event["dst"], event["src"]))
            for key in keys:
                old = links.get(key)
                lat = float(event.get("latency", old.latency if old else 0))
                bw = float(event.get("bandwidth", old.bandwidth if old else 0))
                links[key] = DirectLink(key[0], key[1], lat, bw)
        elif kind == "set_max_replicas":
            r = int(event["value"])
        else:
            raise ValueError(f"unknown scripted event {kind!r}")
        self.base = ProblemInstance(Infrastructure(nodes, links), tuple(images), r)


def load_events(text: str) -> dict[int, list[dict]]:
    by_epoch: dict[int, list[dict]] = {}
    for item in json.loads(text):
        by_epoch.setdefault(int(item["epoch"]), []).append(item["event"])
    return by_epoch


@dataclass
class SimulationResult:
    records: list[RunRecord]
    log: list[dict]  # one JSON-serialisable entry per epoch
    churn: list[tuple]  # (epoch, type, target, factor)
    states: list = None

    def churn_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "type", "target", "factor"])
        for row in self.churn:
            w.writerow([row[0], row[1], row[2], "" if row[3] is None else repr(row[3])])
        return buf.getvalue()

    def log_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.log)


def _target(ev):
    for key in ("node", "image"):
        if key in ev:
            return ev[key]
    if "link" in ev:
        return "-".join(ev["link"])
    return ""


def simulate(initial: ProblemInstance, epochs: int, churn: ChurnConfig | None = None,
             events: dict[int, list[dict]] | None = None, budgets: continuous.Budgets | None = None,
             compare: bool = False, name: str = "sim", keep_states: bool = False) -> SimulationResult:
    """Run the adaptive workflow for ``epochs`` monitoring periods.

    Epoch 1 sees ``initial`` (plus any scripted epoch-1 events); from epoch 2
    on, scripted events are applied and then one churn step (if ``churn``).
    With ``compare`` a from-scratch exact solve of each epoch's instance is
    recorded alongside.
    """
    budgets = budgets or continuous.Budgets()
    events = events or {}
    world = ScriptedWorld(initial)
    rng = np.random.default_rng(churn.seed) if churn is not None else None
    if churn is not None:
        churn.validate()
    state = continuous.WorkflowState()
    records, log, churn_rows, states = [], [], [], []
    for epoch in range(1, epochs + 1):
        for ev in events.get(epoch, []):
            world.apply(ev)
            churn_rows.append((epoch, "scripted:" + ev["type"], _target(ev), None))
        visible = world.base
        churn_events = []
        if churn is not None and epoch > 1:
            world.base, visible, churn_events = step_churn(world.base, churn, rng)
            for ev in churn_events:
                churn_rows.append((epoch, ev["type"], _target(ev), ev.get("factor")))
        state = continuous.workflow_step(state, visible, budgets)
        last = state.last
        if state.current is not None:
            _assert_eligible(state.current, visible)
        status = {"optimal": "ok", "timeout_with_incumbent": "timeout",
                  "timeout_no_incumbent": "timeout"}.get(last["status"], last["status"])
        rec = RunRecord(name, churn.seed if churn else None, len(visible.nodes), len(visible.images),
                        "declace", status,
                        last["elapsed_ms"], last["cost"],
                        _max_replicas(state.current) if state.current else None,
                        last["migrations"], last["n_ko"], last["replicas_lost"], epoch)
        records.append(rec)
        entry = {"epoch": epoch, "phase": state.phase, "path": last["path"], "status": last["status"],
                 "elapsed_ms": last["elapsed_ms"], "cost": last["cost"], "n_ko": last["n_ko"],
                 "migrations": last["migrations"], "replicas_lost": last["replicas_lost"],
                 "migrated": last.get("migrated", []), "reasons": last.get("reasons", {}),
                 "churn_events": len(churn_events) + len(events.get(epoch, []))}
        log.append(entry)
        if keep_states:
            states.append((visible, state))
        if compare:
            _, erec = run_exact(visible, budgets.exact, name=name, seed=rec.seed)
            erec.epoch = epoch
            records.append(erec)
    return SimulationResult(records, log, churn_rows, states if keep_states else None)


def record_dict(rec: RunRecord) -> dict:
    return asdict(rec)
