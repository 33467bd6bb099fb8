"""``imgplace`` command line.

Exit codes: 0 ok, 1 usage, 2 parse error, 3 infeasible / no placement found,
4 timeout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import continuous, exact, harness, heuristic
from .eligibility import check_eligible, cost
from .model import ParseError, parse_instance, parse_placement, serialize_instance, serialize_placement
from .scenario import ChurnConfig, GeneratorConfig, generate_instance, image_group

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ms(v):
    return None if v is None else v / 1000.0


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _sniff(text):
    return "json" if text.lstrip().startswith("{") else "facts"


def _read_instance(path):
    # input format is detected from the content; --format only picks the output
    text = Path(path).read_text(encoding="utf-8")
    return parse_instance(text, _sniff(text))


def _write(out_dir, name, text):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8", newline="\n")


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    if args.exact:
        res, rec = harness.run_exact(inst, _ms(args.budget_exact_ms), name=str(args.instance))
        placement = res.placement
    else:
        placement, rec = harness.run_heuristic(inst, _ms(args.budget_heuristic_ms),
                                               ordered=not args.naive_order, name=str(args.instance))
    fmt = args.format or "facts"
    csv_text = harness.records_to_csv([rec])
    if placement is not None:
        text = serialize_placement(placement, fmt)
        if args.out:
            _write(args.out, "placement.json" if fmt == "json" else "placement.pl", text)
        sys.stdout.write(text)
        sys.stdout.write(f"cost {cost(placement, inst):.6f}\n")
    if args.out:
        _write(args.out, "record.csv", csv_text)
    else:
        sys.stderr.write(csv_text)
    if rec.status == "ok":
        return EXIT_OK
    return EXIT_TIMEOUT if rec.status == "timeout" else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    inst = _read_instance(args.instance)
    text = Path(args.placement).read_text(encoding="utf-8")
    p = parse_placement(text, _sniff(text))
    report = check_eligible(p, inst, scope=[i for i in p.images()] if args.partial else None)
    doc = {"eligible": report.eligible, "cost": cost(p, inst),
           "violations": [{"kind": type(v).__name__, **v.__dict__} for v in report.violations]}
    print(json.dumps(doc, indent=2))
    return EXIT_OK if report.eligible else EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    cfg = GeneratorConfig(n_nodes=args.nodes, seed=args.seed, replica_cap=args.max_replicas)
    if args.uniform_storage is not None:
        cfg.storage_distribution = [(1.0, float(args.uniform_storage))]
    inst = generate_instance(cfg, image_group(args.images))
    text = serialize_instance(inst, args.format or "facts")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_corpus(args) -> int:
    records = harness.run_corpus(_ints(args.sizes), _ints(args.images), args.instances, args.seed,
                                 _ms(args.budget_heuristic_ms), _ms(args.budget_exact_ms), args.workers)
    text = harness.records_to_csv(records)
    if args.out:
        _write(args.out, "corpus.csv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.instance:
        initial = _read_instance(args.instance)
    else:
        cfg = GeneratorConfig(n_nodes=args.nodes, seed=args.seed, replica_cap=args.max_replicas,
                              storage_distribution=[(1.0, float(args.uniform_storage))])
        initial = generate_instance(cfg, image_group(args.images))
    events = harness.load_events(Path(args.events).read_text(encoding="utf-8")) if args.events else None
    churn = None
    if not args.no_churn and not (args.instance and args.events and not args.churn):
        churn = ChurnConfig(p_node_failure=args.p_failure, p_qos_variation=args.p_qos,
                            p_image_variation=args.p_image, epochs=args.epochs, seed=args.seed)
    budgets = continuous.Budgets(_ms(args.budget_heuristic_ms), _ms(args.budget_exact_ms))
    result = harness.simulate(initial, args.epochs, churn, events, budgets, compare=args.compare,
                              name=str(args.instance or f"ba{args.nodes}-i{args.images}"))
    csv_text = harness.records_to_csv(result.records)
    if args.out:
        _write(args.out, "epochs.csv", csv_text)
        _write(args.out, "events.jsonl", result.log_jsonl())
        _write(args.out, "churn.csv", result.churn_csv())
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imgplace", description="Container image placement solvers and simulations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def budgets(sp):
        sp.add_argument("--budget-heuristic-ms", type=float, default=heuristic.DEFAULT_DEADLINE * 1000)
        sp.add_argument("--budget-exact-ms", type=float, default=exact.DEFAULT_DEADLINE * 1000)

    def common(sp):
        sp.add_argument("--format", choices=["facts", "json"], default=None, help="output format (default facts)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("solve", help="solve one instance file")
    sp.add_argument("instance")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--heuristic", action="store_true", help="iterative-deepening search (default)")
    group.add_argument("--exact", action="store_true", help="branch-and-bound optimum")
    sp.add_argument("--naive-order", action="store_true", help="keep file order for images and nodes")
    budgets(sp)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="eligibility report for a placement")
    sp.add_argument("instance")
    sp.add_argument("placement")
    sp.add_argument("--partial", action="store_true", help="check only the images the placement covers")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("gen", help="emit a random instance")
    sp.add_argument("--nodes", type=int, default=25)
    sp.add_argument("--images", type=int, choices=[4, 8, 12], default=4)
    sp.add_argument("--max-replicas", type=int, default=15)
    sp.add_argument("--uniform-storage", type=float, default=None)
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("corpus", help="heuristic vs exact over random instances")
    sp.add_argument("--sizes", default="25,50,75,100,125,150")
    sp.add_argument("--images", default="4,8,12")
    sp.add_argument("--instances", type=int, default=1000)
    sp.add_argument("--workers", type=int, default=1)
    budgets(sp)
    common(sp)
    sp.set_defaults(func=cmd_corpus)

    sp = sub.add_parser("simulate", help="adaptive placement under churn or scripted events")
    sp.add_argument("--instance", default=None, help="start from this instance instead of a random one")
    sp.add_argument("--events", default=None, help="JSON list of {epoch, event}")
    sp.add_argument("--churn", action="store_true", help="random churn on top of scripted events")
    sp.add_argument("--no-churn", action="store_true")
    sp.add_argument("--epochs", type=int, default=1000)
    sp.add_argument("--nodes", type=int, default=25)
    sp.add_argument("--images", type=int, choices=[4, 8, 12], default=4)
    sp.add_argument("--max-replicas", type=int, default=15)
    sp.add_argument("--uniform-storage", type=float, default=4000.0)
    sp.add_argument("--p-failure", type=float, default=0.05)
    sp.add_argument("--p-qos", type=float, default=0.5)
    sp.add_argument("--p-image", type=float, default=0.1)
    sp.add_argument("--compare", action="store_true", help="also run a fresh exact solve every epoch")
    budgets(sp)
    common(sp)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
