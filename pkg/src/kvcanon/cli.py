"""Command-line interface.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Sequence

from .backends import ExternalProcessBackend, RuleBackend
from .batch import BatchConfig, run_batch_iteration
from .clustering import (
    DEFAULT_TAU,
    cluster_keys,
    decision_from_obj,
    proposal_to_obj,
    propose_clusters,
)
from .config import config_value, load_config, parse_fractions, parse_int_pair
from .corpus import CorpusSplit, deidentify, load_corpus, save_corpus, split_by_report_hash
from .embedding import FileEmbeddingProvider, HashedBigramProvider
from .errors import KvcanonError, ValidationError
from .evaluation import (
    MatchCriterion,
    coverage_sweep,
    pair_prf,
    sweep_to_csv,
    sweep_to_plot_data,
    value_prf,
)
from .extract import (
    ExtractorConfig,
    PagePrediction,
    extract_page,
    load_predictions,
    save_predictions,
)
from .inventory import load_inventory, save_inventory, top_fraction_keys
from .loss import PRESETS, grad_check, random_instance
from .noise import ConfusionTable, NoiseConfig, inject_ocr_noise
from .normalize import normalize_key
from .server import ServiceConfig, serve_api
from .store import InventoryStore
from .synthesis import GeneratorConfig, generate_synthetic_corpus


class _Parser(argparse.ArgumentParser):
    """argparse with validation failures mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--config", default=None, help="INI config file")


def _extractor_config(args: argparse.Namespace, cfg: dict) -> ExtractorConfig:
    pick = lambda key, fallback, cast: (  # noqa: E731
        getattr(args, key.replace("-", "_"), None)
        if getattr(args, key.replace("-", "_"), None) is not None
        else config_value(cfg, "extractor", key, fallback, cast)
    )
    return ExtractorConfig(
        budget=pick("budget", 448, int),
        overlap=pick("overlap", 64, int),
        n_top=pick("n_top", 20, int),
        mass=pick("mass", 0.9, float),
        cap=pick("cap", 64, int),
        short_cap=pick("short_cap", 16, int),
        null_offset=pick("null_offset", 0.0, float),
        max_aliases=pick("max_aliases", 5, int),
    )


def _backend(args: argparse.Namespace, inventory_path: str) -> RuleBackend | ExternalProcessBackend:
    if getattr(args, "backend_cmd", None):
        return ExternalProcessBackend(args.backend_cmd.split())
    knowledge = getattr(args, "knowledge_inventory", None) or inventory_path
    return RuleBackend(load_inventory(knowledge))


def _provider(args: argparse.Namespace):
    if getattr(args, "embeddings", None):
        return FileEmbeddingProvider(args.embeddings)
    return HashedBigramProvider()


def _load_split(path: str) -> CorpusSplit:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return CorpusSplit(
        train=tuple(obj["train"]), validation=tuple(obj["validation"]), test=tuple(obj["test"])
    )


# -- commands -----------------------------------------------------------------


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else config_value(cfg, "generator", "seed", 0, int)
    gen = GeneratorConfig(
        n_keys=args.keys or config_value(cfg, "generator", "keys", 300, int),
        n_pages=args.pages or config_value(cfg, "generator", "pages", 2000, int),
        zipf_exponent=args.zipf_s or config_value(cfg, "generator", "zipf_s", 1.05, float),
        mean_cluster_size=args.mean_cluster_size
        or config_value(cfg, "generator", "mean_cluster_size", 1.8, float),
        keys_per_page=parse_int_pair(
            args.keys_per_page or config_value(cfg, "generator", "keys_per_page", "3,8")
        ),
        include_pii=not args.no_pii,
        seed=seed,
    )
    corpus = generate_synthetic_corpus(gen)
    pages = list(corpus.pages)
    if not args.no_deidentify:
        pages = [deidentify(p, corpus.pii_selectors.get(p.page_id, [])) for p in pages]
    noise = NoiseConfig(
        substitution=args.noise_sub if args.noise_sub is not None else args.noise or 0.0,
        whitespace_insertion=args.noise_ws_ins if args.noise_ws_ins is not None else args.noise or 0.0,
        whitespace_deletion=args.noise_ws_del if args.noise_ws_del is not None else args.noise or 0.0,
        linebreak_insertion=args.noise_lb if args.noise_lb is not None else args.noise or 0.0,
    )
    if any(
        (noise.substitution, noise.whitespace_insertion, noise.whitespace_deletion,
         noise.linebreak_insertion)
    ):
        table = ConfusionTable.from_file(args.confusions) if args.confusions else None
        pages = [inject_ocr_noise(p, noise, seed=seed, table=table) for p in pages]
    save_corpus(pages, args.out)
    if args.inventory_out:
        save_inventory(corpus.inventory, args.inventory_out)
    print(f"wrote {len(pages)} pages to {args.out}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else config_value(cfg, "corpus", "split_seed", 0, int)
    ratios = tuple(int(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise ValidationError(f"ratios must be three integers, got {args.ratios!r}")
    pages = load_corpus(args.corpus)
    split = split_by_report_hash(pages, ratios=ratios, seed=seed)  # type: ignore[arg-type]
    payload = {
        "train": list(split.train),
        "validation": list(split.validation),
        "test": list(split.test),
        "seed": seed,
        "ratios": list(ratios),
    }
    Path(args.out).write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
    print(
        f"split {len(split.train)}/{len(split.validation)}/{len(split.test)} reports -> {args.out}"
    )
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    pages = load_corpus(args.corpus)
    if args.split:
        split = _load_split(args.split)
        pages = split.pages_for(args.subset, pages)
    inv = load_inventory(args.inventory)
    view = top_fraction_keys(inv, args.fraction) if args.fraction is not None else inv
    backend = _backend(args, args.inventory)
    config = _extractor_config(args, cfg)
    records = [
        PagePrediction(page.page_id, pair)
        for page in pages
        for pair in extract_page(page.text, view, backend, config)
    ]
    save_predictions(records, args.out)
    print(f"extracted {len(records)} pairs from {len(pages)} pages -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pages = load_corpus(args.corpus)
    if args.split:
        split = _load_split(args.split)
        pages = split.pages_for(args.subset, pages)
    predictions = load_predictions(args.predictions)
    modes = ["em", "btm"] if args.mode == "both" else [args.mode]
    evaluate = value_prf if args.level == "value" else pair_prf
    reports = [evaluate(predictions, pages, MatchCriterion(m, args.delta)) for m in modes]
    for report in reports:
        print(
            f"{report.level} {report.mode}(delta={report.delta}): "
            f"P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f} "
            f"(tp={report.tp} fp={report.fp} fn={report.fn})"
        )
    if args.out:
        payload = reports[0].to_obj() if len(reports) == 1 else [r.to_obj() for r in reports]
        Path(args.out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    pages = load_corpus(args.corpus)
    inv = load_inventory(args.inventory)
    if args.split:
        split = _load_split(args.split)
    else:
        seed = args.seed if args.seed is not None else config_value(cfg, "corpus", "split_seed", 0, int)
        split = split_by_report_hash(pages, seed=seed)
    fractions = parse_fractions(
        args.fractions or config_value(cfg, "sweep", "fractions", "10,20,50,80,90,95,100")
    )
    backend = _backend(args, args.inventory)
    rows = coverage_sweep(
        pages, split, inv, backend, fractions, _extractor_config(args, cfg), delta=args.delta
    )
    for row in rows:
        print(
            f"fraction={row.fraction:g} coverage={row.coverage:.4f} "
            f"em_f1={row.em.f1:.4f} btm_f1={row.btm.f1:.4f}"
        )
    if args.out_csv:
        sweep_to_csv(rows, args.out_csv)
    if args.out_json:
        sweep_to_plot_data(rows, args.out_json)
    if args.store:
        columns = ["fraction", "coverage", "em_p", "em_r", "em_f1", "btm_p", "btm_r", "btm_f1"]
        InventoryStore(args.store).save_sweep(
            {
                "columns": columns,
                "rows": [
                    [
                        float(r.fraction), r.coverage,
                        r.em.precision, r.em.recall, r.em.f1,
                        r.btm.precision, r.btm.recall, r.btm.f1,
                    ]
                    for r in rows
                ],
            }
        )
    return 0


def cmd_mine_keys(args: argparse.Namespace) -> int:
    inv = load_inventory(args.inventory)
    counts: dict[str, int] = {}
    for record in load_predictions(args.predictions):
        normalized = normalize_key(record.pair.surface_key)
        if normalized:
            counts[normalized] = counts.get(normalized, 0) + 1
    novel = {k: c for k, c in counts.items() if inv.canonicalize(k) is None}
    payload = dict(sorted(novel.items(), key=lambda kv: (-kv[1], kv[0])))
    out = json.dumps(payload, ensure_ascii=False, indent=2)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        print(out)
    print(f"found {len(novel)} novel keys", file=sys.stderr)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    counts = json.loads(Path(args.keys).read_text(encoding="utf-8"))
    if not isinstance(counts, dict):
        raise ValidationError("cluster --keys expects a JSON object of key -> count")
    provider = _provider(args)
    if args.inventory:
        proposals = propose_clusters(
            {str(k): int(c) for k, c in counts.items()},
            load_inventory(args.inventory),
            provider,
            args.tau,
        )
    else:
        proposals = cluster_keys(
            [(str(k), int(c)) for k, c in counts.items()], provider, args.tau
        )
    with Path(args.out).open("w", encoding="utf-8") as fp:
        for proposal in proposals:
            fp.write(json.dumps(proposal_to_obj(proposal), ensure_ascii=False) + "\n")
    print(f"wrote {len(proposals)} proposals -> {args.out}")
    return 0


def cmd_review_list(args: argparse.Namespace) -> int:
    store = InventoryStore(args.store)
    for proposal in store.queue(args.status):
        members = ", ".join(k for k, _ in proposal.members)
        print(f"{proposal.proposal_id} [{proposal.status}] -> {proposal.suggested_canonical}: {members}")
    return 0


def cmd_review_apply(args: argparse.Namespace) -> int:
    store = InventoryStore(args.store)
    if args.decisions:
        decisions = [
            decision_from_obj(json.loads(line))
            for line in Path(args.decisions).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        if not args.proposal or not args.action:
            raise ValidationError("review apply requires --proposal and --action (or --decisions)")
        payload = json.loads(args.payload) if args.payload else {}
        decisions = [decision_from_obj({"proposal_id": args.proposal, "action": args.action, "payload": payload})]
    for decision in decisions:
        inv = store.apply_decision(decision)
        print(f"{decision.proposal_id} {decision.action} -> inventory v{inv.version}")
    return 0


def cmd_batch(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    store = InventoryStore(args.store)
    pages = load_corpus(args.pages)
    backend = _backend(args, args.knowledge_inventory or str(store.snapshot_path(store.current_version())))
    config = BatchConfig(
        mode=args.mode,
        tau=args.tau,
        extractor=_extractor_config(args, cfg),
        refresh_command=tuple(args.refresh_cmd.split()) if args.refresh_cmd else (),
    )
    record, predictions = run_batch_iteration(pages, store, backend, config, _provider(args))
    if args.out:
        save_predictions(predictions, args.out)
    print(json.dumps(record.to_obj(), ensure_ascii=False, indent=2))
    return 0


def cmd_loss_check(args: argparse.Namespace) -> int:
    rng = random.Random(args.seed if args.seed is not None else 0)
    config = PRESETS[args.task]
    worst = 0.0
    checked = 0
    while checked < args.instances:
        logits, gold = random_instance(rng, max_length=args.max_len)
        err = grad_check(logits, gold, config, h=args.h)
        if err is None:
            continue  # instance sits on a hinge kink
        worst = max(worst, err)
        checked += 1
    print(f"max relative gradient error over {checked} instances: {worst:.3e}")
    if worst >= args.tolerance:
        print(f"FAIL: exceeds tolerance {args.tolerance:g}", file=sys.stderr)
        return 1
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    service = ServiceConfig(
        host=args.host or config_value(cfg, "service", "host", "127.0.0.1"),
        port=args.port if args.port is not None else config_value(cfg, "service", "port", 8020, int),
        store_dir=args.store or config_value(cfg, "service", "store_dir", "store"),
        corpus_path=args.corpus or config_value(cfg, "service", "corpus", None),
        split_seed=args.seed if args.seed is not None else config_value(cfg, "corpus", "split_seed", 0, int),
        seed_inventory_path=args.inventory or config_value(cfg, "service", "inventory", None),
        knowledge_inventory_path=args.knowledge_inventory
        or config_value(cfg, "service", "knowledge_inventory", None),
        ui_dir=args.ui_dir or config_value(cfg, "service", "ui_dir", None),
        extractor=_extractor_config(args, cfg),
    )
    serve_api(service)
    return 0


# -- wiring ---------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="kvcanon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-corpus", help="generate a synthetic annotated corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--inventory-out")
    p.add_argument("--keys", type=int)
    p.add_argument("--pages", type=int)
    p.add_argument("--zipf-s", type=float, dest="zipf_s")
    p.add_argument("--mean-cluster-size", type=float)
    p.add_argument("--keys-per-page")
    p.add_argument("--noise", type=float, help="uniform per-channel noise rate")
    p.add_argument("--noise-sub", type=float)
    p.add_argument("--noise-ws-ins", type=float)
    p.add_argument("--noise-ws-del", type=float)
    p.add_argument("--noise-lb", type=float)
    p.add_argument("--confusions", help="custom confusion-pair JSON file")
    p.add_argument("--no-deidentify", action="store_true")
    p.add_argument("--no-pii", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("split", help="hash-split a corpus by report id")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="7,1,2")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("extract", help="run key-conditioned extraction over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--split")
    p.add_argument("--subset", default="test", choices=["train", "validation", "test"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--backend-cmd", help="external logit backend command")
    p.add_argument("--knowledge-inventory", help="inventory the rule backend matches against")
    for flag, typ in (
        ("--budget", int), ("--overlap", int), ("--n-top", int), ("--mass", float),
        ("--cap", int), ("--short-cap", int), ("--null-offset", float), ("--max-aliases", int),
    ):
        p.add_argument(flag, type=typ)
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score predictions against gold annotations")
    p.add_argument("--corpus", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--split")
    p.add_argument("--subset", default="test", choices=["train", "validation", "test"])
    p.add_argument("--mode", default="both", choices=["em", "btm", "both"])
    p.add_argument("--delta", type=int, default=3)
    p.add_argument("--level", default="pair", choices=["value", "pair"])
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="coverage sweep over inventory fractions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--split")
    p.add_argument("--fractions")
    p.add_argument("--delta", type=int, default=3)
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    p.add_argument("--store", help="record the sweep in a store directory")
    p.add_argument("--backend-cmd")
    p.add_argument("--knowledge-inventory")
    for flag, typ in (
        ("--budget", int), ("--overlap", int), ("--n-top", int), ("--mass", float),
        ("--cap", int), ("--short-cap", int), ("--null-offset", float), ("--max-aliases", int),
    ):
        p.add_argument(flag, type=typ)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mine-keys", help="novel surface keys from a prediction file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_mine_keys)

    p = sub.add_parser("cluster", help="cluster keys into review proposals")
    p.add_argument("--keys", required=True, help="JSON object of key -> count")
    p.add_argument("--inventory", help="existing inventory for alias attachment")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--embeddings", help="JSONL file of precomputed vectors")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("review", help="review queue operations")
    rsub = p.add_subparsers(dest="review_command", required=True, parser_class=_Parser)
    rp = rsub.add_parser("list", help="list proposals")
    rp.add_argument("--store", required=True)
    rp.add_argument("--status")
    _add_common(rp)
    rp.set_defaults(func=cmd_review_list)
    rp = rsub.add_parser("apply", help="apply review decisions")
    rp.add_argument("--store", required=True)
    rp.add_argument("--proposal")
    rp.add_argument("--action", choices=["accept", "reject", "rename", "split", "merge"])
    rp.add_argument("--payload", help="JSON payload for rename/split/merge")
    rp.add_argument("--decisions", help="JSONL file of decisions to apply in order")
    _add_common(rp)
    rp.set_defaults(func=cmd_review_apply)

    p = sub.add_parser("batch", help="run one expansion-loop iteration over a page file")
    p.add_argument("--store", required=True)
    p.add_argument("--pages", required=True)
    p.add_argument("--mode", default="auto", choices=["auto", "interactive"])
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--knowledge-inventory")
    p.add_argument("--backend-cmd")
    p.add_argument("--embeddings")
    p.add_argument("--refresh-cmd")
    p.add_argument("--out", help="write batch predictions JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("loss-check", help="verify loss gradients by finite differences")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--max-len", type=int, default=32)
    p.add_argument("--task", default="extraction", choices=sorted(PRESETS))
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_loss_check)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--corpus")
    p.add_argument("--inventory", help="seed an empty store with this inventory")
    p.add_argument("--knowledge-inventory")
    p.add_argument("--ui-dir")
    for flag, typ in (
        ("--budget", int), ("--overlap", int), ("--n-top", int), ("--mass", float),
        ("--cap", int), ("--short-cap", int), ("--null-offset", float), ("--max-aliases", int),
    ):
        p.add_argument(flag, type=typ)
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (KvcanonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
