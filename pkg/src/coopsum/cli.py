"""Command-line entry point: ``coopsum {summarize,diagnose,rank-eval,rerun}``.

On failure the process exits nonzero and prints a JSON object
``{"error": {"type": ..., "message": ...}}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .latentspace import MAX_EXACT_N
from .pipeline import RunConfig, load_embedded_config, run
from .search import OVERLAP_METRICS
from .textmetrics import REF_MODES


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="entities JSONL")
    p.add_argument("--overlap", choices=OVERLAP_METRICS, default="rouge1")
    p.add_argument("--ref-mode", choices=REF_MODES, default="average")
    p.add_argument("--latents", help="external latents JSONL (default: toy-encode the reviews)")
    p.add_argument("--toy-vocab", help="decoder vocabulary, one word per line (default: corpus words)")
    p.add_argument("--toy-dim", type=int, default=64)
    p.add_argument("--kappa", type=float, default=3.0, help="decoded length per unit of latent norm")
    p.add_argument("--max-len", type=int, default=40)
    p.add_argument("--block-pronouns", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--max-exact-n", type=int, default=MAX_EXACT_N)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coopsum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("summarize", help="aggregate latents per entity and decode summaries")
    _common(p)
    p.add_argument(
        "--method",
        default="coop-exact",
        help="simpleavg | coop-exact | coop-greedy:{forward|backward} | "
        "coop-beam:{forward|backward}:K | ivw | rescale:ALPHA | extractive:K | random:SEED",
    )
    p.add_argument("--timing", action="store_true", help="record per-entity wall time (breaks byte-reproducibility)")

    p = sub.add_parser("diagnose", help="norm shrinkage and correlation diagnostics")
    _common(p)
    p.add_argument("--max-n", type=int, help="largest number of averaged reviews (default: fewest per entity)")

    p = sub.add_parser("rank-eval", help="MRR/nDCG of method selections against the gold ranking")
    _common(p)
    p.add_argument("--methods", help="comma-separated methods (default: random:SEED,simpleavg,coop-exact)")
    p.add_argument("--simulate-random", type=int, default=0, metavar="N",
                   help="add a Monte Carlo random-selection row over N simulated entities")

    p = sub.add_parser("rerun", help="repeat a run from the config embedded in one of its outputs")
    p.add_argument("source", help="summaries.jsonl, metrics.json, diagnostics.json or ranking.json")
    p.add_argument("--out", default=".")
    p.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "rerun":
        return RunConfig.from_embedded(load_embedded_config(args.source), out=args.out, workers=args.workers)
    cfg = RunConfig(
        command=args.command,
        input=args.input,
        overlap=args.overlap,
        ref_mode=args.ref_mode,
        latents=args.latents,
        toy_vocab=args.toy_vocab,
        toy_dim=args.toy_dim,
        kappa=args.kappa,
        max_len=args.max_len,
        block_pronouns=args.block_pronouns,
        max_exact_n=args.max_exact_n,
        seed=args.seed,
        out=args.out,
        workers=args.workers,
    )
    if args.command == "summarize":
        cfg.method = args.method
        cfg.timing = args.timing
    elif args.command == "diagnose":
        cfg.max_n = args.max_n
    elif args.command == "rank-eval":
        cfg.methods = [m.strip() for m in args.methods.split(",")] if args.methods else []
        cfg.simulate_random = args.simulate_random
    return cfg


def _print_result(cfg: RunConfig, result: dict) -> None:
    if cfg.command == "summarize":
        keys = ("entities", "mean_objective", "rouge_vs_gold")
        print(json.dumps({k: result[k] for k in keys if k in result}, indent=2))
    elif cfg.command == "diagnose":
        print(result["_text"])
        print(json.dumps({k: result[k] for k in ("norm_quality_spearman", "overlap_rouge_spearman") if k in result}, indent=2))
    else:
        print(result["_text"])


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = config_from_args(args)
        result = run(cfg)
        _print_result(cfg, result)
        return 0
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        err = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(err), file=sys.stderr)
        return 2 if isinstance(exc, CliError) else 1


if __name__ == "__main__":
    sys.exit(main())
