"""Command-line entry point.

One subcommand per pipeline stage plus grad-check and ablate.  The
BRAINVIS_FORGE_THREADS environment variable caps BLAS parallelism; it is
applied before numpy loads, which is why heavy imports live inside main().
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("BRAINVIS_FORGE_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brainvis-forge",
        description="Desk-scale EEG-to-image pipeline: pretraining, fusion, alignment, cascaded diffusion, evaluation.",
    )
    parser.add_argument("--config", help="JSON config file (defaults apply otherwise)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--run-dir", default="runs/run", help="run directory (default: runs/run)")
    parser.add_argument(
        "--ablate",
        choices=["no-time", "no-freq", "no-pretrain", "no-finetune", "no-refine", "no-semantic"],
        default=None,
        help="disable one component (see the ablate command)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("gen-data", "generate the synthetic dataset and semantic fixtures"),
        ("train-lmm", "masked-latent pretraining of the time branch"),
        ("train-freq", "supervised pretraining of the frequency branch"),
        ("finetune-tfe", "staged fine-tuning of the fused classifier"),
        ("train-align", "train the semantic alignment network"),
        ("train-diffusion", "train the conditional denoiser"),
        ("generate", "sample images for the test records"),
        ("evaluate", "score classification and generation, write report.json"),
        ("grad-check", "finite-difference verification of every op (nonzero exit on failure)"),
        ("ablate", "run the full chain with the --ablate switch applied"),
    ]:
        p = sub.add_parser(name, help=doc)
        if name == "grad-check":
            p.add_argument("--probes", type=int, default=10)
            p.add_argument("--tol", type=float, default=1e-4)
    return parser


def main(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)

    from .config import PipelineConfig
    from .runner import (
        RunPaths,
        run_evaluate,
        run_finetune_tfe,
        run_full_chain,
        run_gen_data,
        run_generate,
        run_grad_check,
        run_train_align,
        run_train_diffusion,
        run_train_freq,
        run_train_lmm,
    )

    if args.command == "grad-check":
        worst, ok = run_grad_check(probes=args.probes, tol=args.tol)
        for name in sorted(worst):
            status = "ok" if worst[name] < args.tol else "FAIL"
            print(f"{status:4s} {name:24s} max rel err {worst[name]:.3e}")
        print(f"grad-check: {len(worst)} ops, tol {args.tol:g}: {'pass' if ok else 'FAIL'}")
        return 0 if ok else 1

    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.ablate is not None:
        overrides["ablate"] = args.ablate
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    paths = RunPaths(args.run_dir)

    commands = {
        "gen-data": run_gen_data,
        "train-lmm": run_train_lmm,
        "train-freq": run_train_freq,
        "finetune-tfe": run_finetune_tfe,
        "train-align": run_train_align,
        "train-diffusion": run_train_diffusion,
        "generate": run_generate,
        "evaluate": run_evaluate,
    }
    if args.command == "ablate":
        if cfg.ablate is None:
            print("ablate: pass --ablate MODE to select the component to disable", file=sys.stderr)
            return 2
        report = run_full_chain(cfg, paths)
        print(report.to_json())
        return 0

    result = commands[args.command](cfg, paths)
    if hasattr(result, "to_json"):
        print(result.to_json())
    else:
        print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
