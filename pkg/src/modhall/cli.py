"""Command-line entry point.

Every command operates on one experiment config (defaults apply when
--config is omitted) and funnels through the staged pipeline, so results
are idempotent and land under a run directory keyed by the config hash.

Exit codes: 0 success, 2 config error, 3 dependency error (a required
stage has not run), 4 training failure.
"""

import argparse
import dataclasses
import json
import sys
import time

from .config import (
    ABLATION_SUITES, ExperimentConfig, config_hash, parse_config,
)
from .baselines import BASELINE_KINDS
from .errors import (
    CheckpointError, ConfigError, DependencyError, ModhallError, TrainingError,
)


def _load_config(args):
    cfg = (parse_config(args.config) if args.config is not None
           else ExperimentConfig())
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, training=dataclasses.replace(cfg.training, seed=args.seed))
    return cfg


def _run_stages(args, stages):
    from .pipeline import STAGES, run_pipeline

    cfg = _load_config(args)
    out = run_pipeline(cfg, stages=stages)
    requested = stages if stages is not None else list(STAGES)
    skipped = [s for s in requested if s not in out["executed"]]
    for s in out["executed"]:
        arts = out["manifest"]["stages"][s]["artifacts"]
        print(f"{s}: {len(arts)} artifact(s) under {out['run_dir']}")
    if skipped:
        print(f"already complete: {', '.join(skipped)}")
    return 0


def _cmd_prepare_data(args):
    return _run_stages(args, ["data"])


def _cmd_train(args):
    return _run_stages(args, [args.step])


def _cmd_baseline(args):
    if args.kind is None:
        return _run_stages(args, ["baselines"])
    from .pipeline import run_stage_subset

    cfg = _load_config(args)
    arts = run_stage_subset(cfg, "baselines", [args.kind])
    for a in arts:
        print(f"wrote {a['path']}")
    return 0


def _cmd_evaluate(args):
    from .pipeline import PipelineContext, run_pipeline

    cfg = _load_config(args)
    out = run_pipeline(cfg, stages=["eval"])
    ctx = PipelineContext(cfg)
    with open(ctx.path("eval", "main.json")) as f:
        doc = json.load(f)
    for row in doc["rows"]:
        print(f"{row['model']:32s} {row['acc']:.4f}")
    if doc.get("p_fake_clean") is not None:
        print(f"{'fake-prob (clean B)':32s} {doc['p_fake_clean']:.4f}")
    print(f"report: {out['run_dir']}/eval/main.json")
    return 0


def _cmd_noise_sweep(args):
    from .pipeline import PipelineContext, run_pipeline

    cfg = _load_config(args)
    run_pipeline(cfg, stages=["sweep"])
    ctx = PipelineContext(cfg)
    with open(ctx.path("eval", "sweep.json")) as f:
        doc = json.load(f)
    print(f"{'variance':>10s} {'two-stream':>11s} {'hall-fused':>11s} {'p_fake':>8s}")
    rows = doc["rows"] + ([doc["void_row"]] if doc.get("void_row") else [])
    for r in rows:
        print(f"{r['variance']:>10g} {r['two_stream_acc']:>11.4f} "
              f"{r['hall_fused_acc']:>11.4f} {r['p_fake']:>8.4f}")
    sp = doc.get("switch_point")
    print("switch point:", "none" if sp is None else f"{sp:g}")
    return 0


def _cmd_ablate(args):
    if args.suite is None:
        return _run_stages(args, ["ablate"])
    from .pipeline import run_stage_subset

    cfg = _load_config(args)
    arts = run_stage_subset(cfg, "ablate", [args.suite])
    for a in arts:
        print(f"wrote {a['path']}")
    return 0


def _cmd_report(args):
    from .evaluation.report import emit_report
    from .pipeline import run_dir_for

    if args.root is not None:
        out = emit_report(args.root, plot=args.plot)
    else:
        cfg = _load_config(args)
        out = emit_report(run_dir_for(cfg), plot=args.plot)
    print(f"report: {out['report']}")
    for p in out["plots"]:
        print(f"plot: {p}")
    return 0


def _cmd_pipeline(args):
    stages = None
    if args.stages:
        stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    return _run_stages(args, stages if stages else None)


def _cmd_gradcheck(args):
    from .evaluation.gradcheck import run_gradcheck

    results = run_gradcheck(seed=args.seed or 0)
    worst = max(results.values())
    for name, err in results.items():
        print(f"{name:24s} max relative error {err:.3e}")
    if worst > 1e-4:
        print("FAIL: analytic and numerical gradients disagree")
        return 1
    print("OK (tolerance 1e-4)")
    return 0


def _cmd_benchmark(args):
    import numpy as np

    from . import backend

    shapes = [(args.batch, args.image_size, args.image_size, args.channels)]
    kernels = [(3, 1, 1), (3, 2, 1)]  # (k, stride, pad)
    rng = np.random.default_rng(0)
    print(f"{'case':<28s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for shape in shapes:
        n, h, w, cin = shape
        cout = args.channels * 2
        for k, stride, pad in kernels:
            x = rng.standard_normal(shape).astype(np.float32)
            wgt = rng.standard_normal((k, k, cin, cout)).astype(np.float32)
            times = {}
            for name in ("numpy", "numba"):
                if name == "numba" and not backend.numba_available():
                    times[name] = None
                    continue
                backend.set_backend(name)
                # warmup / jit compile, both kernels
                y = backend.conv2d(x, wgt, stride, pad)
                backend.conv2d_backward_data(
                    np.ones_like(y), wgt, stride, pad, (h, w))
                t0 = time.perf_counter()
                for _ in range(args.iters):
                    y = backend.conv2d(x, wgt, stride, pad)
                    backend.conv2d_backward_data(
                        np.ones_like(y), wgt, stride, pad, (h, w))
                times[name] = (time.perf_counter() - t0) / args.iters
            backend.set_backend("auto")
            label = f"{n}x{h}x{w}x{cin} k{k}s{stride}"
            tn = times["numpy"]
            tb = times["numba"]
            tb_s = "n/a" if tb is None else f"{tb * 1e3:8.2f}ms"
            ratio = "-" if tb is None else f"{tn / tb:7.2f}x"
            print(f"{label:<28s} {tn * 1e3:8.2f}ms {tb_s:>10s} {ratio:>8s}")
    print(f"active backend on this machine: {backend.active_backend()}")
    return 0


def _parser():
    p = argparse.ArgumentParser(
        prog="modhall",
        description="Two-step hallucination training: supervised streams, "
                    "then an adversarial game that distills the privileged "
                    "modality into a network reading only the test modality.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config "
                        "(defaults used when omitted)")
    common.add_argument("--seed", type=int, default=None,
                        help="override training.seed")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare-data", parents=[common],
                        help="generate (or ingest) the dataset")
    sp.set_defaults(func=_cmd_prepare_data)

    sp = sub.add_parser("train", parents=[common],
                        help="run one training step")
    sp.add_argument("step", choices=("step1", "step2"))
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("baseline", parents=[common],
                        help="train comparison baselines")
    sp.add_argument("action", choices=("run",))
    sp.add_argument("--kind", choices=BASELINE_KINDS, default=None,
                    help="one baseline (default: all configured kinds)")
    sp.set_defaults(func=_cmd_baseline)

    sp = sub.add_parser("evaluate", parents=[common],
                        help="score all trained models on the test split")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("noise-sweep", parents=[common],
                        help="degrade modality B and trace the switch point")
    sp.set_defaults(func=_cmd_noise_sweep)

    sp = sub.add_parser("ablate", parents=[common],
                        help="run ablation suites")
    sp.add_argument("--suite", choices=ABLATION_SUITES, default=None)
    sp.set_defaults(func=_cmd_ablate)

    sp = sub.add_parser("report", parents=[common],
                        help="render tables (and plots) from run artifacts")
    sp.add_argument("--root", default=None,
                    help="aggregate every run under this directory "
                         "(per-seed columns)")
    sp.add_argument("--plot", action="store_true",
                    help="also render sweep figures")
    sp.set_defaults(func=_cmd_report)

    sp = sub.add_parser("pipeline", parents=[common],
                        help="run several stages in order")
    sp.add_argument("--stages", default=None,
                    help="comma-separated subset of: data,step1,step2,"
                         "baselines,eval,sweep,ablate,report")
    sp.set_defaults(func=_cmd_pipeline)

    sp = sub.add_parser("gradcheck", parents=[common],
                        help="verify analytic gradients on toy models")
    sp.set_defaults(func=_cmd_gradcheck)

    sp = sub.add_parser("benchmark", parents=[common],
                        help="compare the compiled and pure-numpy conv kernels")
    sp.add_argument("--batch", type=int, default=16)
    sp.add_argument("--image-size", type=int, default=32)
    sp.add_argument("--channels", type=int, default=16)
    sp.add_argument("--iters", type=int, default=5)
    sp.set_defaults(func=_cmd_benchmark)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except (DependencyError, CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except TrainingError as e:
        print(f"training failed: {e}", file=sys.stderr)
        if e.last_good:
            print(f"last good checkpoint: {e.last_good}", file=sys.stderr)
        return 4
    except ModhallError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
