"""Command-line entry point: generate, featurize, train, evaluate, predict,
replay and serve, chained through the JSONL/JSON file formats.

Every stage is deterministic for a fixed --seed: re-running a command with
identical inputs produces byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

FORMATS_NOTE = """\
file formats:
  datasets   JSON Lines; header {"format": "cyltouch-dataset", ...}, then one
             record per sample: {"label", "kind": "raw"|"featurized", "shape",
             "data": [row-major floats]}
  models     JSON; {"format": "cyltouch-model"|"cyltouch-mdcm"|"cyltouch-mlp", ...}
  frame logs JSON Lines; {"t": <ms>, "grid": [[rows x cols floats]]}
  command logs JSON Lines; {"t", "intent", "linear_mps", "angular_rps"}
"""


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cyltouch",
        description="Grasp-intent recognition on a cylindrical tactile grid.",
        epilog=FORMATS_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--seed", type=int, default=0,
                   help="root seed; all stage randomness derives from it")
    p.add_argument("--quiet", action="store_true", help="suppress progress chatter")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("CYLTOUCH_THREADS", "1")),
                   help="parallel workers for eval seeds (env: CYLTOUCH_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("simgen", help="generate a simulated raw dataset",
                       description="Writes a raw dataset of noisy, randomly "
                                   "row-shifted base patterns.")
    g.add_argument("--out", required=True, help="output dataset (.jsonl)")
    g.add_argument("--patterns", help="patterns.json (default: packaged patterns)")
    g.add_argument("--samples-per-class", type=_positive_int, default=40)
    g.add_argument("--frames-per-sample", type=_positive_int, default=45)
    g.add_argument("--max-shift", type=int, default=2)
    g.add_argument("--noise-sigma", type=float, default=0.05)
    g.add_argument("--jitter-sigma", type=float, default=0.02)
    g.add_argument("--forward-bias", type=float, default=0.0,
                   help="palm-contact contamination strength (default off)")

    f = sub.add_parser("featurize", help="collapse raw windows into feature maps")
    f.add_argument("--in", dest="inp", required=True, help="raw dataset (.jsonl)")
    f.add_argument("--out", required=True, help="featurized dataset (.jsonl)")

    t = sub.add_parser("train", help="train the kernel SVM classifier")
    t.add_argument("--in", dest="inp", required=True,
                   help="featurized dataset (.jsonl)")
    t.add_argument("--out", required=True, help="model file (.json)")
    t.add_argument("--kernel", choices=("rbf", "cylindrical"),
                   default="cylindrical")
    t.add_argument("--grid", action="store_true",
                   help="cross-validated hyperparameter search before training")
    t.add_argument("--C", type=float, default=None)
    t.add_argument("--gamma", type=float, default=None)
    t.add_argument("--delta", type=float, default=None)
    t.add_argument("--tol", type=float, default=1e-3)
    t.add_argument("--max-passes", type=_positive_int, default=200)
    t.add_argument("--folds", type=_positive_int, default=5)
    t.add_argument("--psd-clip", action="store_true",
                   help="clip negative Gram eigenvalues before solving")
    t.add_argument("--eig-report", action="store_true",
                   help="print the training Gram eigenvalue summary")

    e = sub.add_parser("eval", help="run the multi-seed method comparison")
    e.add_argument("--config", help="experiment config (.json); defaults used "
                                    "when omitted")
    e.add_argument("--out", required=True, help="report file (.json)")
    e.add_argument("--csv", help="also write accuracies as CSV")
    e.add_argument("--confusion", help="also write confusion counts as CSV")
    e.add_argument("--text", action="store_true",
                   help="print the text report to stdout")
    e.add_argument("--methods", help="comma-separated subset of "
                                     "rbf_svm,ck_svm,mlp,mdcm")
    e.add_argument("--seeds", help="comma-separated seed list")
    e.add_argument("--hyper-search", action="store_true")
    e.add_argument("--max-shift", type=int, default=None,
                   help="override the generator's max row shift")
    e.add_argument("--forward-bias", type=float, default=None)
    e.add_argument("--dataset", help="evaluate a dataset file instead of "
                                     "generating one per seed")

    pr = sub.add_parser("predict", help="classify a featurized dataset")
    pr.add_argument("--model", required=True, help="model file (.json)")
    pr.add_argument("--in", dest="inp", required=True,
                    help="featurized dataset (.jsonl)")
    pr.add_argument("--out", help="predictions file (.jsonl); stdout if omitted")

    r = sub.add_parser("replay", help="run a frame log through the live pipeline")
    r.add_argument("--model", required=True, help="model file (.json)")
    r.add_argument("--log", required=True, help="frame log (.jsonl)")
    r.add_argument("--out", required=True, help="command log (.jsonl)")

    s = sub.add_parser("serve", help="run the streaming classification service")
    s.add_argument("--model", required=True, help="model file (.json)")
    s.add_argument("--port", type=int, default=8800,
                   help="TCP port for newline-delimited JSON sessions")
    s.add_argument("--http-port", type=int, default=None,
                   help="HTTP/WebSocket port for the browser UI "
                        "(default: port+1)")
    s.add_argument("--patterns", help="patterns.json served to the UI presets")
    s.add_argument("--ui-dir", help="static asset directory for the browser UI")
    s.add_argument("--host", default="127.0.0.1")
    return p


def _say(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _cmd_simgen(args) -> int:
    from .dataset import save_dataset
    from .simgen import GeneratorConfig, generate, load_patterns

    if args.patterns:
        shape, patterns = load_patterns(args.patterns)
    else:
        from .simgen import packaged_patterns

        shape, patterns = packaged_patterns()
    cfg = GeneratorConfig(
        shape=shape,
        samples_per_class=args.samples_per_class,
        frames_per_sample=args.frames_per_sample,
        max_shift=args.max_shift,
        noise_sigma=args.noise_sigma,
        temporal_jitter_sigma=args.jitter_sigma,
        forward_bias=args.forward_bias,
        base_patterns=patterns,
        seed=args.seed,
    )
    ds = generate(cfg)
    save_dataset(ds, args.out)
    _say(args, f"wrote {len(ds)} samples to {args.out}")
    return 0


def _cmd_featurize(args) -> int:
    from .dataset import load_dataset, save_dataset
    from .featurize import featurize_dataset

    ds = load_dataset(args.inp)
    if ds.kind != "raw":
        raise ValueError(f"{args.inp} holds {ds.kind} records; featurize "
                         "expects a raw dataset")
    out = featurize_dataset(ds)
    save_dataset(out, args.out)
    _say(args, f"featurized {len(out)} samples into {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .dataset import load_dataset
    from .kernels import KernelSpec, gram, gram_eigen_report
    from .svm import (DEFAULT_C, grid_search, save_model, train_multiclass)

    ds = load_dataset(args.inp)
    if ds.kind != "featurized":
        raise ValueError(f"{args.inp} holds {ds.kind} records; train expects "
                         "a featurized dataset (run featurize first)")
    shape = ds.grid_shape()
    if args.grid:
        gs = grid_search(ds, args.kernel, folds=args.folds, seed=args.seed,
                         tol=args.tol, max_passes=args.max_passes)
        spec, C = gs.best_spec, gs.best_C
        _say(args, f"grid search: {spec.to_dict()} C={C} "
                   f"(cv accuracy {gs.best_cv_accuracy:.4f})")
    else:
        base = KernelSpec.default(shape, args.kernel)
        gamma = args.gamma if args.gamma is not None else base.gamma
        delta = args.delta if args.delta is not None else base.delta
        spec = KernelSpec(args.kernel, gamma, delta)
        C = args.C if args.C is not None else DEFAULT_C
    model = train_multiclass(ds, spec, C=C, tol=args.tol,
                             max_passes=args.max_passes, seed=args.seed,
                             psd_clip=args.psd_clip)
    if args.grid:
        model.train_meta["grid_search"] = {"folds": args.folds,
                                           "cv_accuracy": gs.best_cv_accuracy}
    save_model(model, args.out)
    if args.eig_report:
        rep = gram_eigen_report(gram(spec, ds.payloads()))
        print(json.dumps(rep))
    _say(args, f"trained {args.kernel} model on {len(ds)} samples "
               f"-> {args.out}")
    return 0


def _load_experiment_config(args):
    from .evaluate import ExperimentConfig
    from .simgen import GeneratorConfig
    from .types import GridShape

    gen = GeneratorConfig(seed=args.seed)
    kwargs = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        gen_doc = doc.get("generator", {})
        if gen_doc:
            shape = gen_doc.get("shape")
            gen = GeneratorConfig(
                shape=GridShape(*shape) if shape else GridShape(),
                samples_per_class=gen_doc.get("samples_per_class", 40),
                frames_per_sample=gen_doc.get("frames_per_sample", 45),
                max_shift=gen_doc.get("max_shift", 2),
                noise_sigma=gen_doc.get("noise_sigma", 0.05),
                temporal_jitter_sigma=gen_doc.get("temporal_jitter_sigma", 0.02),
                forward_bias=gen_doc.get("forward_bias", 0.0),
                seed=args.seed,
            )
        for key in ("methods", "seeds", "train_fraction", "hyper_search",
                    "folds", "C", "shrinkage"):
            if key in doc:
                kwargs[key] = tuple(doc[key]) if key in ("methods", "seeds") \
                    else doc[key]
        if doc.get("dataset"):
            kwargs["dataset_path"] = doc["dataset"]
    if args.methods:
        kwargs["methods"] = tuple(args.methods.split(","))
    if args.seeds:
        kwargs["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.hyper_search:
        kwargs["hyper_search"] = True
    if args.dataset:
        kwargs["dataset_path"] = args.dataset
    if args.max_shift is not None:
        gen = replace(gen, max_shift=args.max_shift)
    if args.forward_bias is not None:
        gen = replace(gen, forward_bias=args.forward_bias)
    kwargs["threads"] = max(1, args.threads)
    return ExperimentConfig(generator=gen, **kwargs)


def _cmd_eval(args) -> int:
    from .evaluate import confusion_csv, render_report, run_experiment

    cfg = _load_experiment_config(args)
    report = run_experiment(cfg, progress=None if args.quiet
                            else (lambda m: print(m, file=sys.stderr)))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(render_report(report, "json"))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(render_report(report, "csv"))
    if args.confusion:
        with open(args.confusion, "w", encoding="utf-8") as fh:
            fh.write(confusion_csv(report))
    if args.text:
        print(render_report(report, "text"), end="")
    _say(args, f"report written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    from .dataset import load_dataset
    from .svm import load_model, predict_batch

    model = load_model(args.model)
    ds = load_dataset(args.inp)
    if ds.kind != "featurized":
        raise ValueError(f"{args.inp} holds {ds.kind} records; predict expects "
                         "a featurized dataset")
    pred, votes = predict_batch(model, ds.payloads())
    lines = []
    from .types import IntentLabel

    for i, (p, v) in enumerate(zip(pred, votes)):
        lines.append(json.dumps({"index": i, "label": IntentLabel(int(p)).name,
                                 "votes": [int(x) for x in v]}))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    truth = ds.labels()
    acc = float(np.mean(pred == truth))
    _say(args, f"accuracy against file labels: {acc:.4f} ({len(ds)} samples)")
    return 0


def _cmd_replay(args) -> int:
    from .pipeline import load_frame_log, replay, save_command_log
    from .svm import load_model

    model = load_model(args.model)
    frames = load_frame_log(args.log, model.grid_shape())
    commands = replay(frames, model)
    save_command_log(commands, args.out)
    _say(args, f"replayed {len(frames)} frames -> {len(commands)} commands "
               f"in {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve_forever
    from .simgen import load_patterns, packaged_patterns
    from .svm import load_model

    model = load_model(args.model)
    if args.patterns:
        _, patterns = load_patterns(args.patterns)
    else:
        _, patterns = packaged_patterns()
    http_port = args.http_port if args.http_port is not None else args.port + 1
    _say(args, f"serving NDJSON on {args.host}:{args.port}, "
               f"HTTP/WS on {args.host}:{http_port} (Ctrl-C to stop)")
    serve_forever(model, host=args.host, port=args.port, http_port=http_port,
                  patterns=patterns, ui_dir=args.ui_dir)
    return 0


_COMMANDS = {
    "simgen": _cmd_simgen,
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "replay": _cmd_replay,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 130
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"cyltouch {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
