"""Command-line entry point: ``langgoal <command> [options]``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus, geometry, goalgen, grounding
from . import instructions as ins
from . import oracle as orc
from . import semantics as sem
from .evaluation import evaluate_testsets
from .geometry import MappingParams

CONFIG_ENV = "L2G_CONFIG"

HP_KEYS = {f.name: f.type for f in dataclasses.fields(goalgen.Hyperparams)}
GEOMETRY_KEYS = {f.name for f in dataclasses.fields(MappingParams)}
OTHER_KEYS = {"n", "p_fail", "mode", "data", "model", "report_dir"}


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in HP_KEYS and key not in GEOMETRY_KEYS and key not in OTHER_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def hyperparams_from(cfg, seed=None):
    kw = {}
    for k, v in cfg.items():
        if k in HP_KEYS:
            kw[k] = float(v) if k in ("beta", "lr") else int(v)
    if seed is not None:
        kw["seed"] = seed
    return goalgen.Hyperparams(**kw)


def mapping_params_from(cfg):
    return MappingParams(**{k: float(v) for k, v in cfg.items() if k in GEOMETRY_KEYS})


def _load_config(args):
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    return read_config(path) if path else {}


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _seed(args, cfg):
    if args.seed is not None:
        return args.seed
    if "seed" in cfg:
        return int(cfg["seed"])
    raise ValueError("a seed is required (--seed or 'seed' in the config file)")


def _manifest_path(data_path):
    p = Path(data_path)
    return p.with_name(p.stem + ".splits.json")


# ---------------------------------------------------------------------------
# commands

def cmd_enumerate(args):
    for c in sem.enumerate_valid():
        print(sem.to_str(c), sem.structure_of(c).label())


def cmd_instructions(args):
    rows = [{"text": s.text, "slot": s.meaning.slot.index, "direction": f"{s.meaning.source}->{s.meaning.target}"}
            for s in ins.build_instruction_set()]
    _emit(json.dumps(rows, indent=1) + "\n", args.out)


def cmd_witness(args):
    cfg = _load_config(args)
    seed = _seed(args, cfg)
    params = mapping_params_from(cfg)
    rng = np.random.default_rng(seed)
    rows = []
    for structure in sem.all_structures():
        scene = geometry.sample_scene(structure, rng, params)
        rows.append({"config": sem.to_str(geometry.scene_to_config(scene, params)),
                     "structure": structure.label(), "positions": scene.round(6).tolist()})
    _emit(json.dumps(rows, indent=1) + "\n", args.out)


def cmd_oracle(args):
    _emit(json.dumps(orc.Oracle().to_json()) + "\n", args.out)


def cmd_gen_data(args):
    cfg = _load_config(args)
    seed = _seed(args, cfg)
    n = args.n if args.n is not None else int(cfg.get("n", 5000))
    if n < 1:
        raise ValueError("--n must be >= 1")
    data = corpus.generate_dataset(n, np.random.default_rng(seed))
    corpus.save_dataset(data, args.out)
    corpus.build_splits(data).save_manifest(_manifest_path(args.out))
    print(f"wrote {len(data)} triplets to {args.out}")


def cmd_train(args):
    cfg = _load_config(args)
    hp = hyperparams_from(cfg, args.seed)
    data = corpus.load_dataset(args.data or cfg["data"])
    splits = corpus.build_splits(data)
    model, history = goalgen.train(splits.train, hp)
    goalgen.save(model, args.out)
    if args.log:
        with open(args.log, "w") as f:
            for row in history:
                f.write(json.dumps(row, sort_keys=True) + "\n")
    last = history[-1]
    print(json.dumps({"model": str(args.out), **last}, sort_keys=True))


def cmd_eval(args):
    cfg = _load_config(args)
    seed = _seed(args, cfg)
    model = goalgen.load(args.model or cfg["model"])
    splits = corpus.build_splits(corpus.load_dataset(args.data or cfg["data"]))
    report = evaluate_testsets(model, orc.Oracle(), splits, n=args.n, rng=np.random.default_rng(seed), seed=seed)
    _emit(report.pretty() + "\n" if args.pretty else report.dumps(), args.out)


def cmd_sample(args):
    cfg = _load_config(args)
    seed = _seed(args, cfg)
    if args.n < 1:
        raise ValueError("--n must be >= 1")
    model = goalgen.load(args.model or cfg["model"])
    c_i = sem.from_str(args.ci)
    goals = goalgen.sample_goals(model, c_i, args.s, args.n, np.random.default_rng(seed))
    if args.pretty:
        text = "\n".join(f"{sem.to_str(g)}  {'valid' if sem.is_valid(g) else 'invalid'}" for g in goals) + "\n"
    else:
        text = json.dumps([sem.to_str(g) for g in goals]) + "\n"
    _emit(text, args.out)


def _executor(args, cfg):
    p_fail = args.p_fail if args.p_fail is not None else float(cfg.get("p_fail", 0.0))
    mode = args.mode or cfg.get("mode") or ("stochastic" if p_fail > 0 else "oracle-success")
    return grounding.ExecutorConfig(p_fail=p_fail, mode=mode)


def _protocol(args, run):
    cfg = _load_config(args)
    seed = _seed(args, cfg)
    model = goalgen.load(args.model or cfg["model"])
    report = run(model, _executor(args, cfg), np.random.default_rng(seed), seed)
    _emit(report.dumps(), args.out)


def cmd_trans_eval(args):
    _protocol(args, lambda m, ex, rng, seed: grounding.transition_protocol(m, ex, rng, seed=seed))


def cmd_expr_eval(args):
    _protocol(args, lambda m, ex, rng, seed: grounding.expression_protocol(m, ex, args.n_expr, rng, seed=seed))


def cmd_seq_eval(args):
    _protocol(args, lambda m, ex, rng, seed: grounding.sequence_protocol(m, ex, args.n_seq, rng, seed=seed))


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="langgoal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, seed=False, model=False, out=True):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
        if seed:
            p.add_argument("--seed", type=int)
        if model:
            p.add_argument("--model", help="weight file")
        if out:
            p.add_argument("--out", help="output file (default: stdout)")
        return p

    add("enumerate", cmd_enumerate, "print the valid configurations", out=False)
    add("instructions", cmd_instructions, "export the instruction set as JSON")
    add("oracle", cmd_oracle, "export the oracle dataset as JSON")
    add("witness", cmd_witness, "sample one block scene per structure class", seed=True)

    p = add("gen-data", cmd_gen_data, "generate a triplet dataset and its split manifest", seed=True, out=False)
    p.add_argument("--n", type=_positive)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train a goal generator", seed=True, out=False)
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write the per-epoch training log (JSONL)")

    p = add("eval", cmd_eval, "compatibility probability and coverage on the 5 test sets", seed=True, model=True)
    p.add_argument("--data")
    p.add_argument("--n", type=_positive, default=100)
    p.add_argument("--pretty", action="store_true")

    p = add("sample", cmd_sample, "sample goal configurations", seed=True, model=True)
    p.add_argument("--ci", required=True, help="initial configuration, 9 chars of 0/1")
    p.add_argument("--s", required=True, help="instruction text")
    p.add_argument("--n", type=_positive, default=10)
    p.add_argument("--pretty", action="store_true")

    for name, func, help_ in (
        ("trans-eval", cmd_trans_eval, "transition protocol (SR1/SR5)"),
        ("expr-eval", cmd_expr_eval, "logical-expression protocol (SR1/SR5)"),
        ("seq-eval", cmd_seq_eval, "instruction-sequence protocol (N_s)"),
    ):
        p = add(name, func, help_, seed=True, model=True)
        p.add_argument("--p-fail", type=float, dest="p_fail")
        p.add_argument("--mode", choices=("oracle-success", "stochastic"))
        if name == "expr-eval":
            p.add_argument("--n-expr", type=_positive, default=500, dest="n_expr")
        if name == "seq-eval":
            p.add_argument("--n-seq", type=_positive, default=20, dest="n_seq")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
