"""``ddigraph`` command line.

stdout carries results only; diagnostics and errors go to stderr. Failures
print one line ``error category=<usage|data|model|internal> type=<Name>: msg``
and exit 2 (usage), 3 (data), 4 (model file) or 1 (anything else).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from ddigraph.errors import DDIError

EXIT_CODES = {"usage": 2, "data": 3, "model": 4, "internal": 1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    env = os.environ.get("DDIGRAPH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DDIGRAPH_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    from ddigraph.train import TrainConfig

    d = TrainConfig()
    p = _Parser(prog="ddigraph", description="Drug-drug interaction prediction from SMILES pairs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model on a labelled pair CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    t.add_argument("--epochs", type=int, default=d.epochs)
    t.add_argument("--steps", type=int, default=d.steps_per_epoch, help="steps per epoch")
    t.add_argument("--batch", type=int, default=d.batch_size)
    t.add_argument("--lr", type=float, default=d.lr)
    t.add_argument("--seed", type=int)
    t.add_argument("--val-split", type=float, default=0.0, help="held-out fraction for per-epoch metrics")
    t.add_argument("--max-nodes", type=int, default=d.max_nodes)
    t.add_argument("--threads", type=int, default=1)
    t.add_argument("--shared-degree-weights", action="store_true")
    t.add_argument("--share-attention-w", action="store_true")

    e = sub.add_parser("eval", help="print ROC-AUC, F1 and AUPR on a labelled pair CSV")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--symmetrize", action="store_true")
    e.add_argument("--threshold", type=float, default=0.5)

    pr = sub.add_parser("predict", help="interaction probability for one pair")
    pr.add_argument("--model", required=True)
    pr.add_argument("--smiles-a", required=True)
    pr.add_argument("--smiles-b", required=True)
    pr.add_argument("--symmetrize", action="store_true")

    x = sub.add_parser("explain", help="render attention highlights for one pair")
    x.add_argument("--model", required=True)
    x.add_argument("--smiles-a", required=True)
    x.add_argument("--smiles-b", required=True)
    x.add_argument("--out-dir", required=True)
    x.add_argument("--format", default="svg", choices=["svg", "dot"])
    x.add_argument("--per-drug", action="store_true", help="select the layer per drug")

    f = sub.add_parser("featurize", help="print the atom feature matrix as CSV")
    f.add_argument("--smiles", required=True)
    f.add_argument("--max-nodes", type=int, default=d.max_nodes)

    s = sub.add_parser("sample-negatives", help="balance a positive pair CSV with random negatives")
    s.add_argument("--positives", required=True)
    s.add_argument("--pool", required=True, help="text file, one SMILES per line")
    s.add_argument("--seed", type=int)
    return p


def _cmd_train(args, out, err):
    from ddigraph.data import load_pairs, split_dataset
    from ddigraph.model_io import save_model
    from ddigraph.train import TrainConfig, history_csv, train

    seed = args.seed if args.seed is not None else _default_seed()
    try:
        config = TrainConfig(
            lr=args.lr,
            epochs=args.epochs,
            steps_per_epoch=args.steps,
            batch_size=args.batch,
            max_nodes=args.max_nodes,
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    data = load_pairs(args.data, config.max_nodes)
    validation = None
    if args.val_split:
        if not 0.0 < args.val_split < 1.0:
            raise UsageError("--val-split must lie in (0, 1)")
        data, validation = split_dataset(data, 1.0 - args.val_split, seed)
    overrides = {"shared_degree_weights": args.shared_degree_weights, "share_attention_w": args.share_attention_w}
    params, history = train(data, config, validation, threads=args.threads, model_overrides=overrides)
    save_model(params, args.out, config.to_dict())
    hist_path = args.history or f"{args.out}.history.csv"
    Path(hist_path).write_text(history_csv(history))
    print(f"final_mean_loss={history[-1]['mean_loss']:.6f}", file=out)


def _cmd_eval(args, out, err, scorer=None):
    from ddigraph.data import load_pairs
    from ddigraph.model_io import load_model
    from ddigraph.train import evaluate

    params = load_model(args.model) if scorer is None else None
    max_nodes = params.config.max_nodes if params is not None else 65
    data = load_pairs(args.data, max_nodes)
    _, m = evaluate(params, data, args.symmetrize, scorer=scorer, threshold=args.threshold)
    print(m.line(), file=out)


def _cmd_predict(args, out, err):
    from ddigraph.features import featurize
    from ddigraph.model import predict_probability
    from ddigraph.model_io import load_model
    from ddigraph.smiles import parse

    params = load_model(args.model)
    n = params.config.max_nodes
    a = featurize(parse(args.smiles_a), n)
    b = featurize(parse(args.smiles_b), n)
    print(f"{predict_probability(a, b, params, args.symmetrize):.6f}", file=out)


def _cmd_explain(args, out, err):
    from ddigraph.explain import explain_pair

    result = explain_pair(args.smiles_a, args.smiles_b, args.model, args.format, args.per_drug)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, doc in zip(("drug_a", "drug_b"), result.documents):
        (outdir / f"{name}.{args.format}").write_text(doc)
    (outdir / "attention.json").write_text(result.json_text)
    print(f"{result.probability:.6f}", file=out)


def _cmd_featurize(args, out, err):
    from ddigraph.features import featurize, to_csv
    from ddigraph.smiles import parse

    out.write(to_csv(featurize(parse(args.smiles), args.max_nodes)))


def _cmd_sample_negatives(args, out, err):
    from ddigraph.data import PairDataset, PairRecord, balanced_dataset, dumps_pairs, load_pairs

    seed = args.seed if args.seed is not None else _default_seed()
    positives = load_pairs(args.positives)
    positives = PairDataset([PairRecord(r.smiles_a, r.smiles_b, 1) for r in positives])
    pool_path = Path(args.pool)
    if not pool_path.exists():
        raise FileNotFoundError(f"no such file: {pool_path}")
    pool = [ln.strip() for ln in pool_path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    out.write(dumps_pairs(balanced_dataset(positives, pool, seed)))


COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "explain": _cmd_explain,
    "featurize": _cmd_featurize,
    "sample-negatives": _cmd_sample_negatives,
}


def _fail(err, category, exc) -> int:
    msg = str(exc).replace("\n", " ")
    print(f"error category={category} type={type(exc).__name__}: {msg}", file=err)
    return EXIT_CODES[category]


def run(argv=None, stdout=None, stderr=None, scorer=None) -> int:
    """Execute one command; returns the process exit code.

    ``scorer(record) -> float`` replaces the model in ``eval`` (tests only).
    """
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        old_err, sys.stderr = sys.stderr, err
        try:
            args = parser.parse_args(argv)
        finally:
            sys.stderr = old_err
    except UsageError as exc:
        return _fail(err, "usage", exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=err, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "eval":
            _cmd_eval(args, out, err, scorer)
        else:
            COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        return _fail(err, "usage", exc)
    except DDIError as exc:
        return _fail(err, exc.category if exc.category in EXIT_CODES else "internal", exc)
    except (FileNotFoundError, IsADirectoryError) as exc:
        missing = getattr(exc, "filename", None) or str(exc)
        return _fail(err, "model" if getattr(args, "model", None) == missing else "data", exc)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
