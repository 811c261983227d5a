"""Command-line interface: train, eval, predict, score-positions, gradcheck,
and bench subcommands.

Data goes to stdout, errors to stderr; exit code 0 on success, nonzero on
any error.  Every subcommand is deterministic given its seed flags.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from .data import embed, load_dataset, load_embeddings
from .diagnostics import model_gradient_report
from .layer import backward as layer_backward
from .layer import forward as layer_forward
from .layer import forward_reference, init_layer
from .model_io import load_model, save_model
from .network import (
    ModelConfig,
    forward_model,
    init_model,
    per_position_scores,
    predict,
)
from .optimizer import TrainConfig, predict_dataset, train

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nctc",
        description="Text classification with tensor features over non-consecutive n-grams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and save the best checkpoint")
    p.add_argument("--train", required=True, help="training file (<label>\\t<text> per line)")
    p.add_argument("--dev", help="development file for best-checkpoint selection")
    p.add_argument("--embeddings", required=True, help="word vector file")
    p.add_argument("--labels", required=True, help="comma-separated label names")
    p.add_argument("--layers", type=int, default=1, help="number of feature layers")
    p.add_argument("--order", type=int, default=3, help="n-gram order")
    p.add_argument("--hidden", type=int, default=50, help="feature dimension")
    p.add_argument("--decay", type=float, default=0.5, help="span decay in [0,1); 0 = consecutive only")
    p.add_argument("--dropout", type=float, default=0.0, help="dropout probability")
    p.add_argument("--lr", type=float, default=0.01, help="AdaGrad learning rate")
    p.add_argument("--l2", type=float, default=1e-5, help="L2 regularization weight")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--batch", type=int, default=1, help="mini-batch size (summed gradients)")
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="report accuracy and a confusion matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", required=True, help="word vector file used at training time")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="read pre-tokenized lines on stdin, print one label per line")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True, help="word vector file used at training time")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "score-positions",
        help="per-position probabilities and expected scores as CSV, inputs on stdin",
    )
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True, help="word vector file used at training time")
    p.add_argument("--scores", required=True, help="comma-separated score per label, e.g. -2,-1,0,1,2")
    p.set_defaults(func=cmd_score_positions)

    p = sub.add_parser("gradcheck", help="compare analytic gradients against central differences")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--hidden", type=int, default=5)
    p.add_argument("--dim", type=int, default=4, help="word dimension of the random input")
    p.add_argument("--length", type=int, default=6, help="sequence length of the random input")
    p.add_argument("--classes", type=int, default=3, help="number of labels")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="time the layer forward/backward pass across sequence lengths")
    p.add_argument("--lengths", default="250,500,1000,2000", help="comma-separated sequence lengths")
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--dim", type=int, default=100, help="input dimension")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def _parse_labels(spec: str) -> list[str]:
    labels = [name.strip() for name in spec.split(",")]
    if any(not name for name in labels):
        raise ValueError(f"invalid label list {spec!r}")
    return labels


def cmd_train(args) -> int:
    table = load_embeddings(args.embeddings)
    label_names = _parse_labels(args.labels)
    train_data = load_dataset(args.train, label_names)
    dev_data = load_dataset(args.dev, label_names) if args.dev else None
    config = ModelConfig(
        order=args.order,
        hidden=args.hidden,
        layers=args.layers,
        decay=args.decay,
        dropout=args.dropout,
        label_names=label_names,
        word_dim=table.dim,
    )
    model = init_model(config, np.random.default_rng(args.seed))
    cfg = TrainConfig(
        learning_rate=args.lr,
        l2_weight=args.l2,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch,
    )
    print("epoch\ttrain_loss\ttrain_acc\tdev_acc\tseconds")

    def log_epoch(stats) -> None:
        dev = "-" if stats.dev_acc is None else f"{stats.dev_acc:.4f}"
        print(
            f"{stats.epoch}\t{stats.train_loss:.17g}\t{stats.train_acc:.4f}\t{dev}\t{stats.seconds:.3f}"
        )

    result = train(model, train_data, cfg, table, dev_data=dev_data, on_epoch=log_epoch)
    save_model(result.best_model, args.out)
    print(f"saved epoch-{result.best_epoch} checkpoint to {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data, model.config.label_names)
    if len(dataset) == 0:
        raise ValueError(f"{args.data}: dataset has no examples")
    table = _require_table(model, args)
    preds = predict_dataset(model, dataset, table)
    labels = np.array([ex.label for ex in dataset])
    num_labels = model.num_labels
    confusion = np.zeros((num_labels, num_labels), dtype=np.int64)
    for true, pred in zip(labels, preds):
        confusion[true, pred] += 1
    print(f"examples\t{len(dataset)}")
    print(f"accuracy\t{float((preds == labels).mean()):.4f}")
    names = model.config.label_names
    print("confusion\t" + "\t".join(f"pred:{n}" for n in names))
    for i, name in enumerate(names):
        print(f"true:{name}\t" + "\t".join(str(c) for c in confusion[i]))
    return 0


def _require_table(model, args):
    # eval/predict/score need the same embeddings the model was trained with
    table = load_embeddings(args.embeddings)
    if table.dim != model.config.word_dim:
        raise ValueError(
            f"embedding dim {table.dim} does not match the model word_dim {model.config.word_dim}"
        )
    return table


def cmd_predict(args) -> int:
    model = load_model(args.model)
    table = _require_table(model, args)
    names = model.config.label_names
    for line in sys.stdin:
        tokens = line.split()
        x = embed(tokens, table) if tokens else np.zeros((1, table.dim))
        print(names[predict(model, x)])
    return 0


def cmd_score_positions(args) -> int:
    model = load_model(args.model)
    table = _require_table(model, args)
    scores = [float(v) for v in args.scores.split(",")]
    if len(scores) != model.num_labels:
        raise ValueError(
            f"expected {model.num_labels} scores (one per label), got {len(scores)}"
        )
    writer = csv.writer(sys.stdout, lineterminator="\n")
    header = ["line_id", "position", "token"]
    header += [f"p_{i + 1}" for i in range(model.num_labels)]
    header.append("expected_score")
    writer.writerow(header)
    for line_id, line in enumerate(sys.stdin, 1):
        tokens = line.split()
        if not tokens:
            continue
        score_table = per_position_scores(model, embed(tokens, table), scores)
        for pos, token in enumerate(tokens):
            row = [line_id, pos + 1, token]
            row += [format(v, ".10g") for v in score_table[pos]]
            writer.writerow(row)
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    config = ModelConfig(
        order=args.order,
        hidden=args.hidden,
        layers=args.layers,
        decay=0.5,
        dropout=0.0,
        label_names=[f"c{i}" for i in range(args.classes)],
        word_dim=args.dim,
    )
    model = init_model(config, rng)
    # a zero classifier would zero every feature-layer gradient, so randomize it
    model.softmax_w[...] = rng.uniform(-0.5, 0.5, size=model.softmax_w.shape)
    x = rng.standard_normal((args.length, args.dim))
    target = np.zeros(args.classes)
    target[int(rng.integers(args.classes))] = 1.0

    rows = model_gradient_report(model, x, target, eps=args.epsilon)
    worst = 0.0
    for name, err in rows:
        status = "ok" if err < args.tolerance else "FAIL"
        print(f"{name}\t{err:.6e}\t{status}")
        worst = max(worst, err)
    passed = worst < args.tolerance
    print(f"max\t{worst:.6e}\ttolerance\t{args.tolerance:g}\t{'pass' if passed else 'fail'}")
    return 0 if passed else 1


def cmd_bench(args) -> int:
    lengths = [int(v) for v in args.lengths.split(",")]
    rng = np.random.default_rng(args.seed)
    params = init_layer(args.dim, args.hidden, args.order, rng)
    decay = 0.5
    print("length\tforward_s\tforward_backward_s\toracle_s")
    for length in lengths:
        x = rng.standard_normal((length, args.dim))
        dpre = np.ones((length, args.hidden))

        def run_forward():
            layer_forward(params, x, decay)

        def run_forward_backward():
            _, trace = layer_forward(params, x, decay)
            layer_backward(params, trace, decay, dpre)

        forward_t = _median_time(run_forward, args.trials)
        both_t = _median_time(run_forward_backward, args.trials)
        if length <= 32:
            oracle_t = _median_time(lambda: forward_reference(params, x, decay), args.trials)
            oracle_s = f"{oracle_t:.6f}"
        else:
            oracle_s = "-"
        print(f"{length}\t{forward_t:.6f}\t{both_t:.6f}\t{oracle_s}")
    return 0


def _median_time(fn, trials: int) -> float:
    fn()  # warm up
    times = []
    for _ in range(max(1, trials)):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return statistics.median(times)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
