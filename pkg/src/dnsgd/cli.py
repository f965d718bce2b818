"""Command-line interface: ``train``, ``compare`` and ``verify``."""

import argparse
import csv
import io
import os
import sys
import tempfile

from . import benchmark
from .data import CsvSchema, load_csv, split, standardize
from .exceptions import DNSGDError, NonFiniteLoss
from .network import Activation, NetworkConfig, Task
from .optimizer import OptimizerConfig, OptimizerKind
from .plotting import comparison_svg
from .trainer import RunConfig, train_run
from .verify import run_property_suite

METRIC_COLUMNS = ("run_id", "optimizer", "epoch", "step", "train_batch_loss", "train_full_loss",
                  "test_loss", "accuracy", "h_max", "solver_status", "elapsed_s")
EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_csv(metrics, run_id):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for r in metrics.iterations:
        writer.writerow([_cell(v) for v in (
            run_id, metrics.optimizer, r.epoch, r.step, r.train_batch_loss, r.train_full_loss,
            r.test_loss, r.accuracy, r.h_max, r.solver_status, r.elapsed_s)])
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip()) if text else ()


def _optimizer(text):
    try:
        return OptimizerKind.parse(text)
    except DNSGDError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_run_args(p, single):
    src = p.add_argument_group("data")
    src.add_argument("--data", metavar="PATH", help="CSV file with a header row")
    src.add_argument("--synthetic", choices=[t.value for t in Task],
                     help="use the built-in synthetic benchmark instead of --data")
    src.add_argument("--target", metavar="COL", help="target column (required with --data)")
    src.add_argument("--task", choices=[t.value for t in Task], default=Task.REGRESSION.value,
                     help="default: regression")
    src.add_argument("--categorical", metavar="COL[,COL...]", default="",
                     help="feature columns to one-hot encode (default: none)")
    src.add_argument("--test-size", type=int, metavar="K",
                     help="held-out rows (default: 20%% of the data, or 250/500 for --synthetic)")
    net = p.add_argument_group("network")
    net.add_argument("--layers", metavar="N0,...,NL",
                     help="layer sizes including input and output (default: N0,6,NL from the data)")
    net.add_argument("--hidden-activation", choices=[a.value for a in Activation],
                     default=Activation.SIGMOID.value, help="default: sigmoid")
    opt = p.add_argument_group("optimizer")
    if single:
        opt.add_argument("--optimizer", type=_optimizer, default=OptimizerKind.DN_SGD,
                         help="sgd, dn-sgd or sgd-dn (aliases qn-sgd, sgd-qn); default: dn-sgd")
    opt.add_argument("--lr", type=float, default=0.01, help="SGD learning rate (default: 0.01)")
    opt.add_argument("--alpha", type=float, default=0.0, help="damping coefficient (default: 0)")
    opt.add_argument("--batch", type=int, default=200, help="mini-batch size (default: 200)")
    opt.add_argument("--epochs", type=int, default=20, help="default: 20")
    opt.add_argument("--seed", type=int, default=0, help="seed for split, init and batches (default: 0)")
    out = p.add_argument_group("output")
    out.add_argument("--out", metavar="DIR", default="runs", help="output directory (default: ./runs)")
    out.add_argument("--log-scale", action="store_true", help="log-scale loss axes in the SVG")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dnsgd",
        description="Train MLPs with damped-Newton last-layer updates and compare against SGD.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("train", help="train a single network"), single=True)
    _add_run_args(sub.add_parser("compare", help="run sgd, dn-sgd and sgd-dn side by side"), single=False)
    ver = sub.add_parser("verify", help="run the randomized curvature property suite")
    ver.add_argument("--seed", type=int, default=0, help="default: 0")
    ver.add_argument("--force-failure", action="store_true",
                     help="negate the MSE Hessians to check that the harness reports failures")
    return parser


def _load(args):
    if args.synthetic:
        spec = benchmark.BENCHMARKS[Task(args.synthetic)]
        return benchmark.synthetic_datasets(args.synthetic, seed=args.seed, n_test=args.test_size or spec.n_test)
    if not args.data:
        raise DNSGDError("one of --data or --synthetic is required")
    if not args.target:
        raise DNSGDError("--target is required with --data")
    data = load_csv(args.data, CsvSchema(args.target, Task(args.task), _csv_list(args.categorical)))
    test_size = args.test_size if args.test_size is not None else max(1, round(0.2 * len(data)))
    train, test = split(data, test_size, seed=args.seed)
    train, test, _ = standardize(train, test)
    return train, test


def _network(args, train):
    n_out = 1 if train.task is Task.REGRESSION else train.class_count
    if args.layers:
        try:
            sizes = tuple(int(s) for s in _csv_list(args.layers))
        except ValueError:
            raise DNSGDError(f"--layers must be comma-separated integers, got {args.layers!r}") from None
    else:
        sizes = (train.n_features, 6, n_out)
    return NetworkConfig(sizes, train.task, Activation(args.hidden_activation))


def _run_id(kind, seed):
    return f"{kind.value}-seed{seed}"


def _write_outputs(args, logs):
    paths = []
    for kind, metrics in logs.items():
        path = os.path.join(args.out, f"metrics_{kind.value}.csv")
        write_atomic(path, metrics_csv(metrics, _run_id(kind, args.seed)))
        paths.append(path)
    return paths


def _summary(logs, stream):
    header = f"{'optimizer':<8} {'epoch':>5} {'train_loss':>12} {'test_loss':>12} {'accuracy':>9} {'seconds':>8}"
    print(header, file=stream)
    for metrics in logs.values():
        for r in metrics.epochs:
            acc = "" if r.test_accuracy is None else f"{r.test_accuracy:.4f}"
            print(f"{metrics.optimizer:<8} {r.epoch:>5} {r.train_loss:>12.6f} {r.test_loss:>12.6f} "
                  f"{acc:>9} {r.elapsed_s:>8.3f}", file=stream)


def _run(args, kinds, svg_name):
    train, test = _load(args)
    network = _network(args, train)
    logs, diverged = {}, None
    for kind in kinds:
        config = RunConfig(network, OptimizerConfig(kind, args.lr, args.alpha, args.batch, args.seed), args.epochs)
        try:
            _, logs[kind] = train_run(train, test, config)
        except NonFiniteLoss as exc:
            logs[kind] = exc.log
            diverged = f"{kind.value}: {exc}"
    paths = _write_outputs(args, logs)
    svg_path = os.path.join(args.out, svg_name)
    title = f"layers={','.join(map(str, network.layer_sizes))} N={args.batch} alpha={args.alpha} lr={args.lr}"
    write_atomic(svg_path, comparison_svg(list(logs.values()), log_scale=args.log_scale, title=title))
    _summary(logs, sys.stdout)
    for p in paths + [svg_path]:
        print(f"wrote {p}")
    if diverged:
        print(f"error: run diverged ({diverged})", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def run_train(args):
    return _run(args, [args.optimizer], f"loss_{args.optimizer.value}.svg")


def run_compare(args):
    return _run(args, benchmark.ALL_KINDS, "comparison.svg")


def run_verify(args):
    results = run_property_suite(seed=args.seed, force_failure=args.force_failure)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    sys.stdout.flush()
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ERROR
    print(f"all {len(results)} properties passed")
    return EXIT_OK


COMMANDS = {"train": run_train, "compare": run_compare, "verify": run_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DNSGDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
