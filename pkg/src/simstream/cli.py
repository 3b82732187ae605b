"""Command-line driver.

Subcommands::

    simstream mine     --input FILE [--output REPORT.json] [miner flags]
    simstream compare  --input FILE --cut 0.5 [--output REPORT.json] [miner flags]
    simstream ratios   --input FILE [--output RATIOS.csv] [--min-support 20]
    simstream synth    --output FILE --n 200 --m 8192 --avg-size 10 [--plant I,J,SIM[,SUPPORT] ...]
    simstream shuffle  --input FILE --output FILE --seed N

Exit status is 0 on success, 1 on usage errors and 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from simstream import __version__
from simstream.fimi import parse_fimi, shuffle, write_fimi
from simstream.measures import Measure
from simstream.miner import DEFAULT_LOG_CONSTANT, MinerConfig, SimilarityMiner
from simstream.oracle import PlantedPair, exact_similarities, generate_synthetic, half_ratios, item_counts

log = logging.getLogger("simstream")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_phi(text: str) -> tuple[float, bool]:
    """``"50"`` is an absolute support, ``"1.5%"`` a fraction of transactions seen."""
    text = text.strip()
    try:
        if text.endswith("%"):
            value = float(text[:-1]) / 100.0
            if not 0.0 < value <= 1.0:
                raise ValueError
            return value, True
        value = float(text)
        if value < 1:
            raise ValueError
        return value, False
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid --phi {text!r}: use a count >= 1 or a percentage like 1%") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _add_miner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="FIMI transaction file")
    p.add_argument("--output", help="report JSON path (pairs CSV written next to it)")
    p.add_argument("--measure", choices=[m.value for m in Measure], default="cosine")
    p.add_argument("--phi", type=parse_phi, default=(1.0, False), help="item support threshold: count, or N%% of m")
    p.add_argument("--s", type=_positive_int, default=1024, help="space parameter (reservoir holds s/2 pairs)")
    p.add_argument("--max-tx-size", type=_positive_int, default=None, help="maximum transaction size M")
    p.add_argument("--delta", type=float, default=0.1, help="target relative accuracy")
    p.add_argument("--log-constant", type=float, default=DEFAULT_LOG_CONSTANT, help="C in L = C*log2(mn)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simstream", description="Mine similar item pairs from a transaction stream.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mine", help="run the streaming miner and write a report")
    _add_miner_flags(p)

    p = sub.add_parser("compare", help="run the miner and the exact oracle side by side")
    _add_miner_flags(p)
    p.add_argument("--cut", type=float, required=True, help="similarity cut for precision/recall")

    p = sub.add_parser("ratios", help="first-half occurrence ratios of frequent items and pairs")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.add_argument("--min-support", type=_positive_int, default=20)
    p.add_argument("--items-only", action="store_true", help="skip pairs")

    p = sub.add_parser("synth", help="generate a shuffled synthetic dataset with planted pairs")
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=_positive_int, required=True, help="number of distinct items")
    p.add_argument("--m", type=_positive_int, required=True, help="number of transactions")
    p.add_argument("--avg-size", type=float, default=10.0)
    p.add_argument("--plant", action="append", default=[], metavar="I,J,SIM[,SUPPORT]")
    p.add_argument("--support", type=_positive_int, default=None, help="default planted support (m/50)")
    p.add_argument("--measure", choices=[m.value for m in Measure], default="cosine")
    p.add_argument("--max-size", type=_positive_int, default=None)
    p.add_argument("--fixed-size", action="store_true", help="every transaction has exactly avg-size items")
    p.add_argument("--skew", type=float, default=1.0, help="Zipf exponent of background items")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("shuffle", help="write a seeded random permutation of a FIMI file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, required=True)
    return parser


def config_from_args(args) -> MinerConfig:
    phi, relative = args.phi
    try:
        return MinerConfig(
            measure=args.measure,
            phi=phi,
            phi_relative=relative,
            s=args.s,
            max_tx_size=args.max_tx_size,
            delta=args.delta,
            log_constant=args.log_constant,
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def mine(config: MinerConfig, path: str) -> tuple[SimilarityMiner, dict]:
    """Run the miner over a FIMI file and build the report dictionary."""
    miner = SimilarityMiner(config, keep_history=True)
    start = time.perf_counter()
    for tx in parse_fimi(path, config.max_tx_size):
        miner.process(tx)
    elapsed = time.perf_counter() - start
    table = miner.table
    report = {
        "version": __version__,
        "input": str(path),
        "config": config.to_dict(),
        "windows": [w.to_dict() for w in miner.windows],
        "published_at": miner.published_at,
        "detection_threshold": miner.current_threshold(),
        "top": [e.to_dict() for e in miner.current_top()],
        "summary": {
            "transactions": table.m,
            "items": table.mb,
            "distinct_items": table.n,
            "pairs_sampled": miner.pairs_sampled,
            "operations": miner.ops,
            "peak_entries": miner.peak_entries,
            "runtime_seconds": elapsed,
        },
    }
    return miner, report


def pairs_csv_path(output: str) -> Path:
    p = Path(output)
    return p.with_name(p.stem + ".pairs.csv")


def write_pairs_csv(path: Path, miner: SimilarityMiner) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "estimate"])
        for e in miner.current_top():
            w.writerow([e.pair[0], e.pair[1], repr(e.estimate)])


def _emit_report(report: dict, output: str | None, miner: SimilarityMiner) -> None:
    text = json.dumps(report, indent=2)
    if output is None:
        print(text)
        return
    Path(output).write_text(text + "\n")
    write_pairs_csv(pairs_csv_path(output), miner)
    log.info("wrote %s and %s", output, pairs_csv_path(output))


def compare_with_oracle(miner: SimilarityMiner, path: str, cut: float) -> dict:
    config = miner.config
    txs = list(parse_fimi(path))
    phi = config.resolve_phi(len(txs))
    exact_all = exact_similarities(txs, config.measure, phi=1)
    support = item_counts(txs)
    truth = {p for p, v in exact_all.items() if v >= cut and min(support[p[0]], support[p[1]]) >= phi}
    published = {e.pair: e.estimate for e in miner.current_top()}
    found = {p for p, v in published.items() if v >= cut}
    hits = found & truth
    errors = []
    for pair, est in published.items():
        exact = exact_all.get(pair, 0.0)
        rel = abs(est - exact) / exact if exact > 0 else None
        errors.append({"i": pair[0], "j": pair[1], "estimate": est, "exact": exact, "relative_error": rel})
    within = [e for e in errors if e["relative_error"] is not None and e["relative_error"] <= config.delta]
    return {
        "cut": cut,
        "phi": phi,
        "true_pairs": len(truth),
        "reported_pairs": len(found),
        "precision": len(hits) / len(found) if found else None,
        "recall": len(hits) / len(truth) if truth else None,
        "within_delta": len(within),
        "pairs": errors,
    }


def _parse_plant(text: str) -> PlantedPair | tuple:
    parts = text.split(",")
    try:
        if len(parts) == 3:
            return ((int(parts[0]), int(parts[1])), float(parts[2]))
        if len(parts) == 4:
            i, j = int(parts[0]), int(parts[1])
            return PlantedPair(min(i, j), max(i, j), float(parts[2]), int(parts[3]))
    except ValueError:
        pass
    raise UsageError(f"invalid --plant {text!r}: expected I,J,SIM or I,J,SIM,SUPPORT")


def _run(args) -> int:
    if args.command in ("mine", "compare"):
        config = config_from_args(args)
        miner, report = mine(config, args.input)
        if args.command == "compare":
            report["compare"] = compare_with_oracle(miner, args.input, args.cut)
            c = report["compare"]
            print(
                f"precision={c['precision']} recall={c['recall']} "
                f"true={c['true_pairs']} reported={c['reported_pairs']}",
                file=sys.stderr,
            )
        _emit_report(report, args.output, miner)
    elif args.command == "ratios":
        records = half_ratios(list(parse_fimi(args.input)), args.min_support, pairs=not args.items_only)
        fh = open(args.output, "w", newline="") if args.output else sys.stdout
        try:
            w = csv.writer(fh)
            w.writerow(["key", "first_half", "total", "ratio"])
            for r in records:
                w.writerow([r.key_str(), r.first_half_count, r.total_count, repr(r.ratio)])
        finally:
            if fh is not sys.stdout:
                fh.close()
    elif args.command == "synth":
        planted = [_parse_plant(p) for p in args.plant]
        try:
            data = generate_synthetic(
                args.n,
                args.m,
                args.avg_size,
                planted,
                seed=args.seed,
                measure=args.measure,
                support=args.support,
                max_size=args.max_size,
                fixed_size=args.fixed_size,
                skew=args.skew,
            )
        except ValueError as e:
            raise UsageError(str(e)) from None
        write_fimi(data.transactions, args.output)
    elif args.command == "shuffle":
        shuffle(args.input, args.output, args.seed)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except UsageError as e:
        print(f"simstream: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as e:
        print(f"simstream: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
