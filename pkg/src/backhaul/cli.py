"""Command-line front end.

Usage::

    backhaul interference-validate [--trials 10000] [--out fig2.csv]
    backhaul sumrate-compare --bits 3:12
    backhaul mean-sweep --bits 3:40 [--no-mc]
    backhaul fairness-frontier --bits 3:40 --gnuplot frontier.gp --out frontier.csv
    backhaul allocate --scheme equal-sir --bits 8

Settings are layered as built-in defaults, then the experiment preset, then
``--config`` (a YAML/JSON mapping with `ScenarioConfig` field names), then
individual flags. ``--bits`` is the average number of bits per user, either a
single value or an inclusive integer range ``a:b``.

Exit codes: 0 success, 2 configuration error, 3 numerical guard (oracle too
large, singular stack after all redraws), 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from backhaul import experiments as ex
from backhaul.allocation import SCHEMES
from backhaul.errors import BackhaulError, ConfigError, NumericalGuardError
from backhaul.geometry import ScenarioConfig, apply_mapping, read_config_file

log = logging.getLogger("backhaul")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4

# flag dest -> ScenarioConfig field
_FIELD_FLAGS = {
    "users": "users_per_cell",
    "antennas": "antennas",
    "gamma": "path_loss_exponent",
    "d0": "reference_distance",
    "separation": "bs_separation",
    "power": "per_user_tx_power",
    "noise": "noise_power",
    "trials": "trials",
    "seed": "rng_seed",
    "clip_sigmas": "clip_sigmas",
}


def parse_bits(text: str) -> list[float]:
    """``"8"`` -> ``[8.0]``; ``"3:12"`` -> ``[3.0, ..., 12.0]`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi = (int(part) for part in text.split(":"))
            if hi < lo:
                raise ValueError
            return [float(b) for b in range(lo, hi + 1)]
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or a:b with a <= b, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("bits must be >= 0")
    return [value]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON file of ScenarioConfig fields")
    common.add_argument("--users", type=int, help="users per cell (N)")
    common.add_argument("--antennas", type=int, help="antennas per station (M)")
    common.add_argument("--gamma", type=float, help="path-loss exponent")
    common.add_argument("--d0", type=float, help="reference distance in metres")
    common.add_argument("--separation", type=float, help="station separation in metres")
    common.add_argument("--power", type=float, help="per-user transmit power in watts")
    common.add_argument("--noise", type=float, help="noise power in watts")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--clip-sigmas", type=float, help="fixed quantizer range instead of per-vector peak")
    common.add_argument("--bits", type=parse_bits, help="average bits per user: N or a:b")
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    # argparse exits with 2 on bad usage, the same code as a config error
    parser = argparse.ArgumentParser(prog="backhaul", description="Backhaul bit allocation for two-cell coordinated ZF.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    sub.add_parser("interference-validate", parents=[common], help="closed-form vs simulated interference")
    sub.add_parser("sumrate-compare", parents=[common], help="conventional vs exhaustive-search sum rate")
    for name, text in (("mean-sweep", "rate mean per scheme"), ("fairness-frontier", "rate variance vs mean")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--no-mc", action="store_true", help="closed-form rows only")
        p.add_argument("--gnuplot", help="also write a gnuplot script to this path")
    for name in ("interference-validate", "sumrate-compare"):
        sub.choices[name].add_argument("--gnuplot", help="also write a gnuplot script to this path")
    alloc = sub.add_parser("allocate", parents=[common], help="print one allocation")
    alloc.add_argument("--scheme", choices=SCHEMES, default="conventional")
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    """defaults < preset < config file < flags, then the preset's final rules."""
    cfg = ex.preset_config(args.experiment)
    explicit: set[str] = set()
    if args.config:
        data = read_config_file(args.config)
        try:
            cfg = apply_mapping(cfg, data)
        except ConfigError as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        explicit |= set(data)
    flags = {f: getattr(args, d) for d, f in _FIELD_FLAGS.items() if getattr(args, d, None) is not None}
    if flags:
        cfg = apply_mapping(cfg, flags)
        explicit |= set(flags)
    return ex.finalize_config(args.experiment, cfg, explicit)


@contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path} for writing: {exc.strerror}") from exc
    with fh:
        yield fh


def _run_allocate(cfg: ScenarioConfig, args, bits) -> None:
    if len(bits) != 1:
        raise ConfigError("allocate takes a single --bits value")
    budget = bits[0] * cfg.users_per_cell
    rows, aggregate, alloc = ex.allocation_table(cfg, args.scheme, budget)
    with _output(args.out) as out:
        header = ex.COLUMNS["allocate"]
        out.write("{:>4} {:>9} {:>9} {:>10} {:>8} {:>12} {:>9} {:>8}\n".format(*header))
        for u, d1, d2, frac, whole, sinr, rate, region in rows:
            out.write(f"{u:>4} {d1:>9.1f} {d2:>9.1f} {frac:>10.4f} {whole:>8d} {sinr:>12.5g} {rate:>9.4f} {region:>8}\n")
        total_rate = sum(r[6] for r in rows)
        clipped = int(alloc.clipped.sum()) if alloc.clipped is not None else 0
        out.write(
            f"scheme={alloc.scheme} budget={alloc.total_budget:g} noise={cfg.noise_power:.6g} "
            f"sum_rate={total_rate:.6f} region={aggregate.value} clipped={clipped}\n"
        )


def run(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    bits = args.bits or list(ex.default_bits(args.experiment))
    log.info("experiment=%s config=%s", args.experiment, cfg.to_dict())
    if args.experiment == "allocate":
        _run_allocate(cfg, args, bits)
        return
    if args.experiment in ("interference-validate", "sumrate-compare"):
        if any(b != int(b) for b in bits):
            raise ConfigError(f"{args.experiment} needs integer --bits")
        bits = [int(b) for b in bits]
    if args.experiment == "interference-validate":
        rows = ex.interference_validate(cfg, bits)
    elif args.experiment == "sumrate-compare":
        rows = ex.sumrate_compare(cfg, bits)
    elif args.experiment == "mean-sweep":
        rows = ex.mean_sweep(cfg, bits, monte_carlo=not args.no_mc)
    else:
        rows = ex.fairness_frontier(cfg, bits, monte_carlo=not args.no_mc)
    with _output(args.out) as out:
        ex.write_csv(out, args.experiment, rows)
    if args.gnuplot:
        data = "results.csv" if args.out == "-" else args.out
        try:
            with open(args.gnuplot, "w", encoding="utf-8", newline="") as fh:
                fh.write(ex.gnuplot_script(args.experiment, data))
        except OSError as exc:
            raise OSError(f"cannot write {args.gnuplot}: {exc.strerror}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"backhaul: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"backhaul: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"backhaul: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BackhaulError as exc:
        # remaining domain errors come from invalid inputs
        print(f"backhaul: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
