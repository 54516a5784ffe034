"""
Matched decoding simulator - command-line entry point.

Subcommands: simulate, selftest, plot-script, dump-trellis.
"""
import argparse
import logging
import sys
from pathlib import Path

from core.config import apply_overrides, load_config
from core.trellis import TrellisSizeError, build_matched_trellis, build_product_trellis, dump_section
from harness import emit_plot_script, run_selftest, run_sweep

logger = logging.getLogger("matched-sim")


def cmd_simulate(args) -> int:
    config = apply_overrides(
        load_config(args.config),
        ebn0=args.ebn0, seed=args.seed, receivers=args.receivers,
        output=args.out, workers=args.workers,
        max_frames=args.max_frames, min_errors=args.min_errors,
    )
    records = run_sweep(config, noiseless=args.noiseless)
    for record in records:
        status = record.error or f"{record.errors}/{record.bits}"
        print(f"{record.ebn0_db:6.2f} dB  {record.receiver:<18} BER {record.ber:.6e}  ({status})")
    return 1 if any(r.error for r in records) else 0


def cmd_selftest(args) -> int:
    ok = run_selftest(frames=args.frames)
    print("selftest: " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_plot_script(args) -> int:
    script = emit_plot_script(args.data_file)
    if args.out:
        Path(args.out).write_text(script, encoding="utf-8")
        logger.info("Wrote %s", args.out)
    else:
        print(script, end="")
    return 0


def cmd_dump_trellis(args) -> int:
    link = load_config(args.config).link()
    build = build_product_trellis if args.product else build_matched_trellis
    trellis = build(link.code, link.scheme, link.label, link.taps)
    print(dump_section(trellis, args.phase), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matched-sim",
        description="Matched super-trellis decoding of punctured coded PAM over ISI channels",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte-Carlo BER sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--ebn0", help="a:b:step (inclusive) or a list of values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="data file to write")
    p.add_argument("--receivers", help="comma separated receiver ids")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-frames", type=int)
    p.add_argument("--min-errors", type=int)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", help="state-count and oracle-equivalence suites")
    p.add_argument("--frames", type=int, default=100, help="frames per oracle configuration")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("plot-script", help="emit a gnuplot script for a data file")
    p.add_argument("data_file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_script)

    p = sub.add_parser("dump-trellis", help="print one trellis section")
    p.add_argument("--config", required=True)
    p.add_argument("--phase", type=int, required=True)
    p.add_argument("--product", action="store_true", help="dump the product trellis instead")
    p.set_defaults(func=cmd_dump_trellis)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(name)s] %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError, TrellisSizeError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
