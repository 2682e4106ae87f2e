"""Command-line entry: `mapqa-export toy|pretrained`."""

import argparse
import sys

from .pretrained import ModelUnavailable, export_pretrained
from .toy import export_toy


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mapqa-export",
        description="write weight-archive directories for the IQA toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    t = sub.add_parser("toy", help="seeded random 3-conv CI network")
    t.add_argument("--seed", type=int, default=7)
    t.add_argument("--out", default="archives/toy")
    p = sub.add_parser("pretrained", help="pretrained AlexNet-family conversion")
    p.add_argument("--model", default="alexnet", choices=("alexnet", "alexnet_grouped"))
    p.add_argument("--out", default="archives/alexnet")
    args = parser.parse_args(argv)

    try:
        if args.command == "toy":
            n = export_toy(args.seed, args.out)
            print(f"feature length {n}")
        else:
            export_pretrained(args.model, args.out)  # prints feature length itself
    except ModelUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote archive to {args.out}")
    return 0
