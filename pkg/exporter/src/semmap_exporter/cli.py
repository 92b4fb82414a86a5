"""Command-line frontend: export, verify.

Exit codes: 0 success, 2 usage or input errors, 1 anything else,
including a verify run whose difference exceeds the tolerance.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExporterError
from .ops import (TOLERANCE, export_tensor, load_categories, load_tensor,
                  verify_map)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semmap-exporter",
        description="Convert score tensors to SEMMAP01 maps and back-check them.")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="write a tensor as a SEMMAP01 map")
    exp.add_argument("--input", required=True,
                     help=".npy tensor shaped height x width x categories")
    exp.add_argument("--categories", required=True,
                     help="JSON category names, bare list or sidecar object")
    exp.add_argument("--softmax", action="store_true",
                     help="treat rows as logits and normalize them first")
    exp.add_argument("--out", required=True, help="map file to write")

    ver = sub.add_parser("verify", help="compare a map against a tensor")
    ver.add_argument("semmap", help="SEMMAP01 file to check")
    ver.add_argument("tensor", help=".npy reference tensor")
    return parser


def cmd_export(args) -> int:
    tensor = load_tensor(args.input)
    categories = load_categories(args.categories)
    scores = export_tensor(tensor, categories, args.out, softmax=args.softmax)
    height, width, n_cat = scores.shape
    print(f"wrote {args.out}: {width}x{height}, {n_cat} categories")
    return 0


def cmd_verify(args) -> int:
    report = verify_map(args.semmap, load_tensor(args.tensor))
    print(f"max abs diff: {report.max_abs_diff:.9g} "
          f"({report.pixels} pixels, {report.categories} categories)")
    if not report.ok:
        print(f"error: difference exceeds tolerance {TOLERANCE:g}",
              file=sys.stderr)
        return 1
    print("ok")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "export":
            return cmd_export(args)
        return cmd_verify(args)
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
