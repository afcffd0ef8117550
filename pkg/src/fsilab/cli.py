"""fsilab <study> --config <file.json> --out <dir> [--seed <u64>] [--threads <n>]"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .studies import STUDIES, StudySpec, run_study

log = logging.getLogger("fsilab")


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fsilab", description="Fluid-disk experiments on the periodic square.")
    ap.add_argument("study", choices=STUDIES)
    ap.add_argument("--config", required=True, help="JSON document with solver keys and a 'study' block")
    ap.add_argument("--out", required=True, help="output directory for CSVs and manifests")
    ap.add_argument("--seed", type=_u64, default=None)
    ap.add_argument("--threads", type=_positive, default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
        spec = StudySpec.from_dict(doc, study=args.study, out=args.out, seed=args.seed, threads=args.threads)
        res = run_study(spec)  # grid and resolution checks fire here
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"fsilab: configuration error: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if res.passed else "FAIL"
    print(f"{spec.study}: {status} ({res.manifest_path})")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
