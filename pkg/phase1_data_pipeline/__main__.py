"""Run the Phase 1 pipeline (load -> filter -> expert pairs) from the command line."""

import argparse
import json
import logging
import sys

from .errors import ManifestError
from .pipeline import run_pipeline


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Phase 1: validate and filter a search-trial manifest, export expert pairs.")
    parser.add_argument("manifest", help="Manifest JSON path")
    parser.add_argument("--out", default=None, help="Directory for expert_pairs.json (default: do not write)")
    parser.add_argument("--inflation-deg", type=float, default=0.0, help="Target box inflation in degrees (default: 0)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO)

    try:
        result = run_pipeline(args.manifest, out_dir=args.out, inflation_deg=args.inflation_deg)
    except ManifestError as e:
        print(str(e), file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
