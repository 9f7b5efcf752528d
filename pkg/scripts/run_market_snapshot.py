#!/usr/bin/env python3
"""Run the three-pool market snapshot scenario and print where value flowed.

Usage: python scripts/run_market_snapshot.py [out_dir] [--seed N]
"""

import sys
from pathlib import Path

from lendsim.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    args = sys.argv[1:]
    out = args.pop(0) if args and not args[0].startswith("-") else "out/market_snapshot"
    rc = cli_main(["run", "--scenario", str(ROOT / "scenarios" / "table1.json"), "--out", out, *args])
    if rc == 0:
        print(f"\ntelemetry written to {out}/", file=sys.stderr)
    return rc


if __name__ == "__main__":
    sys.exit(main())
