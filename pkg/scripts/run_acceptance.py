#!/usr/bin/env python3
"""Execute the shipped acceptance config twice and diff the CSV bodies.

Convenience wrapper around `fermembed run`; exits nonzero if any CSV differs
between the two runs or a task fails.
"""

import argparse
import sys
from pathlib import Path

from fermembed import harness


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/acceptance.json")
    parser.add_argument("--out", default="runs/acceptance")
    args = parser.parse_args()

    config = harness.load_config(args.config)
    diags = harness.validate(config)
    if diags:
        for d in diags:
            print(f"invalid: {d}", file=sys.stderr)
        return 2
    out = Path(args.out)
    first = harness.run(config, out / "first")
    second = harness.run(config, out / "second")
    if first.error or second.error:
        print(f"run failed: {first.error or second.error}", file=sys.stderr)
        return 3
    clean = True
    for name in first.outputs:
        a = (out / "first" / name).read_bytes()
        b = (out / "second" / name).read_bytes()
        status = "identical" if a == b else "DIFFERS"
        clean &= a == b
        print(f"{name}: {status}")
    return 0 if clean else 3


if __name__ == "__main__":
    sys.exit(main())
