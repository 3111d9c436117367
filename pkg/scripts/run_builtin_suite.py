#!/usr/bin/env python3
"""Run the builtin and sixty-run suites across all local backends and
print both comparison reports.

Usage: python3 scripts/run_builtin_suite.py [--out DIR]
With --out, structured JSON reports are written next to the text output.
"""

import argparse
import json
from pathlib import Path

from hazcom import (
    LocationBaselineBackend,
    ObjectBaselineBackend,
    ScriptedBackend,
    builtin_suite,
    run_suite,
    sixty_run_suite,
)


def backends():
    return {
        "scripted": ScriptedBackend(),
        "object-baseline": ObjectBaselineBackend(),
        "location-baseline": LocationBaselineBackend(),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", help="directory for structured JSON reports")
    args = parser.parse_args()

    for name, suite in (("builtin", builtin_suite()), ("sixty", sixty_run_suite())):
        report = run_suite(suite, backends())
        print(f"=== {name} suite ===")
        print(report.to_text())
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / f"{name}-report.json"
            path.write_text(
                json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
            )
            print(f"wrote {path}\n")


if __name__ == "__main__":
    main()
