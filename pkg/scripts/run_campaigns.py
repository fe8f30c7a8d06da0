#!/usr/bin/env python3
"""Run the randomized campaigns and write a JSON summary.

    python3 scripts/run_campaigns.py --trials 5000 --seed 1 --out results/campaigns.json

Every field of CampaignConfig is a flag.  Counterexamples, if any, are
printed in full and the exit status is 1.
"""

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from michelkit.campaigns import CAMPAIGNS, CampaignConfig


def parse_config(argv) -> tuple[CampaignConfig, argparse.Namespace]:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in dataclasses.fields(CampaignConfig):
        p.add_argument(f"--{f.name.replace('_', '-')}", type=int, default=f.default)
    p.add_argument("--only", choices=sorted(CAMPAIGNS), action="append")
    p.add_argument("--out", type=Path)
    args = p.parse_args(argv)
    cfg = CampaignConfig(**{f.name: getattr(args, f.name) for f in dataclasses.fields(CampaignConfig)})
    return cfg, args


def main(argv=None) -> int:
    cfg, args = parse_config(argv)
    results = {"config": dataclasses.asdict(cfg), "campaigns": {}}
    status = 0
    for name in args.only or sorted(CAMPAIGNS):
        start = time.perf_counter()
        report = CAMPAIGNS[name](cfg)
        elapsed = time.perf_counter() - start
        print(f"{name:10s} {report.summary()}  ({elapsed:.1f} s)")
        for cex in report.counterexamples:
            print(cex)
        status |= not report.ok
        results["campaigns"][name] = {
            "trials": report.trials,
            "counterexamples": [str(c) for c in report.counterexamples],
            "outcomes": report.outcomes,
            "seconds": round(elapsed, 3),
        }
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
