#!/usr/bin/env python3
"""Run the stable-growth benchmark end to end and write all outputs.

Equivalent to `quasicrack run <config>` with the built-in tapered-strip
configuration; prints a per-step summary plus the audit verdict.
"""

import argparse
import json
from pathlib import Path

from quasicrack.cases import growth_benchmark_config
from quasicrack.cli import build_parser


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=1 / 64)
    ap.add_argument("--refine", type=int, default=1)
    ap.add_argument("--output-dir", default="benchmark_out")
    args = ap.parse_args()

    cfg = growth_benchmark_config(delta=args.delta, refine=args.refine)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(cfg, indent=1, sort_keys=True))

    cli = build_parser().parse_args(
        ["run", str(cfg_path), "--output-dir", str(out)]
    )
    rc = cli.func(cli)
    if rc == 0:
        jsonl = (out / "evolution.jsonl").read_text().strip().splitlines()
        grown = [json.loads(l) for l in jsonl if json.loads(l)["grew"]]
        if grown:
            print(f"growth onset at t = {grown[0]['t']:.4f}")
            last = grown[-1]
            for tip in last["tips"]:
                kap = "n/a" if tip["kappa"] is None else f"{tip['kappa']:.4f}"
                print(f"tip {tip['tip']}: sigma = {tip['sigma']:.4f}, kappa = {kap}")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
