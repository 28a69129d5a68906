"""Run the 32x32 reference simulation for all five models and summarise.

Each run writes its directory under ``--out`` through the ``simulate``
subcommand; a ``report`` over the parent directory follows.
"""

import argparse
import logging
import time
from pathlib import Path

from viscostab import cli

CONFIGS = ("oldroyd_b", "giesekus", "fene_p", "johnson_segalman", "ptt_exp")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--configs", default=str(Path(__file__).resolve().parent.parent / "configs"))
    ap.add_argument("--only", nargs="*", choices=CONFIGS, default=CONFIGS)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    out = Path(args.out)
    codes = {}
    t0 = time.perf_counter()
    for name in args.only:
        t1 = time.perf_counter()
        codes[name] = cli.main(["simulate", "--config", str(Path(args.configs) / f"{name}.txt"), "--out", str(out / name)])
        print(f"{name}: exit {codes[name]} in {time.perf_counter() - t1:.0f} s", flush=True)
    print(f"matrix elapsed {time.perf_counter() - t0:.0f} s")
    cli.main(["report", str(out)])
    raise SystemExit(0 if all(c == 0 for c in codes.values()) else 1)


if __name__ == "__main__":
    main()
