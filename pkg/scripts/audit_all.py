"""Audit every model in the standard parameter matrix and print a table."""

import argparse
import time

from viscostab import audit as au
from viscostab import constitutive as cm
from viscostab.cli import AUDIT_MATRIX


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    ok = True
    print(f"{'model':28s} {'C_f':>10s} {'sup ratio':>10s} {'F margin':>12s} {'max grad err':>12s}  passed")
    for kind, kw in AUDIT_MATRIX:
        m = cm.ModelSpec(kind=kind, **kw)
        rep = au.audit_model(m, n_samples=args.samples, seed=args.seed)
        ok &= rep.passed
        print(
            f"{m.label:28s} {float(rep.cf):10.6g} {rep.max_ratio:10.6g} "
            f"{rep.check('F-stability').margin:12.4e} {rep.check('gradient-consistency').margin:12.4e}  {rep.passed}"
        )
    print(f"elapsed {time.perf_counter() - t0:.1f} s")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
