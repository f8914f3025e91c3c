"""Run every verification suite once and write one JSON per suite.

    python scripts/run_suites.py --seed 2024 --out results/ [--quick]

``--quick`` shrinks replica counts for a smoke run; verdicts at quick sizes
are not the acceptance verdicts.
"""
import argparse
import json
import time
from pathlib import Path

from betabead.core import RngSpec
from betabead.suites import SUITES

FULL = {
    "oracle-opuc": dict(trials=200),
    "invariance-periodic": dict(n=(4, 8), beta=(1.0, 2.0, 4.0), h=(0.0, 1.0), threshold=0.01 / 6),
    "invariance-sine": dict(),
    "variance-log": dict(),
    "corners-marginal": dict(),
    "corners-density": dict(),
    "bead-limit": dict(),
    "interlacing": dict(),
    "stieltjes": dict(),
    "parameter-maps": dict(),
}

QUICK = {
    "oracle-opuc": dict(trials=50),
    "invariance-periodic": dict(replicas=2000),
    "invariance-sine": dict(replicas=200),
    "variance-log": dict(replicas=200, gbe_replicas=20, gbe_n=400),
    "corners-marginal": dict(replicas=2000),
    "corners-density": dict(draws=5000),
    "bead-limit": dict(spacings=1000),
    "interlacing": dict(steps=1000),
    "stieltjes": dict(cases=100),
    "parameter-maps": dict(),
}


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out", default="results")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--quick", action="store_true")
    p.add_argument("suites", nargs="*", default=sorted(SUITES))
    args = p.parse_args()
    sizes = QUICK if args.quick else FULL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = RngSpec(args.seed)
    failed = 0
    for name in args.suites:
        t = time.perf_counter()
        reports = SUITES[name](rng, jobs=args.jobs, **sizes[name])
        dt = time.perf_counter() - t
        for r in reports:
            print(r.summary())
        print(f"  {name}: {dt:.1f}s")
        failed += sum(not r.verdict for r in reports)
        doc = {"suite": name, "seconds": dt, "sizes": {k: list(v) if isinstance(v, tuple) else v
                                                       for k, v in sizes[name].items()},
               "reports": [json.loads(r.to_json()) for r in reports]}
        (out / f"{name}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
