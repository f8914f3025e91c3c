"""Command line entry point: ``betabead sample|chain|verify``.

Exit codes: 0 success (all verdicts pass), 1 a verification failed, 2 usage
error. Every output file carries the full run configuration; nothing depends
on wall-clock time, so equal seeds give byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import chains, ensembles
from .core import (
    CircularConfiguration,
    ConfigurationError,
    PointConfiguration,
    RngSpec,
    configurations_to_csv,
    lift_circle_to_line,
)
from .suites import SUITES


@dataclass
class RunConfig:
    command: str
    params: dict
    replicas: int | None
    outputs: list = field(default_factory=list)
    rng: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _rng(args) -> RngSpec:
    return RngSpec(args.seed, args.stream)


# ------------------------------------------------------------------ sample


def cmd_sample(args) -> int:
    rng = _rng(args)
    kind = args.kind
    if kind == "cbe":
        conf = ensembles.sample_cbe(args.n, args.beta, rng)
        line = PointConfiguration(conf.angles)
        params = {"kind": kind, "n": args.n, "beta": args.beta, "position": "angle"}
    elif kind == "gbe":
        line = ensembles.sample_gbe(args.n, args.beta, args.method, rng)
        params = {"kind": kind, "n": args.n, "beta": args.beta, "method": args.method}
    else:
        spec = ensembles.SineBetaWindow(args.halfwidth, args.approx_n)
        line = ensembles.sample_sine_beta_window(spec, args.beta, rng)
        params = {"kind": kind, "beta": args.beta, "window_halfwidth": args.halfwidth,
                  "approx_n": spec.lift_n}
    out = Path(args.out or f"sample_{kind}")
    csv_path, meta_path = out.with_suffix(".csv"), out.with_suffix(".json")
    run = RunConfig("sample", params, 1, [str(csv_path), str(meta_path)], str(rng))
    meta = dict(params, seed=args.seed, stream=args.stream, count=len(line), run_config=run.to_dict())
    _write(csv_path, configurations_to_csv([line]))
    _write(meta_path, _dump(meta))
    print(f"sample {kind}: {len(line)} points -> {csv_path}")
    return 0


# ------------------------------------------------------------------ chain


def cmd_chain(args) -> int:
    rng = _rng(args)
    gen = rng.generator()
    kind = args.kind
    extra = {}
    if kind == "periodic":
        params = chains.ChainParams(args.beta, args.h, "dirichlet_periodic", args.steps)
        circle = CircularConfiguration(ensembles.cbe_batch(1, args.n, args.beta, gen)[0])
        initial = lift_circle_to_line(circle, args.n)
    elif kind == "bead":
        params = chains.ChainParams(args.beta, args.h, "iid_gamma", args.steps)
        spec = ensembles.SineBetaWindow(args.halfwidth, args.approx_n)
        initial = ensembles.sample_sine_beta_window(spec, args.beta, gen)
        extra = {"window_halfwidth": args.halfwidth, "approx_n": spec.lift_n}
    else:
        params = chains.ChainParams(args.beta, 0.0, "iid_gamma", args.steps)
        start = ensembles.sample_gbe(args.n0, args.beta, args.method, gen)
        initial = chains.CornersState(start)
        if args.rescale:
            initial = chains.rescale_state(initial, args.alpha, args.base_n or args.n0)
        extra = {"n0": args.n0, "method": args.method}
    traj = chains.run_chain(initial, params, gen)
    out = Path(args.out or f"chain_{kind}")
    csv_path, meta_path = out.with_suffix(".csv"), out.with_suffix(".json")
    run = RunConfig("chain", dict(kind=kind, **params.to_dict(), **extra), 1,
                    [str(csv_path), str(meta_path)], str(rng))
    meta = dict(traj.metadata(), kind=kind, seed=args.seed, stream=args.stream, run_config=run.to_dict())
    if kind == "corners" and args.rescale:
        meta["h"] = chains.level_from_alpha(args.alpha)
    _write(csv_path, traj.to_csv())
    _write(meta_path, _dump(meta))
    sizes = [len(line) for line in traj.lines]
    print(f"chain {kind}: {len(sizes)} levels, sizes {sizes[0]}..{sizes[-1]} -> {csv_path}")
    return 0


# ------------------------------------------------------------------ verify


def _suite_kwargs(name: str, args) -> dict:
    def tup(v):
        return None if v is None else tuple(v)

    one = lambda v: None if v is None else v[0]  # noqa: E731
    table = {
        "oracle-opuc": dict(trials=args.trials, n=one(args.n), beta=one(args.beta)),
        "invariance-periodic": dict(n=tup(args.n), beta=tup(args.beta), h=tup(args.h),
                                    replicas=args.replicas, steps=args.steps),
        "invariance-sine": dict(beta=one(args.beta), h=one(args.h), replicas=args.replicas,
                                steps=args.steps),
        "variance-log": dict(beta=one(args.beta), replicas=args.replicas),
        "corners-marginal": dict(beta=tup(args.beta), n=one(args.n), replicas=args.replicas),
        "corners-density": dict(beta=tup(args.beta), draws=args.replicas),
        "bead-limit": dict(beta=one(args.beta), spacings=args.replicas, steps=args.steps),
        "interlacing": dict(steps=args.trials),
        "stieltjes": dict(cases=args.trials),
        "parameter-maps": {},
    }
    return {k: v for k, v in table[name].items() if v is not None}


def cmd_verify(args) -> int:
    rng = _rng(args)
    kwargs = _suite_kwargs(args.suite, args)
    reports = SUITES[args.suite](rng, jobs=args.jobs, **kwargs)
    out = Path(args.out or ".") / f"verify_{args.suite}.json"
    run = RunConfig("verify", dict(suite=args.suite, jobs=args.jobs, **kwargs),
                    args.replicas, [str(out)], str(rng))
    passed = all(r.verdict for r in reports)
    doc = {"suite": args.suite, "verdict": "pass" if passed else "fail",
           "reports": [r.to_dict() for r in reports], "run_config": run.to_dict()}
    _write(out, json.dumps(doc, sort_keys=True, indent=2, default=_plain) + "\n")
    worst = min(reports, key=lambda r: r.verdict)
    print(f"{args.suite}: {'PASS' if passed else 'FAIL'} ({sum(r.verdict for r in reports)}/"
          f"{len(reports)} checks) {worst.summary()}")
    return 0 if passed else 1


def _plain(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o))


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="betabead", description=__doc__.splitlines()[0],
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="RNG seed")
        sp.add_argument("--stream", type=int, default=0, help="RNG stream index")
        sp.add_argument("--out", default=None, help="output path prefix (verify: directory)")

    s = sub.add_parser("sample", help="draw one configuration",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter, allow_abbrev=False)
    s.add_argument("kind", choices=["cbe", "gbe", "sine-window"])
    s.add_argument("--n", type=int, default=8, help="number of points (cbe, gbe)")
    s.add_argument("--beta", type=float, default=2.0)
    s.add_argument("--method", choices=["corners_bootstrap", "tridiagonal_oracle"],
                   default="corners_bootstrap", help="GbE sampler")
    s.add_argument("--halfwidth", type=float, default=20.0, help="sine window half-width")
    s.add_argument("--approx-n", type=int, default=None, help="circular ensemble size behind the window")
    common(s)
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("chain", help="run a Markov chain and write every line",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter, allow_abbrev=False)
    c.add_argument("kind", choices=["periodic", "bead", "corners"])
    c.add_argument("--n", type=int, default=4, help="points on the circle (periodic)")
    c.add_argument("--n0", type=int, default=1, help="initial GbE size (corners)")
    c.add_argument("--beta", type=float, default=2.0)
    c.add_argument("--h", type=float, default=0.0, help="level (periodic, bead)")
    c.add_argument("--steps", type=int, default=3)
    c.add_argument("--rescale", action="store_true", help="corners in bulk coordinates")
    c.add_argument("--alpha", type=float, default=0.0, help="bulk position in (-2, 2)")
    c.add_argument("--base-n", type=int, default=None, help="scaling size (default: n0)")
    c.add_argument("--method", choices=["corners_bootstrap", "tridiagonal_oracle"],
                   default="corners_bootstrap", help="initial GbE sampler (corners)")
    c.add_argument("--halfwidth", type=float, default=60.0, help="bead window half-width")
    c.add_argument("--approx-n", type=int, default=None)
    common(c)
    c.set_defaults(func=cmd_chain)

    v = sub.add_parser("verify", help="run a verification suite",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter, allow_abbrev=False)
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--n", type=int, nargs="+", default=None)
    v.add_argument("--beta", type=float, nargs="+", default=None)
    v.add_argument("--h", type=float, nargs="+", default=None)
    v.add_argument("--trials", type=int, default=None, help="instances / cases / steps")
    v.add_argument("--replicas", type=int, default=None, help="replicas, draws or spacings")
    v.add_argument("--steps", type=int, default=None, help="chain steps")
    v.add_argument("--jobs", type=int, default=1, help="worker processes over replica chunks")
    common(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"betabead: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
