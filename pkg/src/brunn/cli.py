"""Batch driver: ``brunn <command> [flags]``.

Reports are JSON (curves are CSV) and contain the resolved configuration and
the library version, so identical flags give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import coneplane as cp
from .convexify import PointCloud, conv_iter, hausdorff, nu_estimate
from .euclid_hull import brunn_verify_rn
from .productspace import ProductPoint
from .subgroups import (
    classify,
    cocompactness_radius,
    distinct_axes,
    hull_product_check,
    load_subgroup,
    orbit_ball,
)
from .treespace import parse_tree_point, tree_hull


def _fraction(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if q <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return q


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _theta(text: str) -> str:
    try:
        cp.cone_config(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _config(args: argparse.Namespace) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out"):
            continue
        out[k] = str(v) if isinstance(v, Fraction) else v
    return out


def _envelope(args, result) -> dict:
    return {"version": __version__, "command": args.command, "config": _config(args), "result": result}


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


# --- commands -------------------------------------------------------------------


def cmd_qc_estimate(args) -> str:
    H = load_subgroup(args.input)
    buf = io.StringIO()
    buf.write(f"# brunn {__version__} qc-estimate\n")
    buf.write("# config: " + json.dumps(_config(args), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "orbit_size", "nu"])
    for L in range(1, args.max_len + 1):
        ob = orbit_ball(H, None, L)
        w.writerow([L, len(ob.cloud), repr(nu_estimate(ob.cloud, args.epsilon))])
    return buf.getvalue()


def _random_rational(rng: random.Random, n: int, k: int) -> list[list[Fraction]]:
    return [[Fraction(rng.randint(-20, 20), 10) for _ in range(n)] for _ in range(k)]


def _random_cone(rng: random.Random, cfg: cp.ConeConfig, k: int) -> list[cp.ConePoint]:
    return [cp.cone_point(rng.uniform(0.5, 2.0), rng.uniform(0.0, cfg.theta), cfg) for _ in range(k)]


def cmd_brunn(args) -> dict:
    rng = random.Random(args.seed)
    data = _read_json(args.input) if args.input else None
    if args.space == "rn":
        if data is not None:
            pts = [[Fraction(str(x)) for x in p] for p in data["points"]]
        else:
            pts = _random_rational(rng, args.dim, args.count)
        rep = brunn_verify_rn(pts, args.epsilon, args.cap)
        result = rep.to_json()
        result["points"] = [[str(x) for x in p] for p in pts]
        return result
    if args.space == "cone":
        cfg = cp.cone_config(args.theta)
        if data is not None:
            pts = [cp.ConePoint.from_json(p, cfg) for p in data["points"]]
        else:
            pts = _random_cone(rng, cfg, args.count)
        rep = cp.brunn2_verify(pts, float(args.epsilon), cfg)
        result = rep.to_json()
        result["points"] = [p.to_json() for p in pts]
        return result
    # tree: conv^iters of a finite set against a sample of its hull
    if data is None:
        raise ValueError("--space tree needs --input with a 'points' list and 'm'")
    m = int(data["m"])
    tps = [parse_tree_point(str(s), m) for s in data["points"]]
    seed = PointCloud([ProductPoint(t, ()) for t in tps], m=m)
    c = conv_iter(seed, args.iters, args.epsilon, args.cap)
    hull = tree_hull(tps)
    sample = PointCloud([ProductPoint(t, ()) for t in hull.sample(args.epsilon)], m=m)
    d = hausdorff(c, sample)
    return {
        "hausdorff": d,
        "bound": float(args.epsilon),
        "ok": d <= float(args.epsilon),
        "cloud_size": len(c),
        "sample_size": len(sample),
        "hull_length": str(hull.length()),
    }


def cmd_classify(args) -> dict:
    H = load_subgroup(args.input)
    rep = classify(H, args.max_len)
    result = {"subgroup": H.to_json(), "classification": rep.to_json()}
    if args.radius_len:
        result["radius"] = [
            cocompactness_radius(H, None, L, args.epsilon, args.cap).to_json()
            for L in range(args.radius_len[0], args.radius_len[1] + 1)
        ]
    return result


def cmd_hull_check(args) -> dict:
    H = load_subgroup(args.input)
    if not distinct_axes(H):
        raise ValueError("generators' free parts share one axis; nothing to check")
    rep = hull_product_check(H, None, args.max_len, args.epsilon, args.cap)
    return {"subgroup": H.to_json(), "hull_check": rep.to_json()}


def _broom_config(rng: random.Random, cfg: cp.ConeConfig):
    """b anywhere; a1, a2 in the arc of angles at least pi away from b."""
    b = cp.cone_point(rng.uniform(0.2, 3.0), rng.uniform(0.0, cfg.theta), cfg)
    width = cfg.theta - 2 * math.pi

    def far() -> cp.ConePoint:
        return cp.cone_point(rng.uniform(0.0, 3.0), b.phi + math.pi + rng.uniform(0.0, width), cfg)

    return far(), far(), b


def cmd_cone_broom(args) -> dict:
    cfg = cp.cone_config(args.theta)
    rng = random.Random(args.seed)
    if args.input:
        data = _read_json(args.input)
        configs = [tuple(cp.ConePoint.from_json(data[k], cfg) for k in ("a1", "a2", "b"))]
    else:
        configs = [_broom_config(rng, cfg) for _ in range(args.iters)]
    reports = []
    for a1, a2, b in configs:
        rep = cp.broom_check(a1, a2, b, args.samples, cfg)
        reports.append({"a1": a1.to_json(), "a2": a2.to_json(), "b": b.to_json(), **rep.to_json()})
    return {
        "ok": all(r["ok"] for r in reports),
        "max_error": max(r["max_error"] for r in reports),
        "checks": reports,
    }


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brunn", description="Convexification experiments in trees times Euclidean space.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eps="1/8"):
        sp.add_argument("--epsilon", type=_fraction, default=Fraction(eps))
        sp.add_argument("--cap", type=_positive, default=10**7, help="maximum cloud size")
        sp.add_argument("--out", help="write the report here instead of stdout")

    q = sub.add_parser("qc-estimate", help="nu(L) curve of an orbit ball, as CSV")
    q.add_argument("--input", required=True, help="subgroup file (.json or .toml)")
    q.add_argument("--max-len", type=_positive, default=4)
    common(q)
    q.set_defaults(func=cmd_qc_estimate)

    b = sub.add_parser("brunn", help="sampled iterated convexification vs the convex hull")
    b.add_argument("--space", choices=("rn", "cone", "tree"), required=True)
    b.add_argument("--input", help="JSON file with a 'points' list; random instance if omitted")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--dim", type=int, choices=(2, 3), default=2, help="dimension of random rn instances")
    b.add_argument("--count", type=_positive, default=5, help="points in a random instance")
    b.add_argument("--iters", type=_positive, default=1, help="convexification steps for --space tree")
    b.add_argument("--theta", type=_theta, default="5/2*pi")
    common(b, "1/20")
    b.set_defaults(func=cmd_brunn)

    c = sub.add_parser("classify", help="product-structure verdict with witnesses")
    c.add_argument("--input", required=True)
    c.add_argument("--max-len", type=_positive, default=4)
    c.add_argument("--radius-len", type=_positive, nargs=2, metavar=("L_MIN", "L_MAX"), help="also report R(L) for this range")
    common(c)
    c.set_defaults(func=cmd_classify)

    h = sub.add_parser("hull-check", help="conv^{1+dim V} of an orbit ball stays in the product hull")
    h.add_argument("--input", required=True)
    h.add_argument("--max-len", type=_positive, default=3)
    common(h)
    h.set_defaults(func=cmd_hull_check)

    k = sub.add_parser("cone-broom", help="geodesics through a cone point of angle theta")
    k.add_argument("--theta", type=_theta, default="5/2*pi")
    k.add_argument("--input", help="JSON file with points a1, a2, b; random instances if omitted")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--iters", type=_positive, default=20, help="number of random configurations")
    k.add_argument("--samples", type=_positive, default=33)
    k.add_argument("--out")
    k.set_defaults(func=cmd_cone_broom)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"brunn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, str):
        text = result
    else:
        text = json.dumps(_envelope(args, result), indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
