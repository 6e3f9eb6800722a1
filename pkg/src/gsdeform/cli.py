"""``gsd``: verify diagrams, tabulate Maurer-Cartan residuals, decide Z_k obstructions.

Exit codes: 0 pass, 1 a mathematical failure was found, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gsdeform import zk
from gsdeform.gs import load_diagram, verify_diagram
from gsdeform.linf import VoronovData, arrow_series, mc_residual
from gsdeform.cochain import check_zero
from gsdeform.quantize import Bivector
from gsdeform.ratlaurent import parse_poly

SCHEMA = 1


class UsageError(Exception):
    pass


def _emit(report: dict, fmt: str, out) -> None:
    report = {"schema": SCHEMA, **report}
    if fmt == "json":
        out.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        return
    for line in _text_lines(report):
        out.write(line + "\n")


def _text_lines(obj, prefix: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val:
                lines.append(f"{prefix}{key}:")
                lines.extend(_text_lines(val, prefix + "  "))
            else:
                lines.append(f"{prefix}{key}: {_scalar(val)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                lines.append(f"{prefix}-")
                lines.extend(_text_lines(item, prefix + "  "))
            else:
                lines.append(f"{prefix}- {_scalar(item)}")
    return lines


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if v is None:
        return "-"
    if v == [] or v == {}:
        return "(none)"
    return str(v)


# argument handling

def _geometry(args):
    if args.zk is not None and args.diagram is not None:
        raise UsageError("give either --zk or --diagram, not both")
    if args.zk is not None:
        if args.zk < 1:
            raise UsageError(f"--zk must be a positive integer, got {args.zk}")
        return zk.build_zk(args.zk), None
    if args.diagram is not None:
        path = Path(args.diagram)
        if not path.exists():
            raise UsageError(f"no such diagram file: {path}")
        try:
            return None, load_diagram(path)
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"bad diagram config {path}: {e}")
    raise UsageError("one of --zk or --diagram is required")


def parse_classical(text: str, g: zk.ZkGeometry) -> zk.ClassicalDeformation:
    """``i=I[,t=POLY]``."""
    fields = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"bad --classical item {part!r}; expected key=value")
        key, val = part.split("=", 1)
        fields[key.strip()] = val.strip()
    if "i" not in fields or set(fields) - {"i", "t"}:
        raise UsageError("--classical takes i=I[,t=POLY]")
    try:
        i = int(fields["i"])
    except ValueError:
        raise UsageError(f"--classical index must be an integer, got {fields['i']!r}")
    if not 1 <= i <= g.k - 1:
        raise UsageError(f"--classical index {i} outside 1..{g.k - 1}")
    t = None
    if "t" in fields:
        try:
            t = parse_poly(fields["t"], set(g.parameters))
        except ValueError as e:
            raise UsageError(f"bad t polynomial: {e}")
    return zk.ClassicalDeformation.single(g, i, t, order=3)


def parse_quantize(text: str, g: zk.ZkGeometry) -> zk.Quantization:
    """``eta=canonical`` or ``eta=FILE`` with ``{"U": bivector, "V": bivector}``."""
    if not text.startswith("eta="):
        raise UsageError("--quantize takes eta=canonical|FILE")
    val = text[4:]
    if val == "canonical":
        return zk.quantize_zk(g)
    path = Path(val)
    if not path.exists():
        raise UsageError(f"no such bivector file: {path}")
    try:
        cfg = json.loads(path.read_text())
        bu = Bivector.from_json(cfg["U"], ("z", "u"))
        bv = Bivector.from_json(cfg["V"], ("zeta", "v"))
        return zk.quantize_zk(g, (bu.entry(0, 1), bv.entry(0, 1)))
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad bivector config {path}: {e}")


# commands

def cmd_verify(args) -> tuple[dict, int]:
    g, d = _geometry(args)
    d = d if d is not None else g.span
    rep = verify_diagram(d, args.grid)
    return {"command": "verify", "diagram": d.name, "grid": args.grid, "pass": rep.ok,
            **rep.to_json()}, (0 if rep.ok else 1)


def _table(c, grid) -> list[dict]:
    ok, _ = check_zero(c, grid)
    if ok:
        return []
    rows = []
    for inputs in grid:
        val = c.evaluate(inputs)
        if val:
            rows.append({"inputs": [str(p) for p in inputs], "value": str(val)})
    return rows


def cmd_mc(args) -> tuple[dict, int]:
    g, d = _geometry(args)
    if g is None and (args.classical or args.quantize):
        raise UsageError("--classical and --quantize need a built-in --zk geometry")
    if args.order < 1:
        raise UsageError("--order must be at least 1")
    d = d if d is not None else g.span
    Mt = Pt = None
    setup = {}
    if args.quantize:
        if args.order > 2:
            raise UsageError("the star product is only available through order 2")
        q = parse_quantize(args.quantize, g)
        Mt = q.series()
        setup["quantize"] = {"eta_U": str(q.eta_u.entry(0, 1)), "eta_V": str(q.eta_v.entry(0, 1))}
    if args.classical:
        cd = parse_classical(args.classical, g)
        if args.order > cd.order:
            cd = zk.ClassicalDeformation(g, cd.coeffs, args.order)
        Pt = arrow_series(d, None, {n: cd.psi(n) for n in range(1, args.order + 1)},
                          order=args.order)
        setup["classical"] = {"shift": str(cd.shift)}
    vd = VoronovData(d)
    orders = []
    all_zero = True
    for n in range(1, args.order + 1):
        gg, aa = mc_residual(vd, Mt, Pt, n)
        comps = []
        for part, elem in (("g", gg), ("a", aa)):
            for sig in sorted(elem.components):
                rows = _table(elem.components[sig], d.grid(sig[0], args.grid))
                comps.append({"part": part, "sources": list(sig[0]), "target": sig[1],
                              "zero": not rows, "table": rows})
        zero = all(c["zero"] for c in comps)
        all_zero &= zero
        orders.append({"order": n, "zero": zero, "components": comps})
    report = {"command": "mc", "diagram": d.name, "grid": args.grid, "order": args.order,
              "setup": setup, "residuals": orders, "pass": all_zero}
    return report, (0 if all_zero else 1)


def cmd_verdict(args) -> tuple[dict, int]:
    if args.k < 1 or not 1 <= args.i <= args.k - 1:
        raise UsageError(f"need k >= 2 and 1 <= i <= k - 1, got k={args.k}, i={args.i}")
    rep = zk.simultaneous_verdict(args.k, args.i)
    return {"command": "verdict", **rep}, 0


def cmd_suite(args) -> tuple[dict, int]:
    from gsdeform.suite import SUITES, run_suites

    names = args.only or None
    if names:
        bad = [n for n in names if n not in SUITES]
        if bad:
            raise UsageError(f"unknown suite(s) {bad}; choose from {sorted(SUITES)}")
    results = run_suites(args.seed, names)
    passed = sum(r.ok for r in results)
    return {"command": "suite", "seed": args.seed,
            "summary": {"passed": passed, "failed": len(results) - passed, "total": len(results)},
            "suites": [r.to_json() for r in results]}, (0 if passed == len(results) else 1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, geometry=True):
        if geometry:
            sp.add_argument("--zk", type=int, metavar="K", help="built-in Z_k diagram")
            sp.add_argument("--diagram", metavar="FILE", help="diagram JSON config")
        sp.add_argument("--grid", type=int, default=2, metavar="B", help="monomial exponent bound (default 2)")
        sp.add_argument("--order", type=int, default=2, metavar="N", help="truncation order (default 2)")
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--seed", type=int, default=0, metavar="S", help="seed for random suites (default 0)")

    sp = sub.add_parser("verify", help="check that a diagram is a diagram of algebras")
    common(sp)
    sp.set_defaults(run=cmd_verify)

    sp = sub.add_parser("mc", help="per-order Maurer-Cartan residuals")
    common(sp)
    sp.add_argument("--classical", metavar="i=I[,t=POLY]")
    sp.add_argument("--quantize", metavar="eta=canonical|FILE")
    sp.set_defaults(run=cmd_mc)

    sp = sub.add_parser("verdict", help="second-order simultaneous deformation verdict on Z_k")
    common(sp, geometry=False)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--i", type=int, required=True)
    sp.set_defaults(run=cmd_verdict)

    sp = sub.add_parser("suite", help="run the property battery")
    common(sp, geometry=False)
    sp.add_argument("--only", nargs="+", metavar="NAME")
    sp.set_defaults(run=cmd_suite)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.run(args)
    except UsageError as e:
        print(f"gsd: error: {e}", file=sys.stderr)
        return 2
    _emit(report, args.format, out)
    return code


__all__ = ["build_parser", "main", "parse_classical", "parse_quantize"]


if __name__ == "__main__":
    sys.exit(main())
