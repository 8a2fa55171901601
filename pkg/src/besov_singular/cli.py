"""Command line: ``besov-singular <command> ...`` or ``python3 -m besov_singular``.

Exit codes: 0 success, 2 invalid arguments, 3 the computation itself failed.

Space mini-language for ``--src`` / ``--dst``::

    l1(l2)                 unit weights
    l2(2^j * l1)           weight 2^j
    l1(4^j * l2{3})        weight 4^j, explicit block size 3
    linf(2^(-1/2 j) * l2)  weight 2^(-j/2)
    domain(p=2, q=1, s=1/2)   Besov weights (also: rn, homogeneous, probability)

Block sizes without ``{m}`` come from ``--block`` (an int, or ``dyadic`` for
``2^j``), the number of levels from ``--levels``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import itertools
import json
import math
import os
import re
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .bernstein import bernstein_profile, flatness_search
from .classify import Setting, Verdict, classify, embedding_flags
from .exponents import INF, is_inf, parse_exponent, parse_scalar, recip, to_json_exponent
from .haar import (
    PiecewiseConstant,
    besov_seq_norm,
    coeffs_to_json,
    counting_constant,
    haar_analyze,
    parseval_sum,
    support_index_sets,
)
from .hump import BasisOracle, OracleExhausted, glide, random_sparse_basis
from .spaces import Flavor, Level, SpaceParams, TruncatedMixedSpace
from .witnesses import (
    basis_to_csv,
    constant_block_witness,
    diagonal_witness_basis,
    level_norms,
    rademacher_witness,
)

EXIT_ARGS = 2
EXIT_COMPUTE = 3


class ArgError(ValueError):
    pass


# ---------------------------------------------------------------------------
# space mini-language

_PRESETS = {
    "domain": Flavor.InhomogeneousWavelet,
    "rn": Flavor.InhomogeneousWavelet,
    "homogeneous": Flavor.Homogeneous,
    "probability": Flavor.ProbabilityNormalized,
}

_MIXED = re.compile(
    r"^l(?P<q>[^(\s]+)\(\s*(?:(?P<w>[^*]+?)\s*\*\s*)?l(?P<p>[^{}\s)]+)\s*(?:\{(?P<m>\d+)\})?\s*\)$"
)
_PRESET = re.compile(r"^(?P<name>\w+)\((?P<args>.*)\)$")
_WEIGHT = re.compile(r"^(?P<base>[^\^]+)\^(?:j|\((?P<e>[^)]*?)\s*\*?\s*j\))$")


def _exponent(text: str, what: str):
    try:
        return parse_exponent("inf" if text.strip() == "inf" else text)
    except ValueError as exc:
        raise ArgError(f"{what}: {exc}") from None


def _log2_weight(text: str):
    """``log2`` of the per-level weight ratio: ``2^j -> 1``, ``4^j -> 2``, ``2^(-1/2 j) -> -1/2``."""
    m = _WEIGHT.match(text.replace(" ", ""))
    if not m:
        raise ArgError(f"cannot parse weight {text!r}; use forms like 2^j or 2^(-1/2 j)")
    base = parse_scalar(m["base"])
    e = parse_scalar(m["e"]) if m["e"] else Fraction(1)
    if base <= 0:
        raise ArgError(f"weight base must be positive in {text!r}")
    if isinstance(base, Fraction) and base.numerator & (base.numerator - 1) == 0 and base.denominator == 1:
        return e * (base.numerator.bit_length() - 1)
    return e * math.log2(base)


def _sizes(block: str, levels: int):
    if block == "dyadic":
        return [2 ** j for j in range(levels)]
    try:
        m = int(block)
    except ValueError:
        raise ArgError(f"--block must be an integer or 'dyadic', got {block!r}") from None
    if m < 1:
        raise ArgError("--block must be positive")
    return [m] * levels


def parse_space(text: str, levels: int, block: str = "1", n: int = 1) -> TruncatedMixedSpace:
    if levels < 1:
        raise ArgError("--levels must be positive")
    text = text.strip()
    m = _MIXED.match(text)
    if m:
        q = _exponent(m["q"], "outer exponent")
        p = _exponent(m["p"], "inner exponent")
        sizes = [int(m["m"])] * levels if m["m"] else _sizes(block, levels)
        lw = _log2_weight(m["w"]) if m["w"] else Fraction(0)
        lv = tuple(Level(j, sizes[j], j * lw) for j in range(levels))
        return TruncatedMixedSpace(lv, q, p)
    m = _PRESET.match(text)
    if m and m["name"] in _PRESETS:
        kw = {}
        for part in filter(None, (s.strip() for s in m["args"].split(","))):
            key, _, val = part.partition("=")
            kw[key.strip()] = val.strip()
        unknown = set(kw) - {"p", "q", "s"}
        if unknown or not {"p", "q"} <= set(kw):
            raise ArgError(f"preset {m['name']} needs p=, q= and optional s=, got {m['args']!r}")
        try:
            params = SpaceParams(kw["p"], kw["q"], kw.get("s", 0), n)
        except ValueError as exc:
            raise ArgError(f"preset {m['name']}: {exc}") from None
        return TruncatedMixedSpace.besov(params, range(levels), _sizes(block, levels), _PRESETS[m["name"]])
    raise ArgError(f"cannot parse space {text!r}")


# ---------------------------------------------------------------------------
# output


def _emit(payload, args):
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        out = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    elif fmt == "text":
        out = _text(payload.get("result", payload)) + "\n"
    else:
        out = payload if isinstance(payload, str) else _csv(payload)
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _text(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(_text(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}" for v in obj)
    return f"{pad}{obj}"


def _csv(payload) -> str:
    rows = payload["result"]["rows"]
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(payload["config"], sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in {"func", "output", "format"}}
    cfg["version"] = __version__
    return cfg


# ---------------------------------------------------------------------------
# classify / atlas


def _params(args, suffix):
    vals = {k: getattr(args, k + suffix) for k in ("p", "q", "s")}
    out = {}
    for k, v in vals.items():
        try:
            out[k] = parse_exponent(v) if k != "s" else parse_scalar(v)
        except ValueError as exc:
            raise ArgError(f"--{k}{suffix}: {exc}") from None
    return SpaceParams(out["p"], out["q"], out["s"], args.n)


def run_classify(args):
    P0, P1 = _params(args, "0"), _params(args, "1")
    if args.n < 1:
        raise ArgError("--n must be positive")

    def compute():
        return classify(P0, P1, args.setting).to_json()

    return {"config": _config(args), "result": _guard(compute)}


def _atlas_rows(setting, n, ps, qs, filters):
    rows = []
    for p0, q0, p1, q1 in itertools.product(ps, qs, ps, qs):
        gap = n * recip(p0) - n * recip(p1)
        g = max(Fraction(0), gap) if not isinstance(gap, float) else max(0.0, gap)
        eps = Fraction(1, 1000)
        for d in sorted({Fraction(-1), Fraction(0), gap, g, gap + eps, gap - eps, Fraction(2)}):
            if not filters(setting, d, g, p0, q0, p1, q1):
                continue
            P0, P1 = SpaceParams(p0, q0, d, n), SpaceParams(p1, q1, 0, n)
            v = classify(P0, P1, setting)
            fl = embedding_flags(P0, P1, setting)
            verdicts = [x.value for x in Verdict if x is v.verdict]
            rows.append({
                "setting": setting.value,
                "n": n,
                "p0": to_json_exponent(p0), "q0": to_json_exponent(q0), "s0": str(d),
                "p1": to_json_exponent(p1), "q1": to_json_exponent(q1), "s1": "0",
                "verdict": v.verdict.value,
                "witness_hint": v.witness_hint.value,
                **{k: v.flags[k] for k in ("embeds", "compact", "fss", "ss")},
                "flags_consistent": fl.exists == v.embeds and fl.compact == v.compact,
                "total": len(verdicts) == 1,
            })
    return rows


def _order(a, b):
    return (a > b) - (a < b)


def run_atlas(args):
    settings = [Setting(s) for s in args.setting] if args.setting else list(Setting)
    try:
        ps = [parse_exponent(v) for v in args.p_values]
        qs = [parse_exponent(v) for v in args.q_values]
    except ValueError as exc:
        raise ArgError(f"grid value: {exc}") from None
    if not ps or not qs or not args.n:
        raise ArgError("empty grid")
    want_q = {"lt": -1, "eq": 0, "gt": 1}

    def filters(setting, d, g, p0, q0, p1, q1):
        if args.critical and d != g:
            return False
        if args.q_order and _order(q0, q1) != want_q[args.q_order]:
            return False
        if args.p0_finite and is_inf(p0):
            return False
        if args.p_order == "p1<=p0" and not p1 <= p0:
            return False
        if args.p_order == "p0<p1" and not p0 < p1:
            return False
        return True

    jobs = [(s, n) for s in settings for n in args.n]
    threads = max(1, int(os.environ.get("BESOV_ATLAS_THREADS", "1") or 1))
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda sn: _atlas_rows(sn[0], sn[1], ps, qs, filters), jobs))
    rows = [r for part in parts for r in part]
    if not rows:
        raise ArgError("empty grid")
    summary = {
        "rows": len(rows),
        "all_total": all(r["total"] for r in rows),
        "all_consistent": all(r["flags_consistent"] for r in rows),
        "counts": {k: sum(r["verdict"] == k for r in rows) for k in sorted({r["verdict"] for r in rows})},
    }
    return {"config": _config(args), "result": {"summary": summary, "rows": rows}}


# ---------------------------------------------------------------------------
# experiments


def _guard(fn):
    try:
        return fn()
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        if isinstance(exc, ArgError):
            raise
        raise _ComputeError(str(exc)) from exc


class _ComputeError(Exception):
    pass


def run_bernstein(args):
    src = parse_space(args.src, args.levels, args.block)
    dst = parse_space(args.dst, args.levels, args.block)
    if args.nmax < 1 or args.budget < 1:
        raise ArgError("--nmax and --budget must be positive")

    def compute():
        ests = bernstein_profile(src, dst, args.nmax, budget=args.budget, seed=args.seed)
        return {"src": src.to_json(), "dst": dst.to_json(), "estimates": [e.to_json() for e in ests]}

    return {"config": _config(args), "result": _guard(compute)}


def run_witness(args):
    fam = args.family
    if fam == "rademacher":
        p0, p1 = _exponent(args.p0, "--p0"), _exponent(args.p1, "--p1")

        def compute():
            val, a = rademacher_witness(args.n, p0, p1, directions=args.directions, seed=args.seed)
            return {"family": fam, "n": args.n, "lower_bound": val, "coefficients": [float(x) for x in a]}

    elif fam == "constant":
        p = _exponent(args.p0, "--p0")
        levels = [(j, 2 ** (j * args.n)) for j in range(args.levels)]

        def compute():
            B = constant_block_witness(levels, p, args.n)
            return {"family": fam, "basis": B.tolist(), "csv": basis_to_csv(B)}

    elif fam == "diagonal":
        src = parse_space(args.src, args.levels, args.block)
        dst = parse_space(args.dst, args.levels, args.block)

        def compute():
            blocks = []
            for lv in src.levels:
                x = np.zeros(lv.size)
                x[0] = 1.0 / lv.weight
                blocks.append(x)
            B = diagonal_witness_basis(src, dst, blocks)
            return {"family": fam, "basis": B.tolist(), "dst_level_norms": level_norms(dst, B).tolist(),
                    "csv": basis_to_csv(B)}

    elif fam == "flat":
        try:
            B = np.array(json.loads(args.basis), dtype=float)
        except (TypeError, ValueError) as exc:
            raise ArgError(f"--basis must be a JSON matrix: {exc}") from None

        def compute():
            fv = flatness_search(B, seed=args.seed)
            return {"family": fam, "vector": fv.vector.tolist(), "flat_count": fv.flat_count, "exact": fv.exact}

    else:  # pragma: no cover
        raise ArgError(f"unknown family {fam}")
    return {"config": _config(args), "result": _guard(compute)}


def run_glide(args):
    q0, q1 = _exponent(args.q0, "--q0"), _exponent(args.q1, "--q1")
    p = _exponent(args.p, "--p")
    if not args.eps > 0:
        raise ArgError("--eps must be positive")
    sizes = _sizes(args.block, args.levels)
    src = TruncatedMixedSpace.uniform(range(args.levels), sizes, p, q0)
    dst = src.with_exponents(q=q1)

    def compute():
        if args.subspace == "full":
            oracle = BasisOracle.full(src)
        else:
            rng = np.random.default_rng(args.seed)
            oracle = BasisOracle(random_sparse_basis(src, args.dim, rng), src)
        try:
            r = glide(oracle, args.eps, src, dst)
        except OracleExhausted as exc:
            raise _ComputeError(f"{exc} (partial ratio {exc.partial_ratio})") from exc
        return r.to_json()

    return {"config": _config(args), "result": _guard(compute)}


def _rationals(text, what):
    try:
        return [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ArgError(f"{what}: expected comma separated rationals") from None


def run_haar(args):
    if args.index_sets:
        V = tuple(_rationals(args.V, "--V"))
        U = tuple(_rationals(args.U, "--U"))
        if len(V) != 2 or len(U) != 2:
            raise ArgError("--V and --U take two endpoints each")

        def compute():
            sets = support_index_sets(V, U, args.jmax)
            return {
                "levels": [{"j": s.j, "R": len(s.R), "S": len(s.S)} for s in sets],
                "A": counting_constant(sets),
            }

        return {"config": _config(args), "result": _guard(compute)}
    bps = _rationals(args.breakpoints, "--breakpoints")
    vals = _rationals(args.values, "--values")
    try:
        f = PiecewiseConstant(tuple(bps), tuple(vals))
        params = SpaceParams(args.p, args.q, args.s, 1)
    except ValueError as exc:
        raise ArgError(str(exc)) from None

    def compute():
        c = haar_analyze(f, args.jmax)
        return {
            "function": f.to_json(),
            "coefficients": coeffs_to_json(c),
            "parseval": str(parseval_sum(c)),
            "l2_squared": str(f.l2_squared()),
            "besov_norm": besov_seq_norm(c, params),
        }

    return {"config": _config(args), "result": _guard(compute)}


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="besov-singular", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("json", "text")):
        p.add_argument("--format", choices=formats, default="json")
        p.add_argument("--output", "-o")

    p = sub.add_parser("classify", help="verdict for one pair of Besov spaces")
    p.add_argument("--setting", choices=[s.value for s in Setting], required=True)
    for k in ("p", "q", "s"):
        for i in "01":
            p.add_argument(f"--{k}{i}", required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=run_classify)

    p = sub.add_parser("atlas", help="verdict table over a parameter grid")
    p.add_argument("--setting", action="append", choices=[s.value for s in Setting])
    p.add_argument("--n", type=int, nargs="+", default=[1, 2])
    p.add_argument("--p-values", nargs="+", default=["1/2", "1", "2", "4", "inf"])
    p.add_argument("--q-values", nargs="+", default=["1/2", "1", "2", "4", "inf"])
    p.add_argument("--critical", action="store_true", help="only s0 - s1 = max(0, n/p0 - n/p1)")
    p.add_argument("--q-order", choices=["lt", "eq", "gt"])
    p.add_argument("--p-order", choices=["p1<=p0", "p0<p1"])
    p.add_argument("--p0-finite", action="store_true")
    common(p, ("csv", "json", "text"))
    p.set_defaults(func=run_atlas, format="csv")

    p = sub.add_parser("bernstein", help="Bernstein-number estimates on a small truncation")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--block", default="3")
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    common(p)
    p.set_defaults(func=run_bernstein)

    p = sub.add_parser("witness", help="explicit witness subspaces")
    p.add_argument("--family", choices=["rademacher", "diagonal", "constant", "flat"], required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--p0", default="4")
    p.add_argument("--p1", default="2")
    p.add_argument("--directions", type=int, default=4096)
    p.add_argument("--src", default="l1(l1)")
    p.add_argument("--dst", default="l2(l2)")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--block", default="2")
    p.add_argument("--basis", help="JSON matrix for --family flat (rows = coordinates)")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=run_witness)

    p = sub.add_parser("glide", help="gliding-hump run")
    p.add_argument("--q0", required=True)
    p.add_argument("--q1", required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--levels", type=int, default=40)
    p.add_argument("--block", default="1")
    p.add_argument("--subspace", choices=["full", "random"], default="full")
    p.add_argument("--dim", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=run_glide)

    p = sub.add_parser("haar", help="Haar coefficients and index sets")
    p.add_argument("--breakpoints", default="0,1")
    p.add_argument("--values", default="1")
    p.add_argument("--jmax", type=int, default=4)
    p.add_argument("--p", default="2")
    p.add_argument("--q", default="2")
    p.add_argument("--s", default="0")
    p.add_argument("--index-sets", action="store_true")
    p.add_argument("--V", default="1/4,3/4")
    p.add_argument("--U", default="-1/4,5/4")
    common(p)
    p.set_defaults(func=run_haar)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        payload = args.func(args)
    except ArgError as exc:
        print(f"besov-singular {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except _ComputeError as exc:
        print(f"besov-singular {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    try:
        _emit(payload, args)
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
