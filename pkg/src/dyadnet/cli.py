"""Command-line front end.

Exit codes: 0 success, 1 a verified identity or asserted bound failed,
2 unreadable input or bad arguments, 3 a precondition was not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cltlab, discrepancy as disc, dual as dl, netgen as ng
from .cltlab import DEFAULT_SEED
from .gf2 import read_matrices
from .verify import run_checks

log = logging.getLogger("dyadnet")

COMMANDS = ("gen", "t-param", "dual", "disc", "warnock", "decompose", "clt", "moments", "verify")


class InputError(Exception):
    """Unreadable or malformed input file (exit 2)."""


class Precondition(Exception):
    """Valid input that the requested operation cannot handle (exit 3)."""


# ---------------------------------------------------------------------------
# argument handling


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("net source")
    src.add_argument("--family", choices=ng.FAMILIES, help="built-in generating matrices")
    src.add_argument("--s", type=int, help="dimension (default: family's natural dimension)")
    src.add_argument("--m", type=int, help="digit depth")
    src.add_argument("--matrices", type=Path, help="file with s concatenated m x m matrices")
    src.add_argument("--seed", type=int, default=DEFAULT_SEED)
    src.add_argument("--n", type=int, default=10_000, dest="n_samples", help="number of random samples")
    src.add_argument("--out", type=Path, help="output path (default stdout)")
    src.add_argument("--format", choices=("csv", "json"), default=None)
    src.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="dyadnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a net file")
    g.add_argument("--prefix-k", type=int, help="emit block k of the digital sequence instead")
    g.add_argument("--index-extend", action="store_true", help="prepend the coordinate n / 2^m")

    sub.add_parser("t-param", parents=[common], help="quality parameter by every method")

    d = sub.add_parser("dual", parents=[common], help="dual space summary")
    d.add_argument("--weights", action="store_true", help="rho-weight histogram as CSV")

    q = sub.add_parser("disc", parents=[common], help="local discrepancy at Y")
    q.add_argument("--y", type=_floats, required=True, help="comma-separated coordinates in (0, 1]")
    q.add_argument("--shift", type=_ints, help="digital shift as m-digit integers")

    w = sub.add_parser("warnock", parents=[common], help="exact squared L2 discrepancy")
    w.add_argument("--shift", type=_ints)
    w.add_argument("--shift-average", action="store_true", help="average over all digital shifts")

    dc = sub.add_parser("decompose", parents=[common], help="martingale terms D_k at one (T, Y)")
    dc.add_argument("--shift", type=_ints)
    dc.add_argument("--y", type=_floats)
    dc.add_argument("--t", type=int, help="quality parameter used for the families (default: exact t)")

    c = sub.add_parser("clt", parents=[common], help="normalised discrepancy vs the standard normal")
    c.add_argument("--normalizer", default="exact_enumeration",
                   choices=("exact_enumeration", "exact_warnock_shift_avg", "monte_carlo"))
    c.add_argument("--hist", type=Path, help="write the histogram CSV here")

    mo = sub.add_parser("moments", parents=[common], help="moment ratios against chi_p")
    mo.add_argument("--p", type=_floats, default=[1.0, 2.0, 3.0, 4.0])

    v = sub.add_parser("verify", parents=[common], help="run the identity and bound checks")
    v.add_argument("--t", type=int, help="claimed quality parameter (default: exact t)")
    return p


def resolve_matrices(args) -> ng.GeneratingMatrixSet:
    if args.matrices is not None:
        try:
            mats = read_matrices(args.matrices)
        except OSError as exc:
            raise InputError(str(exc)) from exc
        except ValueError as exc:
            raise InputError(f"{args.matrices}: {exc}") from exc
        if not mats:
            raise InputError(f"{args.matrices}: no matrices")
        try:
            return ng.GeneratingMatrixSet(len(mats), mats[0].rows, tuple(mats))
        except ValueError as exc:
            raise InputError(f"{args.matrices}: {exc}") from exc
    if args.family is None or args.m is None:
        raise Precondition("give --family and --m, or --matrices")
    s = args.s if args.s is not None else ng.default_dimension(args.family)
    try:
        return ng.builtin_matrices(args.family, s, args.m)
    except ValueError as exc:
        raise Precondition(str(exc)) from exc


def resolved_config(args, G: ng.GeneratingMatrixSet | None = None) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "verbose"}
    if G is not None:
        cfg["s"], cfg["m"] = G.s, G.m
    return cfg


# ---------------------------------------------------------------------------
# output


class Emitter:
    def __init__(self, args, config: dict):
        self.args = args
        self.config = config

    def _write(self, text: str, path: Path | None = None) -> None:
        path = path if path is not None else self.args.out
        if path is None:
            sys.stdout.write(text)
        else:
            Path(path).write_text(text)

    def csv(self, header: list[str], rows: list[list], path: Path | None = None) -> None:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
        self._write(buf.getvalue(), path)

    def json(self, doc: dict) -> None:
        doc = {"config": self.config, **doc}
        self._write(json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def table(self, header: list[str], rows: list[list], extra: dict | None = None) -> None:
        if (self.args.format or "csv") == "json":
            self.json({"rows": [dict(zip(header, r)) for r in rows], **(extra or {})})
        else:
            self.csv(header, rows)


def _num(x):
    if isinstance(x, Fraction):
        return float(x)
    return x


def _shift(args, G) -> ng.ShiftVector:
    if getattr(args, "shift", None) is None:
        return ng.ShiftVector.zeros(G.s, G.m)
    try:
        return ng.ShiftVector(G.s, G.m, tuple(args.shift))
    except ValueError as exc:
        raise Precondition(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    G = resolve_matrices(args)
    if args.prefix_k is not None:
        if args.family is None:
            raise Precondition("--prefix-k needs a built-in family")
        gen = ng.builtin_sequence(args.family, G.s)
        try:
            P = ng.sequence_prefix(gen, args.prefix_k, G.m)
        except ValueError as exc:
            raise Precondition(str(exc)) from exc
    else:
        P = ng.generate_net(G)
    if args.index_extend:
        P = ng.extend_with_index(P)
    log.info("config: %s", json.dumps(resolved_config(args, G), sort_keys=True))
    text = ng.format_net(P)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return 0


def cmd_t_param(args) -> int:
    G = resolve_matrices(args)
    rows = []
    for method in ("dual_weight", "rank_composition"):
        rows.append([method, dl.t_parameter_exact(G, method).value])
    try:
        rows.append(["direct_counting", dl.t_parameter_counting(ng.generate_net(G)).value])
    except ValueError as exc:
        log.warning("direct counting skipped: %s", exc)
    Emitter(args, resolved_config(args, G)).table(["method", "t"], rows)
    return 0


def cmd_dual(args) -> int:
    G = resolve_matrices(args)
    D = dl.dual_space(G)
    em = Emitter(args, resolved_config(args, G))
    if args.weights:
        if not D.enumerable:
            raise Precondition(f"dual dimension {D.dim} above enumeration cap {dl.ENUMERATION_CAP}")
        hist = dl.weight_histogram(D)
        em.csv(["weight", "count"], [[w, c] for w, c in sorted(hist.items())])
        return 0
    w = dl.min_dual_weight(D)
    rows = [["dim", D.dim], ["size", D.size],
            ["min_weight", "inf" if w == dl.INFINITE_WEIGHT else int(w)]]
    em.table(["quantity", "value"], rows)
    return 0


def cmd_disc(args) -> int:
    G = resolve_matrices(args)
    P = ng.digital_shift(ng.generate_net(G), _shift(args, G))
    try:
        val = disc.local_discrepancy(P, args.y)
    except ValueError as exc:
        raise Precondition(str(exc)) from exc
    Emitter(args, resolved_config(args, G)).table(["y", "D"], [[",".join(map(repr, args.y)), float(val)]])
    return 0


def cmd_warnock(args) -> int:
    G = resolve_matrices(args)
    P = ng.digital_shift(ng.generate_net(G), _shift(args, G))
    em = Emitter(args, resolved_config(args, G))
    if args.shift_average:
        val = cltlab.shift_averaged_l2_sq(P)
        em.table(["quantity", "value", "exact"], [["shift_averaged_l2_sq", float(val), str(val)]])
    else:
        val = disc.l2_discrepancy_sq(P, exact=P.N <= 4096)
        em.table(["quantity", "value", "exact"], [["l2_sq", float(val), str(val)]])
    return 0


def cmd_decompose(args) -> int:
    G = resolve_matrices(args)
    P = ng.generate_net(G)
    D = dl.dual_space(G)
    if not D.enumerable:
        raise Precondition("decompose needs an enumerable dual")
    if G.m < 1:
        raise Precondition("decompose needs m >= 1")
    T = _shift(args, G)
    if args.y is None:
        _, Y64 = cltlab.sample_block(G.s, G.m, args.seed, 0, 1)
        Y = [Fraction(int(v), 2**64) for v in Y64[0]]
    else:
        Y = [Fraction(y) for y in args.y]
    if len(Y) != G.s or any(not 0 <= y < 1 for y in Y):
        raise Precondition(f"--y needs {G.s} coordinates in [0, 1)")
    t = args.t if args.t is not None else dl.t_parameter_exact(G).value
    if not 0 <= t <= G.m:
        raise Precondition(f"--t must lie in [0, {G.m}]")
    md = disc.martingale_terms(P, T, Y, t=t, dual=D)
    dm, e = disc.dm_decomposition(P, T, Y)
    rows = [[str(k), len(md.families[k]), float(v)] for k, v in md.terms.items()]
    rows.append(["R", len(md.families[G.m + 1]), float(md.remainder)])
    rows.append(["Dm", "", float(dm)])
    rows.append(["E", "", float(e)])
    rows.append(["D", "", float(dm + e)])
    Emitter(args, resolved_config(args, G) | {"t_used": t, "V0": md.V0}).csv(["k", "family_size", "value"], rows)
    return 0 if md.total == dm else 1


def _normalizer(args, P) -> cltlab.MomentEstimate:
    cfg = cltlab.SamplerConfig(method=args.normalizer, n_samples=args.n_samples, seed=args.seed, threads=args.threads)
    return cltlab.estimate_M_sp(P, 2.0, cfg)


def _band_check(P, M2: float, t: int, p: float = 2.0) -> dict:
    lo, hi = cltlab.moment_band(P.s, p, t)
    scaled = P.m ** (-(P.s - 1) / 2) * M2 if P.m >= 1 else float("nan")
    return {"name": "moment_band", "value": scaled, "lo": lo, "hi": hi, "passed": bool(lo <= scaled <= hi)}


def cmd_clt(args) -> int:
    G = resolve_matrices(args)
    P = ng.generate_net(G)
    t = dl.t_parameter_exact(G).value
    try:
        normalizer = _normalizer(args, P)
        report = cltlab.clt_experiment(P, args.n_samples, args.seed, normalizer, t=t, threads=args.threads)
    except ValueError as exc:
        raise Precondition(str(exc)) from exc
    checks = [{"name": "ks_in_unit_interval", "passed": 0.0 <= report.ks_distance <= 1.0}]
    if P.m >= 1:
        checks.append(_band_check(P, normalizer.value, t))
    if normalizer.method == "exact_enumeration":
        m2, se = report.empirical_moments[2.0], report.moment_std_errors[2.0]
        checks.append({"name": "second_moment_near_one", "value": m2, "stderr": se,
                       "passed": bool(abs(m2 - 1) <= 4 * se)})
    config = resolved_config(args, G)
    em = Emitter(args, config)
    em.json({**report.to_dict(), "checks": checks})
    if args.hist is not None:
        rows = [[report.hist_edges[i], report.hist_edges[i + 1], c] for i, c in enumerate(report.hist_counts)]
        em.csv(["lo", "hi", "count"], rows, path=args.hist)
    return 0 if all(c["passed"] for c in checks) else 1


def cmd_moments(args) -> int:
    G = resolve_matrices(args)
    P = ng.generate_net(G)
    t = dl.t_parameter_exact(G).value
    try:
        exp = cltlab.moment_ratio_experiment(P, args.p, args.n_samples, args.seed, threads=args.threads)
    except ValueError as exc:
        raise Precondition(str(exc)) from exc
    entries = {}
    for p, r in exp.items():
        entries[cltlab._pkey(p)] = {
            "ratio": r.ratio, "raw_ratio": r.raw_ratio, "target": r.target,
            "M_p": r.M_p, "M_2": r.M_2, "ratio_stderr": r.std_error,
        }
    any_ratio = next(iter(exp.values()))
    checks = []
    if P.m >= 1:
        checks.append(_band_check(P, any_ratio.M_2, t))
    if 2.0 in exp:
        checks.append({"name": "p2_ratio_is_one", "passed": exp[2.0].ratio == 1.0})
    em = Emitter(args, resolved_config(args, G))
    if (args.format or "json") == "csv":
        rows = [[k, v["ratio"], v["raw_ratio"], v["target"], v["ratio_stderr"]] for k, v in entries.items()]
        em.csv(["p", "ratio", "raw_ratio", "chi_p", "ratio_stderr"], rows)
    else:
        em.json({"net": {"s": P.s, "m": P.m, "t": t}, "seed": args.seed, "n": args.n_samples,
                 "ratios": entries, "checks": checks})
    return 0 if all(c["passed"] for c in checks) else 1


def cmd_verify(args) -> int:
    G = resolve_matrices(args)
    if args.t is not None and not 0 <= args.t <= G.m:
        raise Precondition(f"--t must lie in [0, {G.m}]")
    results = run_checks(G, args.t, seed=args.seed)
    rows = [[r.name, r.lemma, r.status, r.detail] for r in results]
    Emitter(args, resolved_config(args, G)).table(["check", "lemma", "status", "detail"], rows)
    failed = [r for r in results if not r.passed and not r.skipped]
    for r in failed:
        print(f"verify: lemma {r.lemma} violated ({r.name}): {r.detail}", file=sys.stderr)
    return 1 if failed else 0


HANDLERS = {
    "gen": cmd_gen, "t-param": cmd_t_param, "dual": cmd_dual, "disc": cmd_disc,
    "warnock": cmd_warnock, "decompose": cmd_decompose, "clt": cmd_clt,
    "moments": cmd_moments, "verify": cmd_verify,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return HANDLERS[args.command](args)
    except InputError as exc:
        print(f"dyadnet: {exc}", file=sys.stderr)
        return 2
    except Precondition as exc:
        print(f"dyadnet: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
