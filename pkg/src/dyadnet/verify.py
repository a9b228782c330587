"""Identity and bound checks run by ``dyadnet verify``.

Each check is tied to the lemma it exercises and is evaluated at a claimed
quality parameter ``t``.  Checks that would be infeasible on the given
instance are reported as skipped rather than silently passing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import dual as dl
from .cltlab import sample_block
from .discrepancy import (
    big_lambda,
    conditional_expectation,
    e_squared_batch,
    index_vectors,
    lambda_via_dual,
    martingale_terms,
    micro_local_discrepancy,
)
from .netgen import GeneratingMatrixSet, generate_net


@dataclass(frozen=True)
class CheckResult:
    name: str
    lemma: str
    passed: bool
    detail: str = ""
    skipped: bool = False

    @property
    def status(self) -> str:
        return "skipped" if self.skipped else ("pass" if self.passed else "FAIL")


def _random_shifts(s, m, seed, count):
    T, _ = sample_block(s, m, seed, 0, count)
    return [tuple(int(v) for v in row) for row in T]


def run_checks(G: GeneratingMatrixSet, t_claim: int | None = None, seed: int = 0,
               n_shifts: int = 20, n_pairs: int = 2000) -> list[CheckResult]:
    s, m = G.s, G.m
    P = generate_net(G)
    D = dl.dual_space(G)
    results: list[CheckResult] = []
    add = results.append

    t_dual = dl.t_parameter_exact(G, "dual_weight").value
    t_rank = dl.t_parameter_exact(G, "rank_composition").value
    t = t_dual if t_claim is None else t_claim
    w = dl.min_dual_weight(D)

    # balance of every elementary interval, by direct counting
    try:
        t_count = dl.t_parameter_counting(P).value
        add(CheckResult("net_property", "net-definition", t_count <= t,
                        f"counting t={t_count}, claimed t={t}"))
    except ValueError as exc:
        t_count = None
        add(CheckResult("net_property", "net-definition", True, str(exc), skipped=True))

    methods = {"dual_weight": t_dual, "rank_composition": t_rank}
    if t_count is not None:
        methods["direct_counting"] = t_count
    add(CheckResult("t_methods_agree", "B", len(set(methods.values())) == 1,
                    ", ".join(f"{k}={v}" for k, v in methods.items())))
    add(CheckResult("dual_weight_criterion", "B", w >= m - t + 1,
                    f"min dual weight {w} vs m - t + 1 = {m - t + 1}"))

    enumerable = D.enumerable and s * m <= 64
    n_index = (m + 1) ** s
    if not enumerable or n_index > 20_000:
        reason = "dual not enumerable" if not enumerable else f"{n_index} index vectors"
        for name, lemma in [("g_a_bound", "C"), ("character_dichotomy", "D"),
                            ("lambda_dual_identity", "1"), ("micro_local_bounds", "micro-local")]:
            add(CheckResult(name, lemma, True, reason, skipped=True))
    else:
        # dual-count bound
        bad = []
        for A in index_vectors(m, s):
            try:
                dl.count_G_A(D, A.values)
            except AssertionError as exc:
                bad.append(str(exc))
        add(CheckResult("g_a_bound", "C", not bad, bad[0] if bad else f"{n_index} index vectors"))

        # character sums vanish off the dual
        if s * m <= 16:
            vs = range(2 ** (s * m))
            scope = "exhaustive"
        else:
            rng = np.random.default_rng(seed)
            vs = [int(v) for v in rng.integers(0, 2 ** (s * m), size=512, dtype=np.uint64)]
            vs += [int(e) for e in D.elements[:512]]
            scope = f"{len(vs)} sampled vectors"
        wrong = 0
        for v in vs:
            cs = dl.character_sum(P, v)
            if cs != (P.N if D.contains(v) else 0):
                wrong += 1
        add(CheckResult("character_dichotomy", "D", wrong == 0, f"{scope}, {wrong} mismatches"))

        # dual route vs direct micro-local counts
        shifts = _random_shifts(s, m, seed, n_shifts)
        mismatch = 0
        nonzero_low = 0
        bound_bad = 0
        vanish_bad = 0
        for A in index_vectors(m, s):
            for Z in shifts:
                lam = micro_local_discrepancy(P, A, Z)
                if lam != lambda_via_dual(D, A, Z):
                    mismatch += 1
                if A.a0 <= m - t and big_lambda(D, A, Z) != 0:
                    nonzero_low += 1
                if abs(lam) > 2**t:
                    bound_bad += 1
                if A.volume >= Fraction(2**t, 2**m) and lam != 0:
                    vanish_bad += 1
        add(CheckResult("lambda_dual_identity", "1", mismatch == 0,
                        f"{n_index} x {len(shifts)} cases, {mismatch} mismatches"))
        add(CheckResult("lambda_vanishes_low_order", "1", nonzero_low == 0,
                        f"{nonzero_low} nonzero Lambda_A with a_0 <= m - t"))
        add(CheckResult("micro_local_bounds", "micro-local", bound_bad == 0 and vanish_bad == 0,
                        f"{bound_bad} exceed 2^t, {vanish_bad} nonzero at vol >= 2^(t-m)"))

    # truncated part plus residual, and the residual's mean square
    T, Y = sample_block(s, m, seed + 1, 0, min(n_pairs, 4096))
    Ds, Dms, Es = e_squared_batch(P, T, Y)
    recon = all(dm + e == d for d, dm, e in zip(Ds, Dms, Es))
    e2 = np.array([float(e * e) for e in Es])
    mean, se = float(e2.mean()), float(e2.std(ddof=1) / math.sqrt(e2.size))
    bound = (s * 2**t) ** 2
    add(CheckResult("dm_reconstruction", "A", recon, f"{len(Ds)} exact reconstructions"))
    add(CheckResult("error_mean_square", "A", mean <= bound + 3 * se,
                    f"E[E^2]={mean:.4f} (se {se:.4f}) vs (s 2^t)^2={bound}"))

    # Psi bound and the martingale difference property
    if enumerable:
        worst = Fraction(0)
        over = 0
        for b in range(min(50, T.shape[0])):
            yv = [Fraction(int(v), 2**64) for v in Y[b]]
            md = martingale_terms(P, tuple(int(v) for v in T[b]), yv, t=t, dual=D)
            worst = max(worst, md.max_abs_psi())
            if md.max_abs_psi() > 2 ** (t + 1):
                over += 1
        add(CheckResult("psi_bound", "1", over == 0, f"max |Psi_A| = {float(worst):.4g} vs 2^(t+1)"))
    else:
        add(CheckResult("psi_bound", "1", True, "dual not enumerable", skipped=True))

    if enumerable and 2 * s * m <= 12 and m >= 1:
        ok, detail = martingale_difference_check(P, D, t)
        add(CheckResult("martingale_difference", "martingale", ok, detail))
    else:
        add(CheckResult("martingale_difference", "martingale", True, "2sm > 12", skipped=True))
    return results


def martingale_difference_check(P, D, t: int) -> tuple[bool, str]:
    """E(D_k | F_{k-1}) == 0 for every k and every digit prefix, exactly."""
    s, m = P.s, P.m
    cache: dict = {}

    def terms(T, Y):
        key = (T, Y)
        if key not in cache:
            yv = [Fraction(v, 2**m) for v in Y]
            cache[key] = martingale_terms(P, T, yv, t=t, dual=D).terms
        return cache[key]

    failures = 0
    checked = 0
    for k in range(1, m + 1):
        f = lambda T, Y, k=k: terms(T, Y)[k]
        g = conditional_expectation(f, k - 1, m, s)
        shift = m - (k - 1)
        for prefix in range(2 ** (2 * s * (k - 1))):
            width = k - 1
            mask = (1 << width) - 1
            Tp = tuple(((prefix >> (i * width)) & mask) << shift for i in range(s))
            Yp = tuple(((prefix >> ((s + i) * width)) & mask) << shift for i in range(s))
            checked += 1
            if g(Tp, Yp) != 0:
                failures += 1
    return failures == 0, f"{checked} (k, prefix) cases, {failures} nonzero"
