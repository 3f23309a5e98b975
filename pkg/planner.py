#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Verification planner
Features:
- Parameter selection (d0, N, R, L, Q) from the soundness preconditions
- Closed-form soundness and completeness bounds with term breakdowns
- Concentration inequalities used by the security argument
- Overflow-safe arithmetic: Decimal for theorem-scale integers, log domain for tails
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import erfc, log_ndtr

C0 = 1.0 - 1.0 / math.sqrt(2.0)
C0_SQ = 1.5 - math.sqrt(2.0)
DECIMAL_PRECISION = 120
D0_SCAN_LIMIT = 100000
SOUNDNESS_MULTIPLE = 3.0
LOG_UNDERFLOW = -745.0
EXPONENT_GRID = (0.05, 0.1, 0.2)
EXPECTED_EXPONENT = 6.0


class PlanError(ValueError):
    """Raised for infeasible or inconsistent verification parameters"""


class BoundDomainError(ValueError):
    """Raised when a bound is evaluated outside its domain"""


def _dec(value) -> Decimal:
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


def _c0_sq() -> Decimal:
    return Decimal("1.5") - Decimal(2).sqrt()


def safe_exp(x: float) -> float:
    if x < LOG_UNDERFLOW:
        return 0.0
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _check_epsilon(epsilon: float):
    if not 0.0 < epsilon < 0.5:
        raise PlanError(f"epsilon must lie in (0, 1/2), got {epsilon}")


def _check_km(k: int, m: int):
    if k < 1 or m < 1:
        raise PlanError(f"k and m must be positive integers, got k={k}, m={m}")


# Preconditions

def eq3_log_margin(k: int, m: int, epsilon: float, d0: int) -> float:
    """log(eps) - log(10k e^{-c0^2 d0}(264 k^2 m^2 d0^2 ln(4/eps)/eps^2 + m))"""
    inner = 264.0 * k ** 2 * m ** 2 * d0 ** 2 * math.log(4.0 / epsilon) / epsilon ** 2 + m
    return math.log(epsilon) - (math.log(10.0 * k) - C0_SQ * d0 + math.log(inner))


def eq3_holds(k: int, m: int, epsilon: float, d0: int) -> bool:
    return eq3_log_margin(k, m, epsilon, d0) >= 0.0


def eq4_holds(k: int, epsilon: float, d0: int, N: int) -> bool:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        rhs = Decimal(50) / Decimal(64) * (4 * k / _dec(epsilon)).ln() * (2 * _c0_sq() * d0).exp()
        return Decimal(N) > rhs


def r_condition_holds(k: int, epsilon: float, N: int, R: int) -> bool:
    """R^2 >= 50 (N + 2) ln(4k/eps)"""
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        return Decimal(R) ** 2 >= 50 * Decimal(N + 2) * (4 * k / _dec(epsilon)).ln()


# Parameter selection

def choose_d0(k: int, m: int, epsilon: float, limit: int = D0_SCAN_LIMIT) -> int:
    _check_km(k, m)
    _check_epsilon(epsilon)
    for d0 in range(1, limit + 1):
        if eq3_holds(k, m, epsilon, d0):
            return d0
    raise PlanError(f"no d0 <= {limit} satisfies the dimension precondition")


def compute_L(k: int, m: int, epsilon: float, d0: int) -> int:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        eps = _dec(epsilon)
        value = 264 * Decimal(k) ** 2 * Decimal(m) ** 2 * Decimal(d0) ** 2 * (4 / eps).ln() / eps ** 2 + m
        return int(value.to_integral_value(rounding=ROUND_CEILING))


def compute_R(N: int, d0: int) -> int:
    if N < 0 or N % 2:
        raise PlanError(f"N must be a non-negative even integer, got {N}")
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        value = Decimal(N) * (-_c0_sq() * d0).exp()
        return int(value.to_integral_value(rounding=ROUND_FLOOR))


def _eq4_minimum(k: int, epsilon: float, d0: int) -> int:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        rhs = Decimal(50) / Decimal(64) * (4 * k / _dec(epsilon)).ln() * (2 * _c0_sq() * d0).exp()
        n = int(rhs.to_integral_value(rounding=ROUND_FLOOR)) + 1
    return n + (n % 2)


def _n_for_r(R: int, d0: int) -> int:
    """Smallest even N with floor(N e^{-c0^2 d0}) >= R"""
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        n = int((Decimal(R) / (-_c0_sq() * d0).exp()).to_integral_value(rounding=ROUND_CEILING))
    n = max(n - 2, 0)
    while compute_R(n + (n % 2), d0) < R:
        n += 1
    return n + (n % 2)


def n_conditions_hold(k: int, epsilon: float, d0: int, N: int) -> bool:
    if N <= 0 or N % 2:
        return False
    return eq4_holds(k, epsilon, d0, N) and r_condition_holds(k, epsilon, N, compute_R(N, d0))


def choose_N(k: int, epsilon: float, d0: int) -> int:
    """Smallest even N meeting both the N floor and the R condition"""
    _check_epsilon(epsilon)
    floor_n = _eq4_minimum(k, epsilon, d0)

    def candidate(R: int) -> int:
        return max(_n_for_r(R, d0), floor_n)

    def feasible(R: int) -> bool:
        return n_conditions_hold(k, epsilon, d0, candidate(R))

    low, high = 0, 1
    while not feasible(high):
        low, high = high, high * 2
    while high - low > 1:
        mid = (low + high) // 2
        if feasible(mid):
            high = mid
        else:
            low = mid
    N = candidate(high)
    while N > 2 and n_conditions_hold(k, epsilon, d0, N - 2):
        N -= 2
    if not eq4_holds(k, epsilon, d0, N) or N < floor_n:
        raise PlanError("N search failed to satisfy the N floor condition")
    return N


def sample_complexity(k: int, m: int, epsilon: float) -> int:
    """(k/2 + 1) N at the minimal d0"""
    N = choose_N(k, epsilon, choose_d0(k, m, epsilon))
    return k * N // 2 + N


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x"""
    if len(xs) < 2:
        raise ValueError("need at least two points for an exponent fit")
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def polylog_factor(plan: VerificationPlan) -> float:
    """ln(4k/eps) ln(4/eps)^2 d0^4: the part of the register count that is not a power of 1/eps"""
    eps = plan.epsilon
    return math.log(4.0 * plan.k / eps) * math.log(4.0 / eps) ** 2 * float(plan.d0) ** 4


def exponent_check(
    k: int, m: int, epsilons: Sequence[float] = EXPONENT_GRID, tolerance: float = 0.5
) -> Dict[str, Any]:
    """Fit theorem-plan register counts against 1/eps and compare with the eps^-6 law"""
    if len(epsilons) < 2:
        raise ValueError("exponent check needs at least two epsilon values")
    plans = [make_plan(k, m, eps) for eps in epsilons]
    inverse = [1.0 / plan.epsilon for plan in plans]
    totals = [plan.total_registers for plan in plans]
    raw = fit_exponent(inverse, totals)
    corrected = fit_exponent(inverse, [t / polylog_factor(p) for t, p in zip(totals, plans)])
    within = abs(corrected - EXPECTED_EXPONENT) <= tolerance
    marker = "✅" if within else "⚠️"
    logging.info(
        f"{marker} Register count exponent k={k} m={m}: raw {raw:.3f}, "
        f"polylog-corrected {corrected:.3f} (expected {EXPECTED_EXPONENT})"
    )
    return {
        "k": k,
        "m": m,
        "epsilons": [float(e) for e in epsilons],
        "total_registers": totals,
        "raw_exponent": raw,
        "corrected_exponent": corrected,
        "expected_exponent": EXPECTED_EXPONENT,
        "within_tolerance": within,
    }


# Plans

@dataclass
class VerificationPlan:
    k: int
    m: int
    epsilon: float
    d0: int
    N: int
    K: int
    R: int
    L: int
    Q: int
    c0: float = C0
    flags: List[str] = field(default_factory=list)

    @property
    def total_registers(self) -> int:
        return self.k * self.N // 2 + self.N

    @property
    def in_regime(self) -> bool:
        return "outside_theorem_regime" not in self.flags

    @property
    def fidelity_samples(self) -> int:
        return self.L - self.m


def _validate(plan: VerificationPlan):
    _check_km(plan.k, plan.m)
    _check_epsilon(plan.epsilon)
    if plan.d0 < 1:
        raise PlanError(f"d0 must be a positive integer, got {plan.d0}")
    if plan.N <= 0 or plan.N % 2:
        raise PlanError(f"N must be a positive even integer, got {plan.N}")
    if not plan.m < plan.L <= plan.N:
        raise PlanError(f"need m < L <= N, got m={plan.m}, L={plan.L}, N={plan.N}")


def make_plan(k: int, m: int, epsilon: float, limit: int = D0_SCAN_LIMIT) -> VerificationPlan:
    """Theorem-regime plan with soundness total at most 3 epsilon"""
    d0 = choose_d0(k, m, epsilon, limit)
    flags: List[str] = []
    while d0 <= limit:
        N = choose_N(k, epsilon, d0)
        R = compute_R(N, d0)
        L = compute_L(k, m, epsilon, d0)
        plan = VerificationPlan(k, m, epsilon, d0, N, k * N // 2, R, L, 15 * R, flags=list(flags))
        _validate(plan)
        total = soundness_bound(plan).total
        if total <= SOUNDNESS_MULTIPLE * epsilon:
            logging.info(
                f"🧭 Plan k={k} m={m} eps={epsilon}: d0={d0}, N={N}, L={L}, R={R} "
                f"(soundness {total:.4g})"
            )
            return plan
        if "d0_raised_for_soundness_total" not in flags:
            flags.append("d0_raised_for_soundness_total")
            logging.info(f"📐 Soundness total {total:.4g} > 3 eps at d0={d0}; raising d0")
        d0 += 1
    raise PlanError(f"no d0 <= {limit} brings the soundness total under 3 eps")


def desk_plan(k: int, m: int, epsilon: float, d0: int, N: int, L: int) -> VerificationPlan:
    """Hand-picked desk-scale plan; precondition failures are flagged, not fatal"""
    R = compute_R(N, d0) if N % 2 == 0 and N >= 0 else 0
    plan = VerificationPlan(k, m, epsilon, d0, N, k * N // 2, R, L, 15 * R)
    _validate(plan)
    if not eq3_holds(k, m, epsilon, d0):
        plan.flags.append("eq3_violated")
    if not eq4_holds(k, epsilon, d0, N):
        plan.flags.append("eq4_violated")
    if not r_condition_holds(k, epsilon, N, R):
        plan.flags.append("r_condition_violated")
    if L != compute_L(k, m, epsilon, d0):
        plan.flags.append("L_not_theorem_value")
    if N <= 15 * k * R:
        plan.flags.append("soundness_bound_undefined")
    if plan.flags:
        plan.flags.insert(0, "outside_theorem_regime")
    return plan


# Bounds

@dataclass
class BoundReport:
    kind: str
    total: float
    terms: List[float]
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "total": self.total, "terms": self.terms, "flags": self.flags}


def _ratio(numerator: int, denominator: int) -> float:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        return float(Decimal(numerator) / Decimal(denominator))


def soundness_bound(plan: VerificationPlan) -> BoundReport:
    k, m, eps, d0 = plan.k, plan.m, plan.epsilon, plan.d0
    N, R, L = plan.N, plan.R, plan.L
    if N <= 15 * k * R:
        raise BoundDomainError(f"soundness bound needs N > 15kR, got N={N}, 15kR={15 * k * R}")
    flags: List[str] = []
    first = 4.0 * k * safe_exp(-_ratio(R * R, 50 * (N + 2)))
    second = 15.0 * k * _ratio(R * L, N)
    third = 2.0 * k ** 2 * d0 ** 2 * _ratio(L, N - 15 * k * R)
    fourth = max(4.0 * safe_exp(-(L - m) * eps ** 2 / (264.0 * m ** 2 * k ** 2 * d0 ** 2)), eps)
    terms = [first, second, third, fourth]
    total = sum(terms)
    if total >= 1.0:
        flags.append("vacuous")
    return BoundReport("soundness", total, terms, flags)


def vacuum_tail(d0: float) -> float:
    """Probability that a vacuum homodyne outcome x has x^2 >= d0/2"""
    if d0 <= 0:
        raise ValueError(f"d0 must be positive, got {d0}")
    return float(erfc(math.sqrt(d0 / 2.0)))


def log_vacuum_tail(d0: float) -> float:
    return math.log(2.0) + float(log_ndtr(-math.sqrt(d0)))


def vacuum_tail_bound(d0: float) -> float:
    return math.sqrt(2.0 / (math.pi * d0)) * math.exp(-d0 / 2.0)


def binary_relative_entropy(a: float, p: float, log_p: Optional[float] = None) -> float:
    """D(a||p) in nats; a in [0, 1], p in (0, 1)"""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    if log_p is None:
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        log_p = math.log(p)
    value = 0.0
    if a > 0.0:
        value += a * (math.log(a) - log_p)
    if a < 1.0:
        value += (1.0 - a) * (math.log1p(-a) - math.log1p(-p))
    return max(value, 0.0)


def completeness_bound(plan: VerificationPlan) -> BoundReport:
    """Deficit k e^{-(N/2) D(2R/N || p)} + 4 e^{-(L-m) eps^2/(66 k^2 m^2)}"""
    k, m, eps = plan.k, plan.m, plan.epsilon
    flags: List[str] = []
    a = min(1.0, _ratio(2 * plan.R, plan.N))
    log_p = log_vacuum_tail(plan.d0)
    p = math.exp(log_p)
    if a <= p:
        first = float(k)
        flags.append("relative_entropy_term_vacuous")
    else:
        divergence = binary_relative_entropy(a, p, log_p=log_p)
        first = k * safe_exp(-0.5 * plan.N * divergence)
    second = 4.0 * safe_exp(-(plan.L - m) * eps ** 2 / (66.0 * k ** 2 * m ** 2))
    terms = [first, second]
    total = first + second
    if total >= 1.0:
        flags.append("vacuous")
    return BoundReport("completeness", total, terms, flags)


@dataclass
class BoundValue:
    name: str
    value: float
    raw: float
    clamped: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "value": self.value, "raw": self.raw, "clamped": self.clamped}


def _clamped(name: str, raw: float, ceiling: float = 1.0) -> BoundValue:
    if raw > ceiling:
        return BoundValue(name, ceiling, raw, True)
    return BoundValue(name, raw, raw)


def concentration_bounds(name: str, **args) -> BoundValue:
    """Evaluate one of the concentration inequalities behind the bounds.

    serfling_upper / serfling_lower: delta, n, k
    lemma1: K, N, R, Q (K is the number of dimension-tested registers)
    definetti: k, Q, L, N, d0
    gamma: delta, d0
    hoeffding_unbounded: L, m, epsilon, k, fourth_moment
    """
    if name == "serfling_upper":
        delta, n, k = args["delta"], args["n"], args["k"]
        return _clamped(name, math.exp(-2.0 * delta ** 2 * n * k ** 2 / ((n + k) * (k + 1))))
    if name == "serfling_lower":
        delta, n, k = args["delta"], args["n"], args["k"]
        return _clamped(name, math.exp(-2.0 * delta ** 2 * k * n ** 2 / ((n + k) * (n + 1))))
    if name == "lemma1":
        K, N, R, Q = args["K"], args["N"], args["R"], args["Q"]
        gap = 3.0 * Q / (5.0 * N) - 4.0 * R / K
        if gap < 0:
            raise BoundDomainError(f"lemma1 needs 3Q/5N >= 4R/K', got gap {gap:.4g}")
        raw = 4.0 * safe_exp(-K ** 2 / (25.0 * (K + 1)) * gap ** 2)
        return _clamped(name, raw)
    if name == "definetti":
        k, Q, L, N, d0 = args["k"], args["Q"], args["L"], args["N"], args["d0"]
        if N <= k * Q:
            raise BoundDomainError(f"de Finetti bound needs N > kQ, got N={N}, kQ={k * Q}")
        raw = 2.0 * k * _ratio(Q * L, N) + 4.0 * _ratio(L * d0 ** (2 * k), N - k * Q)
        return _clamped(name, raw, ceiling=2.0)
    if name == "gamma":
        delta, d0 = args["delta"], args["d0"]
        raw = 4.0 * delta + 4.0 / (C0 * math.sqrt(math.pi * d0)) * math.exp(-d0 * C0_SQ)
        return _clamped(name, raw)
    if name == "hoeffding_unbounded":
        L, m, eps, k = args["L"], args["m"], args["epsilon"], args["k"]
        fourth = args.get("fourth_moment", 0.75)
        if L <= m or fourth <= 0:
            raise BoundDomainError("hoeffding bound needs L > m and a positive fourth moment")
        raw = 4.0 * safe_exp(-(L - m) * eps ** 2 / (132.0 * k ** 2 * m ** 2 * fourth))
        return _clamped(name, raw)
    raise ValueError(f"unknown concentration bound {name!r}")


def plan_to_dict(plan: VerificationPlan) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "k": plan.k,
        "m": plan.m,
        "epsilon": plan.epsilon,
        "d0": plan.d0,
        "N": plan.N,
        "K": plan.K,
        "R": plan.R,
        "L": plan.L,
        "Q": plan.Q,
        "total_registers": plan.total_registers,
    }
    try:
        report["soundness_terms"] = soundness_bound(plan).terms
    except BoundDomainError:
        report["soundness_terms"] = None
    report["completeness_terms"] = completeness_bound(plan).terms
    report["flags"] = list(plan.flags)
    return report
