"""Feasibility conditions and the degree bound for the converse SOS Lyapunov function.

All condition arithmetic is double precision.  Strict inequalities ``a < b``
are accepted only when ``a < b - REL_SLACK * max(|a|, |b|)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

REL_SLACK = 1e-12


def _lt(a: float, b: float) -> bool:
    return a < b - REL_SLACK * max(abs(a), abs(b))


@dataclass(frozen=True)
class StabilityData:
    """Exponential-stability constants: ``||x(t)|| <= K ||x(0)|| e^{-lambda t}`` on ``B_r``."""

    K: float
    lam: float
    L: float
    r: float = 1.0
    q: int = 1

    def __post_init__(self):
        if not self.K >= 1:
            raise ValueError("K must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not self.r > 0:
            raise ValueError("r must be > 0")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("q must be an integer >= 1")

    @property
    def delta(self) -> float:
        """Integration horizon ``log(2K^2) / (2 lambda)``."""
        return math.log(2 * self.K**2) / (2 * self.lam)


def c_of_k(K: float, T: float, L: float, k: int, N: int) -> float:
    """``sum_{i<N} (e^{TL} + K (TL)^k)^i K^2 (TL)^k``."""
    d = T * L
    if d >= 1:
        raise ValueError(f"T*L = {d} must be < 1")
    if k < 1 or N < 1:
        raise ValueError("k and N must be at least 1")
    dk = d**k
    a = math.exp(d) + K * dk
    total = 0.0
    term = K**2 * dk
    for _ in range(N):
        total += term
        term *= a
    return total


def degree_formula(q: int, N: int, k: int) -> int:
    """``2 q^(N k - 1)`` as an exact integer."""
    if q < 1 or N < 1 or k < 1:
        raise ValueError("q, N, k must be at least 1")
    return 2 * q ** (N * k - 1)


def pieces_for(delta: float, T: float) -> int:
    """Smallest N with ``N T > delta`` strictly."""
    return int(math.floor(delta / T)) + 1


@dataclass(frozen=True)
class Condition:
    lhs: float
    rhs: float
    holds: bool

    @property
    def residual(self) -> float:
        """``lhs - rhs``; negative when the strict inequality holds."""
        return self.lhs - self.rhs


@dataclass(frozen=True)
class BoundCertificate:
    """A feasible ``(T, N, k)`` together with every evaluated condition."""

    data: StabilityData
    T: float
    N: int
    k: int
    delta: float
    c_k: float
    cond1_lhs: float
    cond2_lhs: float
    cond2_rhs: float
    degree_bound: int
    mode: str = "canonical"
    conditions: dict = field(default_factory=dict)
    slack: float = REL_SLACK

    feasible = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["data"] = asdict(self.data)
        out["conditions"] = {k: {**asdict(v), "residual": v.residual} for k, v in self.conditions.items()}
        out["feasible"] = True
        return out


@dataclass(frozen=True)
class Infeasible:
    """Why a configuration (or a whole search) failed."""

    data: StabilityData
    violations: dict
    T: Optional[float] = None
    N: Optional[int] = None
    k: Optional[int] = None
    delta: Optional[float] = None
    c_k: Optional[float] = None
    mode: str = "canonical"
    conditions: dict = field(default_factory=dict)
    reason: str = ""

    feasible = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["data"] = asdict(self.data)
        out["conditions"] = {k: {**asdict(v), "residual": v.residual} for k, v in self.conditions.items()}
        out["feasible"] = False
        return out


BoundResult = Union[BoundCertificate, Infeasible]


def check_conditions(
    data: StabilityData,
    T: float,
    N: int,
    k: int,
    delta: Optional[float] = None,
) -> BoundResult:
    """Evaluate every hypothesis behind the degree bound at ``(T, N, k)``.

    With ``delta=None`` the horizon is fixed to ``log(2K^2)/(2 lambda)`` and
    the two closed-form conditions are used.  Passing ``delta`` switches to
    the pre-substitution derivative and positivity conditions, which hold for
    any horizon.
    """
    if T <= 0 or N < 1 or k < 1:
        raise ValueError("need T > 0, N >= 1, k >= 1")
    K, lam, L = data.K, data.lam, data.L
    mode = "canonical" if delta is None else "free-delta"
    delta = data.delta if delta is None else float(delta)
    conds: dict = {}

    conds["T_lt_half_inv_L"] = Condition(T, 1 / (2 * L), _lt(T, 1 / (2 * L)))
    conds["NT_gt_delta"] = Condition(delta, N * T, _lt(delta, N * T))

    d = T * L
    if d >= 1:
        conds["TL_lt_1"] = Condition(d, 1.0, False)
        return Infeasible(data, _violations(conds), T, N, k, delta, None, mode, conds,
                          "T*L >= 1: outside the contraction regime")
    c = c_of_k(K, T, L, k, N)
    growth = K * d**k / T * (1 + c) * (K + c)
    conds["c_lt_K"] = Condition(c, K, _lt(c, K))

    if mode == "canonical":
        log2k = math.log(2 * K**2)
        cond1 = c**2 + delta * growth
        rhs2 = lam / (K * L * log2k) * (1 - (2 * K**2) ** (-L / lam))
        conds["derivative"] = Condition(cond1, 0.5, _lt(cond1, 0.5))
        conds["positivity"] = Condition(c**2, rhs2, _lt(c**2, rhs2))
        cond2_lhs, cond2_rhs = c**2, rhs2
    else:
        cond1 = K**2 * math.exp(-2 * lam * delta) + c**2 + 2 * delta * growth
        lower = (1 - math.exp(-2 * L * delta)) / (2 * L)
        conds["derivative"] = Condition(cond1, 1.0, _lt(cond1, 1.0))
        conds["positivity"] = Condition(delta * K * c**2, lower, _lt(delta * K * c**2, lower))
        cond2_lhs, cond2_rhs = delta * K * c**2, lower

    violations = _violations(conds)
    if violations:
        return Infeasible(data, violations, T, N, k, delta, c, mode, conds)
    return BoundCertificate(
        data=data,
        T=T,
        N=N,
        k=k,
        delta=delta,
        c_k=c,
        cond1_lhs=cond1,
        cond2_lhs=cond2_lhs,
        cond2_rhs=cond2_rhs,
        degree_bound=degree_formula(data.q, N, k),
        mode=mode,
        conditions=conds,
    )


def _violations(conds: dict) -> dict:
    return {name: c.residual for name, c in conds.items() if not c.holds}


def t_grid(L: float, size: int) -> np.ndarray:
    """``size`` uniform points strictly inside ``(0, 1/(2L))``."""
    if size < 1:
        raise ValueError("grid size must be >= 1")
    return np.arange(1, size + 1) / (size + 1) / (2 * L)


def search_bound(
    data: StabilityData,
    T_grid_size: int = 64,
    k_max: int = 30,
    free_delta: bool = False,
    delta_grid_size: int = 64,
) -> BoundResult:
    """Minimize ``N k`` over a uniform T grid and ``k <= k_max``.

    For each T, N is the smallest integer with ``N T > delta`` and k the
    smallest feasible value.  Ties prefer smaller k, then smaller N, then the
    earlier grid point.  With ``free_delta`` the horizon is swept jointly with
    T over the multiples ``j / (8L)``, ``j = 1..delta_grid_size``; the grid does
    not depend on lambda, so feasibility stays monotone in the decay rate.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if free_delta:
        deltas = [j / (8 * data.L) for j in range(1, delta_grid_size + 1)]
    else:
        deltas = [None]

    best: Optional[BoundCertificate] = None
    best_key = None
    for T in t_grid(data.L, T_grid_size):
        T = float(T)
        for delta in deltas:
            N = pieces_for(data.delta if delta is None else delta, T)
            if best_key is not None and N > best_key[0]:
                # N*k >= N > best N*k: cannot improve
                continue
            for k in range(1, k_max + 1):
                res = check_conditions(data, T, N, k, delta)
                if res.feasible:
                    key = (N * k, k, N)
                    if best_key is None or key < best_key:
                        best, best_key = res, key
                    break
    if best is None:
        return Infeasible(
            data,
            {"search": float("inf")},
            mode="free-delta" if free_delta else "canonical",
            reason=f"no feasible (T, k) with {T_grid_size} grid points and k <= {k_max}",
        )
    return best


@dataclass(frozen=True)
class QuadraticReport:
    feasible: bool
    delta: Optional[float]
    lhs: float
    grid_size: int


def quadratic_lhs(K: float, lam: float, L: float, delta: float) -> float:
    """Left side of the sufficient condition for ``x^T x`` to be a Lyapunov function."""
    c1 = K**2 * delta * L
    return K**2 * math.exp(-2 * lam * delta) + c1**2 + 2 * K * delta * L * (1 + c1) * (K + c1)


def quadratic_test(data: StabilityData, delta_grid_size: int = 200) -> QuadraticReport:
    """Scan ``delta`` in ``(0, 1/(2L))`` for the quadratic-Lyapunov condition.

    Returns the first feasible ``delta``; otherwise the smallest left-hand side
    seen over the grid.
    """
    K, lam, L = data.K, data.lam, data.L
    best = math.inf
    best_delta = None
    for delta in t_grid(L, delta_grid_size):
        delta = float(delta)
        lhs = quadratic_lhs(K, lam, L, delta)
        if _lt(lhs, 1.0) and _lt(K * delta * L, 1.0):
            return QuadraticReport(True, delta, lhs, delta_grid_size)
        if lhs < best:
            best, best_delta = lhs, delta
    return QuadraticReport(False, best_delta, best, delta_grid_size)
