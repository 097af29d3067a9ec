"""Sampled checks of the Lyapunov inequalities and of the approximation bounds.

Every check compares against the RK4 oracle or an exact symbolic quantity at
deterministic sample points; nothing here is a proof.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from .bounds import StabilityData, c_of_k
from .dynamics import ball_samples, estimate_L, rk4_batch, sup_norm
from .picard import ChainedFlow, derivative_defect, picard_iterate
from .polyalg import Polynomial, VectorField, differentiate, numeric

DECREASE_TOL = 1e-9
ORACLE_SLACK = 1e-6
N_WORST = 5


# -- Lyapunov inequalities -----------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    """Sampled constants in ``alpha|x|^2 <= V <= beta|x|^2`` and ``grad V . f <= -gamma|x|^2``."""

    alpha_hat: float
    beta_hat: float
    gamma_hat: float
    n_samples: int
    worst_points: dict
    radius: float
    tolerance: float = DECREASE_TOL

    @property
    def decreasing(self) -> bool:
        return self.gamma_hat > self.tolerance

    @property
    def verdict(self) -> str:
        return "decreasing" if self.decreasing else "not decreasing"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        return out


def lie_derivative(V: Polynomial, f: VectorField) -> Polynomial:
    """``grad V(x) . f(x)``."""
    if V.nvars != f.n:
        raise ValueError(f"V has {V.nvars} variables, field has {f.n}")
    acc = Polynomial.zero(f.n)
    for j, fj in enumerate(f, start=1):
        acc = acc + differentiate(V, j) * fj
    return acc


def _worst(pts: np.ndarray, vals: np.ndarray, largest: bool) -> list:
    order = np.argsort(-vals if largest else vals, kind="stable")[:N_WORST]
    return [{"x": [float(v) for v in pts[i]], "value": float(vals[i])} for i in order]


def check_lyapunov(
    V: Polynomial,
    f: VectorField,
    radius: float,
    n_samples: int = 2000,
    tolerance: float = DECREASE_TOL,
) -> VerificationReport:
    """Evaluate ``V/|x|^2`` and ``Vdot/|x|^2`` on a fixed point set of the ball.

    The point set always contains the coordinate axes at ``0.1r, 0.5r, r``;
    these are where strict decrease tends to fail first.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if V.has_t():
        raise ValueError("V must not depend on t")
    if V.coeff((0,) * (f.n + 1)) != 0:
        raise ValueError("V(0) must be 0")
    pts = ball_samples(f.n, radius, n_samples, axes=True)
    sq = np.sum(pts**2, axis=1)
    full = np.hstack([np.zeros((len(pts), 1)), pts])
    v = numeric([V, lie_derivative(V, f)])(full)
    ratio_v = v[:, 0] / sq
    ratio_d = v[:, 1] / sq
    return VerificationReport(
        alpha_hat=float(ratio_v.min()),
        beta_hat=float(ratio_v.max()),
        gamma_hat=float(-ratio_d.max()) + 0.0,
        n_samples=int(len(pts)),
        worst_points={
            "alpha": _worst(pts, ratio_v, largest=False),
            "beta": _worst(pts, ratio_v, largest=True),
            "gamma": _worst(pts, ratio_d, largest=True),
        },
        radius=float(radius),
        tolerance=tolerance,
    )


# -- approximation bounds ----------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    """One bound ``lhs(x) <= rhs(x)`` checked at every sample.

    ``margin`` is the smallest ``rhs - lhs`` seen; the check passes when
    ``margin >= -slack``.
    """

    name: str
    params: dict
    passed: bool
    n_points: int
    margin: float
    worst_x: Optional[list] = None
    slack: float = ORACLE_SLACK
    preconditions: dict = field(default_factory=dict)
    skipped: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _finish(name, params, lhs, rhs, pts, slack, pre) -> BoundCheck:
    margin = rhs - lhs
    i = int(np.argmin(margin))
    return BoundCheck(
        name=name,
        params=params,
        passed=bool(np.all(margin >= -slack)),
        n_points=int(len(pts)),
        margin=float(margin[i]),
        worst_x=[float(v) for v in pts[i]],
        slack=slack,
        preconditions=pre,
    )


def _oracle(f: VectorField, X: np.ndarray, T: float, pieces: int, h: float, stride_target: int = 40):
    """RK4 states on a time grid aligned with the knots ``iT``.

    Returns ``(times, states)`` with ``states`` of shape ``(len(times), m, n)``.
    """
    per = max(1, math.ceil(T / h))
    traj = rk4_batch(f.numeric(), X, T / per, per * pieces)
    stride = max(1, per // stride_target)
    idx = np.arange(0, per * pieces + 1, stride)
    if idx[-1] != per * pieces:
        idx = np.append(idx, per * pieces)
    return idx * (T / per), traj[idx]


def check_contraction(
    f: VectorField,
    r: float,
    T: float,
    k_range: Iterable[int] = range(1, 7),
    n_samples: int = 500,
    h: float = 1e-3,
    slack: float = ORACLE_SLACK,
) -> list:
    """``sup_t |phi - P^k z| <= (TL)^k sup_t |phi|`` for ``x`` in ``B_r``, ``t`` in ``[0, T]``.

    ``L`` and ``Q = sup |f|`` are sampled on ``B_{2r}``.  When
    ``T < min(r/Q, 1/L)`` fails every row is marked skipped with the reason.
    """
    L = estimate_L(f, 2 * r)
    Q = sup_norm(f, 2 * r)
    pre = {"L": L, "Q": Q, "T_max": min(r / Q if Q > 0 else math.inf, 1 / L)}
    ok = T < pre["T_max"]
    X = ball_samples(f.n, r, n_samples)
    times, phi = _oracle(f, X, T, 1, h)
    phi_sup = np.max(np.linalg.norm(phi, axis=2), axis=0)
    rows = []
    for k in k_range:
        params = {"T": T, "k": k, "r": r}
        if not ok:
            rows.append(BoundCheck("contraction", params, False, 0, math.nan, None, slack, pre, True,
                                   f"T={T} violates T < min(r/Q, 1/L) = {pre['T_max']:.6g}"))
            continue
        ev = picard_iterate(f, k).numeric()
        approx = np.stack([ev(t, X) for t in times])
        lhs = np.max(np.linalg.norm(approx - phi, axis=2), axis=0)
        rhs = (T * L) ** k * phi_sup
        rows.append(_finish("contraction", params, lhs, rhs, X, slack, pre))
    return rows


def extension_preconditions(f: VectorField, data: StabilityData, T: float, N: int, k: int) -> dict:
    R = 4 * data.K * data.r
    Q = sup_norm(f, R)
    L_sampled = estimate_L(f, R)
    c = c_of_k(data.K, T, data.L, k, N) if T * data.L < 1 else math.inf
    return {
        "Q": Q,
        "L_sampled": L_sampled,
        "L_given_covers_sample": data.L >= L_sampled * (1 - 1e-6),
        "T_max": min(2 * data.K * data.r / Q if Q > 0 else math.inf, 1 / data.L),
        "c_k": c,
    }


def check_extension(
    f: VectorField,
    data: StabilityData,
    T: float,
    N: int,
    k: int,
    n_samples: int = 500,
    h: float = 1e-3,
    slack: float = ORACLE_SLACK,
) -> BoundCheck:
    """``sup_{s in [0, NT]} |G(s, x) - phi(s, x)| <= c(k) |x|`` on ``B_r``.

    Skipped with a reason when ``c(k) >= K`` or ``T L >= 1``.
    """
    params = {"T": T, "N": N, "k": k, "K": data.K, "L": data.L, "r": data.r}
    pre = extension_preconditions(f, data, T, N, k)
    c = pre["c_k"]
    if not c < data.K:
        return BoundCheck("extension", params, False, 0, math.nan, None, slack, pre, True,
                          f"c(k) = {c:.6g} is not below K = {data.K}")
    X = ball_samples(f.n, data.r, n_samples)
    times, phi = _oracle(f, X, T, N, h)
    G = ChainedFlow(f, k, N, T).evaluate_grid(times, X)
    lhs = np.max(np.linalg.norm(G - phi, axis=2), axis=0)
    rhs = c * np.linalg.norm(X, axis=1)
    return _finish("extension", params, lhs, rhs, X, slack, pre)


def _time_samples(T: float, count: int) -> np.ndarray:
    return np.linspace(0.0, T, count)


def check_derivative_defect(
    f: VectorField,
    T: float,
    L: Optional[float],
    k_range: Iterable[int],
    r: float,
    n_samples: int = 500,
    n_times: int = 21,
    slack: float = ORACLE_SLACK,
) -> list:
    """``|D_x(P^k z) f - d/dt (P^k z)| <= (TL)^k / T |x|`` for ``t`` in ``[0, T]``.

    The defect is the exact symbolic polynomial, evaluated in floats.  ``L``
    defaults to the sampled Lipschitz bound on ``B_{2r}``.
    """
    L = estimate_L(f, 2 * r) if L is None else L
    pre = {"L": L}
    X = ball_samples(f.n, r, n_samples)
    norms = np.linalg.norm(X, axis=1)
    rows = []
    for k in k_range:
        ev = derivative_defect(f, picard_iterate(f, k)).numeric()
        lhs = np.max(np.stack([np.linalg.norm(ev(t, X), axis=1) for t in _time_samples(T, n_times)]), axis=0)
        rhs = (T * L) ** k / T * norms
        rows.append(_finish("defect", {"T": T, "k": k, "r": r, "L": L}, lhs, rhs, X, slack, pre))
    return rows


def check_extension_defect(
    f: VectorField,
    data: StabilityData,
    T: float,
    N: int,
    k: int,
    n_samples: int = 500,
    n_times: int = 21,
    slack: float = ORACLE_SLACK,
) -> BoundCheck:
    """``|D_x G f - d/ds G| <= (TL)^k / T (K + c(k)) |x|`` for ``s`` in ``[0, NT]``.

    The defect of the chained approximation is taken through the knots with
    the chain rule, piece by piece.
    """
    params = {"T": T, "N": N, "k": k, "K": data.K, "L": data.L, "r": data.r}
    L = data.L
    if T * L >= 1:
        return BoundCheck("extension_defect", params, False, 0, math.nan, None, slack, {}, True,
                          f"T*L = {T * L:.6g} >= 1")
    c = c_of_k(data.K, T, L, k, N)
    pre = {"c_k": c}
    if not c < data.K:
        return BoundCheck("extension_defect", params, False, 0, math.nan, None, slack, pre, True,
                          f"c(k) = {c:.6g} is not below K = {data.K}")
    X = ball_samples(f.n, data.r, n_samples)
    flow = ChainedFlow(f, k, N, T)
    lhs = np.zeros(len(X))
    for i in range(N):
        for u in _time_samples(T, n_times):
            lhs = np.maximum(lhs, np.linalg.norm(flow.defect(min(i * T + u, N * T), X), axis=1))
    rhs = (T * L) ** k / T * (data.K + c) * np.linalg.norm(X, axis=1)
    return _finish("extension_defect", params, lhs, rhs, X, slack, pre)
