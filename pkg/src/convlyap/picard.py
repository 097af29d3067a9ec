"""Picard iteration on polynomial trajectories and its piecewise extension.

The Picard operator sends a candidate trajectory ``y(t, x)`` to
``x + int_0^t f(y(s, x)) ds``.  Starting from ``z = 0``, ``k`` applications give
``P^k z``, a polynomial in ``(t, x)`` approximating the flow on ``[0, T]``.
Chaining copies of ``P^k z`` through the knots ``t = T`` extends the
approximation to ``[0, N T]``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .polyalg import (
    DimensionError,
    Polynomial,
    VectorField,
    compose,
    differentiate,
    indefinite_integrate_t,
    numeric,
)

DEFAULT_TERM_CAP = 2_000_000
TERM_CAP_ENV = "CONVLYAP_TERM_CAP"


def default_term_cap() -> int:
    raw = os.environ.get(TERM_CAP_ENV)
    return int(raw) if raw else DEFAULT_TERM_CAP


class TermCapExceeded(RuntimeError):
    """Raised before building pieces whose predicted size exceeds the cap."""

    def __init__(self, predicted_terms: int, predicted_degree: int, degree_bound: int, cap: int):
        self.predicted_terms = predicted_terms
        self.predicted_degree = predicted_degree
        self.degree_bound = degree_bound
        self.cap = cap
        super().__init__(
            f"predicted {predicted_terms} terms (x-degree {predicted_degree}, "
            f"bound q^(Nk-1) = {degree_bound}) exceeds the cap of {cap}"
        )


@dataclass(frozen=True)
class PolyTrajectory:
    """A vector of polynomials in ``(t, x1..xn)``."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def n(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Polynomial:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def at(self, t) -> tuple:
        """Fix t exactly; returns t-free polynomials in x."""
        return tuple(c.subs_t(t) for c in self.components)

    def degree_x(self) -> int:
        return max(c.degree_x() for c in self.components)

    def degrees_x(self) -> tuple:
        return tuple(c.degree_x() for c in self.components)

    def degree_t(self) -> int:
        return max(c.degree_t() for c in self.components)

    def term_count(self) -> int:
        return sum(len(c) for c in self.components)

    def numeric(self):
        """Vectorized evaluator: ``(t, X)`` with ``X`` of shape ``(m, n)`` -> ``(m, n)``."""
        fn = numeric(self.components)

        def ev(t, X):
            X = np.atleast_2d(np.asarray(X, dtype=float))
            tt = np.broadcast_to(np.asarray(t, dtype=float), (X.shape[0],)).reshape(-1, 1)
            return fn(np.hstack([tt, X]))

        return ev


def identity(n: int) -> PolyTrajectory:
    return PolyTrajectory(tuple(Polynomial.x(i, n) for i in range(1, n + 1)))


def picard_step(f: VectorField, y: PolyTrajectory) -> PolyTrajectory:
    """One Picard application: ``x + int_0^t f(y(s, x)) ds``."""
    if y.n != f.n:
        raise DimensionError(f"trajectory has {y.n} components, field has {f.n}")
    n = f.n
    # f is t-free, so substituting y for x1..xn and keeping t fixed is enough
    return PolyTrajectory(
        tuple(
            Polynomial.x(i + 1, n) + indefinite_integrate_t(compose(fi, list(y)))
            for i, fi in enumerate(f)
        )
    )


def picard_iterate(f: VectorField, k: int) -> PolyTrajectory:
    """``P^k z`` with the seed ``z = 0``; ``k = 1`` gives the identity map."""
    if k < 1:
        raise ValueError("k must be at least 1")
    y = PolyTrajectory(tuple(Polynomial.zero(f.n) for _ in range(f.n)))
    for _ in range(k):
        y = picard_step(f, y)
    return y


# -- degree bookkeeping ------------------------------------------------------


def _field_monomials(f: VectorField) -> list:
    return [[m[1:] for m in c.terms] for c in f]


def _propagate(monos: list, start: Sequence[int], k: int) -> tuple:
    # P y = y0 + int f(y): deg_c = max(start_c, max_m sum_l m_l deg_l)
    d = list(start)
    for _ in range(k - 1):
        d = [
            max([s] + [sum(e * dl for e, dl in zip(m, d)) for m in mc])
            for s, mc in zip(start, monos)
        ]
    return tuple(d)


def _t_degrees(monos: list, k: int) -> tuple:
    d = [0] * len(monos)
    for _ in range(k - 1):
        d = [
            max([0] + [1 + sum(e * dl for e, dl in zip(m, d)) for m in mc])
            for mc in monos
        ]
    return tuple(d)


def predicted_degrees(f: VectorField, k: int, N: int) -> list:
    """Per-piece, per-component x-degrees of the extended approximation.

    Degrees are propagated through the monomials of ``f``; they are exact
    unless leading coefficients cancel, and never exceed ``q^((i+1)(k-1))``.
    """
    monos = _field_monomials(f)
    out = []
    start = (1,) * f.n
    for _ in range(N):
        d = _propagate(monos, start, k)
        out.append(d)
        start = d
    return out


def degree_law(q: int, k: int, piece: int) -> int:
    """Generic x-degree of piece ``i`` for a degree-``q`` field: ``q^((i+1)(k-1))``."""
    return q ** ((piece + 1) * (k - 1))


def predicted_term_count(f: VectorField, k: int, N: int) -> int:
    """Dense upper bound on the number of terms in the largest piece."""
    tdeg = _t_degrees(_field_monomials(f), k)
    worst = 0
    for d in predicted_degrees(f, k, N):
        total = sum(math.comb(f.n + dc, f.n) * (tc + 1) for dc, tc in zip(d, tdeg))
        worst = max(worst, total)
    return worst


# -- piecewise extension -----------------------------------------------------


@dataclass(frozen=True)
class PiecewiseApprox:
    """Pieces ``G_0..G_{N-1}``; piece ``i`` covers ``[iT, (i+1)T]`` in local time."""

    pieces: tuple
    T: Fraction
    k: int

    @property
    def N(self) -> int:
        return len(self.pieces)

    @property
    def n(self) -> int:
        return self.pieces[0].n

    @property
    def base(self) -> PolyTrajectory:
        return self.pieces[0]


def extend(
    f: VectorField,
    k: int,
    N: int,
    T,
    term_cap: Optional[int] = None,
) -> PiecewiseApprox:
    """Build ``G_{i+1}(t, x) = (P^k z)(t, G_i(T, x))`` for ``i < N - 1``.

    Raises :class:`TermCapExceeded` before any composition when the predicted
    size of the largest piece exceeds ``term_cap``.
    """
    if k < 1 or N < 1:
        raise ValueError("k and N must be at least 1")
    T = Fraction(T)
    if T <= 0:
        raise ValueError("T must be positive")
    cap = default_term_cap() if term_cap is None else term_cap
    predicted = predicted_term_count(f, k, N)
    if predicted > cap:
        degs = predicted_degrees(f, k, N)
        raise TermCapExceeded(predicted, max(degs[-1]), f.q ** (N * k - 1), cap)

    base = picard_iterate(f, k)
    pieces = [base]
    for _ in range(N - 1):
        knot = list(pieces[-1].at(T))
        pieces.append(PolyTrajectory(tuple(compose(c, knot) for c in base)))
    return PiecewiseApprox(tuple(pieces), T, k)


def piece_index(s: float, T, N: int) -> int:
    if s < 0 or s > N * float(T) * (1 + 1e-15):
        raise ValueError(f"s={s} outside [0, {N * float(T)}]")
    return min(int(math.floor(s / float(T))), N - 1)


def eval_G(g: PiecewiseApprox, s, x: Sequence):
    """Evaluate the concatenated approximation at time ``s``.

    With rational ``s`` and ``x`` the result is exact; otherwise floats.
    """
    x = list(x)
    if len(x) != g.n:
        raise DimensionError(f"point has {len(x)} entries, field has {g.n}")
    exact = isinstance(s, (int, Fraction)) and all(isinstance(v, (int, Fraction)) for v in x)
    if exact:
        s = Fraction(s)
        if s < 0 or s > g.N * g.T:
            raise ValueError(f"s={s} outside [0, {g.N * g.T}]")
        i = min(int(s // g.T), g.N - 1)
        local = s - i * g.T
    else:
        i = piece_index(float(s), g.T, g.N)
        local = float(s) - i * float(g.T)
    point = [local] + x
    return tuple(c(*point) for c in g.pieces[i])


def derivative_defect(f: VectorField, y: PolyTrajectory) -> PolyTrajectory:
    """``D_x y(t, x) f(x) - d/dt y(t, x)``, which vanishes for the exact flow."""
    if y.n != f.n:
        raise DimensionError(f"trajectory has {y.n} components, field has {f.n}")
    out = []
    for yc in y:
        acc = -differentiate(yc, 0)
        for j, fj in enumerate(f, start=1):
            acc = acc + differentiate(yc, j) * fj
        out.append(acc)
    return PolyTrajectory(tuple(out))


class ChainedFlow:
    """Float evaluation of the extension by chaining ``P^k z`` numerically.

    Only ``P^k z`` is held symbolically, so this stays cheap for ``(k, N)``
    whose materialized pieces would be enormous.  Values agree with the
    symbolic pieces up to float rounding.
    """

    def __init__(self, f: VectorField, k: int, N: int, T, base: Optional[PolyTrajectory] = None):
        if k < 1 or N < 1:
            raise ValueError("k and N must be at least 1")
        self.f = f
        self.k = k
        self.N = N
        self.T = float(T)
        self.base = base if base is not None else picard_iterate(f, k)
        n = f.n
        self._B = numeric(self.base.components)
        self._dB = numeric([differentiate(c, j) for c in self.base for j in range(1, n + 1)])
        self._dtB = numeric([differentiate(c, 0) for c in self.base])
        self._f = f.numeric()

    def _pts(self, t, Y):
        tt = np.broadcast_to(np.asarray(t, dtype=float), (Y.shape[0],)).reshape(-1, 1)
        return np.hstack([tt, Y])

    def knots(self, X: np.ndarray, upto: int) -> list:
        """States ``G_{i-1}(T, x)`` for ``i = 0..upto`` (index 0 is ``x``)."""
        Y = np.atleast_2d(np.asarray(X, dtype=float))
        out = [Y]
        for _ in range(upto):
            Y = self._B(self._pts(self.T, Y))
            out.append(Y)
        return out

    def evaluate(self, s: float, X: np.ndarray) -> np.ndarray:
        i = piece_index(s, self.T, self.N)
        Y = self.knots(X, i)[-1]
        return self._B(self._pts(s - i * self.T, Y))

    def evaluate_grid(self, times: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Values at every time in ``times``; shape ``(len(times), m, n)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = [piece_index(float(s), self.T, self.N) for s in times]
        knots = self.knots(X, max(idx))
        return np.stack([self._B(self._pts(s - i * self.T, knots[i])) for s, i in zip(times, idx)])

    def defect(self, s: float, X: np.ndarray) -> np.ndarray:
        """``D_x G(s, x) f(x) - d/ds G(s, x)`` by the chain rule through the knots."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m, n = X.shape
        i = piece_index(s, self.T, self.N)
        Y = X
        J = np.broadcast_to(np.eye(n), (m, n, n)).copy()
        for _ in range(i):
            dB = self._dB(self._pts(self.T, Y)).reshape(m, n, n)
            J = dB @ J
            Y = self._B(self._pts(self.T, Y))
        local = s - i * self.T
        dB = self._dB(self._pts(local, Y)).reshape(m, n, n)
        fx = self._f(X)
        return np.einsum("mij,mjk,mk->mi", dB, J, fx) - self._dtB(self._pts(local, Y))
