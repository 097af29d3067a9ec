"""Converse Lyapunov polynomial ``V = int_0^delta ||G(s, x)||^2 ds`` and its Gram certificate.

Each piece contributes ``int_0^h ||G_i(u, x)||^2 du`` with ``h = min(T, delta - iT)``.
Writing ``G_i(u, x) = sum_a u^a R_a(x)`` gives the block ``R^T (H kron I_n) R``
where ``H[a][b] = h^(a+b+1) / (a+b+1)`` is a moment (Hilbert-type) matrix, hence
positive semidefinite.  Summing the blocks proves ``V`` is a sum of squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .picard import PiecewiseApprox, extend
from .polyalg import Polynomial, VectorField, integrate_t


@dataclass(frozen=True)
class GramBlock:
    """``basis^T M basis`` for one piece; ``interval`` is in local time."""

    basis: tuple
    M: tuple
    interval: tuple
    piece: int

    def expand(self) -> Polynomial:
        n = self.basis[0].nvars
        acc = Polynomial.zero(n)
        size = len(self.basis)
        for a in range(size):
            row = self.M[a]
            if self.basis[a].is_zero():
                continue
            # off-diagonal pairs counted once with weight 2
            weighted = self.basis[a].scale(row[a])
            for b in range(a + 1, size):
                if row[b] and not self.basis[b].is_zero():
                    weighted = weighted + self.basis[b].scale(2 * row[b])
            acc = acc + self.basis[a] * weighted
        return acc


@dataclass(frozen=True)
class GramForm:
    blocks: tuple

    def expand(self) -> Polynomial:
        total = None
        for blk in self.blocks:
            part = blk.expand()
            total = part if total is None else total + part
        return total


@dataclass(frozen=True)
class LyapunovResult:
    V: Polynomial
    delta: Fraction
    pieces_used: int
    gram: GramForm
    degree_pieces: tuple = ()

    @property
    def degree(self) -> int:
        return self.V.degree()


def _spans(g: PiecewiseApprox, delta: Fraction) -> list:
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta > g.N * g.T:
        raise ValueError(f"delta={delta} exceeds the covered horizon N*T={g.N * g.T}")
    spans = []
    for i in range(g.N):
        h = min(g.T, delta - i * g.T)
        if h <= 0:
            break
        spans.append((i, h))
    return spans


def moment_matrix(size: int, lo, hi) -> list:
    """``M[a][b] = int_lo^hi s^(a+b) ds`` as exact rationals."""
    lo, hi = Fraction(lo), Fraction(hi)
    return [
        [(hi ** (a + b + 1) - lo ** (a + b + 1)) / (a + b + 1) for b in range(size)]
        for a in range(size)
    ]


def construct_V(g: PiecewiseApprox, delta) -> LyapunovResult:
    """Integrate ``||G||^2`` over ``[0, delta]`` and attach the Gram certificate.

    ``V`` is computed directly (square, then integrate in t); the Gram form is
    built independently from the t-coefficients, so expanding it and comparing
    against ``V`` is a genuine check.
    """
    delta = Fraction(delta)
    spans = _spans(g, delta)
    n = g.n
    V = Polynomial.zero(n)
    for i, h in spans:
        sq = Polynomial.zero(n)
        for c in g.pieces[i]:
            sq = sq + c * c
        V = V + integrate_t(sq, 0, h)
    return LyapunovResult(
        V=V,
        delta=delta,
        pieces_used=len(spans),
        gram=gram_extract(g, delta),
        degree_pieces=tuple(g.pieces[i].degree_x() for i, _ in spans),
    )


def gram_extract(g: PiecewiseApprox, delta) -> GramForm:
    """Per piece, the basis of t-coefficient polynomials and the moment block."""
    delta = Fraction(delta)
    n = g.n
    blocks = []
    for i, h in _spans(g, delta):
        piece = g.pieces[i]
        deg = piece.degree_t()
        coeffs = [c.coefficients_in_t() for c in piece]
        zero = Polynomial.zero(n)
        basis = tuple(coeffs[c].get(a, zero) for a in range(deg + 1) for c in range(n))
        H = moment_matrix(deg + 1, 0, h)
        size = (deg + 1) * n
        M = tuple(
            tuple(H[r // n][s // n] if r % n == s % n else Fraction(0) for s in range(size))
            for r in range(size)
        )
        blocks.append(GramBlock(basis, M, (Fraction(0), h), i))
    return GramForm(tuple(blocks))


@dataclass(frozen=True)
class PSDResult:
    """Outcome of the exact LDL^T test; ``witness`` is an original row index."""

    is_psd: bool
    pivots: tuple
    perm: tuple
    witness: Optional[int] = None
    L: tuple = field(default=(), repr=False)

    def __bool__(self) -> bool:
        return self.is_psd


def psd_check(M: Sequence[Sequence]) -> PSDResult:
    """Exact rational ``P M P^T = L D L^T`` with largest-diagonal pivoting.

    ``M`` is PSD iff every pivot is nonnegative and, once the remaining
    diagonal is all zero, the remaining block is zero as well.
    """
    A = [[Fraction(v) for v in row] for row in M]
    n = len(A)
    for row in A:
        if len(row) != n:
            raise ValueError("matrix must be square")
    for i in range(n):
        for j in range(i):
            if A[i][j] != A[j][i]:
                raise ValueError(f"matrix is not symmetric at ({i}, {j})")

    perm = list(range(n))
    Lm = [[Fraction(0)] * n for _ in range(n)]
    pivots = []
    for j in range(n):
        p = max(range(j, n), key=lambda r: A[r][r])
        if p != j:
            A[j], A[p] = A[p], A[j]
            for row in A:
                row[j], row[p] = row[p], row[j]
            perm[j], perm[p] = perm[p], perm[j]
            Lm[j], Lm[p] = Lm[p], Lm[j]
        d = A[j][j]
        if d < 0:
            return PSDResult(False, tuple(pivots + [d]), tuple(perm), perm[j], _freeze(Lm))
        if d == 0:
            for r in range(j, n):
                for s in range(j, n):
                    if A[r][s] != 0:
                        return PSDResult(False, tuple(pivots + [d]), tuple(perm), perm[r], _freeze(Lm))
            pivots.extend([Fraction(0)] * (n - j))
            for r in range(j, n):
                Lm[r][r] = Fraction(1)
            return PSDResult(True, tuple(pivots), tuple(perm), None, _freeze(Lm))
        pivots.append(d)
        Lm[j][j] = Fraction(1)
        for r in range(j + 1, n):
            Lm[r][j] = A[r][j] / d
        for r in range(j + 1, n):
            lr = Lm[r][j]
            if lr:
                for s in range(j + 1, n):
                    A[r][s] -= lr * A[j][s]
    return PSDResult(True, tuple(pivots), tuple(perm), None, _freeze(Lm))


def _freeze(rows) -> tuple:
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class CertificateCheck:
    reconstruction: bool
    psd: tuple
    v_at_origin_zero: bool
    degree_even: bool

    @property
    def ok(self) -> bool:
        return self.reconstruction and self.v_at_origin_zero and self.degree_even and all(self.psd)


def certify(result: LyapunovResult) -> CertificateCheck:
    """Check reconstruction, PSD-ness of every block, ``V(0) = 0`` and even degree."""
    n = result.V.nvars
    return CertificateCheck(
        reconstruction=result.gram.expand() == result.V,
        psd=tuple(psd_check(b.M) for b in result.gram.blocks),
        v_at_origin_zero=result.V.coeff((0,) * (n + 1)) == 0,
        degree_even=result.V.degree() % 2 == 0,
    )


def closed_form_quadratic(f: VectorField, delta) -> LyapunovResult:
    """``V = [x; f]^T [[d I, d^2/2 I], [d^2/2 I, d^3/3 I]] [x; f]`` (one piece, ``k = 2``)."""
    delta = Fraction(delta)
    n = f.n
    xs = [Polynomial.x(i, n) for i in range(1, n + 1)]
    H = moment_matrix(2, 0, delta)
    V = Polynomial.zero(n)
    for xi, fi in zip(xs, f):
        V = V + (xi * xi).scale(H[0][0]) + (xi * fi).scale(2 * H[0][1]) + (fi * fi).scale(H[1][1])
    basis = tuple(xs) + tuple(f)
    size = 2 * n
    M = tuple(
        tuple(H[r // n][s // n] if r % n == s % n else Fraction(0) for s in range(size))
        for r in range(size)
    )
    gram = GramForm((GramBlock(basis, M, (Fraction(0), delta), 0),))
    degree = max(1, f.q)
    return LyapunovResult(V=V, delta=delta, pieces_used=1, gram=gram, degree_pieces=(degree,))


def build(f: VectorField, k: int, N: int, T, delta=None, term_cap: Optional[int] = None) -> LyapunovResult:
    """Convenience: extend the Picard approximation and construct ``V``."""
    g = extend(f, k, N, T, term_cap=term_cap)
    return construct_V(g, g.N * g.T if delta is None else delta)
