"""JSON encodings for polynomials, Gram forms and reports, plus the SOS problem exporter.

A polynomial is a list of terms ``{"e": [e0, e1, ..., en], "c": [num, den]}``
with ``e0`` the exponent of t.  Terms are written in descending graded-lex
order so equal polynomials serialize identically.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from importlib import resources
from typing import Any, Optional

from .lyapunov import GramBlock, GramForm
from .polyalg import Polynomial, VectorField

# -- rationals and polynomials ---------------------------------------------


def rational_to_json(q) -> list:
    q = Fraction(q)
    return [q.numerator, q.denominator]


def rational_from_json(pair) -> Fraction:
    if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
        raise ValueError(f"expected [num, den] integers, got {pair!r}")
    if pair[1] <= 0:
        raise ValueError("denominator must be positive")
    return Fraction(pair[0], pair[1])


def poly_to_json(p: Polynomial) -> list:
    return [{"e": list(m), "c": rational_to_json(c)} for m, c in p.sorted_terms()]


def poly_from_json(terms, nvars: Optional[int] = None) -> Polynomial:
    """Inverse of :func:`poly_to_json`; ``nvars`` is required for the empty list."""
    if not isinstance(terms, list):
        raise ValueError("a polynomial is a list of terms")
    out: dict = {}
    for term in terms:
        if not isinstance(term, dict) or set(term) != {"e", "c"}:
            raise ValueError(f"malformed term {term!r}")
        e = term["e"]
        if not (isinstance(e, list) and e and all(isinstance(v, int) and v >= 0 for v in e)):
            raise ValueError(f"malformed exponent vector {e!r}")
        if nvars is None:
            nvars = len(e) - 1
        if len(e) != nvars + 1:
            raise ValueError(f"exponent vector {e} does not have {nvars + 1} entries")
        m = tuple(e)
        if m in out:
            raise ValueError(f"repeated monomial {e}")
        out[m] = rational_from_json(term["c"])
    if nvars is None:
        raise ValueError("cannot infer the number of variables of an empty polynomial")
    return Polynomial(out, nvars)


# -- Gram forms ----------------------------------------------------------------


def gram_to_json(g: GramForm) -> dict:
    return {
        "blocks": [
            {
                "piece": b.piece,
                "interval": [rational_to_json(v) for v in b.interval],
                "basis": [poly_to_json(p) for p in b.basis],
                "M": [[rational_to_json(v) for v in row] for row in b.M],
            }
            for b in g.blocks
        ]
    }


def gram_from_json(obj: dict, nvars: int) -> GramForm:
    blocks = []
    for b in obj["blocks"]:
        basis = tuple(poly_from_json(p, nvars) for p in b["basis"])
        M = tuple(tuple(rational_from_json(v) for v in row) for row in b["M"])
        if len(M) != len(basis) or any(len(row) != len(basis) for row in M):
            raise ValueError("Gram matrix size does not match the basis")
        interval = tuple(rational_from_json(v) for v in b["interval"])
        blocks.append(GramBlock(basis, M, interval, int(b["piece"])))
    return GramForm(tuple(blocks))


# -- generic JSON output -------------------------------------------------------


def sanitize(obj: Any) -> Any:
    """Make ``obj`` strict-JSON safe: non-finite floats become ``None``."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, Fraction):
        return rational_to_json(obj)
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return sanitize(obj.item())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(sanitize(obj), indent=2, allow_nan=False)


def load_schema(name: str) -> dict:
    text = resources.files("convlyap").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


SCHEMAS = ("polynomial", "bound", "construct", "verification", "estimate", "sos_export")


# -- SOS feasibility problem export ----------------------------------------------


FORMS = {"full": "full", "reduced": "reduced", "thm3": "full", "thm5": "reduced"}


def monomial_basis(n: int, d: int) -> list:
    """Exponent vectors of all monomials in ``n`` variables of degree ``<= d``, graded-lex."""
    out = []
    for deg in range(d + 1):
        level = [
            tuple(b - a - 1 for a, b in zip((-1,) + c, c + (n + deg - 1,)))
            for c in itertools.combinations(range(n + deg - 1), n - 1)
        ]
        out.extend(sorted(level, reverse=True))
    return out


def basis_size(n: int, d: int) -> int:
    return math.comb(n + d, d)


def _slot(name: str, role: str, multiplies: str, n: int, half: int) -> dict:
    return {
        "name": name,
        "role": role,
        "multiplies": multiplies,
        "basis_degree": half,
        "gram_size": basis_size(n, half),
    }


def sos_export(f: VectorField, radius, degree: int, form: str = "full") -> dict:
    """Problem data for an SOS search of a degree-``degree`` Lyapunov function on ``B_radius``.

    ``V = Z(x)^T P Z(x)`` with ``P`` PSD.  The ``full`` form certifies the
    lower bound and the decrease condition each with a free SOS term plus a
    ``g``-multiplied SOS term (four multipliers).  The ``reduced`` form uses
    that ``V`` may be taken SOS: the lower bound needs no ``g`` multiplier and
    ``alpha |x|^2`` moves into the decrease condition (three multipliers).
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}; choose from {sorted(FORMS)}")
    form = FORMS[form]
    if degree < 2 or degree % 2:
        raise ValueError(f"degree must be even and >= 2, got {degree}")
    radius = Fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    n, d = f.n, degree // 2
    g = Polynomial.constant(radius**2, n)
    for i in range(1, n + 1):
        g = g - Polynomial.x(i, n) ** 2
    # -grad V . f has degree <= 2d - 1 + q; round up to an even degree
    dec_half = math.ceil((2 * d - 1 + f.q) / 2)
    if form == "full":
        slots = [
            _slot("s1", "lower", "1", n, d),
            _slot("s2", "lower", "g", n, d - 1),
            _slot("s3", "derivative", "1", n, dec_half),
            _slot("s4", "derivative", "g", n, dec_half - 1),
        ]
        constraints = [
            {"role": "lower", "identity": "V - alpha*|x|^2 = s1 + g*s2"},
            {"role": "derivative", "identity": "-grad(V).f - gamma*|x|^2 = s3 + g*s4"},
        ]
    else:
        slots = [
            _slot("s1", "lower", "1", n, d),
            _slot("s2", "derivative", "1", n, dec_half),
            _slot("s3", "derivative", "g", n, dec_half - 1),
        ]
        constraints = [
            {"role": "lower", "identity": "V - alpha*|x|^2 = s1"},
            {"role": "derivative", "identity": "-grad(V + alpha*|x|^2).f - gamma*|x|^2 = s2 + g*s3"},
        ]
    constraints.append({
        "role": "upper",
        "identity": "beta*|x|^2 - V >= 0 on X",
        "note": "implied on the compact set X once V has no terms of degree below 2",
    })
    return {
        "n": n,
        "d": d,
        "degree": degree,
        "form": form,
        "objective": None,
        "basis_size": basis_size(n, d),
        "basis": [list(m) for m in monomial_basis(n, d)],
        "V_template": {
            "expression": "Z(x)^T P Z(x)",
            "P_size": basis_size(n, d),
            "P_constraint": "PSD",
            "zero_coefficients_below_degree": 2,
        },
        "g": {"description": "r^2 - |x|^2", "radius": rational_to_json(radius), "poly": poly_to_json(g)},
        "system": [poly_to_json(c) for c in f],
        "scalars": ["alpha", "beta", "gamma"],
        "constraints": constraints,
        "multipliers": slots,
    }
