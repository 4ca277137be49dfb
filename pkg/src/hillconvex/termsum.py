"""Formal sums of monomials times abstract bounded factors.

A term is ``coef · 3^{rad/3} · x^deg · Π factor^power`` with ``coef`` an exact
rational, ``rad`` in {0, 1, 2} and factor ids as in :mod:`hillconvex.factors`.
Differentiation follows the product rule formally: a factor ``a0_x`` becomes
``a0_xx`` under ∂/∂x, and factors that do not depend on a variable drop out.
Bounding replaces every factor by its sup and every |x^deg| by its value at the
left end of the x range, which requires deg <= 0.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple

from .errors import DomainError
from .factors import DEPENDS, FACTOR_FUNCS, factor_id

Factor = Tuple[str, int, int]                 # (name, dx, du)
Key = Tuple[int, int, Tuple[Tuple[Factor, int], ...]]

_CBRT3 = [1.0, 3.0 ** (1.0 / 3.0), 3.0 ** (2.0 / 3.0)]


def _norm(fd: Mapping[Factor, int]) -> Tuple[Tuple[Factor, int], ...]:
    return tuple(sorted((k, v) for k, v in fd.items() if v))


class FactorTermSum:
    """Immutable-by-convention sum of terms keyed by (rad, deg, factors)."""

    def __init__(self, terms: Mapping[Key, Fraction] | None = None):
        self._t: Dict[Key, Fraction] = {k: Fraction(v) for k, v in (terms or {}).items() if v}

    # -- constructors ------------------------------------------------------
    @classmethod
    def poly(cls, *terms: Tuple[int, int, int]) -> "FactorTermSum":
        """Sum of ``coef · 3^{rad/3} · x^deg`` from (coef, rad, deg) triples."""
        out: Dict[Key, Fraction] = defaultdict(Fraction)
        for c, r, d in terms:
            out[(r, d, ())] += Fraction(c)
        return cls(out)

    @classmethod
    def factor(cls, name: str, power: int = 1) -> "FactorTermSum":
        if name not in DEPENDS:
            raise DomainError(f"unknown factor {name!r}")
        return cls({(0, 0, (((name, 0, 0), power),)): Fraction(1)})

    @classmethod
    def const(cls, c) -> "FactorTermSum":
        return cls({(0, 0, ()): Fraction(c)})

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "FactorTermSum") -> "FactorTermSum":
        out = defaultdict(Fraction, self._t)
        for k, v in other._t.items():
            out[k] += v
        return FactorTermSum(out)

    def __neg__(self) -> "FactorTermSum":
        return FactorTermSum({k: -v for k, v in self._t.items()})

    def __sub__(self, other: "FactorTermSum") -> "FactorTermSum":
        return self + (-other)

    def __mul__(self, other) -> "FactorTermSum":
        if not isinstance(other, FactorTermSum):
            return FactorTermSum({k: v * Fraction(other) for k, v in self._t.items()})
        out: Dict[Key, Fraction] = defaultdict(Fraction)
        for (ra, xa, fa), ca in self._t.items():
            for (rb, xb, fb), cb in other._t.items():
                r, c = ra + rb, ca * cb
                if r >= 3:
                    r, c = r - 3, c * 3
                fd = dict(fa)
                for f, p in fb:
                    fd[f] = fd.get(f, 0) + p
                out[(r, xa + xb, _norm(fd))] += c
        return FactorTermSum(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "FactorTermSum":
        out = FactorTermSum.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __len__(self) -> int:
        return len(self._t)

    def __eq__(self, other) -> bool:
        return isinstance(other, FactorTermSum) and self._t == other._t

    def diff(self, var: str) -> "FactorTermSum":
        """Formal partial derivative in ``var`` ('x' or 'u')."""
        if var not in ("x", "u"):
            raise DomainError(f"unknown variable {var!r}")
        out: Dict[Key, Fraction] = defaultdict(Fraction)
        for (r, d, fa), c in self._t.items():
            if var == "x" and d:
                out[(r, d - 1, fa)] += c * d
            for f, p in fa:
                name, dx, du = f
                if var not in DEPENDS[name]:
                    continue
                g = dict(fa)
                g[f] -= 1
                nf = (name, dx + (var == "x"), du + (var == "u"))
                g[nf] = g.get(nf, 0) + 1
                out[(r, d, _norm(g))] += c * p
        return FactorTermSum(out)

    # -- inspection --------------------------------------------------------
    @property
    def terms(self) -> List[Tuple[Fraction, int, int, Tuple[Tuple[str, int], ...]]]:
        """(coef, rad, deg, ((factor id, power), ...)) in a stable order."""
        rows = []
        for (r, d, fa), c in sorted(self._t.items(), key=lambda kv: repr(kv[0])):
            rows.append((c, r, d, tuple((factor_id(*f), p) for f, p in fa)))
        return rows

    def evaluate(self, x, u):
        """Value with every abstract factor replaced by the actual function."""
        total = 0.0
        for c, r, d, fa in self.terms:
            v = float(c) * _CBRT3[r] * x ** d
            for fid, p in fa:
                name = fid.split("_")[0]
                f = FACTOR_FUNCS[fid]
                args = {"xu": (x, u), "x": (x,), "u": (u,)}[DEPENDS[name]]
                v = v * f(*args) ** p
            total = total + v
        return total

    def factor_ids(self) -> set:
        return {factor_id(*f) for (_, _, fa) in self._t for f, _ in fa}

    def max_degree(self) -> int:
        return max((d for (_, d, _) in self._t), default=0)

    def __repr__(self):
        return f"FactorTermSum({len(self)} terms)"


def factor_derivative_bound(s: FactorTermSum, x_eval: float,
                            bounds: Mapping[str, float]) -> float:
    """Σ |coef · 3^{rad/3} · x_eval^deg| · Π bound^power.

    Valid as a sup bound on x >= x_eval because every degree is <= 0.  The
    float sum is inflated by a relative 1e-12 to cover its own rounding."""
    if s.max_degree() > 0:
        raise DomainError("positive monomial degree: |x^deg| is not maximal at the left end")
    missing = s.factor_ids() - set(bounds)
    if missing:
        raise DomainError(f"no bound for factors {sorted(missing)}")
    total = 0.0
    for c, r, d, fa in s.terms:
        v = abs(float(c)) * _CBRT3[r] * x_eval ** d
        for fid, p in fa:
            v *= bounds[fid] ** p
        total += v
    return total * (1 + 1e-12)


# --------------------------------------------------------------------------
# The Step 3 expressions in factor form

def _rationals():
    P = FactorTermSum.poly
    r0 = P((15, 2, -7), (-27, 0, -6), (-18, 1, -5), (5, 2, -4), (12, 0, -3), (9, 1, -2))
    r1 = P((-13, 0, -6), (18, 1, -5), (-8, 0, -3), (3, 0, 0))
    r2 = P((1, 1, -5), (1, 2, -4), (3, 0, -3), (3, 1, -2))
    r3 = P((1, 0, 0), (-3, 1, -2))
    return r0, r1, r2, r3


def c_sums() -> Tuple[FactorTermSum, FactorTermSum, FactorTermSum, FactorTermSum]:
    """C1..C4 written in the abstract factors a0..a4."""
    f = FactorTermSum.factor
    r0, r1, r2, r3 = _rationals()
    T = f("a0", 2) * f("a1", 2) * f("a3", 2)
    C1 = r0 + T * r1
    C2 = 2 * f("a0", 2) * f("a1") * f("a2") * f("a3", 2) * f("a4")
    C3 = 2 * f("a0") * f("a1") * f("a3") * r2
    C4 = T * r3
    return C1, C2, C3, C4


def F_sum() -> FactorTermSum:
    """∂/∂x of C1 - C2 - C3 + C4."""
    C1, C2, C3, C4 = c_sums()
    return (C1 - C2 - C3 + C4).diff("x")


def F_pieces() -> Tuple[FactorTermSum, FactorTermSum, FactorTermSum]:
    """∂(C1 + C4)/∂x, ∂C2/∂x, ∂C3/∂x kept apart."""
    C1, C2, C3, C4 = c_sums()
    return (C1 + C4).diff("x"), C2.diff("x"), C3.diff("x")


def F_bounds(bounds: Mapping[str, float], x_eval: float = 0.63) -> Tuple[float, float]:
    """(B_x, B_u): bounds for |∂F/∂x| and |∂F/∂u|."""
    F = F_sum()
    return (factor_derivative_bound(F.diff("x"), x_eval, bounds),
            factor_derivative_bound(F.diff("u"), x_eval, bounds))


def F_sharp_bounds(bounds: Mapping[str, float], x_eval: float = 0.63) -> Tuple[float, float]:
    """(B_x, B_u) for ∂(C1+C4)/∂x + hypot(∂C2/∂x, ∂C3/∂x).

    hypot is 1-Lipschitz for the l1 norm, so the derivative bounds of the
    three pieces add."""
    ps = F_pieces()
    bx = sum(factor_derivative_bound(p.diff("x"), x_eval, bounds) for p in ps)
    bu = sum(factor_derivative_bound(p.diff("u"), x_eval, bounds) for p in ps)
    return bx, bu
