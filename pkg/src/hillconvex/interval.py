"""Minimal outward-rounded interval arithmetic and first-order forward-mode
differentiation, both vectorized over numpy arrays.

Only what the certifier needs is implemented: +, -, *, /, integer and
positive real powers, sqrt.  Functions written with ordinary operators and
``np.sqrt`` evaluate unchanged on floats, on :class:`Interval` boxes, on
:class:`Dual` numbers, and on ``Dual`` numbers whose parts are intervals.

Rounding model: IEEE binary64 +, -, *, /, sqrt are correctly rounded, so one
ulp of outward widening per operation encloses the exact result.  ``**`` with
a non-integer exponent goes through libm ``pow`` and is widened by a
relative 4e-16 plus one ulp.
"""
from __future__ import annotations

import numbers

import numpy as np

_INF = np.inf


def _down(a):
    return np.nextafter(a, -_INF)


def _up(a):
    return np.nextafter(a, _INF)


class Interval:
    """A box [lo, hi] (arrays broadcast together)."""

    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        hi = lo if hi is None else np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi):
            raise ValueError("interval with lo > hi")
        self.lo = lo
        self.hi = hi

    # -- helpers -----------------------------------------------------------
    @staticmethod
    def _coerce(v):
        if isinstance(v, Interval):
            return v
        return Interval(v, v)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def mag(self):
        """max |v| over the box."""
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def contains(self, v) -> np.ndarray:
        return (self.lo <= v) & (v <= self.hi)

    # -- arithmetic --------------------------------------------------------
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        with np.errstate(over="ignore"):
            p = np.stack([self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi])
        return Interval(_down(p.min(axis=0)), _up(p.max(axis=0)))

    __rmul__ = __mul__

    def reciprocal(self):
        if np.any((self.lo <= 0) & (self.hi >= 0)):
            raise ZeroDivisionError("interval division by a box containing 0")
        return Interval(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def __truediv__(self, other):
        o = self._coerce(other)
        if np.any((o.lo <= 0) & (o.hi >= 0)):
            raise ZeroDivisionError("interval division by a box containing 0")
        with np.errstate(over="ignore"):         # inf is still an enclosure
            p = np.stack([self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi])
        return Interval(_down(p.min(axis=0)), _up(p.max(axis=0)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if isinstance(p, numbers.Integral) or (isinstance(p, float) and p.is_integer()):
            return self._ipow(int(p))
        if np.any(self.lo < 0):
            raise ValueError("real power of a box reaching below 0")
        p = float(p)
        a, b = np.power(self.lo, p), np.power(self.hi, p)
        lo, hi = (a, b) if p > 0 else (b, a)
        return Interval(_down(lo * (1 - 4e-16)), _up(hi * (1 + 4e-16)))

    def _ipow(self, n: int):
        if n == 0:
            return Interval(np.ones_like(self.lo))
        if n < 0:
            return self._ipow(-n).reciprocal()
        # Repeated multiplication keeps the rounding argument simple; for
        # even n, a box straddling 0 has minimum 0.
        out = self
        for _ in range(n - 1):
            out = out * self
        if n % 2 == 0:
            straddle = (self.lo < 0) & (self.hi > 0)
            out = Interval(np.where(straddle, 0.0, np.maximum(out.lo, 0.0)), out.hi)
        return out

    def sqrt(self):
        if np.any(self.lo < 0):
            raise ValueError("sqrt of a box reaching below 0")
        return Interval(np.maximum(_down(np.sqrt(self.lo)), 0.0), _up(np.sqrt(self.hi)))

    def __abs__(self):
        lo = np.where((self.lo <= 0) & (self.hi >= 0), 0.0,
                      np.minimum(np.abs(self.lo), np.abs(self.hi)))
        return Interval(lo, self.mag())

    # numpy dispatch so np.sqrt(Interval) works inside generic code.
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__":
            return NotImplemented
        if ufunc is np.sqrt:
            return inputs[0].sqrt()
        if ufunc is np.negative:
            return -inputs[0]
        if ufunc is np.absolute:
            return abs(inputs[0])
        binops = {np.add: "__add__", np.subtract: "__sub__", np.multiply: "__mul__",
                  np.true_divide: "__truediv__"}
        if ufunc in binops and len(inputs) == 2:
            a, b = inputs
            if isinstance(a, Interval):
                return getattr(a, binops[ufunc])(b)
            return getattr(Interval._coerce(a), binops[ufunc])(b)
        return NotImplemented


class Dual:
    """First-order forward-mode number val + der·ε; parts may be arrays or
    intervals."""

    __array_priority__ = 2000

    def __init__(self, val, der):
        self.val = val
        self.der = der

    @staticmethod
    def _coerce(v):
        if isinstance(v, Dual):
            return v
        return Dual(v, 0.0)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __add__(self, other):
        o = self._coerce(other)
        return Dual(self.val + o.val, self.der + o.der)

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        o = self._coerce(other)
        return Dual(self.val - o.val, self.der - o.der)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return Dual(self.val * o.val, self.der * o.val + self.val * o.der)

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        o = self._coerce(other)
        q = self.val / o.val
        return Dual(q, (self.der - q * o.der) / o.val)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("variable exponents are not supported")
        if p == 0:
            return Dual(self.val ** 0, 0.0 * self.der)
        if p == 1:
            return self
        return Dual(self.val ** p, p * self.val ** (p - 1) * self.der)

    def sqrt(self):
        s = np.sqrt(self.val)
        return Dual(s, self.der / (2.0 * s))

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__":
            return NotImplemented
        if ufunc is np.sqrt:
            return inputs[0].sqrt()
        if ufunc is np.negative:
            return -inputs[0]
        binops = {np.add: "__add__", np.subtract: "__sub__", np.multiply: "__mul__",
                  np.true_divide: "__truediv__"}
        if ufunc in binops and len(inputs) == 2:
            a, b = inputs
            if isinstance(a, Dual):
                return getattr(a, binops[ufunc])(b)
            return getattr(Dual._coerce(a), binops[ufunc])(b)
        return NotImplemented


def boxes(lo: float, hi: float, n: int) -> Interval:
    """Split [lo, hi] into n equal boxes (edges shared)."""
    e = np.linspace(lo, hi, n + 1)
    e[-1] = hi
    return Interval(e[:-1], e[1:])


def enclose(f, lo: float, hi: float, n: int = 2000) -> Interval:
    """Interval enclosure of f over n boxes covering [lo, hi]."""
    return f(boxes(lo, hi, n))


def derivative_enclosure(f, lo: float, hi: float, n: int = 2000) -> Interval:
    """Enclosure of f' over n boxes via forward-mode differentiation."""
    b = boxes(lo, hi, n)
    out = f(Dual(b, Interval(np.ones_like(b.lo))))
    der = out.der
    if not isinstance(der, Interval):
        der = Interval(np.broadcast_to(der, b.lo.shape))
    return der


def sup_abs_derivative(f, lo: float, hi: float, n: int = 2000) -> float:
    """Certified upper bound for sup |f'| on [lo, hi]."""
    return float(np.max(derivative_enclosure(f, lo, hi, n).mag()))
