"""Second-order forward-mode jets.

A :class:`Jet` carries a value together with its first and second
derivatives with respect to one scalar curve parameter.  Arithmetic follows
the chain rule, so pushing a jet through any composition of polynomial or
rational maps yields exact derivatives of the composite curve.  Entries may
be floats or ``mpmath.mpf`` values; nothing here forces a number type.
"""

from __future__ import annotations


class Jet:
    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0, d2=0):
        self.v = v
        self.d1 = d1
        self.d2 = d2

    @staticmethod
    def variable(v, one=1):
        return Jet(v, one, 0 * one)

    def __repr__(self):
        return f"Jet({self.v!r}, {self.d1!r}, {self.d2!r})"

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
        return Jet(self.v + o, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
        return Jet(self.v - o, self.d1, self.d2)

    def __rsub__(self, o):
        return Jet(o - self.v, -self.d1, -self.d2)

    def __mul__(self, o):
        if isinstance(o, Jet):
            return Jet(
                self.v * o.v,
                self.d1 * o.v + self.v * o.d1,
                self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2,
            )
        return Jet(self.v * o, self.d1 * o, self.d2 * o)

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1 / self.v
        d1 = -self.d1 * inv * inv
        d2 = (2 * self.d1 * self.d1 * inv - self.d2) * inv * inv
        return Jet(inv, d1, d2)

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o.reciprocal()
        return Jet(self.v / o, self.d1 / o, self.d2 / o)

    def __rtruediv__(self, o):
        return self.reciprocal() * o

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise TypeError("jets support non-negative integer powers only")
        if k == 0:
            return Jet(1 + 0 * self.v, 0 * self.d1, 0 * self.d2)
        p1 = self.v ** (k - 1)
        p2 = self.v ** (k - 2) if k >= 2 else 0 * self.v
        return Jet(
            p1 * self.v,
            k * p1 * self.d1,
            k * p1 * self.d2 + k * (k - 1) * p2 * self.d1 * self.d1,
        )


def value(x):
    return x.v if isinstance(x, Jet) else x


def d1(x):
    return x.d1 if isinstance(x, Jet) else 0 * x


def d2(x):
    return x.d2 if isinstance(x, Jet) else 0 * x


def curvature_from_jets(x: Jet, y: Jet):
    """Unsigned plane curvature of the curve ``s -> (x(s), y(s))``."""
    num = abs(x.d1 * y.d2 - y.d1 * x.d2)
    den = (x.d1 * x.d1 + y.d1 * y.d1) ** 3
    return num / den ** 0.5
