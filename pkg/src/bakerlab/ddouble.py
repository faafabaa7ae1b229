"""Software double-double arithmetic (about 31 significant digits).

Only the operations needed to iterate finite Blaschke products on the unit
circle are provided: add, sub, mul, div, sqrt, and a complex wrapper.
"""
import math

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


class DD:
    """Unevaluated sum ``hi + lo`` with ``|lo| <= ulp(hi)/2``."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=0.0):
        self.hi = float(hi)
        self.lo = float(lo)

    @staticmethod
    def _coerce(x):
        return x if isinstance(x, DD) else DD(x)

    def __add__(self, other):
        other = DD._coerce(other)
        s, e = two_sum(self.hi, other.hi)
        t, f = two_sum(self.lo, other.lo)
        e += t
        s, e = quick_two_sum(s, e)
        e += f
        s, e = quick_two_sum(s, e)
        return DD(s, e)

    __radd__ = __add__

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-DD._coerce(other))

    def __rsub__(self, other):
        return DD._coerce(other) - self

    def __mul__(self, other):
        other = DD._coerce(other)
        p, e = two_prod(self.hi, other.hi)
        e += self.hi * other.lo + self.lo * other.hi
        p, e = quick_two_sum(p, e)
        return DD(p, e)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = DD._coerce(other)
        q1 = self.hi / other.hi
        r = self - other * q1
        q2 = r.hi / other.hi
        r = r - other * q2
        q3 = r.hi / other.hi
        s, e = quick_two_sum(q1, q2)
        return DD(s, e) + q3

    def __rtruediv__(self, other):
        return DD._coerce(other) / self

    def sqrt(self):
        if self.hi <= 0.0:
            return DD(0.0)
        x = math.sqrt(self.hi)
        # one Newton step on the double-double residual
        p, e = two_prod(x, x)
        r = (self - DD(p, e)).hi
        return DD(x) + r / (2.0 * x)

    def __float__(self):
        return self.hi + self.lo

    def __repr__(self):
        return f"DD({self.hi!r}, {self.lo!r})"


class DDComplex:
    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        if im is None and isinstance(re, complex):
            re, im = re.real, re.imag
        self.re = re if isinstance(re, DD) else DD(re)
        self.im = im if isinstance(im, DD) else DD(0.0 if im is None else im)

    @staticmethod
    def _coerce(x):
        return x if isinstance(x, DDComplex) else DDComplex(complex(x))

    def __add__(self, other):
        other = DDComplex._coerce(other)
        return DDComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = DDComplex._coerce(other)
        return DDComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return DDComplex._coerce(other) - self

    def __mul__(self, other):
        other = DDComplex._coerce(other)
        return DDComplex(self.re * other.re - self.im * other.im,
                         self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conj(self):
        return DDComplex(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        other = DDComplex._coerce(other)
        den = other.abs2()
        num = self * other.conj()
        return DDComplex(num.re / den, num.im / den)

    def normalized(self):
        r = self.abs2().sqrt()
        return DDComplex(self.re / r, self.im / r)

    def angle(self):
        """Argument in [0, 2*pi), rounded to double."""
        t = math.atan2(float(self.im), float(self.re))
        if t < 0.0:
            t += 2.0 * math.pi
        return 0.0 if t >= 2.0 * math.pi else t

    def __complex__(self):
        return complex(float(self.re), float(self.im))
