"""Exact scalar arithmetic: rationals, certified root bounds, radical values.

Everything algebraic in this package runs on `fractions.Fraction`. Two
irrational quantities do show up in metric computations and both are
handled here without floating point:

* d-th roots, needed for Euclidean segment lengths and for the
  isoperimetric lower bound in the Carnot-Caratheodory certificates.
  `nth_root_lower` / `nth_root_upper` return rationals guaranteed to
  bracket the true root.
* homogeneous quasi-norm values |c|^(1/d), kept symbolically as `Root`
  objects and compared by cross-powering, so norm identities can be
  asserted with zero tolerance.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InputFormatError

# Rational bracket for pi, used by certified lower bounds. The exact
# value of the constants only affects bound quality, never soundness,
# as long as PI_LO <= pi <= PI_HI.
PI_LO = Fraction(3_141_592_653_589_793, 10**15)
PI_HI = Fraction(3_141_592_653_589_794, 10**15)


def parse_fraction(text):
    """Parse "p/q" or "p" into an exact Fraction.

    Raises InputFormatError instead of ValueError so the CLI can map it
    to the parse-error exit code.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputFormatError(f"bad rational literal {text!r}: {exc}") from exc


def format_fraction(q):
    """Canonical "p/q" (or "p" for integers) used in all serialized output."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def fmt_float(x):
    """Render an evidence float with 12 significant digits (stable bytes)."""
    return format(float(x), ".12g")


def integer_nth_root(n, d):
    """Largest integer r with r**d <= n, for n >= 0, d >= 1. Exact."""
    assert n >= 0 and d >= 1
    if n == 0:
        return 0
    if d == 1:
        return n
    r = int(round(n ** (1.0 / d)))  # float seed, then exact correction
    while r > 0 and r**d > n:
        r -= 1
    while (r + 1) ** d <= n:
        r += 1
    return r


def nth_root_lower(q, d, digits=12):
    """Rational r with r <= q**(1/d), within 10**-digits of it. q >= 0."""
    q = Fraction(q)
    assert q >= 0 and d >= 1
    if q == 0:
        return Fraction(0)
    scale = 10**digits
    # floor((q * scale^d)^(1/d)) / scale <= q^(1/d)
    num = q.numerator * scale**d
    r = integer_nth_root(num // q.denominator, d)
    return Fraction(r, scale)


def nth_root_upper(q, d, digits=12):
    """Rational r with r >= q**(1/d), within 10**-digits of it. q >= 0."""
    q = Fraction(q)
    assert q >= 0 and d >= 1
    if q == 0:
        return Fraction(0)
    scale = 10**digits
    num = q.numerator * scale**d
    r = integer_nth_root(-(-num // q.denominator), d)  # ceil of the quotient
    if Fraction(r, scale) ** d < q:
        r += 1
    return Fraction(r, scale)


def sqrt_lower(q, digits=12):
    return nth_root_lower(q, 2, digits)


def sqrt_upper(q, digits=12):
    return nth_root_upper(q, 2, digits)


class Root:
    """The nonnegative real |r|^(1/d), kept exact.

    Supports total-order comparison against other Root values (and
    rationals) by cross-powering, plus scaling by a nonnegative rational,
    which is all the quasi-norm layer needs. Addition is deliberately
    absent: sums of radicals leave this representable class, and callers
    that need them (interval evaluation of function ASTs) go through
    nth_root_lower/upper instead.
    """

    __slots__ = ("radicand", "index")

    def __init__(self, radicand, index=1):
        radicand = Fraction(radicand)
        assert radicand >= 0, "Root stores nonnegative values only"
        assert index >= 1
        self.radicand = radicand
        self.index = int(index)

    @staticmethod
    def zero():
        return Root(0, 1)

    def is_zero(self):
        return self.radicand == 0

    def _cross(self, other):
        """Return (self**L, other**L) as Fractions for the lcm exponent L."""
        if not isinstance(other, Root):
            other = Root(Fraction(other)) if other >= 0 else None
            if other is None:
                raise TypeError("Root compares against nonnegative values only")
        a, b = self, other
        g = _gcd(a.index, b.index)
        lcm = a.index // g * b.index
        return a.radicand ** (lcm // a.index), b.radicand ** (lcm // b.index)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and other < 0:
            return False
        sa, sb = self._cross(other)
        return sa == sb

    def __lt__(self, other):
        if isinstance(other, (int, Fraction)) and other < 0:
            return False
        sa, sb = self._cross(other)
        return sa < sb

    def __le__(self, other):
        return self < other or self == other

    def __gt__(self, other):
        return not self <= other

    def __ge__(self, other):
        return not self < other

    def __hash__(self):
        # Hash via a canonical pair; collisions across equal values with
        # different indices are avoided by reducing perfect powers.
        r, d = self.radicand, self.index
        for k in range(d, 0, -1):
            if d % k == 0:
                root_num = integer_nth_root(r.numerator, k)
                root_den = integer_nth_root(r.denominator, k)
                if root_num**k == r.numerator and root_den**k == r.denominator:
                    return hash((Fraction(root_num, root_den), d // k))
        return hash((r, d))

    def scaled(self, q):
        """|q| * self, exact (q rational)."""
        q = abs(Fraction(q))
        return Root(q**self.index * self.radicand, self.index)

    def power_int(self, k):
        """self**k for integer k >= 0, exact."""
        assert k >= 0
        return Root(self.radicand**k, self.index)

    def lower(self, digits=12):
        return nth_root_lower(self.radicand, self.index, digits)

    def upper(self, digits=12):
        return nth_root_upper(self.radicand, self.index, digits)

    def __float__(self):
        return float(self.radicand) ** (1.0 / self.index)

    def __repr__(self):
        if self.index == 1:
            return f"Root({self.radicand})"
        return f"Root({self.radicand}^(1/{self.index}))"

    def to_json(self):
        return {
            "radicand": format_fraction(self.radicand),
            "index": self.index,
            "float": fmt_float(float(self)),
        }


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
