"""Exact rational scalars extended with signed infinities.

Every quantity in the curve algebra (abscissas, values, slopes, periods,
windows) is a :class:`Rat`.  Finite values are kept normalized (coprime,
positive denominator) so equality is structural; the two infinities are
ordinary values of the type, because curves legitimately evaluate to them.
``+inf + -inf`` raises instead of producing a silent value.
"""

from __future__ import annotations

from math import gcd, isqrt


class UndefinedOperation(ArithmeticError):
    """An arithmetic combination with no defined result (e.g. +inf + -inf)."""


class Rat:
    """Rational number extended with +inf / -inf.

    Encoded as an int pair ``(num, den)``; ``den == 0`` marks an infinity
    with ``num`` in {1, -1}.  Instances are immutable by convention and
    hashable.  Mixed arithmetic with ``int`` is supported.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: int = 0, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("rational with zero denominator")
        if den < 0:
            num, den = -num, -den
        g = gcd(num, den)
        if g > 1:
            num //= g
            den //= g
        self.num = num
        self.den = den

    @classmethod
    def _raw(cls, num: int, den: int) -> "Rat":
        # Internal: caller guarantees the pair is already normalized.
        r = object.__new__(cls)
        r.num = num
        r.den = den
        return r

    # -- classification -------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.den != 0

    @property
    def is_pinf(self) -> bool:
        return self.den == 0 and self.num > 0

    @property
    def is_minf(self) -> bool:
        return self.den == 0 and self.num < 0

    def sign(self) -> int:
        return (self.num > 0) - (self.num < 0)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if type(other) is not Rat:
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        if self.den and other.den:
            n = self.num * other.den + other.num * self.den
            d = self.den * other.den
            g = gcd(n, d)
            return Rat._raw(n // g, d // g)
        if not self.den and not other.den:
            if self.num != other.num:
                raise UndefinedOperation("+inf + -inf")
            return self
        return self if not self.den else other

    __radd__ = __add__

    def __neg__(self):
        return Rat._raw(-self.num, self.den)

    def __sub__(self, other):
        if type(other) is not Rat:
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        if self.den and other.den:
            n = self.num * other.den - other.num * self.den
            d = self.den * other.den
            g = gcd(n, d)
            return Rat._raw(n // g, d // g)
        return self.__add__(other.__neg__())

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other.__sub__(self)

    def __mul__(self, other):
        if type(other) is not Rat:
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        if self.den and other.den:
            n = self.num * other.num
            d = self.den * other.den
            g = gcd(n, d)
            return Rat._raw(n // g, d // g)
        s = self.sign() * other.sign()
        if s == 0:
            raise UndefinedOperation("inf * 0")
        return PLUS_INF if s > 0 else MINUS_INF

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den and other.den:
            if other.num == 0:
                raise ZeroDivisionError("division by zero")
            return Rat(self.num * other.den, self.den * other.num)
        if not self.den and not other.den:
            raise UndefinedOperation("inf / inf")
        if not self.den:
            if other.num == 0:
                raise ZeroDivisionError("inf / 0")
            return PLUS_INF if self.sign() * other.sign() > 0 else MINUS_INF
        return ZERO  # finite / inf

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other.__truediv__(self)

    def __abs__(self):
        return Rat._raw(abs(self.num), self.den)

    # -- comparisons -----------------------------------------------------

    def _cmp(self, other: "Rat") -> int:
        if self.den and other.den:
            lhs = self.num * other.den
            rhs = other.num * self.den
            return (lhs > rhs) - (lhs < rhs)
        a = self.num * (1 if not self.den else 0)
        b = other.num * (1 if not other.den else 0)
        if not self.den and not other.den:
            return (self.num > other.num) - (self.num < other.num)
        if not self.den:
            return 1 if self.num > 0 else -1
        return -1 if other.num > 0 else 1

    def __eq__(self, other):
        if type(other) is not Rat:
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __lt__(self, other):
        if type(other) is Rat and self.den and other.den:
            return self.num * other.den < other.num * self.den
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) < 0

    def __le__(self, other):
        if type(other) is Rat and self.den and other.den:
            return self.num * other.den <= other.num * self.den
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) <= 0

    def __gt__(self, other):
        if type(other) is Rat and self.den and other.den:
            return self.num * other.den > other.num * self.den
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) > 0

    def __ge__(self, other):
        if type(other) is Rat and self.den and other.den:
            return self.num * other.den >= other.num * self.den
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.num, self.den))

    def __bool__(self):
        return self.num != 0

    # -- integer helpers ---------------------------------------------------

    def floor(self) -> int:
        if not self.den:
            raise UndefinedOperation("floor of infinity")
        return self.num // self.den

    def ceil(self) -> int:
        if not self.den:
            raise UndefinedOperation("ceil of infinity")
        return -((-self.num) // self.den)

    @property
    def is_integer(self) -> bool:
        return self.den == 1

    def __float__(self):
        if not self.den:
            return float("inf") if self.num > 0 else float("-inf")
        return self.num / self.den

    # -- text form ---------------------------------------------------------

    def __str__(self):
        if not self.den:
            return "+inf" if self.num > 0 else "-inf"
        if self.den == 1:
            return str(self.num)
        return f"{self.num}/{self.den}"

    def __repr__(self):
        return f"Rat({self})"

    @classmethod
    def parse(cls, text: str) -> "Rat":
        text = text.strip()
        if text in ("+inf", "inf"):
            return PLUS_INF
        if text == "-inf":
            return MINUS_INF
        if "/" in text:
            p, q = text.split("/", 1)
            return cls(int(p), int(q))
        return cls(int(text))


PLUS_INF = Rat._raw(1, 0)
MINUS_INF = Rat._raw(-1, 0)
ZERO = Rat._raw(0, 1)
ONE = Rat._raw(1, 1)


def rat(value) -> Rat:
    """Coerce an int, string or Rat into a Rat."""
    if isinstance(value, Rat):
        return value
    if isinstance(value, int):
        return Rat(value)
    if isinstance(value, str):
        return Rat.parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Rat")


def _coerce(value):
    if isinstance(value, Rat):
        return value
    if isinstance(value, int):
        return Rat(value)
    return NotImplemented


def rat_lcm(a: Rat, b: Rat) -> Rat:
    """Smallest positive rational that is an integer multiple of both a and b.

    For a = p/q and b = r/s in lowest terms this is lcm(p*s, r*q)/(q*s),
    reduced.  Both operands must be finite and positive.
    """
    a, b = rat(a), rat(b)
    if not (a.is_finite and b.is_finite) or a.num <= 0 or b.num <= 0:
        raise ValueError("rat_lcm requires finite positive operands")
    x = a.num * b.den
    y = b.num * a.den
    l = x * y // gcd(x, y)
    return Rat(l, a.den * b.den)


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for p in range(2, isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = b"\x00" * len(flags[p * p :: p])
    return [i for i in range(limit + 1) if flags[i]]


# First thousand-odd primes; enough to factor any breakpoint count the
# representation sizes here can produce (trial division falls back to odd
# candidates beyond the table, so larger inputs stay correct).
_PRIMES = _sieve(8000)


def factorize(n: int) -> list[int]:
    """Prime factorization of n >= 1, with multiplicity, ascending."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    out: list[int] = []
    rem = n
    for p in _PRIMES:
        if p * p > rem:
            break
        while rem % p == 0:
            out.append(p)
            rem //= p
    if rem > 1:
        p = _PRIMES[-1] + 2
        while p * p <= rem:
            while rem % p == 0:
                out.append(p)
                rem //= p
            p += 2
        if rem > 1:
            out.append(rem)
    return out
