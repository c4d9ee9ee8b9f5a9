"""Exact scalar arithmetic for the symbolic layer.

Coefficients live in the number field Q(i, sqrt(2)), stored as four exact
rational components ``a + b*i + c*sqrt2 + d*i*sqrt2``.  On top of that,
:class:`FormalScalar` is a multivariate polynomial over that field in the
four formal symbols ``a`` (coupling strength), ``k``, ``l`` (transform
variables) and ``t`` (time).  Everything here is exact; floating point only
enters through :meth:`FormalScalar.evaluate`.
"""

from __future__ import annotations

from fractions import Fraction
from math import sqrt as _float_sqrt
from typing import Iterator, Mapping, Union

RationalLike = Union[int, Fraction]

_SQRT2 = _float_sqrt(2.0)


def _frac(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


class Cyclo:
    """An element of Q(i, sqrt2), represented exactly.

    The value is ``ra + rb*i + rc*sqrt2 + rd*i*sqrt2`` with all four parts
    rational.  The class is immutable; arithmetic returns new instances.
    """

    __slots__ = ("ra", "rb", "rc", "rd")

    def __init__(self, ra: RationalLike = 0, rb: RationalLike = 0,
                 rc: RationalLike = 0, rd: RationalLike = 0) -> None:
        object.__setattr__(self, "ra", _frac(ra))
        object.__setattr__(self, "rb", _frac(rb))
        object.__setattr__(self, "rc", _frac(rc))
        object.__setattr__(self, "rd", _frac(rd))

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Cyclo is immutable")

    @classmethod
    def rational(cls, x: RationalLike) -> "Cyclo":
        return cls(_frac(x))

    def __add__(self, other: "Cyclo") -> "Cyclo":
        return Cyclo(self.ra + other.ra, self.rb + other.rb,
                     self.rc + other.rc, self.rd + other.rd)

    def __sub__(self, other: "Cyclo") -> "Cyclo":
        return Cyclo(self.ra - other.ra, self.rb - other.rb,
                     self.rc - other.rc, self.rd - other.rd)

    def __neg__(self) -> "Cyclo":
        return Cyclo(-self.ra, -self.rb, -self.rc, -self.rd)

    def __mul__(self, other: "Cyclo") -> "Cyclo":
        a1, b1, c1, d1 = self.ra, self.rb, self.rc, self.rd
        a2, b2, c2, d2 = other.ra, other.rb, other.rc, other.rd
        # i*i = -1, sqrt2*sqrt2 = 2, (i*sqrt2)^2 = -2
        return Cyclo(
            a1 * a2 - b1 * b2 + 2 * (c1 * c2 - d1 * d2),
            a1 * b2 + b1 * a2 + 2 * (c1 * d2 + d1 * c2),
            a1 * c2 + c1 * a2 - b1 * d2 - d1 * b2,
            a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2,
        )

    def __pow__(self, n: int) -> "Cyclo":
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "Cyclo":
        """Complex conjugation (i -> -i; sqrt2 is real)."""
        return Cyclo(self.ra, -self.rb, self.rc, -self.rd)

    def _conj_sqrt2(self) -> "Cyclo":
        return Cyclo(self.ra, self.rb, -self.rc, -self.rd)

    def inverse(self) -> "Cyclo":
        """Exact multiplicative inverse; raises ZeroDivisionError on zero."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(i, sqrt2)")
        ci = self.conjugate()
        cs = self._conj_sqrt2()
        cis = ci._conj_sqrt2()
        cofactor = ci * cs * cis
        norm = self * cofactor
        # The full Galois norm is rational by construction.
        assert norm.rb == 0 and norm.rc == 0 and norm.rd == 0
        inv = Fraction(1) / norm.ra
        return Cyclo(cofactor.ra * inv, cofactor.rb * inv,
                     cofactor.rc * inv, cofactor.rd * inv)

    def __truediv__(self, other: "Cyclo") -> "Cyclo":
        return self * other.inverse()

    def is_zero(self) -> bool:
        return not (self.ra or self.rb or self.rc or self.rd)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cyclo):
            return NotImplemented
        return (self.ra == other.ra and self.rb == other.rb
                and self.rc == other.rc and self.rd == other.rd)

    def __hash__(self) -> int:
        return hash((self.ra, self.rb, self.rc, self.rd))

    def to_complex(self) -> complex:
        return complex(float(self.ra) + _SQRT2 * float(self.rc),
                       float(self.rb) + _SQRT2 * float(self.rd))

    # -- printing ---------------------------------------------------------

    def _parts(self) -> list[str]:
        out = []
        if self.ra:
            out.append(str(self.ra))
        if self.rb:
            out.append(_unit_part(self.rb, "i"))
        if self.rc:
            out.append(_unit_part(self.rc, "sqrt2"))
        if self.rd:
            out.append(_unit_part(self.rd, "i*sqrt2"))
        return out

    def is_single_part(self) -> bool:
        return sum(bool(r) for r in (self.ra, self.rb, self.rc, self.rd)) <= 1

    def sign_split(self) -> tuple[int, "Cyclo"]:
        """Return (sign, magnitude) for single-part values, (+1, self) else."""
        if self.is_single_part():
            for r in (self.ra, self.rb, self.rc, self.rd):
                if r < 0:
                    return -1, -self
        return 1, self

    def __str__(self) -> str:
        parts = self._parts()
        if not parts:
            return "0"
        text = parts[0]
        for p in parts[1:]:
            if p.startswith("-"):
                text += " - " + p[1:]
            else:
                text += " + " + p
        return text

    def __repr__(self) -> str:
        return f"Cyclo({self.ra!r}, {self.rb!r}, {self.rc!r}, {self.rd!r})"


def _unit_part(r: Fraction, unit: str) -> str:
    if r == 1:
        return unit
    if r == -1:
        return "-" + unit
    return f"{r}*{unit}"


ZERO = Cyclo()
ONE = Cyclo(1)
I = Cyclo(0, 1)
MINUS_I = Cyclo(0, -1)
SQRT2 = Cyclo(0, 0, 1)
HALF = Cyclo(Fraction(1, 2))
INV_SQRT2 = Cyclo(0, 0, Fraction(1, 2))        # 1/sqrt2 == sqrt2/2
I_INV_SQRT2 = Cyclo(0, 0, 0, Fraction(1, 2))   # i/sqrt2


ExpKey = tuple[int, int, int, int]


class FormalScalar:
    """Exact polynomial in the symbols (a, k, l, t) over Q(i, sqrt2).

    Canonical form: a mapping from exponent tuples to nonzero
    :class:`Cyclo` coefficients.  Equality is structural.
    """

    SYMBOLS = ("a", "k", "l", "t")

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[ExpKey, Cyclo] | None = None) -> None:
        clean: dict[ExpKey, Cyclo] = {}
        if terms:
            for key, coeff in terms.items():
                if not coeff.is_zero():
                    clean[tuple(key)] = coeff
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("FormalScalar is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls) -> "FormalScalar":
        return cls()

    @classmethod
    def const(cls, value: Cyclo | RationalLike) -> "FormalScalar":
        coeff = value if isinstance(value, Cyclo) else Cyclo.rational(value)
        return cls({(0, 0, 0, 0): coeff})

    @classmethod
    def one(cls) -> "FormalScalar":
        return cls.const(ONE)

    @classmethod
    def symbol(cls, name: str) -> "FormalScalar":
        idx = cls.SYMBOLS.index(name)
        key = tuple(1 if j == idx else 0 for j in range(4))
        return cls({key: ONE})

    # -- ring operations --------------------------------------------------

    def terms(self) -> Iterator[tuple[ExpKey, Cyclo]]:
        return iter(sorted(self._terms.items()))

    def __add__(self, other: "FormalScalar") -> "FormalScalar":
        out = dict(self._terms)
        for key, coeff in other._terms.items():
            cur = out.get(key)
            out[key] = coeff if cur is None else cur + coeff
        return FormalScalar(out)

    def __sub__(self, other: "FormalScalar") -> "FormalScalar":
        return self + (-other)

    def __neg__(self) -> "FormalScalar":
        return FormalScalar({k: -c for k, c in self._terms.items()})

    def __mul__(self, other: "FormalScalar") -> "FormalScalar":
        out: dict[ExpKey, Cyclo] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = (k1[0] + k2[0], k1[1] + k2[1],
                       k1[2] + k2[2], k1[3] + k2[3])
                prod = c1 * c2
                cur = out.get(key)
                out[key] = prod if cur is None else cur + prod
        return FormalScalar(out)

    def __pow__(self, n: int) -> "FormalScalar":
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = FormalScalar.one()
        for _ in range(n):
            out = out * self
        return out

    def scale(self, coeff: Cyclo) -> "FormalScalar":
        if coeff.is_zero():
            return FormalScalar.zero()
        return FormalScalar({k: c * coeff for k, c in self._terms.items()})

    def conjugate(self) -> "FormalScalar":
        """Complex conjugation; the formal symbols are treated as real."""
        return FormalScalar({k: c.conjugate() for k, c in self._terms.items()})

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(key == (0, 0, 0, 0) for key in self._terms)

    def constant_value(self) -> Cyclo:
        if not self.is_constant():
            raise ValueError(f"not a constant scalar: {self}")
        return self._terms.get((0, 0, 0, 0), ZERO)

    def degree(self, name: str) -> int:
        idx = self.SYMBOLS.index(name)
        return max((key[idx] for key in self._terms), default=0)

    def degree_kl(self) -> int:
        """Total degree in the (k, l) pair."""
        return max((key[1] + key[2] for key in self._terms), default=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FormalScalar):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    # -- numerics ---------------------------------------------------------

    def evaluate(self, a: float = 0.0, k: float = 0.0,
                 l: float = 0.0, t: float = 0.0) -> complex:
        """Substitute numeric values for all four symbols."""
        total = 0.0 + 0.0j
        for (ea, ek, el, et), coeff in self._terms.items():
            mono = (a ** ea) * (k ** ek) * (l ** el) * (t ** et)
            total += coeff.to_complex() * mono
        return total

    # -- printing ---------------------------------------------------------

    def is_simple_symbol(self) -> bool:
        """True when the value is exactly one symbol with coefficient 1."""
        if len(self._terms) != 1:
            return False
        (key, coeff), = self._terms.items()
        return coeff == ONE and sum(key) == 1

    def _term_str(self, key: ExpKey, coeff: Cyclo) -> tuple[int, str]:
        sign, mag = coeff.sign_split()
        symbols = []
        for name, exp in zip(self.SYMBOLS, key):
            if exp == 1:
                symbols.append(name)
            elif exp > 1:
                symbols.append(f"{name}^{exp}")
        sym_part = "*".join(symbols)
        mag_str = str(mag)
        if not mag.is_single_part():
            mag_str = f"({mag_str})"
        if not sym_part:
            return sign, mag_str
        if mag == ONE:
            return sign, sym_part
        if mag_str not in ("i", "sqrt2", "i*sqrt2") and "/" in mag_str:
            mag_str = f"({mag_str})"
        return sign, f"{mag_str}*{sym_part}"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = [self._term_str(k, c) for k, c in self.terms()]
        sign, body = pieces[0]
        text = ("-" if sign < 0 else "") + body
        for sign, body in pieces[1:]:
            text += (" - " if sign < 0 else " + ") + body
        return text

    def __repr__(self) -> str:
        return f"FormalScalar({self})"


SYM_ALPHA = FormalScalar.symbol("a")
SYM_K = FormalScalar.symbol("k")
SYM_L = FormalScalar.symbol("l")
SYM_T = FormalScalar.symbol("t")
