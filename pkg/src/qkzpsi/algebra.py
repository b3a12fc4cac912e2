"""Exact sparse multivariate polynomial and rational-function arithmetic.

Everything downstream works in the ring Z[z_1..z_N, hb/2] where hb is the
equivariant parameter (printed ``hb``).  Internally we use the half-unit
h = hb/2 as the last exponent slot, so that all the half-integer shifts
showing up in fusion and recurrence formulas (e.g. z - (m-1)/2*hb) have
integer exponents.  Coefficients are arbitrary-precision rationals, stored
as plain ints whenever possible (the propagation and multidegree
computations stay integral, and int arithmetic is much faster than
Fraction).

Rational functions are kept in the restricted form used throughout:
a polynomial numerator over a multiset of integer linear forms
a*hb + z_i - z_j.  That restriction makes reduction exact and cheap
(repeated exact division) and matches every denominator that can occur.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction


class AlgebraError(Exception):
    """Base class for algebra failures."""


class ContextError(AlgebraError):
    """Operands built over different variable contexts."""


class ExactDivisionError(AlgebraError):
    """Division was not exact.  Carries the offending remainder.

    This error is a test signal for the exchange-propagation machinery and
    must never be swallowed silently.
    """

    def __init__(self, message, remainder=None):
        super().__init__(message)
        self.remainder = remainder


def _norm_coeff(c):
    """Collapse integral Fractions to int; drop nothing else."""
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


class PolyContext:
    """A fixed tuple of variable names, optionally with a distinguished h slot.

    Spectral contexts (``spectral_context``) carry z-variables plus the
    half-unit h as the last slot; coordinate contexts (slice rings) have no
    h variable and no swap/linear-form structure.
    """

    __slots__ = ("names", "h_index", "nz", "_index")

    def __init__(self, names, h_index=None):
        self.names = tuple(names)
        self.h_index = h_index
        self.nz = len(self.names) - (0 if h_index is None else 1)
        self._index = {n: i for i, n in enumerate(self.names)}
        if len(self._index) != len(self.names):
            raise ContextError("duplicate variable names")

    @property
    def nvars(self):
        return len(self.names)

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise ContextError(f"unknown variable {name!r}") from None

    def zero(self):
        return Polynomial(self, {})

    def one(self):
        return self.const(1)

    def const(self, c):
        c = _norm_coeff(Fraction(c) if not isinstance(c, (int, Fraction)) else c)
        if c == 0:
            return Polynomial(self, {})
        return Polynomial(self, {(0,) * self.nvars: c})

    def var(self, name_or_index):
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        e = [0] * self.nvars
        e[i] = 1
        return Polynomial(self, {tuple(e): 1})

    def z(self, i):
        """The i-th spectral variable, 1-based."""
        if self.h_index is None or not (1 <= i <= self.nz):
            raise ContextError(f"no spectral variable z_{i} in this context")
        return self.var(i - 1)

    def hbar(self):
        """The displayed parameter hb, i.e. twice the internal half-unit."""
        if self.h_index is None:
            raise ContextError("context has no h variable")
        e = [0] * self.nvars
        e[self.h_index] = 1
        return Polynomial(self, {tuple(e): 2})

    def __eq__(self, other):
        return (
            isinstance(other, PolyContext)
            and self.names == other.names
            and self.h_index == other.h_index
        )

    def __hash__(self):
        return hash((self.names, self.h_index))

    def __repr__(self):
        return f"PolyContext({self.names!r}, h_index={self.h_index})"


def spectral_context(n, zeta=0):
    """Context with z_1..z_n (plus zeta_1.. if requested) and the h slot.

    For n == 1 the single spectral variable is called plain ``z``, which is
    how one-variable R-matrix entries are displayed.
    """
    if n == 1 and zeta == 0:
        names = ("z",)
    else:
        names = tuple(f"z{i}" for i in range(1, n + 1))
    if zeta == 1:
        names = names + ("zeta",)
    elif zeta > 1:
        names = names + tuple(f"zeta{t}" for t in range(1, zeta + 1))
    names = names + ("hb",)
    return PolyContext(names, h_index=len(names) - 1)


def coordinate_context(names):
    """Context over arbitrary named coordinates, with no h variable."""
    return PolyContext(tuple(names), h_index=None)


def _grlex_key(exps):
    return (sum(exps), exps)


class Polynomial:
    """Sparse exact polynomial: map from exponent tuples to rational coeffs.

    Instances are treated as immutable; no method mutates ``terms`` after
    construction.  Zero coefficients are never stored.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx, terms, _clean=False):
        self.ctx = ctx
        if _clean:
            self.terms = terms
        else:
            self.terms = {e: _norm_coeff(c) for e, c in terms.items() if c != 0}

    # -- basics ---------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, frozenset(self.terms.items())))

    def _check(self, other):
        if self.ctx != other.ctx:
            raise ContextError("polynomials from different contexts")

    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def homogeneous_degree(self):
        """The common total degree of all terms, or None if inhomogeneous."""
        degs = {sum(e) for e in self.terms}
        if not degs:
            return 0
        if len(degs) > 1:
            return None
        return degs.pop()

    def is_homogeneous(self):
        return self.homogeneous_degree() is not None

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        self._check(other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = _norm_coeff(s)
            elif e in out:
                del out[e]
        return Polynomial(self.ctx, out, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.ctx, {e: -c for e, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return self.ctx.zero()
            if other == 1:
                return self
            return Polynomial(
                self.ctx, {e: _norm_coeff(c * other) for e, c in self.terms.items()}, _clean=True
            )
        self._check(other)
        if not self.terms or not other.terms:
            return self.ctx.zero()
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        out = {}
        get = out.get
        for eb, cb in b.items():
            for ea, ca in a.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = get(e, 0) + ca * cb
                out[e] = s
        return Polynomial(self.ctx, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise AlgebraError("negative polynomial power")
        result = self.ctx.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- structural operations --------------------------------------------

    def swap_z(self, i, j):
        """Exchange the spectral variables z_i and z_j (1-based).  Involution."""
        ctx = self.ctx
        if ctx.h_index is None:
            raise ContextError("swap requires a spectral context")
        if not (1 <= i <= ctx.nz and 1 <= j <= ctx.nz):
            raise ContextError("swap index out of range")
        if i == j:
            return self
        a, b = i - 1, j - 1
        out = {}
        for e, c in self.terms.items():
            if e[a] == e[b]:
                out[e] = c
            else:
                le = list(e)
                le[a], le[b] = le[b], le[a]
                out[tuple(le)] = c
        return Polynomial(self.ctx, out, _clean=True)

    def substitute(self, mapping, target_ctx=None):
        """Substitute polynomials for variables.

        ``mapping`` maps variable indices (or names) of this context to
        Polynomials over ``target_ctx`` (default: this context, with
        unmapped variables passing through unchanged; a target context must
        map every variable explicitly).
        """
        ctx = self.ctx
        tctx = target_ctx if target_ctx is not None else ctx
        images = {}
        for k, v in mapping.items():
            idx = k if isinstance(k, int) else ctx.index(k)
            if isinstance(v, (int, Fraction)):
                v = tctx.const(v)
            if v.ctx != tctx:
                raise ContextError("substitution image in wrong context")
            images[idx] = v
        if tctx == ctx:
            for idx in range(ctx.nvars):
                images.setdefault(idx, ctx.var(idx))
        else:
            for idx in range(ctx.nvars):
                if idx not in images:
                    raise ContextError(
                        f"substitution into a new context must map {ctx.names[idx]!r}"
                    )
        pow_cache = {}

        def power(idx, n):
            key = (idx, n)
            hit = pow_cache.get(key)
            if hit is None:
                hit = images[idx] ** n
                pow_cache[key] = hit
            return hit

        total = tctx.zero()
        for e, c in self.terms.items():
            term = tctx.const(c)
            for idx, exp in enumerate(e):
                if exp:
                    term = term * power(idx, exp)
            total = total + term
        return total

    def evaluate(self, values):
        """Evaluate at a full rational point (sequence ordered as ctx.names)."""
        vals = [Fraction(v) if not isinstance(v, (int, Fraction)) else v for v in values]
        if len(vals) != self.ctx.nvars:
            raise ContextError("wrong number of values")
        total = Fraction(0)
        for e, c in self.terms.items():
            term = Fraction(c)
            for v, exp in zip(vals, e):
                if exp:
                    term *= Fraction(v) ** exp
            total += term
        return total

    def exact_div(self, form):
        """Divide exactly by a LinearForm; raise ExactDivisionError otherwise.

        Division is synthetic elimination of the form's leading spectral
        variable (or of h for pure-h forms), so no term ordering ambiguity
        arises.
        """
        ctx = self.ctx
        if ctx.h_index is None:
            raise ContextError("exact_div requires a spectral context")
        if not self.terms:
            return self
        if form.i is None and form.j is None:
            # pure c*h
            c = form.hcoef
            if c == 0:
                raise AlgebraError("division by the zero form")
            h = ctx.h_index
            out = {}
            for e, coeff in self.terms.items():
                if e[h] == 0:
                    raise ExactDivisionError(
                        "not divisible by pure-h form", remainder=self
                    )
                le = list(e)
                le[h] -= 1
                out[tuple(le)] = _norm_coeff(Fraction(coeff, c) if coeff % c else coeff // c)
            return Polynomial(ctx, out, _clean=True)
        # The canonical form has +z_i as its leading variable.
        lead = form.i - 1
        # rest = form - z_lead, as a polynomial: c*h - z_j (maybe no z_j)
        rest_terms = {}
        h = ctx.h_index
        if form.hcoef:
            e = [0] * ctx.nvars
            e[h] = 1
            rest_terms[tuple(e)] = form.hcoef
        if form.j is not None:
            e = [0] * ctx.nvars
            e[form.j - 1] = 1
            rest_terms[tuple(e)] = -1
        rest = Polynomial(ctx, rest_terms, _clean=True)
        # group by exponent of z_lead
        layers = {}
        for e, c in self.terms.items():
            d = e[lead]
            le = list(e)
            le[lead] = 0
            layers.setdefault(d, {})[tuple(le)] = c
        D = max(layers)
        carry = ctx.zero()
        quotient = {}
        for d in range(D, 0, -1):
            cur = Polynomial(ctx, layers.get(d, {}), _clean=True) + carry
            for e, c in cur.terms.items():
                le = list(e)
                le[lead] = d - 1
                quotient[tuple(le)] = c
            carry = -(cur * rest)
        rem = Polynomial(ctx, layers.get(0, {}), _clean=True) + carry
        if rem:
            raise ExactDivisionError("division not exact", remainder=rem)
        return Polynomial(ctx, quotient, _clean=True)

    def divisible_by(self, form):
        try:
            self.exact_div(form)
            return True
        except ExactDivisionError:
            return False

    # -- ordering, display, serialization ---------------------------------

    def sorted_terms(self):
        """Terms in the canonical order: graded lex, z_1 > ... > z_N > h, descending."""
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def _coeff_display(self, e, c):
        """Displayed coefficient: internal h-units folded into hb powers."""
        if self.ctx.h_index is None:
            return Fraction(c)
        eh = e[self.ctx.h_index]
        return Fraction(c) / (2 ** eh)

    def text(self):
        """Canonical text form, hb denoting the equivariant parameter."""
        if not self.terms:
            return "0"
        ctx = self.ctx
        parts = []
        for e, c in self.sorted_terms():
            disp = self._coeff_display(e, c)
            factors = []
            for idx, exp in enumerate(e):
                if not exp:
                    continue
                name = ctx.names[idx]
                factors.append(name if exp == 1 else f"{name}^{exp}")
            mag = abs(disp)
            body = "*".join(factors)
            if not factors:
                piece = _frac_str(mag)
            elif mag == 1:
                piece = body
            else:
                piece = f"{_frac_str(mag)}*{body}"
            parts.append(("-" if disp < 0 else "+", piece))
        sign0, piece0 = parts[0]
        out = ("-" if sign0 == "-" else "") + piece0
        for sign, piece in parts[1:]:
            out += f" {sign} {piece}"
        return out

    def __repr__(self):
        return f"<Poly {self.text()}>"

    def to_json(self):
        terms = []
        for e, c in self.sorted_terms():
            disp = self._coeff_display(e, c)
            terms.append([disp.numerator, disp.denominator, *e])
        doc = {"terms": terms}
        if self.ctx.h_index is not None:
            doc["vars"] = self.ctx.nz
        else:
            doc["vars"] = list(self.ctx.names)
        return doc

    @staticmethod
    def from_json(doc, ctx):
        terms = {}
        for row in doc["terms"]:
            num, den, *e = row
            e = tuple(e)
            c = Fraction(num, den)
            if ctx.h_index is not None:
                c *= 2 ** e[ctx.h_index]
            terms[e] = _norm_coeff(c)
        return Polynomial(ctx, terms)


def _frac_str(f):
    f = Fraction(f)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


# -- linear forms ----------------------------------------------------------


@dataclass(frozen=True)
class LinearForm:
    """An integer linear form  (hcoef/2)*hb [+ z_i [- z_j]].

    ``hcoef`` counts internal half-units h = hb/2, so the paper-style form
    a*hb + z_i - z_j has hcoef = 2a.  The canonical representative keeps the
    z-part with a positive leading variable (i < j when both are present);
    ``canonical`` returns the representative together with the sign that
    relates it to the requested form.
    """

    hcoef: int
    i: int | None = None
    j: int | None = None

    def __post_init__(self):
        if self.i is None and self.j is None and self.hcoef == 0:
            raise AlgebraError("zero linear form")
        if self.i is not None and self.i == self.j:
            raise AlgebraError("linear form needs distinct indices")

    @staticmethod
    def make(hcoef, i=None, j=None):
        """Canonicalize; returns (form, sign) with sign in {+1, -1}."""
        if i is None and j is None:
            if hcoef == 0:
                raise AlgebraError("zero linear form")
            return (LinearForm(hcoef), 1) if hcoef > 0 else (LinearForm(-hcoef), -1)
        if i is None:  # c*h - z_j
            return LinearForm(-hcoef, j, None), -1
        if j is None:
            return LinearForm(hcoef, i, None), 1
        if i < j:
            return LinearForm(hcoef, i, j), 1
        return LinearForm(-hcoef, j, i), -1

    @staticmethod
    def hbar_units(a, i=None, j=None):
        """Canonical form for a*hb [+ z_i - z_j] with integer or half-integer a."""
        h = Fraction(a) * 2
        if h.denominator != 1:
            raise AlgebraError("linear form h-coefficient must be a half-integer multiple of hb")
        return LinearForm.make(int(h), i, j)

    def to_poly(self, ctx):
        if ctx.h_index is None:
            raise ContextError("linear forms need a spectral context")
        terms = {}
        if self.hcoef:
            e = [0] * ctx.nvars
            e[ctx.h_index] = 1
            terms[tuple(e)] = self.hcoef
        if self.i is not None:
            e = [0] * ctx.nvars
            e[self.i - 1] = 1
            terms[tuple(e)] = terms.get(tuple(e), 0) + 1
        if self.j is not None:
            e = [0] * ctx.nvars
            e[self.j - 1] = 1
            terms[tuple(e)] = terms.get(tuple(e), 0) - 1
        return Polynomial(ctx, terms)

    def text(self, ctx=None):
        def zname(idx):
            if ctx is not None:
                return ctx.names[idx - 1]
            return f"z{idx}"

        a = Fraction(self.hcoef, 2)
        parts = []
        if a:
            if a == 1:
                parts.append("hb")
            elif a == -1:
                parts.append("-hb")
            else:
                parts.append(f"{_frac_str(a)}*hb")
        if self.i is not None:
            parts.append(f"+ {zname(self.i)}" if parts else zname(self.i))
        if self.j is not None:
            parts.append(f"- {zname(self.j)}")
        return " ".join(parts) if parts else "0"

    def sort_key(self):
        return (self.i or 0, self.j or 0, self.hcoef)


# -- rational functions ------------------------------------------------------


class RationalFunction:
    """num / prod(forms), reduced by exact cancellation of denominator forms."""

    __slots__ = ("ctx", "num", "den")

    def __init__(self, num, den=None, _reduced=False):
        self.ctx = num.ctx
        self.num = num
        den = dict(den or {})
        for f, m in den.items():
            if m <= 0:
                raise AlgebraError("denominator multiplicities must be positive")
        if num.is_zero():
            den = {}
        self.den = den
        if not _reduced:
            self._reduce()

    def _reduce(self):
        changed = True
        while changed and self.den:
            changed = False
            for f in list(self.den):
                try:
                    self.num = self.num.exact_div(f)
                except ExactDivisionError:
                    continue
                if self.den[f] == 1:
                    del self.den[f]
                else:
                    self.den[f] -= 1
                changed = True

    @staticmethod
    def from_poly(p):
        return RationalFunction(p, {}, _reduced=True)

    @staticmethod
    def from_form(ctx, form, sign=1):
        return RationalFunction(form.to_poly(ctx) * sign, {}, _reduced=True)

    def is_zero(self):
        return self.num.is_zero()

    def den_poly(self):
        p = self.ctx.one()
        for f, m in self.den.items():
            p = p * (f.to_poly(self.ctx) ** m)
        return p

    def __neg__(self):
        return RationalFunction(-self.num, self.den, _reduced=True)

    def __add__(self, other):
        other = _as_rf(other, self.ctx)
        if self.ctx != other.ctx:
            raise ContextError("rational functions from different contexts")
        # lcm of denominators
        lcm = dict(self.den)
        for f, m in other.den.items():
            if lcm.get(f, 0) < m:
                lcm[f] = m
        a = self.num
        for f, m in lcm.items():
            extra = m - self.den.get(f, 0)
            if extra:
                a = a * (f.to_poly(self.ctx) ** extra)
        b = other.num
        for f, m in lcm.items():
            extra = m - other.den.get(f, 0)
            if extra:
                b = b * (f.to_poly(self.ctx) ** extra)
        return RationalFunction(a + b, lcm)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_rf(other, self.ctx))

    def __mul__(self, other):
        other = _as_rf(other, self.ctx)
        if self.ctx != other.ctx:
            raise ContextError("rational functions from different contexts")
        den = dict(self.den)
        for f, m in other.den.items():
            den[f] = den.get(f, 0) + m
        return RationalFunction(self.num * other.num, den)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise AlgebraError("inversion of the zero function")
        const, factors = factor_linear_forms(self.num)
        den = {}
        for f in factors:
            den[f] = den.get(f, 0) + 1
        num = self.den_poly() * (Fraction(1) / Fraction(const))
        return RationalFunction(num, den)

    def equals(self, other):
        other = _as_rf(other, self.ctx)
        return (self.num * other.den_poly()) == (other.num * self.den_poly())

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Polynomial, RationalFunction)):
            return self.equals(other)
        return NotImplemented

    def __hash__(self):
        raise TypeError("RationalFunction is unhashable")

    def as_polynomial(self):
        """Return the numerator if the denominator is trivial, else raise."""
        if self.den:
            raise AlgebraError("rational function is not polynomial")
        return self.num

    def evaluate(self, values):
        d = self.den_poly().evaluate(values)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the point")
        return self.num.evaluate(values) / d

    def substitute_z(self, mapping, target_ctx=None):
        """Substitute z-variables by linear forms (given as LinearForm images).

        ``mapping`` maps 1-based z indices to (form, sign) pairs or
        Polynomials of degree <= 1; denominator forms must stay linear.
        """
        tctx = target_ctx or self.ctx
        poly_map = {}
        for zi, image in mapping.items():
            if isinstance(image, Polynomial):
                poly_map[zi - 1] = image
            else:
                form, sign = image
                poly_map[zi - 1] = form.to_poly(tctx) * sign
        if target_ctx is not None:
            # map h through unchanged, other z's must be covered
            poly_map[self.ctx.h_index] = Polynomial(
                tctx,
                {tuple(1 if t == tctx.h_index else 0 for t in range(tctx.nvars)): 1},
            )
        num = self.num.substitute(poly_map, tctx if target_ctx is not None else None)
        den = {}
        for f, m in self.den.items():
            p = f.to_poly(self.ctx).substitute(poly_map, tctx if target_ctx is not None else None)
            form, sign = _poly_to_form(p)
            if sign < 0 and m % 2:
                num = -num
            den[form] = den.get(form, 0) + m
        return RationalFunction(num, den)

    def text(self):
        if not self.den:
            return self.num.text()
        den = "*".join(
            f"({f.text(self.ctx)})" + (f"^{m}" if m > 1 else "")
            for f, m in sorted(self.den.items(), key=lambda t: t[0].sort_key())
        )
        return f"({self.num.text()}) / ({den})"

    def __repr__(self):
        return f"<RatFun {self.text()}>"


def _as_rf(x, ctx):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction.from_poly(x)
    if isinstance(x, (int, Fraction)):
        return RationalFunction.from_poly(ctx.const(x))
    raise TypeError(f"cannot coerce {x!r} to a rational function")


def _poly_to_form(p):
    """Write a degree-1 polynomial with z-coefficients +-1 as (LinearForm, sign)."""
    ctx = p.ctx
    h = ctx.h_index
    hc = 0
    pos = None
    neg = None
    for e, c in p.terms.items():
        if sum(e) != 1:
            raise AlgebraError("not a linear form")
        idx = e.index(1)
        if idx == h:
            hc = c
        elif c == 1 and pos is None:
            pos = idx + 1
        elif c == -1 and neg is None:
            neg = idx + 1
        else:
            raise AlgebraError("not a unit-coefficient linear form")
    if hc != int(hc):
        raise AlgebraError("non-integral h coefficient in linear form")
    return LinearForm.make(int(hc), pos, neg)


def factor_linear_forms(p):
    """Factor a product of linear forms (times a constant).

    Returns (constant, [forms]).  Raises AlgebraError if the polynomial does
    not split completely into integer linear forms of the supported shapes.
    Used for pretty display and for rational-function inversion; ordinary
    reduction never needs it.
    """
    ctx = p.ctx
    if ctx.h_index is None:
        raise ContextError("factoring needs a spectral context")
    if p.is_zero():
        raise AlgebraError("cannot factor zero")
    factors = []
    cur = p
    progress = True
    while cur.degree() > 0 and progress:
        progress = False
        support = set()
        for e in cur.terms:
            for idx, exp in enumerate(e):
                if exp and idx != ctx.h_index:
                    support.add(idx + 1)
        support = sorted(support)
        candidates = []
        for a in range(len(support)):
            for b in range(a + 1, len(support)):
                candidates.append((support[a], support[b]))
        for i, j in candidates:
            for hc in _candidate_hcoefs(cur, ctx):
                f, _ = LinearForm.make(hc, i, j)
                try:
                    cur = cur.exact_div(f)
                except ExactDivisionError:
                    continue
                factors.append(f)
                progress = True
                break
            if progress:
                break
        if progress:
            continue
        for i in support:
            for hc in _candidate_hcoefs(cur, ctx):
                f, _ = LinearForm.make(hc, i, None)
                try:
                    cur = cur.exact_div(f)
                    factors.append(f)
                    progress = True
                    break
                except ExactDivisionError:
                    continue
            if progress:
                break
        if progress:
            continue
        # pure-h factor
        f = LinearForm(1)
        try:
            cur = cur.exact_div(f)
            factors.append(f)
            progress = True
        except ExactDivisionError:
            pass
    if cur.degree() > 0:
        raise AlgebraError("polynomial does not split into supported linear forms")
    const = next(iter(cur.terms.values())) if cur.terms else 0
    return const, factors


def _candidate_hcoefs(p, ctx):
    """Plausible h-coefficients for a linear-form factor of p: |c| bounded."""
    bound = 0
    for e, c in p.terms.items():
        cc = abs(Fraction(c))
        bound = max(bound, int(cc.numerator // max(1, cc.denominator)))
    bound = max(bound, 8)
    out = [0]
    for c in range(1, 2 * bound + 1):
        out.append(c)
        out.append(-c)
    return out


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def parse_polynomial(text, ctx):
    """Parse the canonical text form (and ordinary +,-,*,^ expressions).

    The token ``hb`` denotes the displayed equivariant parameter, i.e. two
    internal half-units.  Explicit ``*`` is required between factors.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise AlgebraError(f"bad token at {text[pos:pos+10]!r}")
            break
        pos = m.end()
        if m.group("num"):
            tokens.append(("num", int(m.group("num"))))
        elif m.group("name"):
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
    tokens.append(("end", None))
    state = {"pos": 0}

    def peek():
        return tokens[state["pos"]]

    def advance():
        t = tokens[state["pos"]]
        state["pos"] += 1
        return t

    def expect(op):
        kind, val = advance()
        if kind != "op" or val != op:
            raise AlgebraError(f"expected {op!r}")

    def parse_expr():
        node = parse_term()
        while peek() == ("op", "+") or peek() == ("op", "-"):
            _, op = advance()
            rhs = parse_term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def parse_term():
        node = parse_factor()
        while peek() == ("op", "*"):
            advance()
            node = node * parse_factor()
        return node

    def parse_factor():
        sign = 1
        while peek() in (("op", "-"), ("op", "+")):
            _, op = advance()
            if op == "-":
                sign = -sign
        node = parse_atom()
        if peek() == ("op", "^"):
            advance()
            kind, val = advance()
            if kind != "num":
                raise AlgebraError("exponent must be a number")
            node = node ** val
        return node * sign

    def parse_atom():
        kind, val = advance()
        if kind == "num":
            if peek() == ("op", "/"):
                advance()
                k2, v2 = advance()
                if k2 != "num":
                    raise AlgebraError("expected denominator")
                return ctx.const(Fraction(val, v2))
            return ctx.const(val)
        if kind == "name":
            if val == "hb":
                return ctx.hbar()
            return ctx.var(val)
        if kind == "op" and val == "(":
            node = parse_expr()
            expect(")")
            return node
        raise AlgebraError(f"unexpected token {val!r}")

    node = parse_expr()
    kind, _ = peek()
    if kind != "end":
        raise AlgebraError("trailing input")
    return node
