"""Finite fields F_{p^k} in polynomial basis, and small prime utilities.

An element of F_{p^k} is encoded as an integer in [0, p^k): the code
``sum(c_i * p**i)`` stands for the coefficient vector (c_0, ..., c_{k-1})
in the power basis 1, x, ..., x^{k-1} modulo a fixed monic irreducible of
degree k.  The modulus is canonical: among all monic irreducibles of degree
k it is the one whose integer code (p^k plus the base-p digits of its
non-leading coefficients) is smallest, so x^2+x+1 for F_4, x^2+1 for F_9,
x^4+x+1 for F_16.  Two Field objects with the same (p, k) are always
compatible.

Multiplication is schoolbook convolution followed by reduction; no discrete
logarithm tables are used.  For small fields (q <= 1024) full add/mul lookup
tables can be built once and reused to vectorize bulk evaluation with numpy
gathers.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import zip_longest

import numpy as np

from .errors import Budget, InputError, PreconditionError, ensure_budget

Q_CAP = 2**20
TABLE_LIMIT = 1024

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin, exact for all 64-bit integers."""
    if m < 2:
        return False
    for w in _MR_WITNESSES:
        if m % w == 0:
            return m == w
    d = m - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for w in _MR_WITNESSES:
        x = pow(w, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(r - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def next_prime(m: int) -> int:
    """Smallest prime >= m."""
    m = max(2, int(m))
    while not is_prime(m):
        m += 1
    return m


def primes_in_interval(lo: int, hi: int) -> list[int]:
    """All primes in [lo, hi], ascending (segmented trial scan)."""
    out = []
    m = max(2, int(lo))
    while m <= hi:
        if is_prime(m):
            out.append(m)
        m += 1
    return out


# -- polynomial arithmetic over F_p (coefficient lists, low to high) ---------


def _pstrip(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _pstrip(out)

def _pmod(a: list[int], m: list[int], p: int) -> list[int]:
    a = list(a)
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _pstrip(a)
    return a


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _ppow_xq(e: int, m: list[int], p: int) -> list[int]:
    """x^(p^e) mod m, by e-fold Frobenius (repeated p-th powering)."""
    r = [0, 1]  # x
    for _ in range(e):
        # r <- r^p mod m by square-and-multiply on the exponent p
        base, out, exp = r, [1], p
        while exp:
            if exp & 1:
                out = _pmod(_pmul(out, base, p), m, p)
            exp >>= 1
            if exp:
                base = _pmod(_pmul(base, base, p), m, p)
        r = out
    return r


def _psub(a: list[int], b: list[int], p: int) -> list[int]:
    return _pstrip([(x - y) % p for x, y in zip_longest(a, b, fillvalue=0)])


def _is_irreducible(coeffs: list[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p."""
    k = len(coeffs) - 1
    if k < 1:
        return False
    x = [0, 1]
    if _psub(_ppow_xq(k, coeffs, p), x, p):
        return False
    kk = k
    prime_divs = []
    t = 2
    while t * t <= kk:
        if kk % t == 0:
            prime_divs.append(t)
            while kk % t == 0:
                kk //= t
        t += 1
    if kk > 1:
        prime_divs.append(kk)
    for t in prime_divs:
        diff = _psub(_ppow_xq(k // t, coeffs, p), x, p)
        if not diff:
            return False
        if len(_pgcd(list(coeffs), diff, p)) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def find_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Non-leading coefficients (c_0..c_{k-1}) of the canonical degree-k
    monic irreducible over F_p: the one with the smallest integer code."""
    for low in range(p**k):
        digits = []
        v = low
        for _ in range(k):
            digits.append(v % p)
            v //= p
        coeffs = digits + [1]
        if _is_irreducible(coeffs, p):
            return tuple(digits)
    raise PreconditionError("no irreducible found", p=p, k=k)  # pragma: no cover


class Field:
    """The finite field F_{p^k} with canonical modulus.

    Elements are integer codes in [0, q).  For k = 1 the code is just the
    residue.  Do not construct directly in hot paths; fields are cached by
    :func:`field_make`.
    """

    def __init__(self, p: int, k: int = 1):
        if not is_prime(p):
            raise InputError("characteristic is not prime", p=p)
        if k < 1:
            raise InputError("extension degree must be >= 1", k=k)
        q = p**k
        if q > Q_CAP:
            raise PreconditionError("field size exceeds cap", q=q, cap=Q_CAP)
        self.p = p
        self.k = k
        self.q = q
        self.modulus = find_irreducible(p, k) if k > 1 else ()
        # rows[j] = coefficient vector of x^(k+j) reduced mod the modulus
        if k > 1:
            rows = []
            cur = [(-c) % p for c in self.modulus]  # x^k
            rows.append(list(cur))
            for _ in range(k - 2):
                nxt = [0] + cur[:-1]
                lead = cur[-1]
                if lead:
                    for t in range(k):
                        nxt[t] = (nxt[t] - lead * self.modulus[t]) % p
                cur = nxt
                rows.append(list(cur))
            self._red_rows = rows
        self._mul_table: np.ndarray | None = None
        self._inv_table: np.ndarray | None = None

    def __repr__(self):
        return f"Field({self.literal()})"

    def literal(self) -> str:
        return f"{self.p}" if self.k == 1 else f"{self.p}^{self.k}"

    def __eq__(self, other):
        return isinstance(other, Field) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash((self.p, self.k))

    # -- scalar element ops -------------------------------------------------

    def decode(self, a: int) -> tuple[int, ...]:
        digits = []
        for _ in range(self.k):
            digits.append(a % self.p)
            a //= self.p
        return tuple(digits)

    def encode(self, digits) -> int:
        a = 0
        for d in reversed(list(digits)):
            a = a * self.p + d % self.p
        return a

    def embed(self, c: int) -> int:
        """Image of an integer under Z -> F_p -> F_{p^k}."""
        return c % self.p

    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        return self.encode(x + y for x, y in zip(self.decode(a), self.decode(b)))

    def sub(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a - b) % self.p
        return self.encode(x - y for x, y in zip(self.decode(a), self.decode(b)))

    def neg(self, a: int) -> int:
        if self.k == 1:
            return (-a) % self.p
        return self.encode(-x for x in self.decode(a))

    def mul(self, a: int, b: int) -> int:
        if self.k == 1:
            return a * b % self.p
        p, k = self.p, self.k
        da, db = self.decode(a), self.decode(b)
        conv = [0] * (2 * k - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    conv[i + j] += x * y
        for deg in range(2 * k - 2, k - 1, -1):
            c = conv[deg] % p
            if c:
                row = self._red_rows[deg - k]
                for t in range(k):
                    conv[t] += c * row[t]
            conv[deg] = 0
        return self.encode(conv[:k])

    def pow(self, a: int, e: int) -> int:
        e = int(e)
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.k == 1:
            return pow(a, e, self.p)
        r = 1 if self.k == 1 else self.encode([1] + [0] * (self.k - 1))
        base = a
        while e:
            if e & 1:
                r = self.mul(r, base)
            e >>= 1
            if e:
                base = self.mul(base, base)
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise PreconditionError("inverse of zero", field=self.literal())
        if self.k == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def frobenius(self, a: int) -> int:
        return self.pow(a, self.p)

    def elements(self) -> range:
        return range(self.q)

    # -- lookup tables (small fields only) -----------------------------------

    def mul_table(self) -> np.ndarray:
        """q x q multiplication table as int64 codes (q <= TABLE_LIMIT)."""
        if self._mul_table is not None:
            return self._mul_table
        if self.q > TABLE_LIMIT:
            raise PreconditionError(
                "field too large for lookup tables", q=self.q, cap=TABLE_LIMIT
            )
        p, k, q = self.p, self.k, self.q
        if k == 1:
            tab = np.arange(q, dtype=np.int64)
            tab = tab[:, None] * tab[None, :] % p
        else:
            codes = np.arange(q, dtype=np.int64)
            digits = np.empty((q, k), dtype=np.int64)
            v = codes.copy()
            for i in range(k):
                digits[:, i] = v % p
                v //= p
            conv = np.zeros((q, q, 2 * k - 1), dtype=np.int64)
            for i in range(k):
                for j in range(k):
                    conv[:, :, i + j] += digits[:, None, i] * digits[None, :, j]
            for deg in range(2 * k - 2, k - 1, -1):
                c = conv[:, :, deg] % p
                row = self._red_rows[deg - k]
                for t in range(k):
                    if row[t]:
                        conv[:, :, t] += c * row[t]
                conv[:, :, deg] = 0
            tab = np.zeros((q, q), dtype=np.int64)
            for t in reversed(range(k)):
                tab = tab * p + conv[:, :, t] % p
        self._mul_table = tab
        return tab

    def add_table(self) -> np.ndarray:
        p, k, q = self.p, self.k, self.q
        if self.q > TABLE_LIMIT:
            raise PreconditionError(
                "field too large for lookup tables", q=self.q, cap=TABLE_LIMIT
            )
        if k == 1:
            tab = np.arange(q, dtype=np.int64)
            return (tab[:, None] + tab[None, :]) % p
        codes = np.arange(q, dtype=np.int64)
        out = np.zeros((q, q), dtype=np.int64)
        scale = 1
        a, b = codes.copy(), codes.copy()
        for _ in range(k):
            out += scale * ((a[:, None] + b[None, :]) % p)
            a //= p
            b //= p
            scale *= p
        return out


@lru_cache(maxsize=None)
def field_make(p: int, k: int = 1) -> Field:
    """Cached constructor for F_{p^k}."""
    return Field(p, k)


def parse_field(lit: str) -> Field:
    """Parse a field literal: '7' means F_7, '2^4' means F_16."""
    lit = lit.strip()
    if "^" in lit:
        ps, ks = lit.split("^", 1)
    else:
        ps, ks = lit, "1"
    try:
        p, k = int(ps), int(ks)
    except ValueError:
        raise InputError("bad field literal", literal=lit) from None
    return field_make(p, k)


def enum_proj(field: Field, n: int, budget: Budget | None = None) -> np.ndarray:
    """All points of P^(n-1)(F_q) as an (N, n) array of element codes.

    Representatives are normalized so the first nonzero coordinate is 1.
    Order: by position of that leading 1 (ascending), then the remaining
    coordinates as a base-q odometer with the last coordinate fastest.
    N = (q^n - 1)/(q - 1) exactly.
    """
    if n < 1:
        raise InputError("need at least one coordinate", n=n)
    budget = ensure_budget(budget)
    budget.charge(field.q**n, "projective enumeration")
    q = field.q
    blocks = []
    for lead in range(n):
        m = n - lead - 1
        count = q**m
        block = np.zeros((count, n), dtype=np.int64)
        block[:, lead] = 1
        if m:
            rest = np.indices((q,) * m, dtype=np.int64).reshape(m, -1).T
            block[:, lead + 1 :] = rest
        blocks.append(block)
    return np.concatenate(blocks, axis=0)


# -- polynomials with coefficients in F_q ------------------------------------


class FqPoly:
    """Sparse polynomial with F_q coefficients (element codes as values)."""

    __slots__ = ("field", "n", "terms")

    def __init__(self, field: Field, n: int, terms: dict | None = None):
        self.field = field
        self.n = n
        clean = {}
        if terms:
            for e, c in terms.items():
                if c:
                    clean[tuple(e)] = c
        self.terms = clean

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def partial(self, i: int) -> "FqPoly":
        F = self.field
        out: dict[tuple, int] = {}
        j = i - 1
        for e, c in self.terms.items():
            if e[j]:
                ne = list(e)
                ne[j] -= 1
                ne = tuple(ne)
                inc = F.mul(c, F.embed(e[j]))
                tot = F.add(out.get(ne, 0), inc)
                if tot:
                    out[ne] = tot
                elif ne in out:
                    del out[ne]
        return FqPoly(F, self.n, out)

    def eval(self, point) -> int:
        """Evaluate at a tuple of element codes (scalar, exact)."""
        F = self.field
        pows: list[dict[int, int]] = [dict() for _ in range(self.n)]

        def xp(i, e):
            if e == 0:
                return None
            cache = pows[i]
            if e not in cache:
                cache[e] = F.pow(point[i], e)
            return cache[e]

        total = 0
        for exps, c in self.terms.items():
            v = c
            for i, e in enumerate(exps):
                if e:
                    v = F.mul(v, xp(i, e))
            total = F.add(total, v)
        return total

    def __repr__(self):
        return f"FqPoly({self.field.literal()}, {self.n}, {len(self.terms)} terms)"


def reduce_mod(f, field: Field) -> FqPoly:
    """Reduce an integer polynomial coefficientwise into F_{p^k}.

    Integer coefficients land in the prime subfield via c mod p.
    """
    terms = {}
    for e, c in f.terms.items():
        cc = field.embed(c)
        if cc:
            terms[e] = cc
    return FqPoly(field, f.n, terms)
