"""Lattice-point counts in boxes, congruence conditions, weights, and
finite-field count probes.

Boxes are sup-norm balls |x_i| <= B around the origin in Z^n.  Counts come
in three flavors:

* plain zero counts of an integer polynomial over the box (exact);
* counts of x with every listed polynomial divisible by a modulus m;
* weighted counts sum W(x/B) over those x, for a weight W supported in
  [-2, 2]^n.

Weights are separable, W(t) = prod_i w1(t_i), with three kinds:

* "indicator": w1 = 1 on [-1, 1], support |x_i| <= B (closed);
* "hat": w1(t) = max(0, 1 - |t|/2), an exact rational at rational points,
  so hat-weighted counts are Fractions with denominator (2B)^n;
* "smooth": w1(t) = exp(-1/(1-(t/2)^2)) for |t| < 2, the standard C^infty
  bump (w1(0) = 1/e); evaluated in float64.

plus a "zero" weight (empty support) used in tests.  Integer support of
hat and smooth is |x_i| <= 2B-1.

All enumeration is charged against a Budget before any allocation, and the
grid order is fixed (x1 varies fastest) so float reductions are
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import Budget, InputError, PreconditionError, ensure_budget
from .ffield import Field
from .geometry import VarietySpec, dim_est_affine, sing_points
from .mpoly import IntPoly
from .parallel import pairwise_sum

WEIGHT_KINDS = ("indicator", "hat", "smooth", "zero")


class Weight:
    """A separable box weight; see the module docstring for the kinds."""

    def __init__(self, kind: str):
        if kind not in WEIGHT_KINDS:
            raise InputError("unknown weight kind", kind=kind, known=WEIGHT_KINDS)
        self.kind = kind

    @property
    def exact(self) -> bool:
        """Whether weighted sums are exact rationals."""
        return self.kind in ("indicator", "hat", "zero")

    def halfwidth(self, B: int) -> int:
        """Largest |x_i| with (possibly) nonzero weight; -1 if empty."""
        if self.kind == "zero":
            return -1
        if self.kind == "indicator":
            return B
        return 2 * B - 1

    def axis_values(self, B: int):
        """Per-coordinate weights over offsets -H..H.

        Returns (values, denominator): int64 numerators with an int
        denominator for exact kinds, (float64 array, None) for smooth.
        """
        H = self.halfwidth(B)
        m = np.arange(-H, H + 1, dtype=np.int64)
        if self.kind == "zero":
            return np.zeros(0, dtype=np.int64), 1
        if self.kind == "indicator":
            return np.ones(m.size, dtype=np.int64), 1
        if self.kind == "hat":
            return 2 * B - np.abs(m), 2 * B
        u = m.astype(np.float64) / (2.0 * B)
        return np.exp(-1.0 / (1.0 - u * u)), None

    def value_1d_exact(self, t: Fraction) -> Fraction:
        if self.kind == "zero":
            return Fraction(0)
        if self.kind == "indicator":
            return Fraction(1) if abs(t) <= 1 else Fraction(0)
        if self.kind == "hat":
            return max(Fraction(0), 1 - abs(t) / 2)
        raise PreconditionError("smooth weight is not exact")

    def value_float(self, t: Sequence[float]) -> float:
        out = 1.0
        for ti in t:
            ti = float(ti)
            if self.kind == "zero":
                return 0.0
            if self.kind == "indicator":
                if abs(ti) > 1:
                    return 0.0
            elif self.kind == "hat":
                out *= max(0.0, 1.0 - abs(ti) / 2.0)
            else:
                u = ti / 2.0
                if abs(u) >= 1:
                    return 0.0
                out *= math.exp(-1.0 / (1.0 - u * u))
        return out


def weight_make(kind: str) -> Weight:
    return Weight(kind)


# -- grid evaluation ----------------------------------------------------------


def eval_on_axes(
    f: IntPoly, axes: list[np.ndarray], m: int | None
) -> np.ndarray:
    """Evaluate f on the cartesian product of integer axes.

    The returned array is flat in the order where x1 varies fastest (axis
    for x_i is n-i, C order).  With a modulus the result is int64 residues;
    without one the values are exact, in int64 when a coarse bound proves
    that safe and Python objects otherwise.
    """
    n = f.n
    if len(axes) != n:
        raise InputError("axis count mismatch", axes=len(axes), n=n)
    shape = tuple(len(axes[n - 1 - ax]) for ax in range(n))  # axis 0 <-> x_n

    if m is not None:
        if m < 1:
            raise InputError("modulus must be >= 1", m=m)
        total = np.zeros(shape, dtype=np.int64)
        pow_cache: dict[tuple, np.ndarray] = {}

        def pw(i, e):
            key = (i, e)
            if key not in pow_cache:
                base = axes[i].astype(np.int64) % m
                v = base.copy()
                for _ in range(e - 1):
                    v = v * base % m
                pow_cache[key] = v
            return pow_cache[key]

        for exps, c in f.terms.items():
            term = np.full(shape, c % m, dtype=np.int64)
            for i, e in enumerate(exps):
                if e:
                    bshape = [1] * n
                    bshape[n - 1 - i] = len(axes[i])
                    term = term * pw(i, e).reshape(bshape) % m
            total = (total + term) % m
        return total.ravel()

    # exact evaluation: decide dtype from a coarse bound
    bound = 0
    for exps, c in f.terms.items():
        t = abs(c)
        for i, e in enumerate(exps):
            amax = int(np.max(np.abs(axes[i]))) if len(axes[i]) else 0
            t *= max(1, amax) ** e
        bound += t
    dtype = np.int64 if bound < 2**62 else object
    total = np.zeros(shape, dtype=dtype)
    pow_cache = {}

    def pwe(i, e):
        key = (i, e)
        if key not in pow_cache:
            base = axes[i].astype(dtype)
            v = base.copy()
            for _ in range(e - 1):
                v = v * base
            pow_cache[key] = v
        return pow_cache[key]

    for exps, c in f.terms.items():
        term = np.full(shape, c, dtype=dtype)
        for i, e in enumerate(exps):
            if e:
                bshape = [1] * n
                bshape[n - 1 - i] = len(axes[i])
                term = term * pwe(i, e).reshape(bshape)
        total = total + term
    return total.ravel()


def _box_axes(n: int, H: int) -> list[np.ndarray]:
    ax = np.arange(-H, H + 1, dtype=np.int64)
    return [ax] * n


def _charge_box(budget: Budget, n: int, H: int) -> None:
    budget.charge((2 * H + 1) ** n, "box points")


def _as_poly_list(fs) -> list[IntPoly]:
    if isinstance(fs, IntPoly):
        return [fs]
    out = list(fs)
    for f in out:
        if not isinstance(f, IntPoly):
            raise InputError("expected integer polynomials")
    return out


# -- counting operations ------------------------------------------------------


@dataclass
class CountResult:
    """One counting run: `value` is int, Fraction, or float by weight kind."""

    value: object
    n: int
    B: int
    modulus: int | None
    weight: str | None
    points_scanned: int
    exact: bool


def count_box(f: IntPoly, B: int, budget: Budget | None = None) -> int:
    """Exact number of zeros of f in the box |x_i| <= B."""
    if B < 0:
        raise InputError("B must be >= 0", B=B)
    budget = ensure_budget(budget)
    _charge_box(budget, f.n, B)
    vals = eval_on_axes(f, _box_axes(f.n, B), None)
    if vals.dtype == object:
        return sum(1 for v in vals if v == 0)
    return int(np.count_nonzero(vals == 0))


def count_box_mod(fs, B: int, m: int, budget: Budget | None = None) -> int:
    """Number of box points where every polynomial is divisible by m.

    m = 1 counts the whole box; duplicate polynomials are harmless.
    """
    fs = _as_poly_list(fs)
    if B < 0:
        raise InputError("B must be >= 0", B=B)
    if m < 1:
        raise InputError("modulus must be >= 1", m=m)
    if not fs:
        raise InputError("need at least one polynomial")
    n = fs[0].n
    budget = ensure_budget(budget)
    _charge_box(budget, n, B)
    mask = np.ones((2 * B + 1) ** n, dtype=bool)
    for f in fs:
        if f.n != n:
            raise InputError("mixed variable counts")
        mask &= eval_on_axes(f, _box_axes(n, B), m) == 0
    return int(np.count_nonzero(mask))


def weighted_count(
    fs,
    B: int,
    m: int,
    weight: Weight | str,
    budget: Budget | None = None,
) -> CountResult:
    """Sum of W(x/B) over box points with every polynomial divisible by m.

    `fs` may contain the zero polynomial (which imposes nothing), so the
    full weighted box sum is the weighted count of the zero polynomial.
    Exact kinds return a Fraction; smooth returns a float computed with a
    fixed reduction tree.
    """
    fs = _as_poly_list(fs) if fs else []
    if isinstance(weight, str):
        weight = Weight(weight)
    if B < 1:
        raise InputError("B must be >= 1", B=B)
    if m < 1:
        raise InputError("modulus must be >= 1", m=m)
    n = fs[0].n if fs else None
    if n is None:
        raise InputError("cannot infer dimension from an empty list; pass a "
                         "zero polynomial of the right arity")
    for f in fs:
        if f.n != n:
            raise InputError("mixed variable counts")
    H = weight.halfwidth(B)
    if H < 0:
        return CountResult(Fraction(0), n, B, m, weight.kind, 0, True)
    budget = ensure_budget(budget)
    _charge_box(budget, n, H)
    npts = (2 * H + 1) ** n
    mask = np.ones(npts, dtype=bool)
    for f in fs:
        mask &= eval_on_axes(f, _box_axes(n, H), m) == 0
    vals, den = weight.axis_values(B)
    if weight.exact:
        # all axes share the same value vector, so the outer-product order
        # does not matter; lift to objects if the per-point product could
        # overflow int64
        if den**n >= 2**62:
            vals = vals.astype(object)
        w = np.ones(1, dtype=vals.dtype)
        for _ in range(n):
            w = (w[:, None] * vals[None, :]).ravel()
        num = int(np.sum(w[mask], dtype=object))
        value = Fraction(num, den**n)
        return CountResult(value, n, B, m, weight.kind, npts, True)
    w = np.ones(1, dtype=np.float64)
    for _ in range(n):
        w = (w[:, None] * vals[None, :]).ravel()
    value = pairwise_sum(np.where(mask, w, 0.0))
    return CountResult(value, n, B, m, weight.kind, npts, False)


# -- finite-field probes ------------------------------------------------------


@dataclass
class TrivialBoundRow:
    B: int
    count: int
    ratio: Fraction


@dataclass
class TrivialBoundReport:
    field: str
    n: int
    dim: int
    fq_count: int
    rows: list
    max_ratio: Fraction


def trivial_bound_probe(
    forms, fld: Field, Bs: Sequence[int], budget: Budget | None = None
) -> TrivialBoundReport:
    """Counts of variety points inside small boxes versus B^dim.

    Each box [-B, B]^n must inject into F_q^n (2B+1 <= q), so box points
    hit each residue class at most once.  The variety dimension is the
    affine estimate from the full F_q^n count.
    """
    fs = _as_poly_list(forms)
    if not fs:
        raise InputError("need at least one polynomial")
    if fld.k != 1:
        raise PreconditionError("box probe needs a prime field", field=fld.literal())
    n = fs[0].n
    budget = ensure_budget(budget)
    from .ffield import reduce_mod

    for f in fs:
        if reduce_mod(f, fld).is_zero():
            raise PreconditionError(
                "form vanishes identically mod q", q=fld.q
            )
    from .geometry import affine_count

    fq_count = affine_count(fs, fld, n, budget)
    dim = dim_est_affine(fq_count, fld.q)
    rows = []
    max_ratio = Fraction(0)
    for B in Bs:
        if B < 1:
            raise InputError("box size must be >= 1", B=B)
        if 2 * B + 1 > fld.q:
            raise PreconditionError(
                "box does not inject into residue classes", B=B, q=fld.q
            )
        count = count_box_mod(fs, B, fld.q, budget)
        ratio = Fraction(count * B ** max(0, -dim), B ** max(0, dim))
        rows.append(TrivialBoundRow(B=B, count=count, ratio=ratio))
        max_ratio = max(max_ratio, ratio)
    return TrivialBoundReport(
        field=fld.literal(),
        n=n,
        dim=dim,
        fq_count=fq_count,
        rows=rows,
        max_ratio=max_ratio,
    )


@dataclass
class HooleyDeligneReport:
    field: str
    n: int
    r: int
    count: int
    main: int
    error: int
    sing_dim: int
    dim_variety: int
    normalized_error: float


def hooley_deligne_probe(
    forms, fld: Field, budget: Budget | None = None
) -> HooleyDeligneReport:
    """Affine count of a complete intersection against q^(n-r).

    Preconditions: every form has degree >= 2, and the leading forms cut a
    projective variety whose dimension estimate is exactly n-1-r.  The
    error is normalized by q^((n-r+2+s)/2) where s is the dimension
    estimate of the singular locus of that projective variety.
    """
    fs = _as_poly_list(forms)
    if not fs:
        raise InputError("need at least one polynomial")
    n, r = fs[0].n, len(fs)
    budget = ensure_budget(budget)
    for f in fs:
        if f.degree() < 2:
            raise PreconditionError("forms must have degree >= 2",
                                    degree=f.degree())
    leading = tuple(f.leading_form() for f in fs)
    rep = sing_points(VarietySpec(fld, n, leading), expected_codim=r, budget=budget)
    if rep.dim_est_variety != n - 1 - r:
        raise PreconditionError(
            "leading forms do not cut the expected dimension",
            dim=rep.dim_est_variety, expected=n - 1 - r,
        )
    from .geometry import affine_count

    count = affine_count(fs, fld, n, budget)
    main = fld.q ** (n - r)
    error = count - main
    s = rep.dim_est_sing
    norm = abs(error) / float(fld.q) ** ((n - r + 2 + s) / 2.0)
    return HooleyDeligneReport(
        field=fld.literal(),
        n=n,
        r=r,
        count=count,
        main=main,
        error=error,
        sing_dim=s,
        dim_variety=rep.dim_est_variety,
        normalized_error=norm,
    )
