"""Numerical probes for two analytic facts the lattice machinery leans on.

1.  Averaging a smooth box weight over an arithmetic progression collapses
    the double lattice sum

        sum_x W(x/B) * sum_y W((x + a*y)/B)

    to a^(-n) * (sum_x W(x/B))^2 up to an error controlled by the weight's
    derivative bounds:

        |error| <= D_0 * D_k * B^(2n-k) * a^(k-n)  +  D_k^2 * B^(2(n-k)) * a^(k-n)

    for every derivative order k, where D_k is the sup over R^n of all
    order-k partials of W.  poisson_probe measures both sides, with the
    implied constants set to 1.

2.  The frequency transform of the smooth bump decays faster than any
    power: |What(xi)| <= D_k * |xi|^(-k).  fourier_decay_probe tabulates
    |What(xi)| * |xi|^k over a frequency grid; the table's maximum is the
    empirical constant for that k.

Both probes work with the separable weights of the counting module (the
"smooth" kind only: the bounds need infinitely many derivatives).  Since
W(t) = prod_i w1(t_i), lattice sums, derivative bounds, and transforms all
reduce to the one-dimensional profile w1(t) = exp(-1/(1-(t/2)^2)).

Method notes:

* the inner sum over y, for fixed x, runs over exactly the residue class
  of x mod a, so it is accumulated once per class and looked up -- the
  value is identical to the direct double summation, at linear cost;
* D_k comes from central finite differences of w1 on a grid of step 1/256
  (half-step samples so odd orders stay centered), maximized over the
  grid.  A sampled maximum is an under-estimate of the true sup, and the
  difference quotients lose precision as the order grows, so orders above
  MAX_DERIV_ORDER are refused;
* transforms use composite Simpson on [-2, 2] with a frequency-scaled
  panel count, accepted only when two successive refinements agree and
  reported after Richardson extrapolation; disagreement after two
  refinement levels is an error, never a silent value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .counting import Weight
from .errors import Budget, InputError, PreconditionError, ensure_budget

DERIV_GRID_STEP = Fraction(1, 256)
MAX_DERIV_ORDER = 8
QUAD_BASE_PANELS = 4096
QUAD_RTOL = 1e-9
QUAD_ATOL = 1e-12


def _smooth_weight(phi) -> Weight:
    w = Weight(phi) if isinstance(phi, str) else phi
    if not isinstance(w, Weight):
        raise InputError("expected a Weight or weight kind", got=type(phi).__name__)
    if w.kind != "smooth":
        raise InputError(
            "derivative-bound probes need the smooth weight", kind=w.kind
        )
    return w


def _profile(t: np.ndarray) -> np.ndarray:
    """The 1-d smooth profile exp(-1/(1-(t/2)^2)) on (-2, 2), vectorized."""
    u = np.asarray(t, dtype=np.float64) / 2.0
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


# -- derivative bounds ---------------------------------------------------------


def derivative_bounds(orders: int) -> list[float]:
    """Sampled sup of |w1^(j)| for j = 0..orders on a step-1/256 grid.

    Central differences on half-step samples: the j-th difference uses the
    points t + (j - 2i) * h/2, i = 0..j, which are h apart and centered at
    t for every parity of j.
    """
    if not isinstance(orders, int) or orders < 0:
        raise InputError("derivative order must be a nonnegative integer",
                         orders=orders)
    if orders > MAX_DERIV_ORDER:
        raise InputError(
            "difference quotients at step 1/256 are unreliable past order "
            f"{MAX_DERIV_ORDER}", orders=orders,
        )
    h = float(DERIV_GRID_STEP)
    half = h / 2.0
    # samples at m * h/2 covering [-2, 2] plus stencil margin
    margin = orders  # offsets reach +-(orders) half-steps
    m = np.arange(-1024 - margin, 1025 + margin)
    g = _profile(m * half)
    bounds = []
    for j in range(orders + 1):
        if j == 0:
            bounds.append(float(np.max(np.abs(g))))
            continue
        acc = np.zeros(g.size - 2 * j)
        for i in range(j + 1):
            coef = (-1.0) ** i * math.comb(j, i)
            # offset (j - 2i) half-steps relative to the window center j
            lo = j + (j - 2 * i)
            acc += coef * g[lo: lo + acc.size]
        bounds.append(float(np.max(np.abs(acc)) / h**j))
    return bounds


def _partial_bound(bounds: list[float], n: int, k: int) -> float:
    """Max over multi-indices of total order k of prod_i |w1^(a_i)|_sup."""
    if n == 1:
        return bounds[k]
    best = 0.0
    # n is small (<= 2 in practice); enumerate compositions recursively
    def rec(rem_coords: int, rem_order: int, acc: float) -> None:
        nonlocal best
        if rem_coords == 1:
            best = max(best, acc * bounds[rem_order])
            return
        for j in range(rem_order + 1):
            rec(rem_coords - 1, rem_order - j, acc * bounds[j])

    rec(n, k, 1.0)
    return best


# -- progression-averaged double sum -------------------------------------------


@dataclass
class PoissonProbe:
    weight: str
    n: int
    B: int
    a: int
    k: int
    lhs: float
    main: float
    error: float
    predicted: float
    d0: float
    dk: float
    deriv_bounds: list  # sampled sup of |w1^(j)|, j = 0..k
    grid_step: Fraction = DERIV_GRID_STEP
    within: bool = True


def poisson_probe(
    phi,
    B: int,
    a: int,
    k: int,
    n: int = 1,
    budget: Budget | None = None,
) -> PoissonProbe:
    """Measure the progression-averaging collapse of the double lattice sum.

    Computes lhs = sum_x W(x/B) sum_y W((x+a*y)/B), the collapsed value
    main = a^(-n) (sum_x W(x/B))^2, their difference, and the derivative
    bound D_0*D_k*B^(2n-k)*a^(k-n) + D_k^2*B^(2(n-k))*a^(k-n) with both
    implied constants set to 1.  At a = 1 the two sums agree identically
    (the progression is all of Z^n), so the error is pure rounding.
    """
    w = _smooth_weight(phi)
    if not isinstance(B, int) or B < 1:
        raise InputError("B must be an integer >= 1", B=B)
    if not isinstance(a, int) or not 1 <= a <= B:
        raise InputError("a must be an integer with 1 <= a <= B", a=a, B=B)
    if not isinstance(k, int) or k < 0:
        raise InputError("k must be a nonnegative integer", k=k)
    if not isinstance(n, int) or not 1 <= n <= 2:
        raise InputError("the probe is implemented for n in {1, 2}", n=n)
    budget = ensure_budget(budget)

    H = w.halfwidth(B)
    budget.charge(n * (2 * H + 1) + (k + 1) * (2048 + 2 * k), "probe grids")
    mvals = np.arange(-H, H + 1, dtype=np.int64)
    vals = _profile(mvals / float(B))
    s1_axis = float(np.sum(vals))
    # inner sum over y for fixed x runs over the class x mod a: accumulate
    # each class once (identical to the direct double sum, linear cost)
    residues = np.mod(mvals, a)
    class_sums = np.bincount(residues, weights=vals, minlength=a)
    lhs_axis = float(np.sum(vals * class_sums[residues]))

    lhs = lhs_axis**n
    main = float(a) ** (-n) * s1_axis ** (2 * n)
    error = lhs - main

    bounds = derivative_bounds(k)
    d0 = _partial_bound(bounds, n, 0)
    dk = _partial_bound(bounds, n, k)
    predicted = (
        d0 * dk * float(B) ** (2 * n - k) * float(a) ** (k - n)
        + dk * dk * float(B) ** (2 * (n - k)) * float(a) ** (k - n)
    )
    return PoissonProbe(
        weight=w.kind, n=n, B=B, a=a, k=k,
        lhs=lhs, main=main, error=error, predicted=predicted,
        d0=d0, dk=dk, deriv_bounds=bounds,
        within=abs(error) <= predicted,
    )


# -- frequency-decay table -----------------------------------------------------


@dataclass
class FourierRow:
    xi: float
    magnitude: float
    product: float  # |What(xi)| * |xi|^k
    imag: float
    panels: int


@dataclass
class FourierDecayReport:
    weight: str
    k: int
    rows: list
    max_product: float
    l1: float  # integral of |w1|, the k = 0 comparison line
    max_imag: float
    warnings: list = dc_field(default_factory=list)


def _simpson(fvals: np.ndarray, h: float) -> float:
    acc = fvals[0] + fvals[-1] + 4.0 * np.sum(fvals[1:-1:2]) \
        + 2.0 * np.sum(fvals[2:-1:2])
    return float(acc * h / 3.0)


def _transform_at(xi: float, budget: Budget) -> tuple[float, float, int]:
    """(real part, imaginary part, panels) of the profile transform at xi.

    Composite Simpson on [-2, 2], panel count scaled with the frequency,
    accepted when two successive doublings agree (Richardson-extrapolated
    values compared); one further doubling is tried before giving up.
    """
    scale = max(1.0, abs(xi) / 16.0)
    panels = QUAD_BASE_PANELS * (1 << max(0, math.ceil(math.log2(scale))))

    def level(N: int) -> tuple[float, float]:
        budget.charge(N + 1, "quadrature points")
        t = np.linspace(-2.0, 2.0, N + 1)
        f = _profile(t)
        ang = 2.0 * math.pi * xi * t
        h = 4.0 / N
        return _simpson(f * np.cos(ang), h), _simpson(f * np.sin(ang), h)

    prev = level(panels)
    for attempt in range(2):
        panels *= 2
        cur = level(panels)
        rich_re = (16.0 * cur[0] - prev[0]) / 15.0
        rich_im = (16.0 * cur[1] - prev[1]) / 15.0
        tol = max(QUAD_ATOL, QUAD_RTOL * abs(cur[0]))
        if abs(cur[0] - prev[0]) <= tol and abs(cur[1] - prev[1]) <= tol:
            return rich_re, -rich_im, panels
        prev = cur
    raise PreconditionError(
        "quadrature did not converge after two refinement levels",
        xi=xi, last_delta=abs(cur[0] - prev[0]),
    )


def fourier_decay_probe(
    phi,
    k: int,
    xi_grid,
    budget: Budget | None = None,
) -> FourierDecayReport:
    """Tabulate |What(xi)| * |xi|^k for the smooth profile over xi_grid.

    The transform is What(xi) = integral of w1(t) exp(-2 pi i xi t) dt over
    the support [-2, 2]; the profile is even, so the imaginary part is a
    quadrature residual and is recorded for inspection.  Frequencies below
    1 in absolute value are refused (the |xi|^k normalization is the whole
    point, and it degenerates at 0); the table starts at |xi| = 1.  At
    k = 0 the rows are |What| itself and every one is bounded by the
    recorded L1 mass of the profile.
    """
    w = _smooth_weight(phi)
    if not isinstance(k, int) or k < 0:
        raise InputError("k must be a nonnegative integer", k=k)
    grid = [float(x) for x in xi_grid]
    if not grid:
        raise InputError("xi_grid is empty")
    low = [x for x in grid if abs(x) < 1.0]
    if low:
        raise InputError(
            "frequencies below 1 are outside the table's domain",
            offending=low[:4],
        )
    budget = ensure_budget(budget)

    rows = []
    max_imag = 0.0
    for xi in grid:
        re, im, panels = _transform_at(xi, budget)
        mag = math.hypot(re, im)
        rows.append(FourierRow(
            xi=xi, magnitude=mag, product=mag * abs(xi) ** k,
            imag=im, panels=panels,
        ))
        max_imag = max(max_imag, abs(im))

    l1, l1_im, _ = _transform_at(0.0, budget)
    warnings = []
    if max_imag > 1e-10:
        warnings.append(
            "imaginary part of the transform exceeds 1e-10; the quadrature "
            "grid is not resolving the integrand"
        )
    return FourierDecayReport(
        weight=w.kind, k=k, rows=rows,
        max_product=max(r.product for r in rows),
        l1=abs(l1), max_imag=max_imag, warnings=warnings,
    )
