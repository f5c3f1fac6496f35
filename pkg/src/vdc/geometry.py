"""Singular loci, dimension heuristics, and regularity checks over F_q.

Varieties here are cut out of P^(n-1) (or A^n) by forms with F_q
coefficients.  Everything is decided by exhaustive enumeration of rational
points, so all "dimensions" are estimates derived from point counts:

* projective: a set of size c gets dimension d when c is within a
  half-step (in the geometric-mean sense) of the size of P^d(F_q), i.e.
  g(d-1) < c <= g(d) with g(d) = sqrt(|P^d| * |P^(d+1)|);
* affine: q^(d-1/2) < c <= q^(d+1/2).

Both are evaluated with exact integer comparisons (square both sides).
The empty set has dimension -1 by convention.

Singularity is the Jacobian criterion at rational points: a point on the
variety is singular when the r x n Jacobian of the first r defining forms
has rank < r there.  Note this marks *every* point singular when a
defining form is identically zero (a non-reduced cut), which is the honest
reading for difference forms that collapse.

The regularity checks (r_check) classify a form F mod p:

* R0 - the hypersurface V(F) is non-singular;
* R1 - for 's' in -1..n-1 the locus of directions y whose first
  difference degenerates badly (sigma_y >= s) has dimension <= n-2-s;
* R2 - for each y, the locus of second directions z with s(y,z) >= s'+1
  stays within the analogous bound.

R0 is *certified* (no enumeration) only for diagonal forms with unit
coefficients and exponent prime to p; everything else is an empirical scan
over rational points of F_{p^k} for k up to a small cap, reported as
"holds_empirically".  Budget-limited checks report "skipped_budget" and
never pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import Budget, InputError, PreconditionError, ensure_budget
from .ffield import Field, FqPoly, enum_proj, field_make, reduce_mod
from .mpoly import IntPoly

MAX_WITNESSES = 16
MAX_MEMBER_LIST = 10000


# -- dimension heuristics ----------------------------------------------------


def proj_space_size(d: int, q: int) -> int:
    """Number of points of P^d(F_q); 0 for d = -1."""
    if d < 0:
        return 0
    return (q ** (d + 1) - 1) // (q - 1)


def dim_est(count: int, q: int) -> int:
    """Projective dimension estimate for a set of `count` rational points."""
    if count < 0:
        raise InputError("negative count", count=count)
    if count == 0:
        return -1
    d = 0
    c2 = count * count
    while c2 > proj_space_size(d, q) * proj_space_size(d + 1, q):
        d += 1
    return d


def dim_est_affine(count: int, q: int) -> int:
    """Affine dimension estimate: q^(d-1/2) < count <= q^(d+1/2)."""
    if count < 0:
        raise InputError("negative count", count=count)
    if count == 0:
        return -1
    d = 0
    c2 = count * count
    while c2 > q ** (2 * d + 1):
        d += 1
    return d


# -- vectorized F_q arithmetic on code arrays --------------------------------


def _vec_digits(fld: Field, a: np.ndarray) -> list[np.ndarray]:
    out = []
    v = a.astype(np.int64, copy=True)
    for _ in range(fld.k):
        out.append(v % fld.p)
        v //= fld.p
    return out


def _vec_encode(fld: Field, digits: list[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(digits[0])
    for d in reversed(digits):
        out = out * fld.p + d % fld.p
    return out


def _vec_add(fld: Field, a: np.ndarray, b) -> np.ndarray:
    if fld.k == 1:
        return (a + b) % fld.p
    da, db = _vec_digits(fld, a), _vec_digits(fld, np.asarray(b, dtype=np.int64))
    return _vec_encode(fld, [x + y for x, y in zip(da, db)])


def _vec_mul(fld: Field, a: np.ndarray, b) -> np.ndarray:
    if fld.k == 1:
        return a * b % fld.p
    p, k = fld.p, fld.k
    da, db = _vec_digits(fld, a), _vec_digits(fld, np.asarray(b, dtype=np.int64))
    conv = [np.zeros(np.broadcast(a, b).shape, dtype=np.int64) for _ in range(2 * k - 1)]
    for i in range(k):
        for j in range(k):
            conv[i + j] = conv[i + j] + da[i] * db[j]
    for deg in range(2 * k - 2, k - 1, -1):
        c = conv[deg] % p
        row = fld._red_rows[deg - k]
        for t in range(k):
            if row[t]:
                conv[t] = conv[t] + c * row[t]
    return _vec_encode(fld, [c % p for c in conv[:k]])


def values_on(F: FqPoly, pts: np.ndarray) -> np.ndarray:
    """Evaluate F at every row of an (N, n) array of element codes."""
    fld = F.field
    N = pts.shape[0]
    if fld.k == 1:
        p = fld.p
        out = np.zeros(N, dtype=np.int64)
        pow_cache: dict[tuple, np.ndarray] = {}

        def pw(i, e):
            key = (i, e)
            if key not in pow_cache:
                if e == 1:
                    pow_cache[key] = pts[:, i] % p
                else:
                    pow_cache[key] = pw(i, e - 1) * (pts[:, i] % p) % p
            return pow_cache[key]

        for exps, c in F.terms.items():
            v = np.full(N, c % p, dtype=np.int64)
            for i, e in enumerate(exps):
                if e:
                    v = v * pw(i, e) % p
            out = (out + v) % p
        return out
    out = np.zeros(N, dtype=np.int64)
    pow_cache = {}

    def pwx(i, e):
        key = (i, e)
        if key not in pow_cache:
            if e == 1:
                pow_cache[key] = pts[:, i].astype(np.int64)
            else:
                pow_cache[key] = _vec_mul(fld, pwx(i, e - 1), pts[:, i])
        return pow_cache[key]

    for exps, c in F.terms.items():
        v = np.full(N, c, dtype=np.int64)
        for i, e in enumerate(exps):
            if e:
                v = _vec_mul(fld, v, pwx(i, e))
        out = _vec_add(fld, out, v)
    return out


def affine_grid(fld: Field, n: int, budget: Budget | None = None) -> np.ndarray:
    """All of F_q^n as an (q^n, n) code array, last coordinate fastest."""
    budget = ensure_budget(budget)
    budget.charge(fld.q**n, "affine enumeration")
    return np.indices((fld.q,) * n, dtype=np.int64).reshape(n, -1).T


# -- variety specs and singular locus ----------------------------------------


@dataclass
class VarietySpec:
    """r forms cutting a closed subscheme of P^(n-1) (or A^n) over F_q."""

    field: Field
    n: int
    forms: tuple
    projective: bool = True

    def __post_init__(self):
        forms = []
        for f in self.forms:
            if isinstance(f, IntPoly):
                f = reduce_mod(f, self.field)
            if not isinstance(f, FqPoly):
                raise InputError("forms must be IntPoly or FqPoly")
            if f.n != self.n:
                raise InputError("form has wrong variable count", n=self.n)
            forms.append(f)
        if self.projective:
            for f in forms:
                if not f.is_homogeneous():
                    raise PreconditionError(
                        "projective variety needs homogeneous forms"
                    )
        self.forms = tuple(forms)


@dataclass
class SingReport:
    """Point counts and dimension estimates for a variety and its singular locus."""

    field: str
    n: int
    expected_codim: int
    total_points: int
    sing_points: int
    dim_est_variety: int
    dim_est_sing: int
    witnesses: list


def _rank_rows(fld: Field, rows: list[list[int]]) -> int:
    """Exact rank of a small matrix over F_q by Gaussian elimination."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    rank = 0
    col = 0
    while rank < len(rows) and col < ncols:
        piv = None
        for i in range(rank, len(rows)):
            if rows[i][col]:
                piv = i
                break
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = fld.inv(rows[rank][col])
        for i in range(rank + 1, len(rows)):
            if rows[i][col]:
                c = fld.mul(rows[i][col], inv)
                rows[i] = [
                    fld.sub(a, fld.mul(c, b)) for a, b in zip(rows[i], rows[rank])
                ]
        rank += 1
        col += 1
    return rank


def _minor_mask_lt_rank(p: int, jrows: list[np.ndarray], r: int) -> np.ndarray:
    """Vectorized `rank < r` over F_p for r <= 3.

    jrows is a list of r arrays of shape (M, n): the Jacobian rows at M
    points.  Returns a boolean mask of length M.
    """
    M, n = jrows[0].shape
    if r == 1:
        return ~np.any(jrows[0] % p, axis=1)
    if r == 2:
        a, b = jrows
        ok = np.ones(M, dtype=bool)
        for i in range(n):
            for j in range(i + 1, n):
                ok &= (a[:, i] * b[:, j] - a[:, j] * b[:, i]) % p == 0
        return ok
    if r == 3:
        a, b, c = jrows
        ok = np.ones(M, dtype=bool)
        for i in range(n):
            for j in range(i + 1, n):
                pij = a[:, i] * b[:, j] - a[:, j] * b[:, i]
                for k in range(j + 1, n):
                    pik = a[:, i] * b[:, k] - a[:, k] * b[:, i]
                    pjk = a[:, j] * b[:, k] - a[:, k] * b[:, j]
                    det = pij * c[:, k] - pik * c[:, j] + pjk * c[:, i]
                    ok &= det % p == 0
        return ok
    raise InputError("minor path only supports r <= 3", r=r)


def sing_points(
    spec: VarietySpec,
    expected_codim: int | None = None,
    budget: Budget | None = None,
) -> SingReport:
    """Enumerate the variety and its singular locus (Jacobian criterion).

    The Jacobian uses the first `expected_codim` forms (default: all of
    them); membership in the variety uses all forms.
    """
    if not spec.projective:
        raise PreconditionError("sing_points expects a projective spec")
    budget = ensure_budget(budget)
    fld, n = spec.field, spec.n
    r = expected_codim if expected_codim is not None else len(spec.forms)
    if not 1 <= r <= len(spec.forms):
        raise InputError("expected_codim out of range", r=r, forms=len(spec.forms))
    pts = enum_proj(fld, n, budget)
    on = np.ones(pts.shape[0], dtype=bool)
    for f in spec.forms:
        on &= values_on(f, pts) == 0
    total = int(np.count_nonzero(on))
    vpts = pts[on]
    grads = [[f.partial(i) for i in range(1, n + 1)] for f in spec.forms[:r]]
    if fld.k == 1 and r <= 3:
        jrows = [
            np.stack([values_on(g, vpts) for g in grow], axis=1) for grow in grads
        ]
        sing_mask = _minor_mask_lt_rank(fld.p, jrows, r)
    else:
        jvals = [
            np.stack([values_on(g, vpts) for g in grow], axis=1) for grow in grads
        ]
        sing_mask = np.zeros(vpts.shape[0], dtype=bool)
        for m in range(vpts.shape[0]):
            rows = [list(map(int, jv[m])) for jv in jvals]
            sing_mask[m] = _rank_rows(fld, rows) < r
    sing_count = int(np.count_nonzero(sing_mask))
    witnesses = [tuple(map(int, w)) for w in vpts[sing_mask][:MAX_WITNESSES]]
    return SingReport(
        field=fld.literal(),
        n=n,
        expected_codim=r,
        total_points=total,
        sing_points=sing_count,
        dim_est_variety=dim_est(total, fld.q),
        dim_est_sing=dim_est(sing_count, fld.q),
        witnesses=witnesses,
    )


def proj_points(spec: VarietySpec, budget: Budget | None = None) -> list[tuple]:
    """Rational points of the variety, in canonical enumeration order."""
    budget = ensure_budget(budget)
    pts = enum_proj(spec.field, spec.n, budget)
    on = np.ones(pts.shape[0], dtype=bool)
    for f in spec.forms:
        on &= values_on(f, pts) == 0
    return [tuple(map(int, row)) for row in pts[on]]


def affine_count(forms, fld: Field, n: int, budget: Budget | None = None) -> int:
    """Number of common zeros in F_q^n (zero forms impose nothing)."""
    budget = ensure_budget(budget)
    pts = affine_grid(fld, n, budget)
    on = np.ones(pts.shape[0], dtype=bool)
    for f in forms:
        if isinstance(f, IntPoly):
            f = reduce_mod(f, fld)
        if not f.is_zero():
            on &= values_on(f, pts) == 0
    return int(np.count_nonzero(on))


# -- first/second difference degeneracy sweeps (prime fields) ----------------


class _PrimeEngine:
    """Point grid plus derivative tensors of one form over F_p (k = 1).

    grad[m, i]      = dF/dx_i at point m
    hess[m, i, j]   = d2F/dx_i dx_j
    third[m, i, j, l] = d3F/dx_i dx_j dx_l   (built lazily)

    The directional slices used everywhere:
      first difference form of direction y:   F_y   = grad . y
      its gradient:                           (hess . y)
      second difference of directions (y,z):  z . hess . y
      gradient of that:                       (third . y) . z
    """

    def __init__(self, F: FqPoly, budget: Budget | None = None):
        if F.field.k != 1:
            raise PreconditionError("sweep engine needs a prime field")
        self.F = F
        self.p = F.field.p
        self.n = F.n
        self.pts = enum_proj(F.field, F.n, ensure_budget(budget))
        self.N = self.pts.shape[0]
        self.f = values_on(F, self.pts)
        n = self.n
        parts = [F.partial(i) for i in range(1, n + 1)]
        self.grad = np.stack([values_on(g, self.pts) for g in parts], axis=1)
        hess = np.zeros((self.N, n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i, n):
                v = values_on(parts[i].partial(j + 1), self.pts)
                hess[:, i, j] = v
                hess[:, j, i] = v
        self.hess = hess
        self._parts = parts
        self._third: np.ndarray | None = None
        # coefficient matrix of the first-difference form: row i holds the
        # monomial coefficients of dF/dx_i, used for exact degeneracy tests
        monos = sorted({e for g in parts for e in g.terms})
        self._mono_index = {e: t for t, e in enumerate(monos)}
        D = np.zeros((n, len(monos)), dtype=np.int64)
        for i, g in enumerate(parts):
            for e, c in g.terms.items():
                D[i, self._mono_index[e]] = c
        self._dirmat = D

    @property
    def third(self) -> np.ndarray:
        if self._third is None:
            n = self.n
            t = np.zeros((self.N, n, n, n), dtype=np.int64)
            for i in range(n):
                for j in range(i, n):
                    pij = self._parts[i].partial(j + 1)
                    for l in range(j, n):
                        v = values_on(pij.partial(l + 1), self.pts)
                        for perm in {(i, j, l), (i, l, j), (j, i, l),
                                     (j, l, i), (l, i, j), (l, j, i)}:
                            t[:, perm[0], perm[1], perm[2]] = v
            self._third = t
        return self._third

    def dir_degenerate(self, y: np.ndarray) -> bool:
        """True when the first-difference form of direction y is the zero
        polynomial (all monomial coefficients vanish mod p)."""
        return not np.any(y @ self._dirmat % self.p)


@dataclass
class SigmaReport:
    """Degeneracy data of one direction y.

    s        : dim estimate of Sing V(F, F_y)
    s_tilde  : dim estimate of Sing V(F_y)
    sigma    : max(s, s_tilde)
    degenerate marks F_y == 0 as a polynomial; counts are rational-point
    counts behind each estimate.
    """

    y: tuple
    degenerate: bool
    s: int
    s_tilde: int
    sigma: int
    pair_count: int
    pair_sing_count: int
    diff_count: int
    diff_sing_count: int


@dataclass
class SigmaSweep:
    """sigma_y data for every direction y in P^(n-1)(F_p)."""

    p: int
    n: int
    directions: np.ndarray  # (Ny, n)
    s: np.ndarray
    s_tilde: np.ndarray
    sigma: np.ndarray
    degenerate: np.ndarray
    pair_count: np.ndarray
    pair_dim: np.ndarray  # dim estimate of V(F, F_y) itself


def _sigma_single(eng: _PrimeEngine, y: np.ndarray) -> SigmaReport:
    p, q = eng.p, eng.p
    G = eng.grad @ y % p
    M = np.tensordot(eng.hess, y, axes=([1], [0])) % p  # (N, n): grad of F_y
    diff_on = G == 0
    diff_sing = diff_on & ~np.any(M, axis=1)
    pair_on = (eng.f == 0) & diff_on
    idx = np.nonzero(pair_on)[0]
    if idx.size:
        a = eng.grad[idx]
        b = M[idx]
        sing_mask = _minor_mask_lt_rank(p, [a, b], 2)
        pair_sing = int(np.count_nonzero(sing_mask))
    else:
        pair_sing = 0
    dc, dsc = int(np.count_nonzero(diff_on)), int(np.count_nonzero(diff_sing))
    pc = int(idx.size)
    s = dim_est(pair_sing, q)
    st = dim_est(dsc, q)
    return SigmaReport(
        y=tuple(map(int, y)),
        degenerate=eng.dir_degenerate(y),
        s=s,
        s_tilde=st,
        sigma=max(s, st),
        pair_count=pc,
        pair_sing_count=pair_sing,
        diff_count=dc,
        diff_sing_count=dsc,
    )


def sigma_y(F, y, p: int | None = None, budget: Budget | None = None) -> SigmaReport:
    """Degeneracy report for one direction (prime fields)."""
    if isinstance(F, IntPoly):
        if p is None:
            raise InputError("pass p when F is an integer polynomial")
        F = reduce_mod(F, field_make(p))
    eng = _PrimeEngine(F, budget)
    y = np.asarray(list(y), dtype=np.int64) % eng.p
    if not np.any(y):
        raise PreconditionError("direction y must be nonzero mod p")
    return _sigma_single(eng, y)


def sigma_sweep(F, p: int | None = None, budget: Budget | None = None) -> SigmaSweep:
    """sigma_y for all y in P^(n-1)(F_p), vectorized in chunks."""
    if isinstance(F, IntPoly):
        if p is None:
            raise InputError("pass p when F is an integer polynomial")
        F = reduce_mod(F, field_make(p))
    budget = ensure_budget(budget)
    eng = _PrimeEngine(F, budget)
    p, n, N = eng.p, eng.n, eng.N
    Y = enum_proj(F.field, n, budget)
    Ny = Y.shape[0]
    budget.charge(Ny * n * n, "direction sweep tensor cells")
    s_arr = np.empty(Ny, dtype=np.int64)
    st_arr = np.empty(Ny, dtype=np.int64)
    deg_arr = np.zeros(Ny, dtype=bool)
    pc_arr = np.empty(Ny, dtype=np.int64)
    pdim_arr = np.empty(Ny, dtype=np.int64)
    deg_arr[:] = ~np.any(Y @ eng._dirmat % p, axis=1)
    chunk = max(1, min(256, Ny))
    vmask = eng.f == 0
    for lo in range(0, Ny, chunk):
        Yc = Y[lo : lo + chunk]
        GY = eng.grad @ Yc.T % p  # (N, C)
        HY = np.tensordot(eng.hess, Yc, axes=([1], [1])) % p  # (N, n, C)
        for t in range(Yc.shape[0]):
            G = GY[:, t]
            M = HY[:, :, t]
            diff_on = G == 0
            diff_sing_count = int(np.count_nonzero(diff_on & ~np.any(M, axis=1)))
            pair_mask = vmask & diff_on
            idx = np.nonzero(pair_mask)[0]
            if idx.size:
                sing_mask = _minor_mask_lt_rank(p, [eng.grad[idx], M[idx]], 2)
                pair_sing = int(np.count_nonzero(sing_mask))
            else:
                pair_sing = 0
            yi = lo + t
            s_arr[yi] = dim_est(pair_sing, p)
            st_arr[yi] = dim_est(diff_sing_count, p)
            pc_arr[yi] = idx.size
            pdim_arr[yi] = dim_est(int(idx.size), p)
    return SigmaSweep(
        p=p,
        n=n,
        directions=Y,
        s=s_arr,
        s_tilde=st_arr,
        sigma=np.maximum(s_arr, st_arr),
        degenerate=deg_arr,
        pair_count=pc_arr,
        pair_dim=pdim_arr,
    )


@dataclass
class TSetReport:
    """The locus T_s of directions with sigma_y >= s."""

    s: int
    count: int
    dim_estimate: int
    members: list
    truncated: bool


def t_set(F, s: int, p: int | None = None, budget: Budget | None = None,
          sweep: SigmaSweep | None = None) -> TSetReport:
    if sweep is None:
        sweep = sigma_sweep(F, p, budget)
    mask = sweep.sigma >= s
    count = int(np.count_nonzero(mask))
    members = [tuple(map(int, row)) for row in sweep.directions[mask][:MAX_MEMBER_LIST]]
    return TSetReport(
        s=s,
        count=count,
        dim_estimate=dim_est(count, sweep.p),
        members=members,
        truncated=count > MAX_MEMBER_LIST,
    )


@dataclass
class SyzReport:
    """Second-difference degeneracy of one (y, z) pair."""

    y: tuple
    z: tuple
    s_yz: int
    triple_count: int
    triple_sing_count: int
    dim_triple: int
    dim_pair: int
    slice_degenerate: bool  # dim of V(F, F_y, F_{y,z}) equals dim of V(F, F_y)


def _syz_tables(eng: _PrimeEngine, y: np.ndarray, Z: np.ndarray):
    """For one y and a batch of z: sing counts of V(F, F_y, F_{y,z}).

    Returns (s_yz, triple_count, triple_sing, pair_count) with the first
    three indexed by rows of Z.
    """
    p, n = eng.p, eng.n
    G = eng.grad @ y % p
    My = np.tensordot(eng.hess, y, axes=([1], [0])) % p  # (N, n)
    Ay = np.tensordot(eng.third, y, axes=([1], [0])) % p  # (N, n, n): j, l
    pair_mask = (eng.f == 0) & (G == 0)
    idx = np.nonzero(pair_mask)[0]
    M2 = idx.size
    Nz = Z.shape[0]
    triple_count = np.zeros(Nz, dtype=np.int64)
    triple_sing = np.zeros(Nz, dtype=np.int64)
    if M2 == 0:
        return np.full(Nz, -1, dtype=np.int64), triple_count, triple_sing, 0
    Hv = My[idx] @ Z.T % p  # (M2, Nz): F_{y,z} values
    gradH = np.tensordot(Ay[idx], Z, axes=([1], [1])) % p  # (M2, n, Nz)
    a = eng.grad[idx]  # (M2, n)
    b = My[idx]  # (M2, n)
    # 2x2 minors of the two z-independent rows, per column pair
    pair_minor = {}
    for i in range(n):
        for j in range(i + 1, n):
            pair_minor[(i, j)] = a[:, i] * b[:, j] - a[:, j] * b[:, i]
    on3 = Hv % p == 0  # (M2, Nz)
    triple_count[:] = np.count_nonzero(on3, axis=0)
    sing3 = on3.copy()
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                det = (
                    pair_minor[(i, j)][:, None] * gradH[:, l, :]
                    - pair_minor[(i, l)][:, None] * gradH[:, j, :]
                    + pair_minor[(j, l)][:, None] * gradH[:, i, :]
                )
                sing3 &= det % p == 0
    triple_sing[:] = np.count_nonzero(sing3, axis=0)
    s_yz = np.array([dim_est(int(c), p) for c in triple_sing], dtype=np.int64)
    return s_yz, triple_count, triple_sing, M2


def s_yz(F, y, z, p: int | None = None, budget: Budget | None = None) -> SyzReport:
    """Degeneracy report for one (y, z) pair (prime fields)."""
    if isinstance(F, IntPoly):
        if p is None:
            raise InputError("pass p when F is an integer polynomial")
        F = reduce_mod(F, field_make(p))
    eng = _PrimeEngine(F, budget)
    y = np.asarray(list(y), dtype=np.int64) % eng.p
    z = np.asarray(list(z), dtype=np.int64) % eng.p
    if not np.any(y) or not np.any(z):
        raise PreconditionError("directions must be nonzero mod p")
    s_arr, t_count, t_sing, pair_count = _syz_tables(eng, y, z[None, :])
    dim_pair = dim_est(int(pair_count), eng.p)
    dim_triple = dim_est(int(t_count[0]), eng.p)
    return SyzReport(
        y=tuple(map(int, y)),
        z=tuple(map(int, z)),
        s_yz=int(s_arr[0]),
        triple_count=int(t_count[0]),
        triple_sing_count=int(t_sing[0]),
        dim_triple=dim_triple,
        dim_pair=dim_pair,
        slice_degenerate=dim_triple == dim_pair,
    )


# -- R-property checks --------------------------------------------------------


@dataclass
class RCheckPolicy:
    """Tunables for r_check; defaults favor exactness on small inputs."""

    extension_cap: int = 2  # scan F_{p^k} for k = 1..cap in the R0 search
    r2_samples: int = 64
    r2_exhaustive_limit: int = 130  # sweep all y when |P^(n-1)| is at most this
    seed: int = 0


@dataclass
class R0Result:
    verdict: str  # certified | holds_empirically | fails | skipped_budget
    scanned_extensions: list
    witness: tuple | None = None
    note: str = ""


@dataclass
class R1Result:
    verdict: str  # holds_empirically | fails | skipped_budget
    table: list = dc_field(default_factory=list)  # rows (s, count, dim, bound, ok)
    failures: list = dc_field(default_factory=list)
    note: str = ""


@dataclass
class R2Result:
    verdict: str  # holds_empirically | fails | skipped_budget
    sampled: bool = False
    y_tested: int = 0
    failures: list = dc_field(default_factory=list)
    note: str = ""


@dataclass
class RReport:
    p: int
    n: int
    r0: R0Result
    r1: R1Result
    r2: R2Result
    warnings: list = dc_field(default_factory=list)


def _is_unit_diagonal(F: FqPoly) -> bool:
    """True for c_1 x_1^d + ... + c_n x_n^d with all c_i nonzero, p not
    dividing d: the gradient then vanishes only at the origin, so the
    projective hypersurface is certifiably non-singular."""
    d = F.degree()
    if d < 1 or F.field.p == 0 or d % F.field.p == 0:
        return False
    seen = set()
    for e, c in F.terms.items():
        live = [i for i, ei in enumerate(e) if ei]
        if len(live) != 1 or e[live[0]] != d:
            return False
        seen.add(live[0])
    return len(seen) == F.n


def r_check(
    F: IntPoly | FqPoly,
    p: int,
    policy: RCheckPolicy | None = None,
    budget: Budget | None = None,
    which: tuple = ("r0", "r1", "r2"),
) -> RReport:
    """Empirical R0/R1/R2 classification of a form mod p.

    `which` restricts the work to the named checks; the others come back
    with verdict "not_requested".
    """
    policy = policy or RCheckPolicy()
    budget = ensure_budget(budget)
    fld = field_make(p)
    Fq = reduce_mod(F, fld) if isinstance(F, IntPoly) else F
    n = Fq.n
    warnings: list[str] = []
    if Fq.is_zero():
        zero = R0Result("fails", [], None, "form vanishes identically mod p")
        return RReport(p, n, zero, R1Result("fails", note="zero form"),
                       R2Result("fails", note="zero form"), ["form is zero mod p"])
    if not Fq.is_homogeneous():
        raise PreconditionError("r_check needs a homogeneous form")
    bad = set(which) - {"r0", "r1", "r2"}
    if bad:
        raise InputError("unknown checks requested", which=sorted(bad))

    # R0
    scanned = []
    r0 = None
    if "r0" not in which:
        r0 = R0Result("not_requested", [])
    elif _is_unit_diagonal(Fq):
        r0 = R0Result("certified", [], None,
                      "diagonal form with unit coefficients and exponent prime to p")
    else:
        witness = None
        for k in range(1, policy.extension_cap + 1):
            if budget.would_exceed(p ** (k * n)):
                break
            ext = field_make(p, k)
            rep = sing_points(
                VarietySpec(ext, n, (reduce_mod(F, ext) if isinstance(F, IntPoly)
                                     else FqPoly(ext, n, Fq.terms),)),
                budget=budget,
            )
            scanned.append(k)
            if rep.sing_points:
                witness = (rep.witnesses[0], k)
                break
        if witness is not None:
            r0 = R0Result("fails", scanned, witness)
        elif scanned:
            r0 = R0Result("holds_empirically", scanned)
        else:
            r0 = R0Result("skipped_budget", [])
            warnings.append("R0 scan skipped: budget")

    # R1 (the direction sweep also feeds R2, so it runs when either is wanted)
    Ny = proj_space_size(n - 1, p)
    N = Ny
    if "r1" not in which and "r2" not in which:
        return RReport(p, n, r0, R1Result("not_requested"),
                       R2Result("not_requested"), warnings)
    if budget.would_exceed(Ny * N + Ny * n * n + p**n):
        sweep = None
        if "r1" in which:
            r1 = R1Result("skipped_budget", note=f"sweep of {Ny} directions over budget")
            warnings.append("R1 sweep skipped: budget")
        else:
            r1 = R1Result("not_requested")
    else:
        sweep = sigma_sweep(Fq, budget=budget)
        if "r1" not in which:
            r1 = R1Result("not_requested")
        else:
            table = []
            failures = []
            for s in range(-1, n):
                count = int(np.count_nonzero(sweep.sigma >= s))
                dim = dim_est(count, p)
                bound = n - 2 - s
                ok = dim <= bound
                table.append((s, count, dim, bound, ok))
                if not ok:
                    bad = sweep.directions[np.asarray(sweep.sigma >= s)][:MAX_WITNESSES]
                    failures.append((s, [tuple(map(int, b)) for b in bad[:4]]))
            r1 = R1Result("fails" if failures else "holds_empirically", table, failures)

    # R2
    if "r2" not in which:
        r2 = R2Result("not_requested")
    elif sweep is None:
        r2 = R2Result("skipped_budget", note="no direction sweep available")
        warnings.append("R2 skipped: budget")
    else:
        Yall = sweep.directions
        if Yall.shape[0] <= policy.r2_exhaustive_limit:
            chosen = np.arange(Yall.shape[0])
            sampled = False
        else:
            rng = np.random.default_rng(policy.seed)
            chosen = np.sort(
                rng.choice(Yall.shape[0], size=min(policy.r2_samples, Yall.shape[0]),
                           replace=False)
            )
            sampled = True
        per_y_cost = Yall.shape[0] * max(1, N // max(1, p)) * n
        if budget.would_exceed(len(chosen) * per_y_cost // 4):
            r2 = R2Result("skipped_budget", sampled=sampled,
                          note="second-difference sweep over budget")
            warnings.append("R2 sweep skipped: budget")
        else:
            budget.charge(len(chosen) * per_y_cost // 4, "second-difference sweep")
            eng = _PrimeEngine(Fq)
            failures = []
            for yi in chosen:
                y = Yall[yi]
                syz_arr, _, _, _ = _syz_tables(eng, y, Yall)
                sig = int(sweep.sigma[yi])
                for s in range(-1, n):
                    thr = sig + s + 1
                    count = int(np.count_nonzero(syz_arr >= thr))
                    dim = dim_est(count, p)
                    if dim > n - 2 - s:
                        failures.append(
                            (tuple(map(int, y)), s, dim, n - 2 - s, count)
                        )
            r2 = R2Result(
                "fails" if failures else "holds_empirically",
                sampled=sampled,
                y_tested=len(chosen),
                failures=failures[:MAX_WITNESSES],
            )
    return RReport(p, n, r0, r1, r2, warnings)
