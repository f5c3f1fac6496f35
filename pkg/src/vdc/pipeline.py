"""Variance decomposition of weighted congruence counts, iterated twice.

Fix an integer polynomial f on a box |x_i| <= B and three distinct primes
pi, p, q.  Write N_W(f, B, m) for the weighted count sum of W(x/B) over box
points with m | f(x).  Splitting the solutions of pq | f(x) into residue
classes u mod pi gives per-class sums inner(u); comparing them with the
equidistributed expectation

    K = pi^(-n) (pq)^(-1) N_W(0, B, pi p q)

yields a first moment S (signed deviation over the zero classes of f mod
pi) and a second moment Sigma (sum of squared deviations over all classes).
Opening the square in Sigma produces pair correlations indexed by a shift
y with |y| <= floor(4B/pi):

    corr(y) = sum_{x: pq | f(x), pq | f(x+pi y)} W_piy(x/B)
              - (pq)^(-2) sum_x W_piy(x/B),

where W_piy(x/B) = W(x/B) W((x+pi y)/B).  Each shift is then split again
into classes v mod p with expectation K(y), first/second moments S(y),
Sigma(y), a refined moment Sigma'(y) that also separates the residue of
the difference f(x + pi y) - f(x) mod q, and a per-shift class defect
E2(y) = K(y) (#X_y(F_p) - p^(n-2)) where X_y counts v in F_p^n with
f(v) = f(v + pi y) = 0 mod p.  A second differencing in shifts z with
|z| <= floor(4B/p) gives the two-level correlation table

    corr2(y, z) = sum_{x: q | f, q | f(x+pz), q | d2f(x)} W4(x/B)
                  - q^(-3) sum_x W4(x/B),

with d2f the second difference along (pi y, pz) and W4 the product of the
four translated weights.  The ledger records every level with exact
arithmetic for the rational weight kinds (integer numerators over powers
of 2B) and float64 for the smooth kind, and verifies the algebraic
identities tying the levels together:

  partition            N_W(f,B,pi p q) = S + K * #{zero classes mod pi}
  square_expansion     sum_u inner(u)^2 = sum_y (congruence part of corr)
  variance_assembly    Sigma = sum_y corr(y) + (pq)^-2 sum_y FS(y)
                               - 2 K N_W(f,B,pq) + pi^n K^2
  cauchy_schwarz       S^2 <= #zero-classes * Sigma
  per_shift_defect     corr(y) - S(y) = E2(y)            (every y)
  per_shift_cauchy     S(y)^2 <= #X_y * Sigma(y)         (every y)
  refinement_monotone  Sigma(y) <= Sigma'(y)             (every y)
  support_vanishing    corr(y) = 0 once |pi y| >= 4B
  refined_square_expansion  sum_{v,a} inner_{v,a}(y)^2 = sum_z (congruence
                       part of corr2(y, z))              (when level 2 runs)

For exact weights the residuals must be exactly zero (asserted as integer
identities); for the smooth weight they are checked to relative 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .counting import Weight, eval_on_axes, weighted_count
from .errors import Budget, InputError, PreconditionError, ensure_budget
from .ffield import field_make, is_prime, reduce_mod
from .geometry import RCheckPolicy, VarietySpec, r_check, sing_points
from .mpoly import IntPoly
from .parallel import run_chunked

PAIR_TABLE_MAX_CELLS = 1 << 24
PAIR_BLOCK = 1 << 21  # max pair rows materialized at once
SMOOTH_RTOL = 1e-9


@dataclass
class PipelineParams:
    """Inputs of one ledger run.  Primes must be pairwise distinct; the
    regime the error analysis is designed for (pi, p <= B < q/4) is only
    warned about, not enforced."""

    f: IntPoly
    B: int
    pi: int
    p: int
    q: int
    weight: str = "hat"
    with_pair_table: bool = False
    workers: int = 1

    def validate(self) -> list[str]:
        if self.B < 1:
            raise InputError("B must be >= 1", B=self.B)
        for m in (self.pi, self.p, self.q):
            if not is_prime(m):
                raise InputError("pipeline moduli must be prime", value=m)
        if len({self.pi, self.p, self.q}) != 3:
            raise InputError(
                "primes must be pairwise distinct",
                primes=[self.pi, self.p, self.q],
            )
        if self.weight == "zero":
            raise InputError("zero weight is not meaningful here")
        warnings = []
        if not (self.pi <= self.B and self.p <= self.B and self.B < self.q / 4):
            warnings.append(
                f"outside design regime: want pi,p <= B < q/4, got "
                f"pi={self.pi} p={self.p} B={self.B} q={self.q}"
            )
        return warnings


@dataclass
class ResidualCheck:
    name: str
    ok: bool
    value: object  # max |residual| (exact 0 or float), or min margin
    tol: float
    kind: str  # "identity" or "inequality"


@dataclass
class ShiftRecord:
    """Exact per-shift quantities (Fractions for exact weights)."""

    y: tuple
    corr: object
    fs_sum: object
    expected: object
    pair_class_count: int
    first_moment: object
    second_moment: object
    refined_second_moment: object
    class_defect: object


@dataclass
class PipelineLedger:
    params: PipelineParams
    n: int
    exact: bool
    den1: int  # denominator of single weights: (2B)^n for hat, 1 otherwise
    box_weight_total: object  # N_W(0, B, *)
    count_full: object  # N_W(f, B, pi p q)
    count_pq: object  # N_W(f, B, pq)
    expected_per_class: object  # K
    zero_classes: int
    first_moment: object  # S
    second_moment: object  # Sigma
    coarse_deviation: object  # N_W(f,B,pq) - pi^n K
    shift_range: int  # Y: table covers |y_i| <= Y
    # flat tables over the shift grid (digit 0 <-> y_1 fastest):
    corr_num: np.ndarray  # congruence part numerators (den1^2 scale)
    fs_num: np.ndarray  # full-sum numerators (den1^2 scale)
    t0_num: np.ndarray
    t1_num: np.ndarray
    ss2: np.ndarray
    ss3: np.ndarray
    sxy_num: np.ndarray
    xcount: np.ndarray
    residuals: dict
    warnings: list
    pair_range: int | None = None  # Z
    pair_table: np.ndarray | None = None  # (Ycells, Zcells) congruence parts
    qsum: np.ndarray | None = None  # sum_z of pair congruence parts, per y
    abs2_num: np.ndarray | None = None  # sum_z |q^3 cong - FS2|, per y (objects)
    aggregate: float | None = None  # E4-style aggregate from level 2
    pair_exact: bool = True  # level 2 ran in exact integers (vs float64)

    # -- helpers ------------------------------------------------------------

    def _den2(self):
        return self.den1**2

    def _shift_digits(self, key: int) -> tuple:
        Y, n = self.shift_range, self.n
        side = 2 * Y + 1
        out = []
        for _ in range(n):
            out.append(key % side - Y)
            key //= side
        return tuple(out)

    def shift_key(self, y) -> int:
        Y, n = self.shift_range, self.n
        side = 2 * Y + 1
        key = 0
        for i in reversed(range(n)):
            c = int(y[i])
            if abs(c) > Y:
                raise InputError("shift outside table", y=list(y), Y=Y)
            key = key * side + (c + Y)
        return key

    def corr(self, y) -> object:
        """The pair correlation at shift y."""
        k = self.shift_key(y)
        if self.exact:
            p, q = self.params.p, self.params.q
            return Fraction(
                int(p * p * q * q * int(self.corr_num[k]) - int(self.fs_num[k])),
                p * p * q * q * self._den2(),
            )
        return float(self.corr_num[k]) - float(self.fs_num[k]) / (
            self.params.p**2 * self.params.q**2
        )

    def shift_record(self, y) -> ShiftRecord:
        k = self.shift_key(y)
        return self._record_at(k)

    def _record_at(self, k: int) -> ShiftRecord:
        pr = self.params
        n, p, q = self.n, pr.p, pr.q
        den2 = self._den2()
        xc = int(self.xcount[k])
        if self.exact:
            fs = Fraction(int(self.fs_num[k]), den2)
            expected = Fraction(int(self.fs_num[k]), p**n * q * q * den2)
            corr = self.corr(self._shift_digits(k))
            first = Fraction(int(self.sxy_num[k]), den2) - xc * expected
            second = (
                Fraction(int(self.ss2[k]), den2 * den2)
                - 2 * expected * Fraction(int(self.t1_num[k]), den2)
                + p**n * expected * expected
            )
            refined = (
                Fraction(int(self.ss3[k]), den2 * den2)
                - 2 * expected * Fraction(int(self.t0_num[k]), den2)
                + p**n * q * expected * expected
            )
            defect = expected * (xc - p ** (n - 2))
        else:
            fs = float(self.fs_num[k])
            expected = fs / (p**n * q * q)
            corr = self.corr(self._shift_digits(k))
            first = float(self.sxy_num[k]) - xc * expected
            second = (
                float(self.ss2[k])
                - 2 * expected * float(self.t1_num[k])
                + p**n * expected * expected
            )
            refined = (
                float(self.ss3[k])
                - 2 * expected * float(self.t0_num[k])
                + p**n * q * expected * expected
            )
            defect = expected * (xc - p ** (n - 2))
        return ShiftRecord(
            y=self._shift_digits(k),
            corr=corr,
            fs_sum=fs,
            expected=expected,
            pair_class_count=xc,
            first_moment=first,
            second_moment=second,
            refined_second_moment=refined,
            class_defect=defect,
        )

    def shift_records(self, limit: int | None = None):
        cells = len(self.corr_num)
        take = cells if limit is None else min(limit, cells)
        return [self._record_at(k) for k in range(take)]

    def corr2(self, y, z) -> object:
        """The two-level correlation at (y, z); needs the pair table."""
        if self.pair_table is None:
            raise PreconditionError("pair table was not built")
        ky = self.shift_key(y)
        Z, n = self.pair_range, self.n
        side = 2 * Z + 1
        kz = 0
        for i in reversed(range(n)):
            c = int(z[i])
            if abs(c) > Z:
                raise InputError("second shift outside table", z=list(z), Z=Z)
            kz = kz * side + (c + Z)
        q = self.params.q
        if self.pair_exact:
            cong = int(self.pair_table[ky, kz])
            fs2 = int(self._fs2_cell(ky, kz))
            return Fraction(q**3 * cong - fs2, q**3 * self.den1**4)
        cong = float(self.pair_table[ky, kz])
        fs2 = float(self._fs2_cell(ky, kz))
        return cong - fs2 / q**3

    def _fs2_cell(self, ky: int, kz: int):
        t2d = self._t2d_table
        Y, Z, n = self.shift_range, self.pair_range, self.n
        sideY, sideZ = 2 * Y + 1, 2 * Z + 1
        v = 1
        for _ in range(n):
            v = v * t2d[ky % sideY, kz % sideZ]
            ky //= sideY
            kz //= sideZ
        return v

    _t2d_table: np.ndarray | None = None


# -- small structural helpers -------------------------------------------------


def _sep_product(arrs: list[np.ndarray]) -> np.ndarray:
    """Flattened outer product with the first array's index fastest."""
    out = arrs[0]
    for a in arrs[1:]:
        out = (a[:, None] * out[None, :]).ravel()
    return out


def _coords_from_flat(idx: np.ndarray, L: int, n: int, H: int) -> np.ndarray:
    out = np.empty((idx.size, n), dtype=np.int64)
    t = idx.astype(np.int64, copy=True)
    for i in range(n):
        out[:, i] = t % L - H
        t //= L
    return out


def _class_ids(coords: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros(coords.shape[0], dtype=np.int64)
    scale = 1
    for i in range(coords.shape[1]):
        out += (coords[:, i] % m) * scale
        scale *= m
    return out


def _group_by_class(ids: np.ndarray, sel: np.ndarray, nclasses: int):
    """Indices of selected points, grouped by class id.

    Returns (order, starts): order lists the selected flat indices sorted
    by class; class c occupies order[starts[c]:starts[c+1]].
    """
    flat = np.flatnonzero(sel)
    cls = ids[flat]
    perm = np.argsort(cls, kind="stable")
    order = flat[perm]
    starts = np.searchsorted(cls[perm], np.arange(nclasses + 1))
    return order, starts


def _sq_bincount(keys: np.ndarray, vals: np.ndarray, size: int, exact: bool):
    """Per-bin sum of squared values; exact (int64 or object) or float."""
    if not exact:
        out = np.zeros(size, dtype=np.float64)
        np.add.at(out, keys, vals * vals)
        return out
    if vals.size == 0:
        return np.zeros(size, dtype=np.int64)
    if vals.dtype != object and int(vals.max()) < 2**31:
        prods = vals * vals
        if int(prods.sum(dtype=object)) < 2**62:
            out = np.zeros(size, dtype=np.int64)
            np.add.at(out, keys, prods)
            return out
    out = np.zeros(size, dtype=object)
    np.add.at(out, keys, vals.astype(object) ** 2)
    return out


def _merge_sparse(parts: list, dtype):
    """Merge (keys, sums) pairs, combining duplicate keys."""
    parts = [(k, v) for k, v in parts if k.size]
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=dtype)
    K = np.concatenate([k for k, _ in parts])
    V = np.concatenate([v for _, v in parts])
    uk, inv = np.unique(K, return_inverse=True)
    out = np.zeros(uk.size, dtype=dtype)
    np.add.at(out, inv, V)
    return uk, out


def _exact_sum(vals: np.ndarray):
    return int(np.sum(vals, dtype=object)) if vals.size else 0


# -- the main construction ----------------------------------------------------


def build_ledger(params: PipelineParams, budget: Budget | None = None) -> PipelineLedger:
    """Run both differencing levels and verify the ledger identities."""
    from .parallel import pairwise_sum

    warnings = params.validate()
    budget = ensure_budget(budget)
    f, B = params.f, params.B
    pi, p, q = params.pi, params.p, params.q
    n = f.n
    w = Weight(params.weight)
    exact = w.exact
    H = w.halfwidth(B)
    L = 2 * H + 1
    M = L**n
    budget.charge(4 * M, "box grids")

    w1, den = w.axis_values(B)
    den = den if den is not None else 1
    den1 = den**n
    axes = [np.arange(-H, H + 1, dtype=np.int64)] * n
    fpi_v = eval_on_axes(f, axes, pi)
    fp_v = eval_on_axes(f, axes, p)
    fq_v = eval_on_axes(f, axes, q)
    wnum = _sep_product([w1] * n)
    coords = _coords_from_flat(np.arange(M), L, n, H)
    cls_pi = _class_ids(coords, pi)
    cls_p = _class_ids(coords, p)
    solq = fq_v == 0
    solpq = solq & (fp_v == 0)
    solfull = solpq & (fpi_v == 0)

    def total_of(mask):
        if exact:
            return _exact_sum(wnum[mask])
        return pairwise_sum(np.where(mask, wnum, 0.0))

    if exact:
        w1sum = int(w1.sum(dtype=object))
        box_total_num = w1sum**n
        box_weight_total = Fraction(box_total_num, den1)
        count_full = Fraction(total_of(solfull), den1)
        count_pq = Fraction(total_of(solpq), den1)
        K = Fraction(box_total_num, pi**n * p * q * den1)
    else:
        w1sum = pairwise_sum(w1)
        box_weight_total = w1sum**n
        count_full = total_of(solfull)
        count_pq = total_of(solpq)
        K = box_weight_total / (pi**n * p * q)

    # Accumulator dtype: int64 in the exact case unless a conservative
    # per-bin bound (total box weight times one max weight factor) says the
    # pair sums could overflow, in which case lift to Python ints.
    if exact:
        w1max = int(w1.max())
        bin_bound = int(np.sum(w1, dtype=object)) ** n * w1max**n
        acc_dtype = np.int64 if bin_bound < 2**62 else object
    else:
        acc_dtype = np.float64

    def _acc(vals):
        return vals.astype(object) if acc_dtype is object else vals

    # level 0: classes mod pi
    pin = pi**n
    gpi = eval_on_axes(f, [np.arange(pi, dtype=np.int64)] * n, pi)
    zero_mask = gpi == 0
    zero_classes = int(np.count_nonzero(zero_mask))
    inner_num = np.zeros(pin, dtype=acc_dtype)
    np.add.at(inner_num, cls_pi[solpq], _acc(wnum[solpq]))
    if exact:
        S = Fraction(_exact_sum(inner_num[zero_mask]), den1) - K * zero_classes
        Sigma = sum(
            (Fraction(int(v), den1) - K) ** 2 for v in inner_num
        )
        E0 = count_pq - pin * K
    else:
        S = pairwise_sum(np.where(zero_mask, inner_num, 0.0)) - K * zero_classes
        Sigma = pairwise_sum((inner_num - K) ** 2)
        E0 = count_pq - pin * K

    # shift tables
    Y = (4 * B) // pi
    sideY = 2 * Y + 1
    Ycells = sideY**n
    budget.charge(Ycells, "shift table")
    S2 = np.correlate(w1, w1, "full")  # lag c at index c + (L-1)
    lags = pi * np.arange(-Y, Y + 1, dtype=np.int64)
    fs_axis = np.zeros(sideY, dtype=w1.dtype)
    inrange = np.abs(lags) <= L - 1
    fs_axis[inrange] = S2[lags[inrange] + (L - 1)]
    if acc_dtype is object:
        fs_axis = fs_axis.astype(object)
    fs_num = _sep_product([fs_axis] * n)

    # pair pass over pq-solutions: congruence part of corr(y)
    congnum = np.zeros(Ycells, dtype=acc_dtype)
    order_pq, starts_pq = _group_by_class(cls_pi, solpq, pin)
    order_box, starts_box = _group_by_class(cls_pi, np.ones(M, dtype=bool), pin)
    order_q, starts_q = _group_by_class(cls_pi, solq, pin)

    ystrides = sideY ** np.arange(n, dtype=np.int64)

    def ykeys_of(a_coords, c_coords):
        yd = (c_coords[None, :, :] - a_coords[:, None, :]) // pi + Y
        return yd @ ystrides

    npairs_corr = sum(
        int(starts_pq[r + 1] - starts_pq[r]) ** 2 for r in range(pin)
    )
    npairs_lvl1 = sum(
        int(starts_q[r + 1] - starts_q[r])
        * int(starts_box[r + 1] - starts_box[r])
        for r in range(pin)
    )
    budget.charge(npairs_corr + npairs_lvl1, "correlation pairs")

    def corr_chunk(lo, hi):
        part = np.zeros(Ycells, dtype=acc_dtype)
        for r in range(lo, hi):
            a = order_pq[starts_pq[r] : starts_pq[r + 1]]
            if a.size == 0:
                continue
            ca, wa = coords[a], wnum[a]
            blk = max(1, PAIR_BLOCK // max(1, a.size))
            for s in range(0, a.size, blk):
                keys = ykeys_of(ca[s : s + blk], ca).ravel()
                wts = (wa[s : s + blk, None] * wa[None, :]).ravel()
                np.add.at(part, keys, _acc(wts))
        return part

    # chunk size fixed so float merge order cannot depend on the worker count
    nclass_chunk = 32
    for part in run_chunked(corr_chunk, pin, params.workers, nclass_chunk):
        congnum += part

    # level 1: split each shift by classes v mod p and difference residue a mod q
    pn = p**n
    pnq = pn * q

    def lvl1_chunk(lo, hi):
        parts = []
        for r in range(lo, hi):
            a = order_q[starts_q[r] : starts_q[r + 1]]
            c = order_box[starts_box[r] : starts_box[r + 1]]
            if a.size == 0 or c.size == 0:
                continue
            ca, cc = coords[a], coords[c]
            wa, wc = wnum[a], wnum[c]
            va = cls_p[a]
            fc = fq_v[c]
            blk = max(1, PAIR_BLOCK // max(1, c.size))
            for s in range(0, a.size, blk):
                ab = slice(s, min(s + blk, a.size))
                keys = (
                    (ykeys_of(ca[ab], cc) * pn + va[ab, None]) * q + fc[None, :]
                ).ravel()
                wts = (wa[ab, None] * wc[None, :]).ravel()
                uk, inv = np.unique(keys, return_inverse=True)
                sums = np.zeros(uk.size, dtype=acc_dtype)
                np.add.at(sums, inv, _acc(wts))
                parts.append((uk, sums))
        return parts

    all_parts = []
    for plist in run_chunked(lvl1_chunk, pin, params.workers, nclass_chunk):
        all_parts.extend(plist)
    K3, V3 = _merge_sparse(all_parts, acc_dtype)
    del all_parts

    y3 = K3 // pnq
    t0_num = np.zeros(Ycells, dtype=acc_dtype)
    np.add.at(t0_num, y3, V3)
    amask = K3 % q == 0
    K2 = K3[amask] // q
    V2 = V3[amask]
    y2 = K2 // pn
    v2 = K2 % pn
    t1_num = np.zeros(Ycells, dtype=acc_dtype)
    np.add.at(t1_num, y2, V2)
    ss3 = _sq_bincount(y3, V3, Ycells, exact)
    ss2 = _sq_bincount(y2, V2, Ycells, exact)

    # X_y(F_p): pairs of zeros of f mod p at shift pi*y
    gp = eval_on_axes(f, [np.arange(p, dtype=np.int64)] * n, p)
    gz = gp == 0
    gz_nd = gz.reshape((p,) * n)  # axis n-1-i <-> coordinate i (0-based)
    ydigits = np.empty((Ycells, n), dtype=np.int64)
    t = np.arange(Ycells)
    for i in range(n):
        ydigits[:, i] = t % sideY - Y
        t = t // sideY
    wshift = (pi * ydigits) % p
    wid = np.zeros(Ycells, dtype=np.int64)
    scale = 1
    for i in range(n):
        wid += wshift[:, i] * scale
        scale *= p
    uniq_wid, wid_idx = np.unique(wid, return_inverse=True)
    rolled = np.empty((uniq_wid.size, pn), dtype=bool)
    for t_i, wv in enumerate(uniq_wid):
        digs = []
        vv = int(wv)
        for _ in range(n):
            digs.append(vv % p)
            vv //= p
        r = gz_nd
        for i, s in enumerate(digs):
            if s:
                r = np.roll(r, -s, axis=n - 1 - i)
        rolled[t_i] = r.ravel() & gz
    xcount_by_wid = rolled.sum(axis=1)
    xcount = xcount_by_wid[wid_idx].astype(np.int64)

    sxy_num = np.zeros(Ycells, dtype=acc_dtype)
    if K2.size:
        member = rolled[wid_idx[y2], v2]
        np.add.at(sxy_num, y2[member], V2[member])

    # residual checks
    residuals: dict[str, ResidualCheck] = {}

    def ident(name, value, scale=1.0):
        if exact:
            ok = value == 0
            residuals[name] = ResidualCheck(name, ok, value, 0.0, "identity")
        else:
            tol = SMOOTH_RTOL * max(1.0, abs(scale))
            ok = abs(value) <= tol
            residuals[name] = ResidualCheck(name, ok, value, tol, "identity")

    def ineq(name, margin, scale=1.0):
        if exact:
            ok = margin >= 0
            residuals[name] = ResidualCheck(name, ok, margin, 0.0, "inequality")
        else:
            tol = SMOOTH_RTOL * max(1.0, abs(scale))
            ok = margin >= -tol
            residuals[name] = ResidualCheck(name, ok, margin, tol, "inequality")

    # partition: N_W(f,B,pi p q) = S + K * zero_classes
    ident("partition", count_full - (S + K * zero_classes),
          scale=float(count_full) if not exact else 1.0)

    # square_expansion: sum_u inner^2 = sum_y congnum
    if exact:
        lhs = sum(int(v) ** 2 for v in inner_num)
        ident("square_expansion", lhs - _exact_sum(congnum))
    else:
        lhs = pairwise_sum(inner_num * inner_num)
        rhs = pairwise_sum(congnum)
        ident("square_expansion", lhs - rhs, scale=max(abs(lhs), abs(rhs)))

    # variance_assembly: the corr-sum and the (pq)^-2 FS-sum recombine into
    # the plain congruence sum, so the check reads
    #   Sigma = sum_y congnum(y) - 2 K N_W(f,B,pq) + pi^n K^2
    if exact:
        sum_cong = Fraction(_exact_sum(congnum), den1**2)
        assembled = sum_cong - 2 * K * count_pq + pin * K * K
        ident("variance_assembly", Sigma - assembled)
    else:
        sum_cong = pairwise_sum(congnum)
        assembled = sum_cong - 2 * K * count_pq + pin * K * K
        ident("variance_assembly", Sigma - assembled,
              scale=max(abs(Sigma), abs(assembled), 1.0))

    # cauchy_schwarz: S^2 <= zero_classes * Sigma
    ineq("cauchy_schwarz", zero_classes * Sigma - S * S,
         scale=float(zero_classes * Sigma) if not exact else 1.0)

    # support_vanishing: corr(y) = 0 outside the weight support
    dead = np.max(np.abs(pi * ydigits), axis=1) >= 4 * B
    if exact:
        bad = int(np.count_nonzero(congnum[dead])) + int(
            np.count_nonzero(fs_num[dead])
        )
        ident("support_vanishing", bad)
    else:
        worst = float(np.max(np.abs(congnum[dead]))) if dead.any() else 0.0
        worst = max(worst, float(np.max(np.abs(fs_num[dead]))) if dead.any() else 0.0)
        ident("support_vanishing", worst)

    # per_shift_defect: corr(y) - S(y) = E2(y) reduces to congnum == sxy_num
    if exact:
        ident("per_shift_defect",
              int(np.max(np.abs(congnum - sxy_num))) if Ycells else 0)
    else:
        diff = np.max(np.abs(congnum - sxy_num)) if Ycells else 0.0
        ident("per_shift_defect", float(diff),
              scale=float(np.max(np.abs(congnum))) if Ycells else 1.0)

    # per_shift_cauchy and refinement_monotone, as scaled integers
    if exact:
        fs_o = fs_num.astype(object)
        t0_o = t0_num.astype(object)
        t1_o = t1_num.astype(object)
        ss2_o = ss2.astype(object)
        ss3_o = ss3.astype(object)
        sxy_o = sxy_num.astype(object)
        xc_o = xcount.astype(object)
        c1 = pn * q * q
        snum = c1 * sxy_o - xc_o * fs_o
        sig_scaled = pn * pn * q**4 * ss2_o - 2 * c1 * fs_o * t1_o + pn * fs_o * fs_o
        sigp_scaled = (
            pn * pn * q**4 * ss3_o - 2 * c1 * fs_o * t0_o + pn * q * fs_o * fs_o
        )
        margin1 = xc_o * sig_scaled - snum * snum
        margin2 = sigp_scaled - sig_scaled
        ineq("per_shift_cauchy", int(np.min(margin1)) if Ycells else 0)
        ineq("refinement_monotone", int(np.min(margin2)) if Ycells else 0)
    else:
        fs_o, t0_o, t1_o = fs_num, t0_num, t1_num
        c1 = pn * q * q
        snum = c1 * sxy_num - xcount * fs_o
        sig_scaled = pn * pn * q**4.0 * ss2 - 2 * c1 * fs_o * t1_o + pn * fs_o**2
        sigp_scaled = (
            pn * pn * q**4.0 * ss3 - 2 * c1 * fs_o * t0_o + pn * q * fs_o**2
        )
        sc = float(np.max(np.abs(sig_scaled))) if Ycells else 1.0
        ineq("per_shift_cauchy",
             float(np.min(xcount * sig_scaled - snum * snum)),
             scale=sc * max(1.0, float(np.max(xcount, initial=1))))
        ineq("refinement_monotone", float(np.min(sigp_scaled - sig_scaled)),
             scale=sc)

    ledger = PipelineLedger(
        params=params,
        n=n,
        exact=exact,
        den1=den1,
        box_weight_total=box_weight_total,
        count_full=count_full,
        count_pq=count_pq,
        expected_per_class=K,
        zero_classes=zero_classes,
        first_moment=S,
        second_moment=Sigma,
        coarse_deviation=E0,
        shift_range=Y,
        corr_num=congnum,
        fs_num=fs_num,
        t0_num=t0_num,
        t1_num=t1_num,
        ss2=ss2,
        ss3=ss3,
        sxy_num=sxy_num,
        xcount=xcount,
        residuals=residuals,
        warnings=warnings,
    )

    if params.with_pair_table:
        _build_pair_table(ledger, coords, wnum, fq_v, cls_pi, cls_p, solq, budget)
    return ledger


def _t2d(w1: np.ndarray, pi: int, p: int, Y: int, Z: int, L: int) -> np.ndarray:
    """Per-coordinate quadruple weight sums T(pi*yc, p*zc)."""
    sideY, sideZ = 2 * Y + 1, 2 * Z + 1
    out = np.zeros((sideY, sideZ), dtype=w1.dtype)
    H = (L - 1) // 2
    for iy in range(sideY):
        a = pi * (iy - Y)
        for iz in range(sideZ):
            c = p * (iz - Z)
            lo = max(-H, -H - a, -H - c, -H - a - c)
            hi = min(H, H - a, H - c, H - a - c)
            if lo > hi:
                continue
            m = np.arange(lo, hi + 1)
            out[iy, iz] = np.sum(
                w1[m + H] * w1[m + a + H] * w1[m + c + H] * w1[m + a + c + H],
                dtype=object if w1.dtype != np.float64 else np.float64,
            )
    return out


def _build_pair_table(ledger, coords, wnum, fq_v, cls_pi, cls_p, solq, budget):
    """Second differencing: corr2(y, z) tables and their per-y aggregates."""
    pr = ledger.params
    B, pi, p, q, n = pr.B, pr.pi, pr.p, pr.q, ledger.n
    Y, sideY, Ycells = ledger.shift_range, 2 * ledger.shift_range + 1, len(ledger.corr_num)
    Z = (4 * B) // p
    sideZ = 2 * Z + 1
    Zcells = sideZ**n
    w = Weight(pr.weight)
    H = w.halfwidth(B)
    L = 2 * H + 1
    keep_table = Ycells * Zcells <= PAIR_TABLE_MAX_CELLS
    if not keep_table:
        ledger.warnings.append(
            f"pair table summarized: {Ycells}x{Zcells} cells exceed "
            f"{PAIR_TABLE_MAX_CELLS}"
        )
    budget.charge(Zcells * L**n, "pair-table windows")

    w1, den = w.axis_values(B)
    pn = p**n
    order_q, starts_q = _group_by_class(cls_p, solq, pn)

    # Decide whether level 2 fits in int64.  Every accumulated quantity is
    # bounded by q^3 * (sum over x-pairs of their weight product) * (max
    # single pair weight) + (per-axis quadruple bound)^n; if that is too
    # large, run this level in float64 and say so.
    lvl2_exact = ledger.exact
    if ledger.exact:
        w1max = int(w1.max())
        pairsum_x = 0
        for r in range(pn):
            a = order_q[starts_q[r] : starts_q[r + 1]]
            pairsum_x += int(np.sum(wnum[a], dtype=object)) ** 2
        axis4 = w1max**3 * int(np.sum(w1, dtype=object))
        cell_bound = q**3 * pairsum_x * w1max ** (2 * n) + axis4**n
        if cell_bound >= 2**62 or ledger.ss3.dtype == object:
            lvl2_exact = False
            ledger.warnings.append(
                "second-difference tables exceed exact integer range; "
                "level 2 ran in float64"
            )
    ledger.pair_exact = lvl2_exact
    if ledger.exact and not lvl2_exact:
        den = den if den is not None else 1
        w1 = w1.astype(np.float64) / den
        wnum = wnum.astype(np.float64) / den**n

    t2d = _t2d(w1, pi, p, Y, Z, L)
    ledger._t2d_table = t2d
    ledger.pair_range = Z

    acc_dtype = np.int64 if lvl2_exact else np.float64
    xi_list, zk_list, wx_list = [], [], []
    zstrides = sideZ ** np.arange(n, dtype=np.int64)
    total_pairs = sum(
        int(starts_q[r + 1] - starts_q[r]) ** 2 for r in range(pn)
    )
    budget.charge(total_pairs, "second-difference pairs")
    for r in range(pn):
        a = order_q[starts_q[r] : starts_q[r + 1]]
        if a.size == 0:
            continue
        ca, wa = coords[a], wnum[a]
        blk = max(1, PAIR_BLOCK // max(1, a.size))
        for s in range(0, a.size, blk):
            ab = slice(s, min(s + blk, a.size))
            zd = (ca[None, :, :] - ca[ab][:, None, :]) // p + Z
            zk = (zd @ zstrides).ravel()
            wx = (wa[ab][:, None] * wa[None, :]).ravel()
            xi = np.broadcast_to(a[ab][:, None], (ca[ab].shape[0], a.size)).ravel()
            xi_list.append(xi)
            zk_list.append(zk)
            wx_list.append(wx)
    if xi_list:
        xi_all = np.concatenate(xi_list)
        zk_all = np.concatenate(zk_list)
        wx_all = np.concatenate(wx_list)
        perm = np.argsort(zk_all, kind="stable")
        xi_all, zk_all, wx_all = xi_all[perm], zk_all[perm], wx_all[perm]
        zk_bounds = np.searchsorted(zk_all, np.arange(Zcells + 1))
    else:
        xi_all = np.zeros(0, dtype=np.int64)
        wx_all = np.zeros(0, dtype=acc_dtype)
        zk_bounds = np.zeros(Zcells + 1, dtype=np.int64)

    fq_nd = fq_v.reshape((L,) * n)  # axis n-1-i <-> coordinate i
    w_nd = wnum.reshape((L,) * n)
    idx_nd = np.arange(L**n).reshape((L,) * n)
    pin = pi**n
    ystrides = sideY ** np.arange(n, dtype=np.int64)

    qsum = np.zeros(Ycells, dtype=acc_dtype)
    if lvl2_exact:
        abs_total = np.zeros(Ycells, dtype=object)
        abs_acc = np.zeros(Ycells, dtype=np.int64)
        headroom = 2**62
    else:
        abs_total = np.zeros(Ycells, dtype=np.float64)
    table = np.zeros((Ycells, Zcells), dtype=acc_dtype) if keep_table else None
    q3 = q**3

    for kz in range(Zcells):
        zd = []
        t = kz
        for _ in range(n):
            zd.append(t % sideZ - Z)
            t //= sideZ
        shift = [p * c for c in zd]
        # window of u with u and u+shift both in the box
        src = []
        dst = []
        ok = True
        for i in range(n):
            s = shift[i]
            ax_lo, ax_hi = max(0, -s), L - max(0, s)
            if ax_lo >= ax_hi:
                ok = False
                break
            src.append(slice(ax_lo, ax_hi))
            dst.append(slice(ax_lo + s, ax_hi + s))
        slab = np.zeros(Ycells, dtype=acc_dtype)
        if ok:
            # axes are reversed relative to coordinates
            src_t = tuple(reversed(src))
            dst_t = tuple(reversed(dst))
            cond = fq_nd[src_t] == fq_nd[dst_t]
            u_flat = idx_nd[src_t][cond]
            wu = (w_nd[src_t] * w_nd[dst_t])[cond]
            live = wu > 0  # weights are nonnegative in every kind
            u_flat, wu = u_flat[live], wu[live]
            lo, hi = int(zk_bounds[kz]), int(zk_bounds[kz + 1])
            if hi > lo and u_flat.size:
                xs = xi_all[lo:hi]
                wxs = wx_all[lo:hi]
                ucls = cls_pi[u_flat]
                xcls = cls_pi[xs]
                u_ord = np.argsort(ucls, kind="stable")
                x_ord = np.argsort(xcls, kind="stable")
                u_srt, wu_srt = u_flat[u_ord], wu[u_ord]
                x_srt, wx_srt = xs[x_ord], wxs[x_ord]
                ub = np.searchsorted(ucls[u_ord], np.arange(pin + 1))
                xb = np.searchsorted(xcls[x_ord], np.arange(pin + 1))
                for r in range(pin):
                    us = slice(int(ub[r]), int(ub[r + 1]))
                    xsr = slice(int(xb[r]), int(xb[r + 1]))
                    if ub[r + 1] == ub[r] or xb[r + 1] == xb[r]:
                        continue
                    cx = coords[x_srt[xsr]]
                    cu = coords[u_srt[us]]
                    yd = (cu[None, :, :] - cx[:, None, :]) // pi + Y
                    keys = (yd @ ystrides).ravel()
                    wts = (wx_srt[xsr][:, None] * wu_srt[us][None, :]).ravel()
                    np.add.at(slab, keys, wts)
        # FS2 slab for this z
        cols = []
        t = kz
        for _ in range(n):
            cols.append(t2d[:, t % sideZ])
            t //= sideZ
        fs2 = _sep_product(cols)
        if table is not None:
            table[:, kz] = slab
        qsum += slab
        if lvl2_exact:
            fs2_max = int(fs2.max()) if fs2.size else 0
            step_bound = q3 * (int(slab.max()) if slab.size else 0) + fs2_max
            if step_bound >= headroom:
                abs_total += abs_acc.astype(object)
                abs_acc[:] = 0
                headroom = 2**62
            abs_acc += np.abs(q3 * slab - fs2)
            headroom -= step_bound
        else:
            abs_total += np.abs(q3 * slab - fs2) / q3
    if lvl2_exact:
        abs_total += abs_acc.astype(object)
    ledger.qsum = qsum
    ledger.abs2_num = abs_total
    ledger.pair_table = table

    # refined_square_expansion: sum over (v, a) of squared bin sums equals
    # the z-sum of pair congruence parts
    if lvl2_exact:
        diff = ledger.ss3.astype(object) - qsum.astype(object)
        val = int(np.max(np.abs(diff))) if Ycells else 0
        ledger.residuals["refined_square_expansion"] = ResidualCheck(
            "refined_square_expansion", val == 0, val, 0.0, "identity"
        )
    else:
        # ss3 still carries the exact-numerator scale when the rest of the
        # ledger is exact; bring it to the real-valued scale of qsum
        ss3_real = np.asarray(
            [float(v) for v in ledger.ss3], dtype=np.float64
        ) / float(ledger.den1) ** 4
        scale = float(np.max(np.abs(ss3_real))) if Ycells else 1.0
        val = float(np.max(np.abs(ss3_real - qsum))) if Ycells else 0.0
        tol = SMOOTH_RTOL * max(1.0, scale)
        ledger.residuals["refined_square_expansion"] = ResidualCheck(
            "refined_square_expansion", val <= tol, val, tol, "identity"
        )

    ledger.aggregate = _aggregate_from_abs(ledger)


def _aggregate_from_abs(ledger) -> float:
    """pi^((n-1)/2) p^((n-2)/4) (sum_{y != 0} sqrt(sum_z |corr2|))^(1/2)."""
    pr = ledger.params
    n = ledger.n
    Y, sideY = ledger.shift_range, 2 * ledger.shift_range + 1
    key0 = sum(Y * sideY**i for i in range(n))
    den = pr.q**3 * ledger.den1**4
    total = 0.0
    for k in range(len(ledger.abs2_num)):
        if k == key0:
            continue
        v = ledger.abs2_num[k]
        # exact level 2 stores integer numerators over q^3 den1^4; the
        # float path already stores real values
        sz = float(Fraction(int(v), den)) if ledger.pair_exact else float(v)
        total += math.sqrt(sz)
    return pr.pi ** ((n - 1) / 2) * pr.p ** ((n - 2) / 4) * math.sqrt(total)


def aggregate_bound(ledger: PipelineLedger, recompute: bool = False) -> dict:
    """The level-2 aggregate, optionally re-derived from the stored table
    with the opposite traversal order as an independent cross-check."""
    if ledger.abs2_num is None:
        raise PreconditionError("ledger was built without the pair table")
    out = {"aggregate": ledger.aggregate}
    if recompute:
        if ledger.pair_table is None:
            raise PreconditionError("pair table was summarized; cannot recompute")
        q3 = ledger.params.q**3
        Ycells, Zcells = ledger.pair_table.shape
        mism = 0
        for ky in range(Ycells):  # y-major, opposite of the build's z-major
            row = ledger.pair_table[ky]
            acc = 0 if ledger.pair_exact else 0.0
            for kz in range(Zcells):
                fs2 = ledger._fs2_cell(ky, kz)
                if ledger.pair_exact:
                    acc += abs(q3 * int(row[kz]) - int(fs2))
                else:
                    acc += abs(q3 * float(row[kz]) - float(fs2)) / q3
            ref = (
                int(ledger.abs2_num[ky])
                if ledger.pair_exact
                else float(ledger.abs2_num[ky])
            )
            if ledger.pair_exact:
                if acc != ref:
                    mism += 1
            else:
                if abs(acc - ref) > 1e-9 * max(1.0, abs(ref)):
                    mism += 1
        out["recomputed_matches"] = mism == 0
        out["mismatched_rows"] = mism
    return out



# -- deviation probe ------------------------------------------------------------


@dataclass
class DeviationReport:
    """Measured deviation of a weighted two-prime count from its density
    heuristic, next to the four-term bound it should sit under."""

    n: int
    r: int
    B: int
    p: int
    q: int
    weight: str
    count: object  # N_W(f, B, pq)
    box_total: object  # N_W(0, B, 1)
    expected: object  # (pq)^-r * box_total
    measured: float
    terms: dict  # name -> float
    c_scan: list  # (C, smooth-tail value)
    best_c: int
    bound: float
    within: bool
    geometry: dict  # per-prime non-singularity verdicts
    warnings: list


def deviation_probe(
    forms,
    B: int,
    p: int,
    q: int,
    weight: str = "hat",
    policy: RCheckPolicy | None = None,
    budget: Budget | None = None,
) -> DeviationReport:
    """Compare |N_W(f, B, pq) - (pq)^(-r) N_W(0, B, 1)| with the bound

        B^((n+1)/2) p^(-r/2) q^((n-r-1)/4)   (square-root route in p)
      + B^((n+1)/2) p^((n-2r)/2) q^(-1/4)    (square-root route in q)
      + B^n p^(-(n+r-1)/2) q^(-r)            (density floor)
      + min_C B^(n-C/2) p^((C-r)/2) q^(-r/2) (weight-smoothness tail)

    taken with implied constant 1.  The bound only makes sense when both
    reductions cut out non-singular codimension-r sets, so that is checked
    first and failure refuses the run.
    """
    if isinstance(forms, IntPoly):
        forms = [forms]
    forms = list(forms)
    if not forms:
        raise InputError("need at least one form")
    n = forms[0].n
    r = len(forms)
    for f in forms:
        if f.n != n:
            raise InputError("mixed variable counts")
        if f.degree() < 1 or not f.is_homogeneous():
            raise InputError("deviation probe needs homogeneous forms of "
                             "positive degree")
    if not 1 <= r < n:
        raise InputError("need 1 <= #forms < #variables", r=r, n=n)
    for m in (p, q):
        if not is_prime(m):
            raise InputError("moduli must be prime", value=m)
    if p == q:
        raise InputError("the two primes must differ")
    if B < 1:
        raise InputError("B must be >= 1", B=B)
    budget = ensure_budget(budget)
    warnings: list[str] = []
    if not (p <= B <= q):
        warnings.append(
            f"outside design regime: want p <= B <= q, got p={p} B={B} q={q}"
        )

    geometry: dict[str, str] = {}
    for m in (p, q):
        fld = field_make(m)
        reduced = [reduce_mod(f, fld) for f in forms]
        if any(g.is_zero() for g in reduced):
            raise PreconditionError(
                "a form vanishes identically mod a probe prime", prime=m
            )
        if r == 1:
            rep = r_check(forms[0], m, policy, budget)
            verdict = rep.r0.verdict
            if verdict == "fails":
                raise PreconditionError(
                    "reduction is singular", prime=m, witness=rep.r0.witness
                )
            if verdict == "skipped_budget":
                warnings.append(f"non-singularity unverified mod {m}: budget")
            geometry[str(m)] = verdict
        else:
            srep = sing_points(
                VarietySpec(fld, n, tuple(reduced)), expected_codim=r,
                budget=budget,
            )
            if srep.sing_points:
                raise PreconditionError(
                    "reduction is singular", prime=m,
                    witnesses=srep.witnesses[:4],
                )
            if srep.dim_est_variety != n - 1 - r:
                raise PreconditionError(
                    "reduction does not look like codimension r",
                    prime=m, dim=srep.dim_est_variety, expected=n - 1 - r,
                )
            geometry[str(m)] = "holds_empirically"

    cnt = weighted_count(forms, B, p * q, weight, budget)
    box = weighted_count([IntPoly.zero(n)], B, 1, weight, budget)
    if cnt.exact:
        expected = box.value / Fraction((p * q) ** r)
        measured = float(abs(cnt.value - expected))
    else:
        expected = box.value / (p * q) ** r
        measured = abs(cnt.value - expected)

    t1 = B ** ((n + 1) / 2) * p ** (-r / 2) * q ** ((n - r - 1) / 4)
    t2 = B ** ((n + 1) / 2) * p ** ((n - 2 * r) / 2) * q ** (-1 / 4)
    t3 = float(B) ** n * p ** (-(n + r - 1) / 2) * float(q) ** (-r)
    c_scan = []
    for C in range(1, n):
        c_scan.append(
            (C, B ** (n - C / 2) * p ** ((C - r) / 2) * q ** (-r / 2))
        )
    best_c, t4 = min(c_scan, key=lambda t: t[1])
    bound = t1 + t2 + t3 + t4
    return DeviationReport(
        n=n, r=r, B=B, p=p, q=q, weight=weight,
        count=cnt.value,
        box_total=box.value,
        expected=expected,
        measured=measured,
        terms={
            "sqrt_p_route": t1,
            "sqrt_q_route": t2,
            "density_floor": t3,
            "smooth_tail": t4,
        },
        c_scan=c_scan,
        best_c=best_c,
        bound=bound,
        within=measured <= bound,
        geometry=geometry,
        warnings=warnings,
    )
