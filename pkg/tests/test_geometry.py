"""Dimension heuristics, singular loci, direction sweeps, and the prime
admissibility checks."""

import random

import numpy as np
import pytest

from vdc.errors import Budget, BudgetExceeded, InputError, PreconditionError
from vdc.ffield import field_make
from vdc.geometry import (
    RCheckPolicy,
    VarietySpec,
    _minor_mask_lt_rank,
    _rank_rows,
    dim_est,
    dim_est_affine,
    proj_space_size,
    r_check,
    s_yz,
    sigma_y,
    sing_points,
    t_set,
)
from vdc.mpoly import parse_poly

FERMAT5 = parse_poly("x1^4+x2^4+x3^4+x4^4+x5^4", 5)


def test_proj_space_sizes():
    assert proj_space_size(-1, 7) == 0
    assert proj_space_size(0, 7) == 1
    assert proj_space_size(2, 7) == 57
    assert proj_space_size(4, 7) == 2801


def test_dim_est_hits_exact_space_sizes():
    for q in (3, 7, 101):
        for d in range(5):
            assert dim_est(proj_space_size(d, q), q) == d
    assert dim_est(0, 7) == -1
    assert dim_est(1, 7) == 0
    with pytest.raises(InputError):
        dim_est(-1, 7)


def test_dim_est_affine_thresholds():
    # q^(d-1/2) < c <= q^(d+1/2), exact integer comparisons
    q = 49
    assert dim_est_affine(1, q) == 0
    assert dim_est_affine(7, q) == 0  # boundary: c^2 == q^(2*0+1)
    assert dim_est_affine(8, q) == 1
    assert dim_est_affine(q * 7, q) == 1
    assert dim_est_affine(q * 7 + 1, q) == 2


def test_rank_paths_agree():
    """The r <= 3 minor shortcut and the generic Gaussian elimination must
    classify identical matrices identically."""
    fld = field_make(73)
    rng = random.Random(44)
    n = 4
    for r in (2, 3):
        rows_batch = []
        for _ in range(200):
            rows_batch.append(
                [[rng.randrange(73) for _ in range(n)] for _ in range(r)]
            )
        # make degenerate cases common: duplicate / scale / zero rows
        for _ in range(100):
            base = [rng.randrange(73) for _ in range(n)]
            lam = rng.randrange(73)
            extra = [
                base,
                [(lam * v) % 73 for v in base],
                [0, 0, 0, 0],
            ]
            rows_batch.append(extra[:r] if r <= 3 else extra)
        jrows = [
            np.array([rows[i] for rows in rows_batch], dtype=np.int64)
            for i in range(r)
        ]
        mask = _minor_mask_lt_rank(73, jrows, r)
        for idx, rows in enumerate(rows_batch):
            assert mask[idx] == (_rank_rows(fld, rows) < r), rows


def test_fermat_quintic_quartic_is_smooth_over_f7():
    rep = sing_points(VarietySpec(field_make(7), 5, (FERMAT5,)))
    assert rep.total_points == 400
    assert rep.sing_points == 0
    assert rep.dim_est_variety == 3
    assert rep.dim_est_sing == -1


def test_singular_quadric_found():
    # V(x1*x2) in P^2 is two planes meeting in the singular point (0:0:1)
    f = parse_poly("x1*x2", 3)
    rep = sing_points(VarietySpec(field_make(5), 3, (f,)))
    assert rep.sing_points == 1
    assert rep.witnesses == [(0, 0, 1)]


def test_identically_zero_form_marks_everything_singular():
    f = parse_poly("5*x1^2", 2)
    rep = sing_points(VarietySpec(field_make(5), 2, (f,)))
    assert rep.total_points == rep.sing_points == proj_space_size(1, 5)


def test_complete_intersection_codim2():
    fld = field_make(11)
    forms = (parse_poly("x1*x4-x2*x3", 4), parse_poly("x1^2+x2^2-x3^2-x4^2", 4))
    rep = sing_points(VarietySpec(fld, 4, forms), expected_codim=2)
    assert rep.total_points == 24
    assert rep.dim_est_variety == 1
    assert rep.sing_points == 0
    assert rep.expected_codim == 2


def test_sigma_y_fermat_axis_and_diagonal():
    """Pinned degeneracy data for the n=5 quartic over F_7: the axis
    direction is badly degenerate, the diagonal not at all."""
    axis = sigma_y(FERMAT5, [1, 0, 0, 0, 0], p=7)
    assert (axis.s_tilde, axis.s) == (3, 2)
    assert axis.sigma == 3
    diag = sigma_y(FERMAT5, [1, 1, 1, 1, 1], p=7)
    assert diag.sigma == -1
    with pytest.raises(PreconditionError):
        sigma_y(FERMAT5, [7, 0, 0, 0, 0], p=7)  # zero mod p


def test_t_set_monotone_in_s():
    f = parse_poly("x1^4+x2^4+x3^4", 3)
    counts = []
    for s in range(-1, 3):
        rep = t_set(f, s, p=5)
        counts.append(rep.count)
    assert counts[0] == proj_space_size(2, 5)  # sigma >= -1 is everything
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_s_yz_symmetric_cases():
    f = parse_poly("x1^4+x2^4+x3^4+x4^4", 4)
    rep = s_yz(f, [1, 0, 0, 0], [0, 1, 0, 0], p=5)
    assert rep.s_yz >= -1


def test_r_check_diagonal_certification_and_failure():
    rep = r_check(FERMAT5, 7)
    assert rep.r0.verdict == "certified"
    # diagonal quartics genuinely degenerate along coordinate directions
    # at small primes, so the direction sweep must fail honestly
    assert rep.r1.verdict == "fails"
    row = {s: (count, dim, bound) for s, count, dim, bound, _ in rep.r1.table}
    assert row[3][0] > 0  # T_3 is nonempty (the five axes)


def test_r_check_char_divides_exponent_fails_r0():
    f = parse_poly("x1^4+x2^4+x3^4", 3)
    rep = r_check(f, 2, which=("r0",))
    assert rep.r0.verdict in ("fails", "holds_empirically")
    # x^4 = x over F_2 turns the quartic into a hyperplane-like locus with
    # vanishing gradient; the scan must find singular points
    assert rep.r0.verdict == "fails"


def test_r_check_which_subsets():
    f = parse_poly("x1^4+x2^4+x3^4", 3)
    rep = r_check(f, 5, which=("r0",))
    assert rep.r0.verdict == "certified"
    assert rep.r1.verdict == "not_requested"
    assert rep.r2.verdict == "not_requested"
    rep = r_check(f, 5, which=("r2",))
    assert rep.r0.verdict == "not_requested"
    assert rep.r1.verdict == "not_requested"
    assert rep.r2.verdict in ("holds_empirically", "fails")
    with pytest.raises(InputError):
        r_check(f, 5, which=("r0", "r9"))


def test_r_check_zero_form():
    f = parse_poly("5*x1^4+5*x2^4", 2)
    rep = r_check(f, 5)
    assert rep.r0.verdict == rep.r1.verdict == rep.r2.verdict == "fails"


def test_r_check_budget_refusal_is_explicit():
    rep = r_check(FERMAT5, 7, budget=Budget(10))
    assert rep.r0.verdict == "certified"  # no enumeration needed
    assert rep.r1.verdict == "skipped_budget"
    assert rep.r2.verdict == "skipped_budget"
    assert rep.warnings


def test_budget_stops_enumeration_before_work():
    quartic4 = parse_poly("x1^4+x2^4+x3^4+x4^4", 4)
    with pytest.raises(BudgetExceeded):
        sing_points(VarietySpec(field_make(11), 4, (quartic4,)),
                    budget=Budget(5))


def test_r2_sampling_is_deterministic():
    f = parse_poly("x1^4+x2^4+x3^4+2*x1*x2*x3^2", 3)
    pol = RCheckPolicy(r2_samples=8, r2_exhaustive_limit=4, seed=9)
    a = r_check(f, 5, pol)
    b = r_check(f, 5, pol)
    assert a.r2.sampled and b.r2.sampled
    assert a.r2.y_tested == b.r2.y_tested == 8
    assert a.r2.failures == b.r2.failures
