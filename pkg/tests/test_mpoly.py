"""Polynomial arithmetic against a sympy oracle, plus the exact algebra of
the difference operators."""

import random
from fractions import Fraction

import pytest
import sympy

from vdc.errors import InputError
from vdc.mpoly import (
    IntPoly,
    diff_y,
    diff_yz,
    directional_form,
    format_poly,
    hessian_form,
    parse_poly,
    poly_from_coeff_list,
)


def rand_poly(rng, n, deg, coeff=9, terms=8):
    out = IntPoly.zero(n)
    for _ in range(rng.randint(1, terms)):
        exps = [0] * n
        for _ in range(rng.randint(0, deg)):
            exps[rng.randrange(n)] += 1
        c = rng.randint(-coeff, coeff)
        out = out + poly_from_coeff_list(n, [(exps, c)])
    return out


def to_sympy(f, xs):
    expr = sympy.Integer(0)
    for exps, c in f.terms.items():
        t = sympy.Integer(c)
        for x, e in zip(xs, exps):
            t *= x**e
        expr += t
    return sympy.expand(expr)


def test_ring_ops_against_sympy():
    rng = random.Random(901)
    xs = sympy.symbols("x1:5")
    for _ in range(120):
        n = rng.randint(1, 4)
        f = rand_poly(rng, n, 4)
        g = rand_poly(rng, n, 4)
        sf, sg = to_sympy(f, xs[:n]), to_sympy(g, xs[:n])
        assert to_sympy(f + g, xs[:n]) == sympy.expand(sf + sg)
        assert to_sympy(f - g, xs[:n]) == sympy.expand(sf - sg)
        assert to_sympy(f * g, xs[:n]) == sympy.expand(sf * sg)
        assert to_sympy(f**2, xs[:n]) == sympy.expand(sf**2)


def test_shift_against_sympy():
    rng = random.Random(902)
    xs = sympy.symbols("x1:4")
    for _ in range(60):
        n = rng.randint(1, 3)
        f = rand_poly(rng, n, 4)
        v = [rng.randint(-3, 3) for _ in range(n)]
        shifted = f.shift(v)
        expected = to_sympy(f, xs[:n]).subs(
            {x: x + c for x, c in zip(xs[:n], v)}, simultaneous=True
        )
        assert to_sympy(shifted, xs[:n]) == sympy.expand(expected)


def test_eval_matches_sympy_and_rationals():
    rng = random.Random(903)
    xs = sympy.symbols("x1:4")
    f = rand_poly(rng, 3, 5)
    for _ in range(30):
        pt = [rng.randint(-6, 6) for _ in range(3)]
        assert f.eval(pt) == to_sympy(f, xs).subs(dict(zip(xs, pt)))
    v = f.eval([Fraction(1, 2), Fraction(-2, 3), 1])
    w = to_sympy(f, xs).subs(dict(zip(xs, [sympy.Rational(1, 2),
                                           sympy.Rational(-2, 3), 1])))
    assert v == Fraction(int(w.p), int(w.q))


def test_parse_format_roundtrip():
    cases = [
        ("x1^4+x2^4-2*x3^4", 3),
        ("-x1*x2 + 7", 2),
        ("x1^3 - x1^2*x2 + 11*x2^3", 2),
        ("0", 1),
    ]
    for text, n in cases:
        f = parse_poly(text, n)
        assert parse_poly(format_poly(f), n) == f


def test_parse_rejects_garbage():
    for bad in ["x0^2", "x1^", "x1**2", "1 +", "y1+2", "x1^-2"]:
        with pytest.raises(InputError):
            parse_poly(bad, 2)
    with pytest.raises(InputError):
        parse_poly("x3", 2)  # variable index beyond n


# -- difference operators ------------------------------------------------------


def test_first_difference_definition():
    """diff_y(f, y) must equal f(x+y) - f(x), exactly."""
    rng = random.Random(904)
    for _ in range(200):
        n = rng.randint(1, 4)
        f = rand_poly(rng, n, 5)
        y = [rng.randint(-3, 3) for _ in range(n)]
        assert diff_y(f, y) == f.shift(y) - f


def test_second_difference_symmetry_and_compatibility():
    rng = random.Random(905)
    for _ in range(200):
        n = rng.randint(1, 4)
        f = rand_poly(rng, n, 5)
        y = [rng.randint(-3, 3) for _ in range(n)]
        z = [rng.randint(-3, 3) for _ in range(n)]
        fyz = diff_yz(f, y, z)
        assert fyz == diff_yz(f, z, y)
        assert fyz == diff_y(diff_y(f, y), z)


def test_difference_cocycle():
    """f(x + y + z) - f(x) telescopes: diff along y+z is the z-shift of the
    y-difference plus the z-difference."""
    rng = random.Random(906)
    for _ in range(150):
        n = rng.randint(1, 3)
        f = rand_poly(rng, n, 5)
        y = [rng.randint(-3, 3) for _ in range(n)]
        z = [rng.randint(-3, 3) for _ in range(n)]
        yz = [a + b for a, b in zip(y, z)]
        assert diff_y(f, yz) == diff_y(f, y).shift(z) + diff_y(f, z)


def test_leading_form_law():
    """The top-degree part of the y-difference of f is the directional form
    of f's leading part (possibly zero, in which case the degree drops
    further)."""
    rng = random.Random(907)
    for _ in range(200):
        n = rng.randint(1, 4)
        f = rand_poly(rng, n, 5)
        d = f.degree()
        if d < 1:
            continue
        y = [rng.randint(-3, 3) for _ in range(n)]
        fy = diff_y(f, y)
        lead = directional_form(f.leading_form(), y)
        assert fy.degree() <= d - 1
        if lead.is_zero():
            assert fy.degree() < d - 1 or fy.is_zero()
        else:
            assert fy.leading_form() == lead and fy.degree() == d - 1


def test_hessian_form_is_leading_part_of_second_difference():
    rng = random.Random(908)
    hits = 0
    for _ in range(300):
        n = rng.randint(2, 4)
        f = rand_poly(rng, n, 5)
        d = f.degree()
        if d < 2:
            continue
        F = f.leading_form()
        y = [rng.randint(-2, 2) for _ in range(n)]
        z = [rng.randint(-2, 2) for _ in range(n)]
        fyz = diff_yz(f, y, z)
        h = hessian_form(F, y, z)
        assert fyz.degree() <= d - 2
        if not h.is_zero():
            hits += 1
            assert fyz.degree() == d - 2 and fyz.leading_form() == h
    assert hits > 50  # the generic case must actually be exercised


def test_euler_identity():
    rng = random.Random(909)
    for _ in range(100):
        n = rng.randint(1, 4)
        f = rand_poly(rng, n, 4).leading_form()
        if f.is_zero():
            continue
        d = f.degree()
        euler = IntPoly.zero(n)
        for i in range(1, n + 1):
            euler = euler + IntPoly.variable(n, i) * f.partial(i)
        assert euler == IntPoly.const(n, d) * f


def test_directional_form_is_linear_in_y():
    F = parse_poly("x1^4+x2^4+x3^4", 3)
    a = directional_form(F, [1, 2, 0])
    b = directional_form(F, [0, 1, 3])
    c = directional_form(F, [1, 3, 3])
    assert a + b == c
