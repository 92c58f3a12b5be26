import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import EXAMPLE1_FINAL, crandn
from lowrank_newton.mapping import PolySpace, fd_jacobian_check
from lowrank_newton.poly import (PolySyntaxError, SparsePoly, format_poly, multiplication_matrix,
                                 parse_poly, parse_support, parse_system, poly_arith, poly_eval,
                                 poly_system_jacobian, product_support, total_degree_support)

XYZ = ("x", "y", "z")


def random_poly(rng, variables=XYZ, terms=5, deg=4, complex_coeffs=True):
    t = {}
    for _ in range(terms):
        e = tuple(int(v) for v in rng.integers(0, deg + 1, size=len(variables)))
        c = rng.standard_normal()
        if complex_coeffs:
            c = c + 1j * rng.standard_normal()
        t[e] = c
    return SparsePoly(variables, t)


def to_sympy(p):
    syms = sympy.symbols(p.variables)
    return sum((complex(c).real + sympy.I * complex(c).imag) * sympy.Mul(*[s ** k for s, k in zip(syms, e)])
               for e, c in p.terms.items())


def test_parse_basic():
    p = parse_poly("x^2-1", ("x",))
    assert p.terms == {(2,): 1, (0,): -1}
    q = parse_poly("4.899*x^3*y", XYZ)
    assert q.terms == {(3, 1, 0): 4.899}
    assert parse_poly(".296296*y^9", XYZ).terms == {(0, 9, 0): 0.296296}


def test_parse_forms():
    a = parse_poly("2 x^2 y - 3 x (y + 1) + 2i*z^{3}", XYZ)
    b = SparsePoly(XYZ, {(2, 1, 0): 2, (1, 1, 0): -3, (1, 0, 0): -3, (0, 0, 3): 2j})
    assert a == b
    assert parse_poly("-(x+1)^2", ("x",)) == SparsePoly(("x",), {(2,): -1, (1,): -2, (0,): -1})
    assert parse_poly("x", ("x", "y")).variables == ("x", "y")
    assert parse_poly("y*x").variables == ("x", "y")


@pytest.mark.parametrize("text,pos", [("x^", 2), ("x + * y", 4), ("(x+1", 4), ("x^-1", 2)])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(PolySyntaxError) as err:
        parse_poly(text, ("x", "y"))
    assert err.value.pos == pos


def test_unknown_variable():
    with pytest.raises(PolySyntaxError) as err:
        parse_poly("x + w", ("x", "y"))
    assert err.value.pos == 4


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_format_parse_round_trip(seed, cplx):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, complex_coeffs=cplx)
    assert parse_poly(format_poly(p), XYZ) == p


def test_format_special_coefficients():
    for p in [SparsePoly(("x", "y"), {(1, 1): -2j}), SparsePoly(("x",), {(0,): 1e-20, (3,): 1 + 1j}),
              SparsePoly(("x",), {}), SparsePoly(("x",), {(1,): -1.0})]:
        assert parse_poly(format_poly(p), p.variables) == p


def test_arith_small():
    x = ("x",)
    assert poly_arith("mul", [parse_poly("x+1", x), parse_poly("x-1", x)]) == parse_poly("x^2-1", x)
    p = parse_poly("3x^2 + 2", x)
    assert poly_arith("add", [p, -p]).is_zero()
    assert poly_arith("sub", [p, p]).is_zero()
    with pytest.raises(ValueError):
        poly_arith("div", [p, p])


def test_variable_union():
    s = parse_poly("x + 1", ("x",)) * parse_poly("y", ("y",))
    assert s.variables == ("x", "y")
    assert s.terms == {(1, 1): 1, (0, 1): 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_arith_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, terms=4, deg=3), random_poly(rng, terms=4, deg=3)
    syms = sympy.symbols(XYZ)
    for ours, theirs in [(p * q, to_sympy(p) * to_sympy(q)), (p - q, to_sympy(p) - to_sympy(q)),
                         (p ** 3, to_sympy(p) ** 3)]:
        P = sympy.Poly(sympy.expand(theirs), *syms)
        ref = {tuple(m): complex(c) for m, c in zip(P.monoms(), P.coeffs())}
        scale = max(abs(c) for c in ref.values())
        assert set(ref) >= set(ours.terms)
        for e, c in ref.items():
            assert abs(ours.terms.get(e, 0) - c) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_poly(rng, terms=3, deg=2) for _ in range(3))

    def close(u, v):
        d = (u - v).norm()
        return d <= 1e-12 * max(u.norm(), v.norm(), 1.0)

    assert close((a * b) * c, a * (b * c))
    assert close(a * b, b * a)
    assert close(a * (b + c), a * b + a * c)
    assert close((a + b) + c, a + (b + c))
    assert (a * b).degree() == a.degree() + b.degree()


def test_add_preserves_bits():
    a = SparsePoly(("x",), {(1,): 0.1, (0,): 1 / 3})
    b = SparsePoly(("x",), {(2,): 0.7})
    s = a + b
    assert s.terms[(1,)] == 0.1 and s.terms[(0,)] == 1 / 3 and s.terms[(2,)] == 0.7


def test_degree_and_norm():
    p = parse_poly("3x^2 y + 4", ("x", "y"))
    assert p.degree() == 3
    assert p.norm() == 5.0
    assert SparsePoly(("x",), {}).degree() == -1
    assert SparsePoly(("x",), {(1,): 0.0}).is_zero()


def test_support_isometry(rng):
    p = random_poly(rng)
    sp = PolySpace(p.support(), XYZ)
    assert np.linalg.norm(sp.embed(p)) == pytest.approx(p.norm(), rel=1e-15)
    assert sp.extract(sp.embed(p)) == p


def test_grlex_order():
    p = parse_poly("1 + x + y + x^2 + x*y + y^2", ("x", "y"))
    assert p.support() == [(2, 0), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0)]


def test_eval():
    p = parse_poly("x^2-1", ("x",))
    assert poly_eval(p, [2]) == 3
    q = parse_poly("3 x y^2 - 7.5 + 2i z", XYZ)
    assert poly_eval(q, [0, 0, 0]) == -7.5
    assert q([1, 2, 1j]) == pytest.approx(12 - 7.5 - 2)
    with pytest.raises(ValueError):
        poly_eval(q, [1, 2])


def test_eval_example1_final_point(example1):
    r = np.array([poly_eval(p, EXAMPLE1_FINAL) for p in example1.system])
    assert np.linalg.norm(r) == pytest.approx(6.93e-8, rel=0.01)


def test_example2_factorization_oracle(example2):
    """The data polynomial is the exact product to six significant digits."""
    x, y, z = sympy.symbols("x y z")
    exact = sympy.Poly(sympy.expand((sympy.Rational(2, 3) * y ** 3 + sympy.Rational(6, 7) * x ** 2 * z ** 4) ** 3
                                    * (-1 + sympy.Rational(5, 11) * y * z + sympy.sqrt(3) * x ** 5) ** 2), x, y, z)
    ref = {tuple(m): complex(c) for m, c in zip(exact.monoms(), exact.coeffs())}
    assert set(ref) == set(example2.terms)
    for e, c in ref.items():
        assert abs(example2.terms[e] - c) <= 5e-6 * abs(c)
    u1 = SparsePoly(XYZ, {(0, 3, 0): 2 / 3, (2, 0, 4): 6 / 7})
    u2 = SparsePoly(XYZ, {(0, 0, 0): -1, (0, 1, 1): 5 / 11, (5, 0, 0): 3 ** 0.5})
    prod = poly_arith("mul", [u1, u1, u1, u2, u2])
    assert max(abs(prod.terms[e] - c) for e, c in ref.items()) <= 1e-12


def test_system_jacobian_rows():
    f = poly_system_jacobian([parse_poly("x^2+y^2-1", ("x", "y"))])
    assert_allclose(f.J(np.array([0.6, 0.8])), [[1.2, 1.6]])


def test_cyclic4_nullity(cyclic4):
    s = np.linalg.svd(cyclic4.J(np.array([1, -1, -1, 1], dtype=complex)), compute_uv=False)
    assert int(np.sum(s < 1e-10 * s[0])) == 2


def test_random_cubic_fd(rng):
    vs = ("a", "b", "c")
    system = [random_poly(rng, vs, terms=6, deg=3) for _ in range(3)]
    f = poly_system_jacobian(system)
    assert fd_jacobian_check(f, crandn(rng, 3) * 0.5).deviation <= 1e-7


def test_parse_system_file_format():
    f = parse_system("# header\nx y\n\nx^2 + \\\n  y^2 - 1   # circle\nx - y\n")
    assert f.variables == ("x", "y")
    assert len(f.system) == 2
    assert_allclose(f.F(np.array([1.0, 1.0])), [1.0, 0.0])
    with pytest.raises(ValueError):
        parse_system("x y\n")


def test_supports_and_multiplication_matrix():
    x = ("x",)
    assert total_degree_support(("x", "y"), 1) == [(1, 0), (0, 1), (0, 0)]
    assert parse_support("x^2, y, 1", ("x", "y")) == [(2, 0), (0, 1), (0, 0)]
    dom = PolySpace([(2,), (1,), (0,)], x)
    cod = PolySpace(sorted(product_support([(1,), (0,)], dom.support), reverse=True), x)
    M = multiplication_matrix(parse_poly("x-1", x), dom, cod)
    target = parse_poly("(x-1)*(x+2)", x)
    sol = np.linalg.lstsq(M, cod.embed(target), rcond=None)[0]
    assert dom.extract(sol) == parse_poly("x+2", x) or (dom.extract(sol) - parse_poly("x+2", x)).norm() < 1e-14
