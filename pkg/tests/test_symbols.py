import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semispec import (
    ConeSpec,
    ParseError,
    PolySymbol,
    eval_symbol,
    exterior_cone_check,
    find_real_critical_points,
    gradient,
    hessian_at,
    parse_symbol,
    sample_range,
)
from semispec.symbols import DegreeError, Inconclusive

from conftest import QUARTIC_DIRECTION, QUARTIC_TEXT, rotated_oscillator


# --- parsing ---------------------------------------------------------------


def test_parse_quartic():
    p = parse_symbol(QUARTIC_TEXT)
    assert p.coeffs == {(0, 2): 1, (2, 0): 1 + 3j, (4, 0): 1}


def test_commuting_product_cancels():
    assert parse_symbol("x*xi - xi*x").coeffs == {}


def test_factored_quadratic_expands():
    # (x - i xi)(x - 2i xi) = x^2 - 3i x xi + (i)(2i) xi^2
    p = parse_symbol("(x - 1i*xi)*(x - 2i*xi)")
    assert p.coeffs == {(2, 0): 1, (1, 1): -3j, (0, 2): -2}


@pytest.mark.parametrize(
    "text, value",
    [
        ("i", 1j),
        ("2.5i", 2.5j),
        ("-(1+2i)", -1 - 2j),
        ("1e-3", 1e-3),
        (".5", 0.5),
        ("(1-3i)*(1+3i)", 10),
        ("  3 * ( 2 - i ) ", 6 - 3j),
    ],
)
def test_complex_literals(text, value):
    p = parse_symbol(text)
    assert p.coeff(0, 0) == pytest.approx(value)
    assert set(p.coeffs) <= {(0, 0)}


def test_powers_and_signs():
    p = parse_symbol("-x^2 + (x+xi)^2 - xi^2")
    assert p.coeffs == {(1, 1): 2}


@pytest.mark.parametrize(
    "text, offset",
    [
        ("x +", 3),
        ("x ** 2", 3),
        ("(x + xi", 7),
        ("x + y", 4),
        ("2x", 1),
        ("x)", 1),
        ("", 0),
    ],
)
def test_syntax_errors_report_byte_offset(text, offset):
    with pytest.raises(ParseError) as err:
        parse_symbol(text)
    assert err.value.offset == offset


def test_offset_counts_bytes_not_characters():
    with pytest.raises(ParseError) as err:
        parse_symbol("x + é")
    assert err.value.offset == 4
    with pytest.raises(ParseError) as err:
        parse_symbol("é")
    assert err.value.offset == 0


@pytest.mark.parametrize("text", ["x^-1", "x^2.5", "x^i", "x^(2)", "x^xi"])
def test_bad_exponent(text):
    with pytest.raises(ParseError, match="nonnegative integer"):
        parse_symbol(text)


def test_degree_cap():
    assert parse_symbol("x^16").degree == 16
    with pytest.raises(DegreeError):
        parse_symbol("x^17")
    with pytest.raises(DegreeError):
        parse_symbol("(x+xi)^9*(x+1)^8")
    assert parse_symbol("x^3", max_degree=3).degree == 3


# random grammar-valid expressions for the round trip

_atoms = st.sampled_from(["x", "xi", "i", "2", "0.5", "3i", "1.25e-1", "7"])


def _expr(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
            lambda t: f"{t[0]} {t[1]} {t[2]}"
        ),
        children.map(lambda s: f"({s})"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda s: f"(-({s}))"),
    )


grammar_text = st.recursive(_atoms, _expr, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(grammar_text)
def test_print_parse_round_trip(text):
    try:
        p = parse_symbol(text)
    except DegreeError:
        return
    once = parse_symbol(p.to_text())
    assert once == p
    assert parse_symbol(once.to_text()) == once


@settings(max_examples=100, deadline=None)
@given(grammar_text, st.floats(-2, 2), st.floats(-2, 2))
def test_parser_agrees_with_python_evaluation(text, x, xi):
    try:
        p = parse_symbol(text)
    except DegreeError:
        return
    py = text.replace("^", "**").replace("xi", "XI")
    py = py.replace("3i", "3j").replace("i", "1j").replace("XI", "xi")
    expected = eval(py, {"x": x, "xi": xi})
    assert eval_symbol(p, x, xi) == pytest.approx(expected, rel=1e-9, abs=1e-9)


# --- evaluation and derivatives --------------------------------------------


def test_eval_examples(quartic):
    assert eval_symbol(quartic, 1, 1) == 3 + 3j
    assert eval_symbol(parse_symbol("5 - 2i + x"), 0, 0) == 5 - 2j
    assert eval_symbol(parse_symbol("x*xi"), 0, 0) == 0
    assert eval_symbol(rotated_oscillator(math.pi / 2), 1, 0) == pytest.approx(1j, abs=1e-15)


def test_eval_is_bitwise_deterministic(quartic):
    xs = np.linspace(-3, 3, 101)
    a = eval_symbol(quartic, xs[:, None], xs[None, :])
    b = eval_symbol(quartic, xs[:, None], xs[None, :])
    assert a.tobytes() == b.tobytes()


def test_gradient_examples(quartic):
    p = parse_symbol("xi^2 + i*xi + x^2")
    xs = np.linspace(-3, 3, 61)
    gx, gxi = gradient(p, xs, xs)
    assert np.allclose(gx, 2 * xs)
    assert np.allclose(gxi, 2 * xs + 1j)
    assert np.all(np.abs(gxi) >= 1)
    assert gradient(quartic, 0, 0) == (0, 0)
    assert gradient(parse_symbol("x^2*xi"), 1, 1) == (2, 1)


coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
poly = st.dictionaries(
    st.tuples(st.integers(0, 4), st.integers(0, 4)), coef, min_size=1, max_size=6
).map(PolySymbol)


@settings(max_examples=100, deadline=None)
@given(poly, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_gradient_matches_central_differences(p, x, xi):
    step = 1e-5
    gx, gxi = gradient(p, x, xi)
    fx = (eval_symbol(p, x + step, xi) - eval_symbol(p, x - step, xi)) / (2 * step)
    fxi = (eval_symbol(p, x, xi + step) - eval_symbol(p, x, xi - step)) / (2 * step)
    scale = 1 + p.scale * 2**4
    assert abs(gx - fx) <= 1e-6 * scale
    assert abs(gxi - fxi) <= 1e-6 * scale


@settings(max_examples=100, deadline=None)
@given(poly, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_hessian_matches_differences_of_gradient(p, x, xi):
    step = 1e-5
    H = hessian_at(p, x, xi).H
    gp = np.array(gradient(p, x + step, xi))
    gm = np.array(gradient(p, x - step, xi))
    hp = np.array(gradient(p, x, xi + step))
    hm = np.array(gradient(p, x, xi - step))
    fd = np.column_stack([(gp - gm) / (2 * step), (hp - hm) / (2 * step)])
    scale = 1 + p.scale * 4**4
    assert np.abs(H - fd).max() <= 1e-5 * scale


def test_hessian_examples(quartic):
    assert np.allclose(hessian_at(quartic, 0, 0).H, [[2 + 6j, 0], [0, 2]])
    a = 0.7
    assert np.allclose(hessian_at(rotated_oscillator(a), 0, 0).H, [[2 * cmath.exp(1j * a), 0], [0, 2]])
    assert np.allclose(hessian_at(parse_symbol("x^3"), 1, 0).H, [[6, 0], [0, 0]])


# --- critical points --------------------------------------------------------


def test_quartic_has_single_nondegenerate_critical_point(quartic):
    cps = find_real_critical_points(quartic, 2, 32)
    assert len(cps) == 1
    cp = cps[0]
    assert math.hypot(*cp.location) <= 1e-8
    assert cp.value == pytest.approx(0, abs=1e-14)
    assert cp.nondegenerate
    assert cp.residual <= 1e-10 * (1 + quartic.scale)


def test_convection_diffusion_is_principal_type():
    assert find_real_critical_points(parse_symbol("xi^2+i*xi+x^2"), 2, 32) == []


def test_degenerate_quartic_minimum_is_flagged():
    cps = find_real_critical_points(parse_symbol("(x^2+xi^2)^2"), 1, 32)
    assert len(cps) == 1
    assert not cps[0].nondegenerate
    assert math.hypot(*cps[0].location) < 1e-6


def test_several_critical_points():
    # double well: minima at x = 0, 1 and a saddle at x = 1/2
    cps = find_real_critical_points(parse_symbol("xi^2 + x^2*(x-1)^2"), 4, 32)
    locs = [c.location for c in cps]
    assert [round(x, 9) for x, _ in locs] == [0.0, 0.5, 1.0]
    assert all(abs(xi) < 1e-9 for _, xi in locs)
    assert cps[1].value == pytest.approx(1 / 16)


def test_critical_point_arguments_validated(quartic):
    with pytest.raises(ValueError):
        find_real_critical_points(quartic, 0, 32)
    with pytest.raises(ValueError):
        find_real_critical_points(quartic, 1, 4)


# --- range sampling ---------------------------------------------------------


def test_rotated_range_is_the_sector():
    a = math.pi / 4
    s = sample_range(rotated_oscillator(a), 2, 0.05)
    v = s.values[np.abs(s.values) > 1e-12]
    args = np.angle(v)
    assert args.min() >= -1e-12
    assert args.max() <= a + 1e-12


def test_harmonic_range_is_nonnegative_reals():
    s = sample_range(parse_symbol("x^2+xi^2"), 3, 0.1)
    assert np.all(s.values.imag == 0)
    assert s.values.real.min() >= 0
    assert s.values.real.max() <= 2 * 3**2 + 1e-12


def test_full_plane_quadratic_covers_every_argument():
    s = sample_range(parse_symbol("(x-i*xi)*(x-2i*xi)"), 1, 0.01)
    v = s.values[np.abs(s.values) > 0]
    bins = np.floor((np.angle(v) + math.pi) / 0.1).astype(int)
    assert set(bins) >= set(range(int(2 * math.pi / 0.1)))


def test_sample_values_sit_on_grid_nodes(quartic):
    s = sample_range(quartic, 1, 0.25)
    nodes = s.nodes()
    assert s.shape == (9, 9)
    assert np.allclose(nodes, np.arange(-1, 1.0001, 0.25))
    g = s.grid()
    assert g[2, 7] == eval_symbol(quartic, nodes[2], nodes[7])


def test_sample_range_invariant_under_rewriting():
    a = sample_range(parse_symbol("(x - i*xi)^2 + 2*x*xi"), 1, 0.05)
    b = sample_range(parse_symbol("x^2 - xi^2 + (2-2i)*x*xi"), 1, 0.05)
    assert np.abs(a.values - b.values).max() <= 1e-12


def test_sample_budget():
    with pytest.raises(Exception, match="budget"):
        sample_range(parse_symbol("x"), 100, 0.01)
    with pytest.raises(ValueError):
        sample_range(parse_symbol("x"), 1, 2)


# --- exterior cone ----------------------------------------------------------


def test_cone_spec_normalizes_angle():
    assert ConeSpec(3 * math.pi, 0.1).theta0 == pytest.approx(math.pi)
    assert ConeSpec(-math.pi, 0.1).theta0 == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        ConeSpec(0, 0)


def test_cone_outside_rotated_sector():
    s = sample_range(rotated_oscillator(math.pi / 4), 4, 0.02)
    assert exterior_cone_check(s, 0, ConeSpec(math.pi, 0.3), 0.05) is True


def test_cone_inside_rotated_sector_fails():
    s = sample_range(rotated_oscillator(math.pi / 4), 4, 0.02)
    assert exterior_cone_check(s, 0, ConeSpec(math.pi / 8, 0.1), 0.05) is False


def test_cone_quartic_opposite_direction(quartic):
    s = sample_range(quartic, 2, 0.005)
    assert exterior_cone_check(s, 0, ConeSpec(QUARTIC_DIRECTION + math.pi, 0.3), 0.05) is True


def test_cone_inconclusive_is_distinct():
    # range of p = x is the real segment, slope 1, so the band is (step, 2 step]
    s = sample_range(parse_symbol("x"), 1, 0.1)
    with pytest.raises(Inconclusive):
        exterior_cone_check(s, 0.15j, ConeSpec(math.pi / 2, 0.3), 0.05)
    assert exterior_cone_check(s, 0.25j, ConeSpec(math.pi / 2, 0.3), 0.05) is True
    assert exterior_cone_check(s, 0.05j, ConeSpec(math.pi / 2, 0.3), 0.05) is False
