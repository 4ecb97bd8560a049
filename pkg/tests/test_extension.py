import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slice_forge.algebra import (
    UNIT_I,
    UNIT_J,
    UNIT_K,
    ComplexifiedQuaternion,
    CPoint,
    ImaginaryUnit,
    Quaternion,
    phi,
    phi_extended,
    quat_mul,
)
from slice_forge.domains import builtin, table_domain
from slice_forge.extension import (
    CapDisagreement,
    CoincidentUnits,
    NotHinged,
    OutsideCompletion,
    OutsideDJK,
    StemSampleRequest,
    TooCloseToBoundary,
    cap_units,
    dbar_residual,
    differential_check,
    extend_global,
    rep_formula,
    slice_derivative,
    sphere_pair,
    spherical_data,
    spherical_data_formula,
    stem_double_index,
    stem_single_index,
)
from slice_forge.planar import Grid, Rect, rasterize
from slice_forge.slicefun import (
    BallDomain,
    parse_function_spec,
    series_handle,
    spherical_data_raw,
)

coord = st.floats(-1.0, 1.0, allow_nan=False)
unit_vec = st.tuples(coord, coord, coord).filter(lambda v: sum(t * t for t in v) > 0.05)


def unit(v):
    n = math.sqrt(sum(t * t for t in v))
    return ImaginaryUnit.from_imag([t / n for t in v])


def qmatch(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def test_rep_formula_example():
    f = parse_function_spec("x^2")
    z = CPoint(1.0, 2.0)
    got = rep_formula(f.at(UNIT_I, z), f.at(UNIT_J, z), UNIT_I, UNIT_J, UNIT_K)
    assert qmatch(got, Quaternion(-3, 0, 0, 4), 1e-12)


def test_rep_formula_returns_inputs_at_the_units():
    a, b = Quaternion(1, 2, 3, 4), Quaternion(-1, 0, 5, 2)
    assert rep_formula(a, b, UNIT_I, UNIT_J, UNIT_I) == a
    assert rep_formula(a, b, UNIT_I, UNIT_J, UNIT_J) == b


def test_coincident_units():
    with pytest.raises(CoincidentUnits):
        rep_formula(Quaternion(1), Quaternion(2), UNIT_I, UNIT_I, UNIT_J)
    with pytest.raises(CoincidentUnits):
        sphere_pair(Quaternion(1), Quaternion(2), UNIT_K, UNIT_K)


@given(unit_vec, unit_vec, unit_vec, st.floats(-2, 2), st.floats(0.1, 2))
def test_rep_formula_on_random_cubic(j, k, i, alpha, beta):
    J, K, I = unit(j), unit(k), unit(i)
    if abs(J - K) < 0.05:
        return
    coeffs = [Quaternion(1, 0.5, -1, 2), Quaternion(0, 1, 1, 0), Quaternion(-2, 0, 0.3, 1), Quaternion(0.5, 1, -1, 0)]
    f = series_handle(coeffs)
    z = CPoint(alpha, beta)
    got = rep_formula(f.at(J, z), f.at(K, z), J, K, I)
    # direct Horner with left-placed coefficients
    x = phi(I, z)
    want = Quaternion(0)
    for a in reversed(coeffs):
        want = quat_mul(x, want) + a
    assert abs(got - want) <= 1e-9 * max(1.0, abs(want)) / abs(J - K)


@given(unit_vec, unit_vec, st.floats(-2, 2), st.floats(0.1, 2))
def test_stem_double_index_is_a_stem(j, k, alpha, beta):
    J, K = unit(j), unit(k)
    if abs(J - K) < 0.05:
        return
    f = parse_function_spec("x^3")
    z = CPoint(alpha, beta)
    F = stem_double_index(StemSampleRequest(f, J, K, z))
    Fbar = stem_double_index(StemSampleRequest(f, J, K, CPoint(alpha, -beta)))
    assert (Fbar - F.bar()).magnitude() <= 1e-9
    # independent of the unit pair for a slice function
    F2 = stem_double_index(StemSampleRequest(f, UNIT_I, UNIT_J, z))
    assert (F - F2).magnitude() <= 1e-9 * max(1.0, F2.magnitude()) / abs(J - K)
    # and reproduces f on every slice
    I = unit([0.3, -0.4, 0.5])
    assert qmatch(phi_extended(I, F), f.at(I, z), 1e-8)


def test_stem_double_index_outside():
    f = series_handle([0, 0, 1], domain=BallDomain(0.0, 1.0))
    with pytest.raises(OutsideDJK):
        stem_double_index(StemSampleRequest(f, UNIT_I, UNIT_J, CPoint(0.0, 2.0)))


def test_cap_units_geometry():
    J = unit([1, 2, 2])
    for K in cap_units(J, 0.01, 8):
        assert abs(abs(K) - 1) < 1e-12
        assert math.acos(max(-1.0, min(1.0, K.dot(J)))) == pytest.approx(0.01, rel=1e-9)


def test_stem_single_index_slice_and_non_slice():
    f = parse_function_spec("x^2")
    res = stem_single_index(f, UNIT_I, CPoint(1, 2), 1e-3)
    assert res.cap_spread <= 1e-8
    assert qmatch(phi_extended(UNIT_J, res.value), f.at(UNIT_J, CPoint(1, 2)), 1e-9)
    with pytest.raises(CapDisagreement):
        stem_single_index(parse_function_spec("indicator_i"), UNIT_I, CPoint(1, 2), 1e-3)


def test_extend_example_on_omega0():
    dom = builtin("omega0")
    f = parse_function_spec("x^2").restrict(dom)
    x = Quaternion(1, 0, 0, 3.5)
    assert not dom.contains(x)
    res = extend_global(f, x)
    assert qmatch(res.value, Quaternion(-11.25, 0, 0, 7), 1e-9)
    assert res.consistency_spread <= 1e-9


@pytest.mark.parametrize("name", ["omega0", "omega2", "omega3p"])
def test_extension_agrees_with_entire_function(name, rng):
    dom = builtin(name)
    f = parse_function_spec("x^3").restrict(dom)
    g = dom.grid
    from slice_forge.domains import symmetric_completion_region

    cells = symmetric_completion_region(dom).cells()
    for k in rng.choice(len(cells), 20, replace=False):
        z = g.center(*cells[k])
        if z.beta == 0:
            continue
        I = unit(rng.normal(size=3).tolist())
        x = phi(I, z)
        res = extend_global(f, x)
        assert qmatch(res.value, quat_mul(x, quat_mul(x, x)), 1e-9)


def test_extend_errors():
    f = parse_function_spec("x^2").restrict(builtin("omega0"))
    with pytest.raises(OutsideCompletion):
        extend_global(f, Quaternion(4.5, 0, 0, 0.5))
    g = Grid(-1, 3, 3, 0.25)
    base = rasterize(Rect(-1, 0, -1, 3) | Rect(2, 3, -1, 3), g).mask
    bridge = base | rasterize(Rect(-1, 3, 2, 3), g).mask
    column = base | rasterize(Rect(1, 1.5, -1, 3), g).mask
    gap = table_domain("gap", g, [(-0.6, -0.4, bridge), (0.4, 0.6, column)], n_lat=9, default=base)
    with pytest.raises(NotHinged):
        extend_global(parse_function_spec("x^2").restrict(gap), Quaternion(1.1, 0, 0, 2.5))


@given(unit_vec, st.floats(-2, 2), st.floats(0.1, 2))
def test_spherical_data_formula_matches_raw(i, alpha, beta):
    f = series_handle([Quaternion(1, 2, 0, -1), 0, Quaternion(0, 1, 1, 1), 1])
    x = phi(unit(i), CPoint(alpha, beta))
    a, b = spherical_data_formula(f, x), spherical_data_raw(f, x)
    assert qmatch(a.value, b.value, 1e-10)
    assert qmatch(a.derivative, b.derivative, 1e-9)


def test_spherical_data_without_conjugate_point():
    dom = builtin("omega3")
    f = parse_function_spec("x^2").restrict(dom)
    x = phi(ImaginaryUnit.at_latitude(-0.6, 0.4), CPoint(0.2, 3.5))
    assert dom.contains(x) and not dom.contains(x.conj())
    sd = spherical_data(f, x)
    # x^2 = (a^2 - b^2) + 2ab I
    assert abs(sd.value - Quaternion(0.04 - 3.5 ** 2)) < 1e-9
    assert abs(sd.derivative - Quaternion(0.4)) < 1e-9


def test_slice_derivative_series_and_fd():
    f = parse_function_spec("x^3")
    x = Quaternion(0.3, 0.4, -0.2, 0.1)
    exact = quat_mul(x, x) * 3.0
    assert qmatch(slice_derivative(f, x), exact, 1e-12)
    stem_free = parse_function_spec("x^3").restrict(None)
    from slice_forge.slicefun import Pointwise, SliceFunctionHandle

    pw = SliceFunctionHandle(Pointwise(lambda q: quat_mul(q, quat_mul(q, q))), None, "cube")
    assert qmatch(slice_derivative(pw, x), exact, 1e-8)
    assert stem_free.coeffs is not None


def test_dbar_residual_orders():
    pw_conj = parse_function_spec("conj")
    z = CPoint(0.5, 1.0)
    assert dbar_residual(pw_conj, UNIT_I, z) == pytest.approx(1.0, abs=1e-6)
    f = parse_function_spec("x^3")
    assert dbar_residual(f, UNIT_J, z) < 1e-8


def test_differential_against_closed_form(rng):
    # d/dt (x + t v)^2 = x v + v x
    f = parse_function_spec("x^2")
    for _ in range(20):
        x = Quaternion(*rng.normal(size=4))
        v = Quaternion(*rng.normal(size=4))
        chk = differential_check(f, x, v)
        assert abs(chk.rhs - (quat_mul(x, v) + quat_mul(v, x))) < 1e-9
        assert chk.err < 1e-8


def test_differential_at_real_point():
    f = parse_function_spec("x^3")
    chk = differential_check(f, Quaternion(0.7), Quaternion(0.1, 1, 2, -1))
    assert chk.err < 1e-8


def test_too_close_to_boundary():
    f = series_handle([0, 0, 1], domain=BallDomain(0.0, 1.0))
    with pytest.raises(TooCloseToBoundary):
        differential_check(f, Quaternion(1 - 1e-6), Quaternion(1), h=1e-5)
    with pytest.raises(TooCloseToBoundary):
        dbar_residual(f, UNIT_I, CPoint(0.0, 1 - 1e-6))


def test_complexified_bar_helper():
    F = ComplexifiedQuaternion(Quaternion(1, 2, 3, 4), Quaternion(0, 1, 0, 0))
    assert F.bar().bar() == F
