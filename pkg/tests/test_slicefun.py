import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slice_forge.algebra import (
    QI,
    QJ,
    QK,
    UNIT_I,
    UNIT_J,
    ComplexifiedQuaternion,
    CPoint,
    ImaginaryUnit,
    Quaternion,
    phi_extended,
    quat_mul,
)
from slice_forge.planar import Grid, HalfDisk, rasterize
from slice_forge.slicefun import (
    BallDomain,
    DiskDomain,
    GridStem,
    OnRealAxis,
    OutsideDomain,
    OutsideRadius,
    RealAxisMismatch,
    RegionDomain,
    StemFunction,
    estimate_radius,
    induce,
    induce_at,
    parse_function_spec,
    power_recurrence,
    schwarz_reflect,
    series_derivative_coeffs,
    series_eval,
    series_handle,
    series_sphere_coeffs,
    series_stem,
    spherical_data_raw,
    stem_symmetry_check,
)

small = st.floats(-1.5, 1.5, allow_nan=False)
coef = st.builds(Quaternion, small, small, small, small)


@st.composite
def units(draw):
    v = np.array([draw(small), draw(small), draw(small)])
    n = np.linalg.norm(v)
    if n < 1e-3:
        return ImaginaryUnit(0, 0, 0, 1)
    return ImaginaryUnit.from_imag(v / n)


def qclose(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


# -- series evaluation --------------------------------------------------------

def test_series_eval_examples():
    assert qclose(series_eval([0, 0, 1], Quaternion(1, 2, 0, 0)), Quaternion(-3, 4, 0, 0))
    q = Quaternion(1, 2, 3, 4)
    assert series_eval([q], Quaternion(5, 6, 7, 8)) == q
    assert series_eval([0, QI], QJ) == -QK


def test_series_eval_left_multiplication():
    # x a differs from a x when the coefficient does not commute with x
    assert series_eval([0, QI], QJ) == quat_mul(QJ, QI)
    assert series_eval([0, QI], QJ) != quat_mul(QI, QJ)


def test_series_radius_enforced():
    with pytest.raises(OutsideRadius):
        series_eval([1, 1, 1], Quaternion(2.0), radius=1.0)
    assert series_eval([1, 1, 1], Quaternion(0.5), radius=1.0) == Quaternion(1.75)


def test_estimate_radius():
    geometric = [Quaternion(2.0 ** n) for n in range(30)]
    assert math.isclose(estimate_radius(geometric), 0.5, rel_tol=1e-12)
    assert estimate_radius([Quaternion(3.0)]) == math.inf
    assert series_handle([0, 0, 1]).backend.radius == math.inf


def test_power_recurrence_matches_complex_powers():
    s, t = power_recurrence(0.3, 1.7, 12)
    for n in range(12):
        w = complex(0.3, 1.7) ** n
        assert math.isclose(s[n], w.real, abs_tol=1e-12) and math.isclose(t[n], w.imag, abs_tol=1e-12)


def test_sphere_coeff_examples():
    b, c = series_sphere_coeffs([0, 0, 1], 0.0, 1.0)
    assert qclose(b, Quaternion(-1.0)) and qclose(c, Quaternion())
    b, c = series_sphere_coeffs([0, QI], 0.0, 1.0)
    assert b == Quaternion() and c == QI
    a1 = Quaternion(1, -2, 0.5, 3)
    b, c = series_sphere_coeffs([0, a1], 0.7, 0.4)
    assert qclose(b, a1 * 0.7) and qclose(c, a1 * 0.4)


@given(st.lists(coef, min_size=1, max_size=9), small, st.floats(0, 1.5), units())
def test_sphere_coeffs_reproduce_series(coeffs, a, b, I):
    x = Quaternion(a) + I * b
    bb, cc = series_sphere_coeffs(coeffs, a, b)
    scale = sum(abs(q) * abs(x) ** n for n, q in enumerate(coeffs)) or 1.0
    assert abs(series_eval(coeffs, x) - (bb + quat_mul(I, cc))) <= 1e-10 * scale


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=8), small, st.floats(0.01, 1.5), units())
def test_real_coefficients_preserve_slices(coeffs, a, b, I):
    v = series_eval([Quaternion(c) for c in coeffs], Quaternion(a) + I * b)
    im = v.im()
    # imaginary part parallel to I
    assert abs(quat_mul(im, I) - quat_mul(I, im)) <= 1e-9 * max(1.0, abs(v))


def test_derivative_coefficients():
    d = series_derivative_coeffs([Quaternion(5), QI, Quaternion(0, 0, 3, 0)])
    assert d == [QI, Quaternion(0, 0, 6, 0)]


# -- stems --------------------------------------------------------------------

def identity_stem():
    return StemFunction(lambda z: ComplexifiedQuaternion.from_cpoint(z), DiskDomain(), True)


def test_induce_examples():
    assert induce(identity_stem(), Quaternion(1, 0, 2, 0)) == Quaternion(1, 0, 2, 0)
    assert qclose(induce(series_stem([0, 0, 1]), QK), Quaternion(-1.0))
    F = series_stem([Quaternion(1, 1, 0, 0), Quaternion(0, 0, 2, 0)])
    v = F(CPoint(0.4, 0.0))
    assert v.q == Quaternion() and qclose(induce(F, Quaternion(0.4)), v.p)


@given(st.lists(coef, min_size=1, max_size=6), small, st.floats(0.01, 1.5), units())
def test_induce_representative_independent(coeffs, a, b, I):
    F = series_stem(coeffs)
    up = induce_at(F, a, b, I)
    down = induce_at(F, a, -b, -I)
    assert qclose(up, down, 1e-12)


def test_outside_stem_domain():
    F = series_stem([1, 1], radius=1.0)
    with pytest.raises(OutsideDomain):
        F(CPoint(2.0, 0.0))


def test_stem_symmetry_check_cases():
    rep = stem_symmetry_check(series_stem([QI, QJ, Quaternion(1, 2, 3, 4)]), samples=100)
    assert rep.passed and rep.samples == 100 and rep.max_err <= 1e-10
    bad = StemFunction(lambda z: ComplexifiedQuaternion(Quaternion(), QJ), DiskDomain())
    assert not stem_symmetry_check(bad, samples=20).passed
    empty = stem_symmetry_check(series_stem([1]), samples=0)
    assert empty.passed and empty.samples == 0 and empty.warning


def test_symmetry_check_deterministic():
    F = series_stem([QI, QJ])
    assert stem_symmetry_check(F, 50, seed=3) == stem_symmetry_check(F, 50, seed=3)


def test_schwarz_reflect():
    upper = StemFunction(lambda z: ComplexifiedQuaternion.from_cpoint(z), DiskDomain(0.0, 2.0))
    F = schwarz_reflect(upper)
    z = CPoint(0.3, -0.8)
    assert F(z) == ComplexifiedQuaternion.from_cpoint(z)
    q1, q2 = Quaternion(1, 2, 3, 4), Quaternion(-1, 0, 5, 2)
    G = schwarz_reflect(StemFunction(lambda z: ComplexifiedQuaternion(q1, q2 * z.beta), DiskDomain(0.0, 3.0)))
    assert G(CPoint(1.0, -1.0)) == ComplexifiedQuaternion(q1, -q2)
    bad = StemFunction(lambda z: ComplexifiedQuaternion(Quaternion(z.alpha), QJ), DiskDomain(0.0, 1.0))
    with pytest.raises(RealAxisMismatch):
        schwarz_reflect(bad)


def test_region_stem_domain_is_symmetric():
    g = Grid(-1.0, 1.0, 1.0, 0.125)
    dom = RegionDomain(rasterize(HalfDisk(0.0, 1.0), g))
    assert dom.contains(CPoint(0.1, 0.3)) and dom.contains(CPoint(0.1, -0.3))
    assert not dom.contains(CPoint(0.9, 0.9))
    pts = dom.sample(20, np.random.default_rng(0))
    assert len(pts) == 20 and all(dom.contains(z) for z in pts)


def test_grid_stem_interpolates_linear_data():
    h = 0.25
    nx, ny = 9, 5
    vals = np.zeros((nx, ny, 8))
    for p in range(nx):
        for q in range(ny):
            a, b = -1 + p * h, q * h
            vals[p, q, 0], vals[p, q, 4] = a, b  # F(z) = z
    G = GridStem(-1.0, h, vals)
    v = G(CPoint(0.1, 0.3))
    assert math.isclose(v.p.w, 0.1) and math.isclose(v.q.w, 0.3)
    assert G(CPoint(0.1, -0.3)) == v.bar()
    handle = parse_function_spec({"stem_grid": {"alpha0": -1.0, "h": h, "values": vals.tolist()}})
    assert qclose(handle(Quaternion(0.1, 0, 0.3, 0)), Quaternion(0.1, 0, 0.3, 0))
    with pytest.raises(OutsideDomain):
        G(CPoint(5.0, 0.0))


# -- handles --------------------------------------------------------------------

def test_handle_domain_checks():
    f = series_handle([0, 0, 1], domain=BallDomain(0.0, 1.0))
    assert f.in_domain(Quaternion(0.5))
    with pytest.raises(OutsideDomain):
        f(Quaternion(2.0))
    assert f.raw(Quaternion(2.0)) == Quaternion(4.0)
    assert f.at(UNIT_J, CPoint(0.0, -0.5)) == Quaternion(-0.25)
    g = f.restrict(None, "free")
    assert g.in_domain(Quaternion(9.0)) and g.name == "free"
    assert f.coeffs == (Quaternion(), Quaternion(), Quaternion(1.0))


def test_spherical_data_raw_examples():
    sd = spherical_data_raw(series_handle([0, 0, 1]), Quaternion(1, 2, 0, 0))
    assert qclose(sd.value, Quaternion(-3.0)) and qclose(sd.derivative, Quaternion(2.0))
    q = Quaternion(1, 2, 3, 4)
    sd = spherical_data_raw(series_handle([q]), Quaternion(0.2, 0, 1, 0))
    assert sd.value == q and sd.derivative == Quaternion()
    sd = spherical_data_raw(series_handle([0, 1]), Quaternion(0.7, 0, 0, 2))
    assert qclose(sd.value, Quaternion(0.7)) and qclose(sd.derivative, Quaternion(1.0))
    sd = spherical_data_raw(series_handle([0, 1]), Quaternion(0.7))
    assert sd.derivative is None
    with pytest.raises(OnRealAxis):
        sd.require_derivative()


@given(st.lists(coef, min_size=1, max_size=9), small, st.floats(0.01, 1.5), units())
def test_decomposition_identity(coeffs, a, b, I):
    f = series_handle(coeffs)
    x = Quaternion(a) + I * b
    sd = spherical_data_raw(f, x)
    fx = f(x)
    scale = max(1.0, sum(abs(q) * abs(x) ** n for n, q in enumerate(coeffs)))
    assert abs(fx - (sd.value + quat_mul(x.im(), sd.derivative))) <= 1e-12 * scale


def test_parse_function_spec_forms():
    assert parse_function_spec("x²").name == "x^2"
    assert parse_function_spec("x**3").name == "x^3"
    f = parse_function_spec({"series": [[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]]})
    assert qclose(f(Quaternion(1, 2, 0, 0)), Quaternion(-3, 4, 0, 0))
    with pytest.raises(ValueError):
        parse_function_spec("sin")
    with pytest.raises(ValueError):
        parse_function_spec({"series": [[1, 2]]})
    with pytest.raises(ValueError):
        parse_function_spec({"bogus": 1})
    with pytest.raises(ValueError):
        parse_function_spec({"stem_grid": {"alpha0": 0, "h": 1, "values": [[[0] * 8]]}})


def test_named_non_slice_indicator():
    f = parse_function_spec("indicator_i")
    assert f(Quaternion(0.3, 2, 0, 0)) == Quaternion(1.0)
    assert f(Quaternion(0.3, 0, 2, 0)) == Quaternion()
    assert not f.in_domain(Quaternion(0.3))


def test_phi_extended_of_series_stem_matches_eval():
    coeffs = [QI, Quaternion(1, 0, 2, 0), QK]
    F = series_stem(coeffs)
    x = Quaternion(0.2, 0.3, -0.1, 0.5)
    from slice_forge.algebra import decompose

    a, b, I, _ = decompose(x)
    assert qclose(phi_extended(I, F(CPoint(a, b))), series_eval(coeffs, x))
    assert UNIT_I.latitude == 0.0
