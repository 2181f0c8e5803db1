import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import FREQ, make_setup
from mmwcal.geometry import (
    SPEED_OF_LIGHT,
    Antenna,
    MaterialSpec,
    RuleId,
    SetupGeometry,
    fraunhofer_distance,
    fresnel_zone_radius,
    min_clearance_height,
    min_mut_extent,
    min_tr_separation_penetration,
    min_tr_separation_xpd,
    mut_extent_at,
    suggest_verification_distances,
    validate_penetration_setup,
    validate_xpd_setup,
)


# -- independent oracles ---------------------------------------------------


def clearance_by_line_intersection(d, theta1_deg, theta2_deg):
    """Depth at which the lower beam edges of TX (x=0) and RX (x=d) cross, doubled."""
    t1, t2 = math.radians(theta1_deg), math.radians(theta2_deg)
    # TX edge: y = -tan(t1) x ; RX edge: y = -tan(t2) (d - x)
    a = np.array([[math.tan(t1), 1.0], [-math.tan(t2), 1.0]])
    b = np.array([0.0, -math.tan(t2) * d])
    _, y = np.linalg.solve(a, b)
    return 2.0 * -y


def footprint_by_rotation(distance, hpbw_deg):
    """Chord cut by the two beam-edge unit vectors on a plane ``distance`` ahead."""
    half = math.radians(hpbw_deg) / 2.0
    edges = []
    for sign in (+1, -1):
        v = np.array([math.cos(sign * half), math.sin(sign * half)])
        edges.append(v * distance / v[0])
    return float(np.linalg.norm(edges[0] - edges[1]))


def fresnel_by_bisection(d1, d2, lam, n):
    """Offset at which the detour exceeds the direct path by n half-wavelengths."""
    target = n * lam / 2.0
    lo, hi = 0.0, min(d1, d2)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        excess = math.hypot(d1, mid) + math.hypot(d2, mid) - d1 - d2
        lo, hi = (mid, hi) if excess < target else (lo, mid)
    return lo


# -- point values ----------------------------------------------------------


@pytest.mark.parametrize(
    "aperture, expected", [(0.02, 0.196), (0.041, 0.824)]
)
def test_fraunhofer_reference_apertures(aperture, expected):
    assert fraunhofer_distance(aperture, FREQ) == pytest.approx(expected, abs=0.001)


def test_fraunhofer_zero_aperture_and_bad_frequency():
    assert fraunhofer_distance(0.0, FREQ) == 0.0
    with pytest.raises(ValueError):
        fraunhofer_distance(0.02, 0.0)
    with pytest.raises(ValueError):
        fraunhofer_distance(0.02, -1.0)


@pytest.mark.parametrize(
    "df, xpd_min, pen_min",
    [(0.196, 0.98, 1.96), (0.824, 4.12, 8.24), (0.0, 0.0, 0.0)],
)
def test_min_separations(df, xpd_min, pen_min):
    assert min_tr_separation_xpd(df) == pytest.approx(xpd_min, abs=1e-9)
    assert min_tr_separation_penetration(df) == pytest.approx(pen_min, abs=1e-9)


@pytest.mark.parametrize(
    "d, t1, t2, expected, tol",
    [(5.0, 15.0, 15.0, 1.34, 0.01), (5.0, 7.0, 7.0, 0.61, 0.01), (5.0, 15.0, 7.0, 0.842, 0.005)],
)
def test_min_clearance_height(d, t1, t2, expected, tol):
    got = min_clearance_height(d, t1, t2)
    assert got == pytest.approx(expected, abs=tol)
    assert got == pytest.approx(clearance_by_line_intersection(d, t1, t2), rel=1e-12)


def test_min_clearance_strict_halfangle_uses_half_beamwidth():
    full = min_clearance_height(5.0, 15.0, 15.0)
    strict = min_clearance_height(5.0, 15.0, 15.0, strict_halfangle=True)
    assert strict == pytest.approx(clearance_by_line_intersection(5.0, 7.5, 7.5))
    assert strict < full


def test_min_clearance_rejects_bad_beamwidth():
    with pytest.raises(ValueError):
        min_clearance_height(5.0, 180.0, 15.0)
    with pytest.raises(ValueError):
        min_clearance_height(5.0, 15.0, 0.0)
    with pytest.raises(ValueError):
        min_clearance_height(0.0, 15.0, 15.0)


def test_min_clearance_too_wide_is_unreachable():
    assert min_clearance_height(5.0, 150.0, 150.0) == math.inf


@pytest.mark.parametrize("df, hpbw, expected", [(0.196, 15.0, 0.258), (0.824, 7.0, 0.504)])
def test_min_mut_extent(df, hpbw, expected):
    got = min_mut_extent(df, hpbw, 1.0)
    assert got == pytest.approx(expected, abs=0.002)
    assert got == pytest.approx(footprint_by_rotation(5 * df, hpbw), rel=1e-12)


def test_min_mut_extent_margin_and_vanishing_beam():
    assert min_mut_extent(0.196, 15.0) == pytest.approx(2.0 * min_mut_extent(0.196, 15.0, 1.0))
    assert min_mut_extent(0.824, 1e-9, 3.0) == pytest.approx(0.0, abs=1e-9)
    assert mut_extent_at(2.5, 15.0, 1.0) == pytest.approx(footprint_by_rotation(2.5, 15.0))


def test_fresnel_radius():
    got = fresnel_zone_radius(2.5, 2.5, 0.004079, 1)
    assert got == pytest.approx(0.0714, abs=0.0005)
    assert got == pytest.approx(fresnel_by_bisection(2.5, 2.5, 0.004079, 1), abs=0.0005)
    assert fresnel_zone_radius(2.5, 2.5, 0.004079, 4) == pytest.approx(2 * got)
    assert fresnel_zone_radius(0.0, 2.5, 0.004079, 1) == 0.0
    assert fresnel_zone_radius(1e-12, 2.5, 0.004079, 1) == pytest.approx(0.0, abs=1e-6)


def test_suggest_distances_three_to_five_metres():
    got = suggest_verification_distances(4.0, 3)
    assert got == pytest.approx([4.0, 5.0, 6.0])
    assert all(4.0 <= d <= 8.0 for d in got)


@pytest.mark.parametrize("start, count", [(1.0, 2), (4.0, 5), (4.0, 6), (2.0, 9), (0.98, 4)])
def test_suggest_distances_schedule_rule(start, count):
    got = suggest_verification_distances(start, count)
    assert len(got) == count
    assert got[0] == start
    assert all(b > a for a, b in zip(got, got[1:]))
    assert all(1.2 * start - 1e-12 <= d <= 2.0 * start + 1e-12 for d in got[1:])


def test_suggest_distances_validation():
    with pytest.raises(ValueError):
        suggest_verification_distances(4.0, 1)
    with pytest.raises(ValueError):
        suggest_verification_distances(0.0, 3)


# -- validators ------------------------------------------------------------


def test_xpd_setup_widebeam_reference_is_clean(wide):
    assert validate_xpd_setup(make_setup(wide, 5.0, 1.5)) == []


def test_xpd_setup_low_antennas_flag_clearance(wide):
    v = validate_xpd_setup(make_setup(wide, 5.0, 0.2, clearance=1.5))
    assert [x.rule_id for x in v] == [RuleId.CLEARANCE]
    assert v[0].required == pytest.approx(1.34, abs=0.01)
    assert v[0].observed == 0.2 and v[0].unit == "m"


def test_xpd_setup_narrowbeam_too_close(narrow):
    v = validate_xpd_setup(make_setup(narrow, 3.0, 1.5))
    assert [x.rule_id for x in v] == [RuleId.FAR_FIELD]
    assert v[0].required == pytest.approx(4.12, abs=0.01)


def test_xpd_setup_reports_every_rule(narrow):
    v = validate_xpd_setup(make_setup(narrow, 3.0, 0.1, clearance=0.1))
    assert [x.rule_id for x in v] == [RuleId.FAR_FIELD, RuleId.CLEARANCE, RuleId.CLEARANCE]


def test_xpd_setup_uses_larger_aperture(wide, narrow):
    v = validate_xpd_setup(make_setup(wide, 3.0, 1.5, rx=narrow))
    assert v and v[0].rule_id is RuleId.FAR_FIELD


def test_boresight_needs_pointing_metadata(wide):
    assert validate_xpd_setup(make_setup(wide, 5.0, pointing_error=0.5)) == []
    v = validate_xpd_setup(make_setup(wide, 5.0, pointing_error=5.0))
    assert [x.rule_id for x in v] == [RuleId.BORESIGHT]


def test_xpd_setup_rejects_non_setup():
    with pytest.raises(ValueError):
        validate_xpd_setup({"tr_separation": 5})


def test_penetration_setup_glass_reference_is_clean(wide, glass):
    for d in (3.0, 4.0, 5.0):
        assert validate_penetration_setup(make_setup(wide, d, mut=glass)) == []


def test_penetration_setup_too_close(wide, glass):
    v = validate_penetration_setup(make_setup(wide, 1.0, mut=glass))
    assert RuleId.MUT_DISTANCE in [x.rule_id for x in v]
    md = next(x for x in v if x.rule_id is RuleId.MUT_DISTANCE)
    assert md.required == pytest.approx(1.96, abs=0.01)


def test_penetration_setup_small_material(wide):
    tiny = MaterialSpec("tile", 1.0, 3.0, 0.1, 0.1)
    v = validate_penetration_setup(make_setup(wide, 5.0, mut=tiny))
    extents = [x for x in v if x.rule_id is RuleId.MUT_EXTENT]
    assert len(extents) == 2
    assert extents[0].required == pytest.approx(2.0 * footprint_by_rotation(2.5, 15.0))


def test_penetration_setup_requires_mut(wide):
    with pytest.raises(ValueError):
        validate_penetration_setup(make_setup(wide, 5.0))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(aperture_largest_dim=0.0),
        dict(hpbw_azimuth=0.0),
        dict(hpbw_elevation=180.0),
        dict(gain=math.inf),
        dict(xpd_leakage=-1.0),
    ],
)
def test_antenna_invariants(kwargs):
    base = dict(name="a", aperture_largest_dim=0.02, hpbw_azimuth=15.0, hpbw_elevation=15.0, gain=20.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        Antenna(**base)


def test_setup_invariants(wide):
    with pytest.raises(ValueError):
        SetupGeometry(FREQ, 0.0, 1.5, 1.5, wide, wide)
    with pytest.raises(ValueError):
        SetupGeometry(0.0, 5.0, 1.5, 1.5, wide, wide)
    with pytest.raises(ValueError):
        SetupGeometry(FREQ, 5.0, -1.0, 1.5, wide, wide)
    assert SetupGeometry(FREQ, 5.0, 1.5, 1.5, wide, wide).wavelength == pytest.approx(SPEED_OF_LIGHT / FREQ)


# -- properties --------------------------------------------------------------

apertures = st.floats(1e-3, 0.5)
freqs = st.floats(1e9, 3e11)
beams = st.floats(0.5, 89.0)


@given(apertures, apertures, freqs, freqs)
def test_fraunhofer_monotone(a1, a2, f1, f2):
    if a2 > a1:
        assert fraunhofer_distance(a2, f1) > fraunhofer_distance(a1, f1)
    if f2 > f1:
        assert fraunhofer_distance(a1, f2) > fraunhofer_distance(a1, f1)


@given(st.floats(0.1, 100.0), st.floats(0.1, 100.0), beams, beams)
def test_clearance_symmetric_and_monotone(d1, d2, t1, t2):
    assert min_clearance_height(d1, t1, t2) == pytest.approx(min_clearance_height(d1, t2, t1), rel=1e-12)
    if d2 > d1:
        assert min_clearance_height(d2, t1, t2) > min_clearance_height(d1, t1, t2)


@given(st.floats(0.1, 100.0), beams)
def test_clearance_equal_beams_reduces_to_tangent(d, t):
    assert min_clearance_height(d, t, t) == pytest.approx(d * math.tan(math.radians(t)), rel=1e-12)


@given(st.floats(0.01, 50.0), st.floats(0.01, 50.0), st.floats(1e-4, 0.1), st.integers(1, 50))
def test_fresnel_sqrt_n_scaling(d1, d2, lam, n):
    assert fresnel_zone_radius(d1, d2, lam, n) == pytest.approx(
        math.sqrt(n) * fresnel_zone_radius(d1, d2, lam, 1), rel=1e-12
    )
