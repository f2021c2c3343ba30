import numpy as np
import pytest

from whitham.curve import (
    ArcSegment,
    Differential,
    LineSegment,
    PathOnCurve,
    build_curve,
    homology_basis,
    integrate,
    residue_at_zero,
    residue_condition,
)
from whitham.errors import (
    CircleRootError,
    GeometryError,
    MultipleRootError,
    RealityViolationError,
)
from whitham.polyring import Polynomial, random_real_section, symmetrize


def P(*coeffs):
    return Polynomial(list(coeffs))


def pair_poly(*alphas):
    """Product of (zeta - a)(1 - conj(a) zeta) over the given in-disc roots."""
    out = Polynomial.one()
    for a in alphas:
        if a == 0:
            out = out * Polynomial.zeta()
        else:
            out = out * P(-a, 1) * P(1, -np.conj(a))
    return out


def circle(center, radius, sheet=1):
    return PathOnCurve(
        (ArcSegment(complex(center), radius, 0.0, 2 * np.pi),), sheet, True, "circle"
    )


# -- curve construction --------------------------------------------------------


def test_build_curve_real_alpha():
    cur = build_curve(pair_poly(0.5))
    assert cur.genus == 0
    assert len(cur.branch_pairs) == 1
    a, p = cur.branch_pairs[0]
    assert abs(a - 0.5) < 1e-10 and abs(p - 2.0) < 1e-10


def test_build_curve_imaginary_alpha():
    cur = build_curve(pair_poly(0.5j))
    a, p = cur.branch_pairs[0]
    assert abs(a - 0.5j) < 1e-10 and abs(p - 2j) < 1e-10


def test_build_curve_genus_one():
    cur = build_curve(pair_poly(0.3, 0.4j))
    assert cur.genus == 1
    assert len(cur.branch_pairs) == 2
    assert not cur.branched_at_zero


def test_build_curve_conformal():
    cur = build_curve(pair_poly(0.0, 0.4))
    assert cur.genus == 1
    assert cur.branched_at_zero
    assert cur.branch_pairs[0][1] is None


def test_build_curve_circle_root():
    with pytest.raises(CircleRootError):
        build_curve(P(-1j, 1) * pair_poly(0.5))  # simple root at zeta = i


def test_build_curve_multiple_root():
    p = pair_poly(0.5) * pair_poly(0.5)
    with pytest.raises(MultipleRootError):
        build_curve(p)


def test_build_curve_unpaired():
    with pytest.raises(RealityViolationError):
        build_curve(Polynomial.from_roots([0.5, 3.0]))


# -- homology ------------------------------------------------------------------


def test_homology_genus0():
    basis = homology_basis(build_curve(pair_poly(0.5)))
    assert basis.a_cycles == () and basis.b_cycles == ()
    assert basis.gamma_plus.label == "gamma+"


def test_homology_genus1_counts():
    basis = homology_basis(build_curve(pair_poly(0.3, 0.4j)))
    assert len(basis.a_cycles) == 1 and len(basis.b_cycles) == 1


def test_homology_genus2_well_separated():
    cur = build_curve(pair_poly(0.4, -0.45 + 0.2j, 0.35j))
    basis = homology_basis(cur)
    assert len(basis.a_cycles) == 2 and len(basis.b_cycles) == 2
    # every cycle integrates cleanly for a generic differential
    b = random_real_section(np.random.default_rng(0), cur.genus + 3)
    diff = Differential(cur, b)
    for cyc in basis.period_cycles():
        res = integrate(diff, cyc, 32)
        assert res.error < 1e-9 * max(1.0, abs(res.value))
        assert res.end_sheet == 1


def test_homology_jitter_builds():
    cur = build_curve(pair_poly(0.3, 0.4j))
    basis = homology_basis(cur, jitter=1.0)
    assert len(basis.a_cycles) == 1


# -- integration ---------------------------------------------------------------


def test_empty_contour_integrates_to_zero():
    cur = build_curve(pair_poly(0.5, 0.4j))
    b = random_real_section(np.random.default_rng(1), cur.genus + 3)
    # small circle far from branch points, poles outside it
    res = integrate(Differential(cur, b), circle(-0.5 - 0.5j, 0.12), 32)
    assert abs(res.value) < 1e-12
    assert res.end_sheet == 1


def test_one_cut_a_cycle_is_2pi_i():
    # oracle: residue at infinity of dzeta/eta on monic eta^2 = (zeta-a)(zeta-b)
    cur = build_curve(Polynomial.from_roots([0.5, 2.0]))
    dzeta_over_eta = Differential(cur, P(0, 0, 1))  # b = zeta^2
    # contour enclosing BOTH branch points of the single cut
    span = circle(1.25, 1.1)
    res = integrate(dzeta_over_eta, span, 48)
    assert min(abs(res.value - 2j * np.pi), abs(res.value + 2j * np.pi)) < 1e-10
    # cross-check on a big circle: only the 1/zeta term of 1/eta survives
    big = integrate(dzeta_over_eta, circle(0.0, 5.0), 48)
    assert min(abs(big.value - 2j * np.pi), abs(big.value + 2j * np.pi)) < 1e-10


def test_self_convergence_orders():
    rng = np.random.default_rng(3)
    cur = build_curve(pair_poly(0.45, -0.3 + 0.25j))
    basis = homology_basis(cur)
    b = random_real_section(rng, cur.genus + 3)
    diff = Differential(cur, b)
    for cyc in basis.period_cycles() + [basis.gamma_plus, basis.gamma_minus]:
        v16 = integrate(diff, cyc, 16).value
        v64 = integrate(diff, cyc, 64).value
        assert abs(v16 - v64) <= 1e-10 * max(1.0, abs(v64))


def test_error_estimate_bounds_doubling():
    cur = build_curve(pair_poly(0.45, -0.3 + 0.25j))
    b = random_real_section(np.random.default_rng(5), cur.genus + 3)
    diff = Differential(cur, b)
    cyc = homology_basis(cur).a_cycles[0]
    r16 = integrate(diff, cyc, 16)
    v32 = integrate(diff, cyc, 32).value
    assert abs(v32 - r16.value) <= max(r16.error, 1e-14)


def test_sheet_parity():
    cur = build_curve(pair_poly(0.5, -0.4))
    b = random_real_section(np.random.default_rng(7), cur.genus + 3)
    diff = Differential(cur, b)
    # around one branch point: sheet flips
    res = integrate(diff, circle(0.5, 0.15), 24)
    assert res.end_sheet == -1
    # around two branch points (0.5 and -0.4): sheet restored
    res = integrate(diff, circle(0.05, 0.6), 24)
    assert res.end_sheet == 1


def test_sigma_antisymmetry():
    cur = build_curve(pair_poly(0.3, 0.4j))
    b = random_real_section(np.random.default_rng(9), cur.genus + 3)
    diff = Differential(cur, b)
    path = homology_basis(cur).gamma_plus
    v = integrate(diff, path, 32).value
    w = integrate(diff, path.flipped(), 32).value
    assert abs(v + w) < 1e-10 * max(1.0, abs(v))


def test_path_through_singularity_raises():
    cur = build_curve(pair_poly(0.5))
    b = P(1.0)
    with pytest.raises(GeometryError):
        integrate(
            Differential(cur, b),
            PathOnCurve((LineSegment(0.5 - 1.0, 0.5 + 1.0),), 1, False, "bad"),
            16,
        )


def test_conformal_closing_integrals_exact():
    # eta^2 = zeta, b = zeta*m with m in the weight-1 real sections:
    # the closing integrals have the closed form 8i Im(m0) and -8i Re(m0)
    cur = build_curve(P(0, 1))
    assert cur.branched_at_zero and cur.genus == 0
    basis = homology_basis(cur)
    m0 = np.pi / 4 * 1j
    b1 = Polynomial.zeta() * P(m0, np.conj(m0))
    v_plus = integrate(Differential(cur, b1), basis.gamma_plus, 48).value
    v_minus = integrate(Differential(cur, b1), basis.gamma_minus, 48).value
    assert min(abs(v_plus - 2j * np.pi), abs(v_plus + 2j * np.pi)) < 1e-10
    assert abs(v_minus) < 1e-10
    m0 = -np.pi / 4
    b2 = Polynomial.zeta() * P(m0, np.conj(m0))
    w_plus = integrate(Differential(cur, b2), basis.gamma_plus, 48).value
    w_minus = integrate(Differential(cur, b2), basis.gamma_minus, 48).value
    assert abs(w_plus) < 1e-10
    assert min(abs(w_minus - 2j * np.pi), abs(w_minus + 2j * np.pi)) < 1e-10


def test_gamma_paths_swap_sheet():
    cur = build_curve(pair_poly(0.3, 0.4j))
    basis = homology_basis(cur)
    b = random_real_section(np.random.default_rng(11), cur.genus + 3)
    for path in (basis.gamma_plus, basis.gamma_minus):
        res = integrate(Differential(cur, b), path, 24)
        assert res.end_sheet == -1


# -- residues --------------------------------------------------------------------


def test_residue_closed_form_family():
    # with x = -(1 + |alpha|^2) / (2 alpha), b = y + x y zeta + conj(x y) zeta^2
    # + conj(y) zeta^3 is residue-free for every y
    alpha, y = 0.5, 1.0
    x = -0.5 / alpha * (1 + abs(alpha) ** 2)
    Ppoly = pair_poly(alpha)
    b = P(y, x * y, np.conj(x * y), np.conj(y))
    assert abs(residue_condition(Ppoly, b)) < 1e-14
    assert abs(residue_at_zero(Differential(build_curve(Ppoly), b))) < 1e-14


def test_residue_zero_coeffs():
    Ppoly = pair_poly(0.5)
    assert residue_condition(Ppoly, P(0, 0, 1.0)) == 0


def test_residue_constant_b():
    Ppoly = pair_poly(0.4 + 0.1j)
    d = Differential(build_curve(Ppoly), P(1.0))
    expected = -0.5 * Ppoly.coeff(1) / Ppoly.coeff(0)
    assert abs(residue_at_zero(d) - expected) < 1e-14


def test_residue_branched_at_zero():
    with pytest.raises(GeometryError):
        residue_at_zero(Differential(build_curve(P(0, 1)), P(1.0)))
    # rephrased condition flags b_0 != 0 over a conformal curve
    assert abs(residue_condition(P(0, 1), P(1.0))) == 1.0
    assert residue_condition(Polynomial.zero(), Polynomial.zero()) == 0


def test_numeric_residue_matches_contour():
    # contour around 0 only: 2*pi*i * (residue quantity) / (sheet * sqrt(P_0))
    Ppoly = pair_poly(0.5, -0.45)
    rng = np.random.default_rng(13)
    b = random_real_section(rng, 5)
    cur = build_curve(Ppoly)
    val = integrate(Differential(cur, b), circle(0.0, 0.2), 48).value
    expected = 2j * np.pi * residue_at_zero(Differential(cur, b)) / np.sqrt(
        complex(Ppoly.coeff(0))
    )
    err = min(abs(val - expected), abs(val + expected))
    assert err < 1e-10 * max(1.0, abs(expected))
