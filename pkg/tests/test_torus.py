import math

import numpy as np
import pytest

from kemeny_lab import (CoincidentPoints, EpsilonTooLarge, FlatTorus,
                        expected_hitting_formula, mass_trace_identity,
                        regularized_trace, robins_mass, spectral_zeta,
                        torus_eigenvalues, torus_green, torus_invariants)
from kemeny_lab.torus import (EULER_GAMMA, green_integral,
                              mass_trace_rhs, robins_mass_extrapolated,
                              scaled_to_volume, _eigenvalues_below)

UNIT = FlatTorus(1.0, 1.0)
FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def test_sides_are_ordered_on_construction():
    t = FlatTorus(0.5, 2.0)
    assert (t.L1, t.L2) == (2.0, 0.5)
    assert t.volume == 1.0


def test_bad_geometry_rejected():
    for bad in ((0.0, 1.0), (-1.0, 1.0), (math.nan, 1.0), (math.inf, 1.0)):
        with pytest.raises(ValueError):
            FlatTorus(*bad)


def test_distance_uses_minimum_image():
    t = FlatTorus(2.0, 1.0)
    assert t.distance((0.1, 0.05), (1.9, 0.95)) == pytest.approx(
        math.hypot(0.2, 0.1))


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_unit_square_lowest_mode():
    lam = torus_eigenvalues(UNIT, 6)
    expected = 4.0 * math.pi**2
    np.testing.assert_allclose(lam[:4], expected, rtol=1e-14)
    assert lam[4] > expected * 1.5


def test_skinny_torus_lowest_mode():
    # torus (2, 0.5): lowest mode runs along the long direction
    lam = torus_eigenvalues(FlatTorus(2.0, 0.5), 3)
    np.testing.assert_allclose(lam[:2], 4.0 * math.pi**2 / 4.0, rtol=1e-14)


def test_weyl_ratio_at_ten_thousand():
    # lambda_j ~ 4 pi j / V; direct enumeration down at j = 10^4
    lam = torus_eigenvalues(UNIT, 10**4)
    ratio = lam[-1] * UNIT.volume / (4.0 * math.pi * 10**4)
    assert abs(ratio - 1.0) < 0.05


def test_eigenvalues_are_sorted_with_multiplicity():
    lam = torus_eigenvalues(FlatTorus(1.3, 0.9), 300)
    assert lam.shape == (300,)
    assert np.all(np.diff(lam) >= 0)


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

def brute_force_green(torus, x, y, nmax=400):
    """Truncated Fourier double sum (1/V) sum' e^{ik(x-y)} / |k|^2.

    Rectangular symmetric truncation converges as ~0.013 / nmax^2 (measured
    over nmax = 100..800); the assertion budget below carries a 4x margin.
    """
    p = np.arange(-nmax, nmax + 1)
    kx = 2.0 * np.pi * p / torus.L1
    ky = 2.0 * np.pi * p / torus.L2
    r1 = x[0] - y[0]
    r2 = x[1] - y[1]
    K2 = kx[:, None] ** 2 + ky[None, :] ** 2
    K2[nmax, nmax] = 1.0
    terms = np.cos(kx[:, None] * r1 + ky[None, :] * r2) / K2
    terms[nmax, nmax] = 0.0
    return float(terms.sum()) / torus.volume


def test_green_matches_brute_force_spectral_sum():
    val = torus_green(UNIT, (0.0, 0.0), (0.5, 0.5))
    brute = brute_force_green(UNIT, (0.0, 0.0), (0.5, 0.5), nmax=400)
    assert abs(val - brute) <= 0.05 / 400**2
    val2 = torus_green(UNIT, (0.13, 0.57), (0.62, 0.11))
    brute2 = brute_force_green(UNIT, (0.13, 0.57), (0.62, 0.11), nmax=400)
    assert abs(val2 - brute2) <= 0.05 / 400**2


def test_green_symmetry():
    rng = np.random.default_rng(2)
    for torus in (UNIT, FlatTorus(1.7, 0.6)):
        for _ in range(5):
            x = tuple(rng.uniform(0, [torus.L1, torus.L2]))
            y = tuple(rng.uniform(0, [torus.L1, torus.L2]))
            if torus.distance(x, y) < 1e-6:
                continue
            assert abs(torus_green(torus, x, y)
                       - torus_green(torus, y, x)) <= 1e-10


def test_green_translation_invariance():
    rng = np.random.default_rng(3)
    torus = FlatTorus(1.4, 1.1)
    x = (0.2, 0.3)
    y = (0.9, 0.8)
    base = torus_green(torus, x, y)
    for _ in range(5):
        t1, t2 = rng.uniform(0, 3, size=2)
        shifted = torus_green(torus, (x[0] + t1, x[1] + t2),
                              (y[0] + t1, y[1] + t2))
        assert abs(shifted - base) <= 1e-10


def test_green_coincident_points_rejected():
    with pytest.raises(CoincidentPoints):
        torus_green(UNIT, (0.25, 0.25), (0.25, 0.25))
    with pytest.raises(CoincidentPoints):
        torus_green(UNIT, (1.0 + 1e-14, 0.0), (0.0, 0.0))


def test_discrete_laplacian_returns_background():
    # geometer's 5-point Laplacian away from the singularity gives -1/V,
    # with second-order convergence in the grid spacing
    torus = UNIT
    x = (0.0, 0.0)
    target = -1.0 / torus.volume

    def fd_error(h):
        worst = 0.0
        for y in ((0.5, 0.5), (0.31, 0.62), (0.75, 0.2)):
            g0 = torus_green(torus, x, y)
            gpp = torus_green(torus, x, (y[0] + h, y[1]))
            gpm = torus_green(torus, x, (y[0] - h, y[1]))
            gqp = torus_green(torus, x, (y[0], y[1] + h))
            gqm = torus_green(torus, x, (y[0], y[1] - h))
            lap = -(gpp + gpm + gqp + gqm - 4.0 * g0) / h**2
            worst = max(worst, abs(lap - target))
        return worst

    err_coarse = fd_error(1.0 / 128.0)
    err_fine = fd_error(1.0 / 256.0)
    assert err_fine <= 2e-3
    assert err_fine <= err_coarse / 2.5  # ~4x per halving for O(h^2)


def test_green_integrates_to_zero():
    # composite midpoint with the log singularity integrated in closed form
    assert abs(green_integral(UNIT, (0.5004882812, 0.5004882812), n=512)) <= 1e-6
    assert abs(green_integral(UNIT, (0.237, 0.618), n=512)) <= 1e-6
    skinny = FlatTorus(2.0, 0.5)
    assert abs(green_integral(skinny, (0.31, 0.17), n=512)) <= 1e-6


# ---------------------------------------------------------------------------
# Robin's mass
# ---------------------------------------------------------------------------

def test_mass_closed_form_vs_extrapolation():
    for torus in (UNIT, FlatTorus(2.0, 0.5), FlatTorus(3.1, 1.3)):
        closed = robins_mass(torus)
        extrapolated = robins_mass_extrapolated(torus)
        assert abs(closed - extrapolated) <= 1e-8


def test_mass_independent_of_base_point():
    rng = np.random.default_rng(14)
    values = []
    for _ in range(5):
        base = tuple(rng.uniform(0.0, 1.0, size=2))
        values.append(robins_mass_extrapolated(UNIT, base_point=base))
    assert max(values) - min(values) <= 1e-10


def test_near_diagonal_convergence_rate():
    # G + (1/2pi) log d -> m at least linearly in d
    m = robins_mass(UNIT)
    for d in (1e-1, 1e-2, 1e-3):
        g = torus_green(UNIT, (0.3 + d, 0.4), (0.3, 0.4))
        assert abs(g + math.log(d) / (2.0 * math.pi) - m) <= 2.0 * d


def test_mass_increases_with_modulus_at_fixed_volume():
    masses = [robins_mass(FlatTorus(L, 1.0 / L)) for L in (1.0, 2.0, 4.0, 8.0)]
    assert all(a < b for a, b in zip(masses, masses[1:]))


# ---------------------------------------------------------------------------
# regularized trace and the mass-trace identity
# ---------------------------------------------------------------------------

def test_zeta_at_two_matches_direct_sum():
    # brute-force oracle: complete eigenvalue sum below a high cutoff plus
    # the Weyl tail integral (V / 4 pi) / Lambda
    side = math.sqrt(FOUR_PI)
    torus = FlatTorus(side, side)
    lam_max = 1.0e6
    lam = _eigenvalues_below(torus, lam_max)
    direct = float(np.sum(lam**-2.0)) \
        + torus.volume / (4.0 * math.pi) / lam_max
    assert abs(spectral_zeta(torus, 2.0) - direct) <= 1e-9


def test_zeta_requires_convergent_exponent():
    with pytest.raises(ValueError):
        spectral_zeta(UNIT, 1.0)


def test_regularized_trace_reports_scale():
    trace = regularized_trace(UNIT)
    assert trace.scale_factor == pytest.approx(math.sqrt(FOUR_PI))
    # already-normalized input is left untouched
    side = math.sqrt(FOUR_PI)
    assert regularized_trace(FlatTorus(side, side)).scale_factor == \
        pytest.approx(1.0)
    assert trace.value == pytest.approx(
        regularized_trace(FlatTorus(side, side)).value, abs=1e-12)


def test_mass_trace_identity_square():
    result = mass_trace_identity(UNIT)
    assert result.residual <= 1e-3
    # the two pipelines actually meet far tighter than the contract
    assert result.residual <= 1e-10


def test_mass_trace_identity_independent_of_side_order():
    a = mass_trace_identity(FlatTorus(2.0, 0.5))
    b = mass_trace_identity(FlatTorus(0.5, 2.0))
    assert a == b
    assert a.residual <= 1e-3


def test_mass_trace_rhs_is_affine_in_mass():
    v = FOUR_PI
    base = mass_trace_rhs(v, 0.3)
    for dm in (1e-3, 0.1, -0.25):
        assert mass_trace_rhs(v, 0.3 + dm) - base == pytest.approx(
            v * dm, rel=1e-12)


def test_trace_increases_with_modulus_at_fixed_volume():
    values = []
    for ratio in (1.0, 4.0, 16.0):
        L1 = math.sqrt(FOUR_PI * ratio)
        values.append(regularized_trace(FlatTorus(L1, FOUR_PI / L1)).value)
    assert values[0] < values[1] < values[2]


def test_torus_invariants_bundle():
    inv = torus_invariants(UNIT)
    assert inv.robins_mass == robins_mass(UNIT)
    assert inv.green((0.0, 0.0), (0.5, 0.5)) == torus_green(
        UNIT, (0.0, 0.0), (0.5, 0.5))


# ---------------------------------------------------------------------------
# expected hitting formula
# ---------------------------------------------------------------------------

def test_hitting_formula_positive_on_grid():
    for eps in (0.01, 0.05, 0.1):
        for y1 in np.linspace(0.1, 0.9, 5):
            for y2 in np.linspace(0.1, 0.9, 5):
                if UNIT.distance((0.0, 0.0), (y1, y2)) <= eps:
                    continue
                assert expected_hitting_formula(
                    UNIT, (0.0, 0.0), (y1, y2), eps) > 0.0


def test_hitting_formula_epsilon_halving_shift():
    x, y = (0.0, 0.0), (0.5, 0.5)
    for eps in (0.1, 0.05):
        delta = (expected_hitting_formula(UNIT, x, y, eps / 2.0)
                 - expected_hitting_formula(UNIT, x, y, eps))
        assert delta == pytest.approx(
            UNIT.volume * math.log(2.0) / (2.0 * math.pi), rel=1e-12)


def test_hitting_formula_preconditions():
    with pytest.raises(EpsilonTooLarge):
        expected_hitting_formula(UNIT, (0.0, 0.0), (0.5, 0.5), 0.3)  # >= L2/4
    with pytest.raises(EpsilonTooLarge):
        expected_hitting_formula(UNIT, (0.0, 0.0), (0.05, 0.0), 0.1)  # >= d
    with pytest.raises(EpsilonTooLarge):
        expected_hitting_formula(UNIT, (0.0, 0.0), (0.5, 0.5), -0.1)


def test_hitting_formula_grid_average_is_game_one_prediction():
    # averaging over targets kills the Green term (it integrates to zero)
    eps = 0.05
    x = (0.5004882812, 0.5004882812)
    V = UNIT.volume
    prediction = (-V * math.log(eps) / (2.0 * math.pi)
                  + V * robins_mass(UNIT))
    # reuse the zero-mean quadrature: average formula = prediction - V * avg G
    avg_green = green_integral(UNIT, x, n=512) / V
    avg_formula = prediction - V * avg_green
    assert abs(avg_formula - prediction) <= 1e-3


def test_scaled_to_volume_roundtrip():
    scaled, factor = scaled_to_volume(FlatTorus(2.0, 0.5), FOUR_PI)
    assert scaled.volume == pytest.approx(FOUR_PI, rel=1e-14)
    assert factor == pytest.approx(math.sqrt(FOUR_PI))
    assert scaled.L1 / scaled.L2 == pytest.approx(4.0, rel=1e-12)
