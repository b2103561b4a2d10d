"""Channel: coefficient extraction, assembled matrices, Monte Carlo, serialization."""
import math

import numpy as np
import pytest

from oamturb.channel import (BipartiteDensityMatrix, ChannelParams,
                             analytic_density_matrix, eta_from_xi,
                             density_matrix_from_json_dict,
                             density_matrix_to_json_dict, generating_coefficient,
                             load_density_matrix_binary, load_density_matrix_json,
                             monte_carlo_density_matrix,
                             save_density_matrix_binary, save_density_matrix_json,
                             screen_coincidence_amplitudes, xi_from_eta,
                             xi_from_scintillation)
from oamturb.entanglement import negativity
from oamturb.lgmodes import QutritBasis, ResolutionError
from oamturb.spdc import initial_state
from oamturb.turbulence import PhaseScreen, generate_tilt_screen

ALPHA = 0.59
WP = 1.0 / math.sqrt(ALPHA)


def norm2(ell):
    return 2.0 ** (abs(ell) + 1) / (math.pi * math.factorial(abs(ell)))


def test_zero_order_coefficient():
    p = ChannelParams(alpha=0.7, xi=1.3)
    bare = generating_coefficient((0, 0, 0, 0), p, include_normalization=False)
    assert bare == pytest.approx(p.m0 * p.m1, rel=1e-14)
    full = generating_coefficient((0, 0, 0, 0), p)
    assert full == pytest.approx(p.m0 * p.m1 * norm2(0) ** 2, rel=1e-14)


def test_odd_derivative_orders_vanish():
    p = ChannelParams(alpha=0.7, xi=1.3)
    # the exponent is bilinear, so unmatched powers kill the term
    assert generating_coefficient((1, 0, 0, 0), p) == 0.0
    assert generating_coefficient((2, 0, 2, 2), p) == 0.0
    assert generating_coefficient((3, 3, 3, 0), p) == 0.0


def test_mixed_magnitudes_rejected():
    p = ChannelParams(alpha=0.7, xi=1.3)
    with pytest.raises(ValueError):
        generating_coefficient((1, 2, 0, 0), p)


def test_sign_zero_convention_is_irrelevant():
    # couplings attached to an order-zero slot never receive powers, so the
    # sign(0) bookkeeping cannot change any coefficient: compare against a
    # brute-force expansion with the zero-slot omitted entirely.
    p = ChannelParams(alpha=0.42, xi=2.7)
    cu, cd = p.m0 + p.m1, p.m0 - p.m1
    # (l_m, l_n, l_p, l_q) = (l, l, 0, 0): only the (m, n) coupling can act
    want = p.m0 * p.m1 * cd * math.sqrt(norm2(1) ** 2 * norm2(0) ** 2)
    got = generating_coefficient((1, 1, 0, 0), p)
    assert got == pytest.approx(want, rel=1e-14)
    # (l, 0, -l, 0): only the (m, p) pair-creation coupling can act
    want = p.m0 * p.m1 * cu * math.sqrt(norm2(1) ** 2 * norm2(0) ** 2)
    got = generating_coefficient((1, 0, -1, 0), p)
    assert got == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_zero_turbulence_matrix_is_rank_one(ell):
    dm = analytic_density_matrix(ell, ChannelParams(alpha=ALPHA, xi=0.0))
    w = np.linalg.eigvalsh(dm.matrix)
    assert w[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(w[:-1]).max() < 1e-12
    st = initial_state(QutritBasis(ell=ell, w0=1.0), WP)
    assert np.abs(dm.matrix - st.density_matrix()).max() < 1e-10


@pytest.mark.parametrize("ell", [1, 2, 3])
@pytest.mark.parametrize("xi", [0.0, 0.5, 2.0, 8.0])
def test_matrix_invariants(ell, xi):
    dm = analytic_density_matrix(ell, ChannelParams(alpha=ALPHA, xi=xi))
    dm.validate()  # Hermitian, unit trace, PSD


def test_selection_rule_sparsity_at_zero_turbulence():
    dm = analytic_density_matrix(1, ChannelParams(alpha=ALPHA, xi=0.0))
    ells = (-1, 0, 1)
    for im, lm in enumerate(ells):
        for ip, lp in enumerate(ells):
            for jn, ln in enumerate(ells):
                for jq, lq in enumerate(ells):
                    if lm + lp != 0 or ln + lq != 0:
                        assert abs(dm.matrix[3 * im + ip, 3 * jn + jq]) < 1e-15


def test_extreme_turbulence_negativity_asymptote():
    dm = analytic_density_matrix(1, ChannelParams(alpha=ALPHA, xi=1e6))
    val = negativity(dm).value
    assert 0.0 < val < 1e-4  # decays like 1/xi but never reaches zero


def test_negativity_monotone_in_xi():
    for ell in (1, 2, 3):
        vals = [negativity(analytic_density_matrix(ell, ChannelParams(ALPHA, xi))).value
                for xi in np.linspace(0.0, 20.0, 24)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_central_element_at_moderate_turbulence():
    # reference magnitude ~0.36 for the second experimental point
    xi = xi_from_scintillation(0.68, ALPHA, "w0_over_r0")
    dm = analytic_density_matrix(1, ChannelParams(alpha=ALPHA, xi=xi))
    assert dm.central_element == pytest.approx(0.36, abs=0.05)


def test_w_conversions():
    assert xi_from_scintillation(0.0, ALPHA) == 0.0
    xi_wp = xi_from_scintillation(0.8, ALPHA, "wp_over_r0")
    assert xi_wp == pytest.approx(6.88 * 0.8 ** (5 / 3), rel=1e-12)
    xi_w0 = xi_from_scintillation(0.8, ALPHA, "w0_over_r0")
    assert xi_w0 == pytest.approx(xi_wp * ALPHA ** (-5.0 / 6.0), rel=1e-12)
    with pytest.raises(ValueError):
        xi_from_scintillation(0.8, ALPHA, "nonsense")
    eta = eta_from_xi(3.0, ALPHA)
    assert eta == pytest.approx(ALPHA * 3.0 / (2 + ALPHA), rel=1e-14)
    assert xi_from_eta(eta, ALPHA) == pytest.approx(3.0, rel=1e-14)


def _zero_screen(n=128, delta=1.0 / 8.0):
    return PhaseScreen(theta=np.zeros((n, n)), delta=delta, r0=math.inf,
                       seed=0, subgrid_levels=0)


def test_zero_screen_amplitudes_obey_oam_conservation():
    basis = QutritBasis(ell=1, w0=1.0)
    c = screen_coincidence_amplitudes(_zero_screen(), basis, WP)
    ells = (-1, 0, 1)
    for a in range(3):
        for b in range(3):
            if ells[a] + ells[b] != 0:
                assert abs(c[a, b]) < 1e-12
            else:
                assert abs(c[a, b]) > 1e-3


def test_constant_screen_is_global_phase():
    basis = QutritBasis(ell=1, w0=1.0)
    c0 = screen_coincidence_amplitudes(_zero_screen(), basis, WP)
    scr = _zero_screen()
    scr.theta = scr.theta + 0.7
    c1 = screen_coincidence_amplitudes(scr, basis, WP)
    assert np.abs(c1 - np.exp(0.7j) * c0).max() < 1e-12


def test_screen_resolution_rejected():
    basis = QutritBasis(ell=1, w0=1.0)
    bad = PhaseScreen(theta=np.zeros((128, 128)), delta=1.0 / 4.0, r0=math.inf,
                      seed=0, subgrid_levels=0)
    with pytest.raises(ResolutionError):
        screen_coincidence_amplitudes(bad, basis, WP)


def test_monte_carlo_zero_screen_recovers_pure_state():
    basis = QutritBasis(ell=1, w0=1.0)
    dm = monte_carlo_density_matrix([_zero_screen(256, 1.0 / 16.0)], basis, WP)
    pure = initial_state(basis, WP).density_matrix()
    assert np.abs(dm.matrix - pure).max() < 1e-6
    with pytest.raises(ValueError):
        monte_carlo_density_matrix([], basis, WP)


def test_monte_carlo_tilt_convergence_rate():
    # Frobenius error vs the analytic matrix shrinks ~1/sqrt(N)
    basis = QutritBasis(ell=1, w0=1.0)
    xi = 2.0
    sigma2 = xi / WP**2
    target = analytic_density_matrix(1, ChannelParams(alpha=ALPHA, xi=xi)).matrix

    def mean_err(count, repeats, seed0):
        errs = []
        for rep in range(repeats):
            screens = (generate_tilt_screen(128, 1.0 / 8.0, sigma2,
                                            seed=seed0 + rep * count + s)
                       for s in range(count))
            dm = monte_carlo_density_matrix(screens, basis, WP)
            errs.append(np.linalg.norm(dm.matrix - target))
        return float(np.mean(errs))

    e_small = mean_err(250, 3, seed0=0)
    e_large = mean_err(4000, 3, seed0=100_000)
    shrink = e_small / e_large
    assert 4.0 / 2.0 < shrink < 4.0 * 2.0  # sqrt(4000/250) = 4 within slack


@pytest.mark.parametrize("ell,alpha,xi", [(2, 0.3, 0.5), (3, 1.0, 8.0)])
def test_monte_carlo_tilt_matches_analytic_other_bases(ell, alpha, xi):
    # the tilt ensemble realizes the quadratic model for every basis order
    basis = QutritBasis(ell=ell, w0=1.0)
    w_p = 1.0 / math.sqrt(alpha)
    sigma2 = xi / w_p**2
    target = analytic_density_matrix(ell, ChannelParams(alpha=alpha, xi=xi)).matrix
    screens = (generate_tilt_screen(128, 1.0 / 8.0, sigma2, seed=7000 + s)
               for s in range(3000))
    dm = monte_carlo_density_matrix(screens, basis, w_p)
    assert np.abs(dm.matrix - target).max() < 0.03 * np.abs(target).max()


def test_json_round_trip_is_exact(tmp_path):
    dm = analytic_density_matrix(2, ChannelParams(alpha=0.4, xi=1.7))
    doc = density_matrix_to_json_dict(dm, alpha=0.4, xi=1.7, w=0.9,
                                      w_convention="wp_over_r0")
    back = density_matrix_from_json_dict(doc)
    assert np.array_equal(back.matrix, dm.matrix)
    path = tmp_path / "dm.json"
    save_density_matrix_json(dm, path, alpha=0.4, xi=1.7)
    assert np.array_equal(load_density_matrix_json(path).matrix, dm.matrix)


def test_binary_round_trip_is_exact(tmp_path):
    dm = analytic_density_matrix(3, ChannelParams(alpha=0.8, xi=0.3))
    path = tmp_path / "dm.bin"
    save_density_matrix_binary(dm, path, alpha=0.8, xi=0.3)
    back, alpha, xi = load_density_matrix_binary(path)
    assert np.array_equal(back.matrix, dm.matrix)
    assert back.ell == 3
    assert (alpha, xi) == (0.8, 0.3)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(alpha=0.0, xi=1.0)
    with pytest.raises(ValueError):
        ChannelParams(alpha=1.0, xi=-0.1)
    with pytest.raises(ValueError):
        analytic_density_matrix(4, ChannelParams(alpha=1.0, xi=0.0))
    p = ChannelParams.from_widths(w0=1.0, w_p=2.0, r0=4.0)
    assert p.alpha == pytest.approx(0.25)
    assert p.xi == pytest.approx(6.88 * 0.5 ** (5 / 3), rel=1e-12)
    assert p.m1 <= p.m0
    dm = BipartiteDensityMatrix(matrix=np.eye(9, dtype=complex) / 9.0, ell=1)
    dm.validate()
