import math

import numpy as np
import pytest

from sarasim.aloha import (
    AlohaParams,
    argmax_phi_numeric,
    ase_curve,
    max_ase,
    optimal_phi,
    rho,
    success_probability,
)

BETA_3DB = 10.0 ** 0.3


def default_params(**kw):
    base = dict(lam=0.02, r_t=5.0, beta=BETA_3DB, alpha=4.0)
    base.update(kw)
    return AlohaParams(**base)


def test_rho_known_values():
    assert rho(4.0) == pytest.approx(math.pi**2 / 2.0)
    assert rho(3.0) == pytest.approx((2.0 * math.pi**2 / 3.0) * 2.0 / math.sqrt(3.0), rel=1e-6)
    assert rho(3.0) == pytest.approx(7.5977, abs=1e-3)


def test_rho_large_alpha_limit():
    assert rho(1e6) == pytest.approx(math.pi, abs=1e-4)


def test_rho_domain_error():
    with pytest.raises(ValueError):
        rho(2.0)
    with pytest.raises(ValueError):
        AlohaParams(lam=0.02, r_t=5.0, beta=1.0, alpha=1.9)


def test_success_probability_endpoints_and_value():
    p = default_params()
    assert success_probability(p, 0.0) == pytest.approx(1.0)
    # published operating point: phi = 0.121 at density 0.02
    assert success_probability(p, 0.121) == pytest.approx(math.exp(-0.42176), abs=2e-4)
    assert success_probability(p, 0.121) == pytest.approx(0.6559, abs=2e-4)


def test_success_probability_strictly_decreasing_in_each_parameter():
    base = default_params()
    val = success_probability(base, 0.3)
    assert success_probability(default_params(lam=0.03), 0.3) < val
    assert success_probability(default_params(r_t=6.0), 0.3) < val
    assert success_probability(default_params(beta=2.5), 0.3) < val
    assert success_probability(base, 0.4) < val


def test_ase_curve_zero_and_optimum():
    p = default_params()
    assert ase_curve(p, 0.0) == 0.0
    assert ase_curve(p, optimal_phi(p)) == pytest.approx(0.003341, abs=2e-6)


def test_ase_curve_unimodal():
    p = default_params()
    phis = np.linspace(0.0, 1.0, 401)
    vals = np.asarray(ase_curve(p, phis))
    diffs = np.sign(np.diff(vals))
    # one sign change: rises to the optimum then falls
    changes = np.count_nonzero(np.diff(diffs[diffs != 0]))
    assert changes == 1


def test_optimal_phi_reference_value_and_scaling():
    p = default_params()
    assert optimal_phi(p) == pytest.approx(0.28693, abs=1e-4)
    assert optimal_phi(default_params(lam=0.04)) == pytest.approx(optimal_phi(p) / 2.0)


def test_optimal_phi_clamps_at_low_density():
    p = default_params(lam=0.001)
    unclamped = 1.0 / (p.lam * p.outage_coeff)
    assert unclamped == pytest.approx(5.74, abs=0.01)
    assert optimal_phi(p) == 1.0


def test_numeric_argmax_agrees_with_closed_form():
    for lam in (0.005, 0.01, 0.02, 0.06):
        p = default_params(lam=lam)
        assert argmax_phi_numeric(p) == pytest.approx(optimal_phi(p), abs=1e-6)


def test_max_ase_matches_curve_at_optimum():
    p = default_params()
    assert max_ase(p) == pytest.approx(ase_curve(p, optimal_phi(p)), rel=1e-4)


def test_max_ase_density_free():
    vals = {max_ase(default_params(lam=lam)) for lam in (0.01, 0.02, 0.06)}
    assert len(vals) == 1


def test_max_ase_reference_value():
    assert max_ase(default_params()) == pytest.approx(0.003341, abs=2e-6)


def test_max_ase_defers_to_boundary_when_clamped():
    p = default_params(lam=0.001)
    assert max_ase(p) == pytest.approx(ase_curve(p, 1.0))


def test_second_order_conditions_at_optimum():
    p = default_params()
    phi = optimal_phi(p)
    h = 1e-5 * phi
    d1 = (ase_curve(p, phi + h) - ase_curve(p, phi - h)) / (2 * h)
    d2 = (ase_curve(p, phi + h) - 2 * ase_curve(p, phi) + ase_curve(p, phi - h)) / h**2
    assert abs(d1) * phi / ase_curve(p, phi) < 1e-6
    assert d2 < 0


def test_optimum_dominates_random_probes():
    p = default_params()
    best = ase_curve(p, optimal_phi(p))
    rng = np.random.default_rng(3)
    assert best >= np.max(np.asarray(ase_curve(p, rng.uniform(0, 1, 10_000))))


def test_probability_domain_checked():
    p = default_params()
    with pytest.raises(ValueError):
        success_probability(p, 1.5)
    with pytest.raises(ValueError):
        ase_curve(p, -0.1)
