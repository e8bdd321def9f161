import numpy as np
import pytest

from slowphase.validation import (
    ResidualEvaluator,
    accuracy_domain,
    invariance_residual,
    invert_manifold,
    orthogonality_report,
    trajectory_consistency,
    truncation_slope,
)


def test_order0_residual_is_cycle_defect(oracle_run, ei_run):
    for ns in (oracle_run, ei_run):
        ev = ResidualEvaluator(ns.result.manifold, ns.result.model)
        assert ev.grid_residual(0.0).max() < 1e-10


def test_pointwise_residual_matches_grid(oracle_run):
    man, model = oracle_run.result.manifold, oracle_run.result.model
    ev = ResidualEvaluator(man, model)
    theta = man.order_series(0).grid()
    sigma = 0.07
    grid = ev.grid_residual(sigma)
    direct = invariance_residual(man, model, theta[::16], sigma)
    assert np.max(np.abs(direct - grid[::16])) < 1e-12


def test_domain_nestedness(oracle_run, ei_run):
    for ns in (oracle_run, ei_run):
        domain = ns.result.validation.domain
        for t_i in range(len(domain.tolerances) - 1):
            assert np.all(domain.sigma_pos[t_i + 1] <= domain.sigma_pos[t_i] + 1e-12)
            assert np.all(domain.sigma_neg[t_i + 1] <= domain.sigma_neg[t_i] + 1e-12)


def test_domain_nonempty_two_sided(oracle_run, ei_run):
    for ns in (oracle_run, ei_run):
        domain = ns.result.validation.domain
        assert domain.min_width(-1) > 0.0


def test_oracle_domain_matches_closed_form_within_factor_two():
    """The truncated radial series has a closed-form error; the measured
    boundary should sit within a factor two of where it crosses the
    tolerance."""
    from math import comb

    import slowphase as sp
    from slowphase.config import RunConfig
    from slowphase.pipeline import run_pipeline

    # independent short run to keep this test self-contained
    config = RunConfig(
        model="oracle", guess=(1.3, 0.0), relax_time=20.0, grid_size=128,
        order=5, out_dir="/tmp/slowphase_domain_check",
    )
    result = run_pipeline(config, through="manifold")
    man = result.manifold
    tol = 1e-8
    domain = accuracy_domain(man, result.model, (tol,))
    measured = float(np.median(domain.sigma_pos[0]))
    # residual ~ d/dsigma-term of the first dropped order: the dominant
    # contribution scales like (L+1) |lam_s| c_{L+1} sigma^{L+1}
    L = man.nominal_order
    c_next = comb(2 * (L + 1), L + 1) / 2.0 ** (L + 1)
    predicted = (tol / (2.0 * (L + 1) * c_next)) ** (1.0 / (L + 1))
    assert predicted / 2 < measured < predicted * 2


def test_truncation_slope_bracket(oracle_run, ei_run):
    for ns in (oracle_run, ei_run):
        L = ns.result.manifold.nominal_order
        slope = ns.result.validation.slope
        assert L <= slope <= L + 2


def test_orthogonality_suite(oracle_run, ei_run):
    for ns in (oracle_run, ei_run):
        report = orthogonality_report(ns.result.manifold, ns.result.response)
        assert report["max"] < 1e-8
        L = ns.result.response.order
        assert len(report["phase_tangent"]) == L + 1
        # the extra stored order lets the normal-family identities reach L
        assert len(report["phase_normal"]) == L + 1


def test_order_zero_orthogonality_values(ei_run):
    report = orthogonality_report(ei_run.result.manifold, ei_run.result.response)
    # <Z_0, K_0'> = 1 and <I_0, K_1> = 1 at every grid point
    assert report["phase_tangent"][0] < 1e-10
    assert report["amplitude_normal"][0] < 1e-10


def test_manifold_inversion_roundtrip(oracle_run):
    man = oracle_run.result.manifold
    th, sg = 0.37, 0.04
    from slowphase.manifold import evaluate_manifold

    x = evaluate_manifold(man, th, sg)
    th_hat, sg_hat, gap = invert_manifold(man, x, th + 0.01, sg + 0.01)
    assert abs(th_hat - th) < 1e-10
    assert abs(sg_hat - sg) < 1e-10
    assert gap < 1e-10


def test_trajectory_consistency_zero_horizon(oracle_run):
    result = oracle_run.result
    report = trajectory_consistency(
        result.manifold, result.model,
        theta_samples=[0.2, 0.6], sigma_samples=[0.03, -0.02], horizons=[0.0, 0.0],
    )
    assert report["max_state_gap"] < 1e-12
    assert report["max_phase_defect"] < 1e-10
    assert report["max_decay_defect"] < 1e-9


def test_trajectory_consistency_oracle(oracle_run):
    traj = oracle_run.result.validation.trajectory
    assert traj["max_state_gap"] < 1e-8
    assert traj["max_phase_defect"] < 1e-8
    assert traj["max_decay_defect"] < 1e-6


def test_validation_failure_on_unreachable_tolerance(oracle_run):
    from slowphase.errors import ValidationFailure
    from slowphase.validation import run_validation

    result = oracle_run.result
    with pytest.raises(ValidationFailure):
        run_validation(
            result.model, result.manifold, result.response,
            tolerances=(1e-30,), n_samples=2,
        )
