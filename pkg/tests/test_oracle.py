import copy
import json

import numpy as np
import pytest

from lagpert.errors import LadderInconsistent, TrackingAmbiguity
from lagpert.oracle import (Curves, compare, extrapolate_in_N, fd_derivatives, ladder_grid, predicted_oracle,
                            run_oracle, sweep, track_curves)
from lagpert.perturbation import robin_family, operator_at
from lagpert.spectral import lambda_group

from conftest import gallery_problem


def test_fd_exact_polynomials():
    # wide ladder: the default one is limited by rounding (about 1e-9 on c2)
    est = fd_derivatives(lambda t: 1 + 2 * t + 3 * t * t, 0.0, (0.1, 0.05, 0.025))
    assert abs(est.c1 - 2) <= 1e-10 and abs(est.c2 - 3) <= 1e-10
    line = fd_derivatives(lambda t: 4 - t, 0.5, (0.1, 0.05, 0.025))
    assert abs(line.c2) <= 1e-10 and abs(line.c1 + 1) <= 1e-10
    default = fd_derivatives(lambda t: 1 + 2 * t + 3 * t * t, 0.0)
    assert abs(default.c1 - 2) <= 1e-10 and abs(default.c2 - 3) <= 1e-8


def test_fd_smooth_function():
    est = fd_derivatives(np.sin, 0.3)
    assert abs(est.c1 - np.cos(0.3)) <= 1e-10
    assert abs(est.c2 + np.sin(0.3) / 2) <= 1e-7


def test_fd_from_mapping():
    grid = ladder_grid(1.0)
    curve = {t: np.exp(t) for t in grid}
    est = fd_derivatives(curve, 1.0)
    assert abs(est.c1 - np.e) <= 1e-9
    with pytest.raises(KeyError):
        fd_derivatives(curve, 1.0, (2e-3, 1e-3))


def test_fd_detects_label_swap():
    # the two innermost samples come from a neighbouring curve
    swapped = lambda t: t + (0.05 if 0 < abs(t) < 3e-4 else 0.0)
    with pytest.raises(LadderInconsistent):
        fd_derivatives(swapped, 0.0)


def test_fd_ladder_validation():
    with pytest.raises(ValueError):
        fd_derivatives(np.sin, 0.0, (1e-3, 2e-3))


def test_constant_family_tracks_flat():
    p = gallery_problem("neumann-to-robin", 40)
    fam = robin_family([np.zeros((2, 2))], 0.0)
    g = lambda_group(operator_at(p.triplet, fam), 0.0)
    curves = track_curves(p.triplet, fam, g, np.linspace(-0.1, 0.1, 5))
    np.testing.assert_allclose(curves.values, g.lam, atol=1e-10)


def test_tracking_reverse_grid_invariant():
    p = gallery_problem("dirichlet-double-split")
    g = p.group()
    grid = np.linspace(-0.01, 0.01, 9)
    a = track_curves(p.triplet, p.family, g, grid)
    b = track_curves(p.triplet, p.family, g, grid[::-1])
    np.testing.assert_array_equal(a.values, b.values[::-1])
    assert a.margins.min() >= 0.9


def test_tracking_margin_enforced():
    p = gallery_problem("dirichlet-double-split")
    g = p.group()
    with pytest.raises(TrackingAmbiguity):
        track_curves(p.triplet, p.family, g, np.linspace(-0.01, 0.01, 9), margin=1.01)


def test_compare_and_fault_injection():
    p = gallery_problem("neumann-to-robin", 100)
    g = p.group()
    res = p.expand(g)
    rep = run_oracle(p.triplet, p.family, g, res, p.config.dt_ladder)
    assert rep.passed
    bad = copy.deepcopy(res)
    bad.branches[0].c1 *= -1
    rows = compare(bad, rep.fd)
    assert not rows[0].passed and rows[0].abs_dev_c1 > 1


def test_predicted_oracle_closes():
    p = gallery_problem("dirichlet-double-split")
    res = p.expand()
    rep = predicted_oracle(res, (1e-2, 5e-3, 2.5e-3))
    assert max(max(r.abs_dev_c1, r.abs_dev_c2) for r in rep.rows) <= 1e-9


def test_report_serialization():
    p = gallery_problem("neumann-to-robin", 50)
    g = p.group()
    rep = run_oracle(p.triplet, p.family, g, p.expand(g), p.config.dt_ladder)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "branch_i,branch_k,mu,nu,c1_formula,c2_formula,c1_fd,c2_fd,abs_dev_c1,abs_dev_c2,pass"
    assert lines[1].endswith(",true")
    data = json.loads(rep.to_json())
    assert data["passed"] and len(data["fd"][0]["ladder"]) == 3


def test_sweep_remainder_is_cubic():
    p = gallery_problem("neumann-to-robin", 100)
    g = p.group()
    res = p.expand(g)
    rows = sweep(p.triplet, p.family, g, res, [-0.04, -0.02, 0.0, 0.02, 0.04])
    r = {t: abs(res_) for t, *_, res_ in rows}
    assert r[0.0] == 0.0
    assert r[0.04] / r[0.02] >= 7.0 and r[-0.04] / r[-0.02] >= 7.0


def test_extrapolation_recovers_limit():
    Ns = [50, 100, 200, 400]
    c_inf, coef = extrapolate_in_N(Ns, [3 + 2 / N - 5 / N**2 for N in Ns])
    assert abs(c_inf - 3) < 1e-12
    np.testing.assert_allclose(coef, [3, 2, -5], atol=1e-9)


def test_curves_container():
    c = Curves(np.array([0.0, 1.0]), np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones(2))
    assert c.m == 2 and c.curve(1) == {0.0: 2.0, 1.0: 4.0}
