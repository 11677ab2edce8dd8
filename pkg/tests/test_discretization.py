import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagpert.discretization import (assemble_operator, build_triplet, ghost_extension, green_defect,
                                    parse_complex_array, sample_potential)
from lagpert.errors import BadGrid, BadPotential, BoundaryResonance, DimensionMismatch
from lagpert.symplectic import SymplecticSpace, make_plane_from_Z, omega

from conftest import random_hermitian


def _rand_full(rng, tr):
    return rng.standard_normal(tr.full_dim) + 1j * rng.standard_normal(tr.full_dim)


def test_parse_complex_strings():
    a = parse_complex_array([["1-2j", 3], [0.5, "2j"]])
    np.testing.assert_array_equal(a, [[1 - 2j, 3], [0.5, 2j]])


def test_potential_kinds():
    x = np.linspace(0, 1, 5)
    c = sample_potential({"kind": "constant", "value": [[1, 2], [2, 0]]}, x, 2)
    assert c.shape == (5, 2, 2) and c[3, 0, 1] == 2
    p = sample_potential({"kind": "polynomial", "value": [[[0, 1, 1]]]}, x, 1)
    np.testing.assert_allclose(p[:, 0, 0], x + x**2)
    s = sample_potential({"kind": "samples", "value": np.arange(5.0).reshape(5, 1, 1).tolist()}, x, 1)
    np.testing.assert_allclose(s[:, 0, 0], np.arange(5.0))
    assert np.all(sample_potential(None, x, 3) == 0)


@pytest.mark.parametrize("spec", [
    {"kind": "constant", "value": [[1, 2, 3]]},
    {"kind": "wavy", "value": 1},
    {"kind": "constant"},
    {"kind": "samples", "value": [[[1]]]},
])
def test_bad_potentials(spec):
    with pytest.raises(BadPotential):
        sample_potential(spec, np.linspace(0, 1, 5), 1)


def test_non_hermitian_potential_warns():
    with pytest.warns(UserWarning):
        build_triplet(0, 1, 2, 10, [[0, 1], [0, 0]])


@pytest.mark.parametrize("args", [(1, 0, 1, 10), (0, 1, 1, 3), (0, 1, 0, 10)])
def test_bad_grids(args):
    with pytest.raises(BadGrid):
        build_triplet(*args)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=3), st.integers(min_value=4, max_value=60),
       st.integers(min_value=0, max_value=2**31))
def test_green_identity_exact(n, N, seed):
    rng = np.random.default_rng(seed)
    V = np.array([random_hermitian(rng, n) for _ in range(N + 1)])
    tr = build_triplet(-0.5, 2.0, n, N, V)
    u, v = _rand_full(rng, tr), _rand_full(rng, tr)
    scale = max(1.0, abs(tr.inner(tr.Astar @ u, tr.restrict(v))))
    assert abs(green_defect(tr, u, v)) <= 1e-12 * scale


def test_green_defect_shape():
    tr = build_triplet(0, 1, 1, 10)
    with pytest.raises(DimensionMismatch):
        green_defect(tr, np.ones(3), np.ones(3))


def test_ghost_lift_satisfies_condition(rng):
    tr = build_triplet(0, 1, 2, 20)
    Th = random_hermitian(rng, 4)
    plane = make_plane_from_Z(tr.space, Th, -np.eye(4))
    E = ghost_extension(tr, plane)
    Tu = tr.T @ E @ (rng.standard_normal(tr.interior_dim))
    np.testing.assert_allclose(plane.Z @ Tu, 0, atol=1e-12)
    np.testing.assert_allclose(plane.Q @ Tu, Tu, atol=1e-12)


def test_resonance_detected():
    tr = build_triplet(0, 1, 1, 10)
    plane = make_plane_from_Z(tr.space, np.eye(2), tr.h * np.eye(2))
    with pytest.raises(BoundaryResonance):
        ghost_extension(tr, plane)


def test_extension_hermitian_and_domain(rng):
    tr = build_triplet(0, 2, 2, 40, {"kind": "polynomial", "value": [[[0, 1], [1, 0]], [[1, 0], [0, -1]]]})
    plane = make_plane_from_Z(tr.space, random_hermitian(rng, 4), -np.eye(4))
    ext = assemble_operator(tr, plane)
    assert ext.A.defect <= 1e-12
    # the restricted Green form vanishes on the domain: omega(Tu, Tv) = 0
    u, v = rng.standard_normal(tr.interior_dim), rng.standard_normal(tr.interior_dim)
    assert abs(omega(tr.space, ext.TE @ u, ext.TE @ v)) < 1e-10
    w, U = ext.spectrum
    np.testing.assert_allclose(tr.h * U.conj().T @ U, np.eye(ext.dim), atol=1e-10)


def test_dirichlet_spectrum_converges():
    tr = build_triplet(0, np.pi, 1, 200)
    ext = assemble_operator(tr, make_plane_from_Z(tr.space, np.eye(2), np.zeros((2, 2))))
    # exact discrete Dirichlet eigenvalues
    k = np.arange(1, 4)
    exact = 4 / tr.h**2 * np.sin(k * tr.h / 2) ** 2
    np.testing.assert_allclose(ext.spectrum[0][:3], exact, rtol=1e-10)


def test_shifted_adds_potential():
    tr = build_triplet(0, 1, 1, 10)
    tr2 = tr.shifted(np.ones((11, 1, 1)))
    np.testing.assert_allclose(tr2.Astar - tr.Astar, np.hstack([np.zeros((9, 1)), np.eye(9), np.zeros((9, 1))]))
