import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmrac.exceptions import ConfigError, DimensionMismatch, MatchingInfeasible
from cmrac.models import (
    ConstraintSpec,
    PlantModel,
    ReferenceModel,
    ReferenceSignal,
    eval_reference_signal,
    plant_derivative,
    reference_derivative,
    solve_matching_gains,
)


def test_plant_derivative_examples(paper):
    integrator = PlantModel(np.zeros((3, 3)), np.eye(3)[:, :2])
    assert np.array_equal(plant_derivative(integrator, np.array([5.0, 6.0, 7.0]), np.array([1.0, 2.0])), [1, 2, 0])
    assert not plant_derivative(paper.plant, np.zeros(7), np.zeros(2)).any()
    col5 = plant_derivative(paper.plant, np.eye(7)[4], np.zeros(2))
    assert np.array_equal(col5, [0.0003, 0, -0.7333, -0.0319, 20.2, 0, 0])


def test_plant_derivative_dims(paper):
    with pytest.raises(DimensionMismatch):
        plant_derivative(paper.plant, np.zeros(6), np.zeros(2))


def test_plant_rejects_rank_deficient_b():
    with pytest.raises(ConfigError):
        PlantModel(np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_reference_derivative(paper):
    assert np.array_equal(reference_derivative(paper.reference, np.zeros(7), 0.0), [0, 0, 0, 0, 20.2, 20.2, 0])
    quiet = ReferenceModel(-np.eye(2), np.eye(2), ReferenceSignal("zero", m=2))
    assert not reference_derivative(quiet, np.zeros(2), 3.0).any()


def test_reference_model_requires_hurwitz():
    with pytest.raises(ConfigError):
        ReferenceModel(np.eye(2), np.eye(2), ReferenceSignal("zero", m=2))


def test_signal_examples():
    sig = ReferenceSignal.paper()
    assert np.array_equal(sig(0.0), [1.0, 1.0])
    assert np.allclose(sig(10.0), [math.exp(-1), math.exp(-0.5)], rtol=0, atol=1e-15)
    late = [sig(t) for t in (10.0, 50.0, 200.0, 1000.0)]
    assert all(np.all(b < a) for a, b in zip(late, late[1:]))
    assert np.all(late[-1] < 1e-20)
    assert not eval_reference_signal(ReferenceSignal("zero", m=3), 4.2).any()
    assert np.array_equal(ReferenceSignal("constant", amplitudes=(2.0, -1.0))(7.0), [2, -1])
    s = ReferenceSignal("sinusoid", amplitudes=(1.0,), frequencies=(2.0,))
    assert s(math.pi / 4)[0] == pytest.approx(1.0)


def test_signal_validation():
    with pytest.raises(ConfigError):
        ReferenceSignal("square", amplitudes=(1.0,))
    with pytest.raises(ConfigError):
        ReferenceSignal("exp_decay", amplitudes=(1.0,), time_constants=(0.0,))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4))
def test_paper_signal_norm_bound(t):
    assert np.linalg.norm(ReferenceSignal.paper()(t)) <= math.sqrt(2) + 1e-15


def test_constraint_spec():
    spec = ConstraintSpec(beta=2.0, alpha1=1.5, u_max=2.5)
    assert spec.k_b == 0.5 and math.isinf(spec.alpha2)
    for bad in ({"beta": 1.0, "alpha1": 1.5, "u_max": 1.0}, {"beta": 2.0, "alpha1": 1.0, "u_max": 0.0}):
        with pytest.raises(ConfigError):
            ConstraintSpec(**bad)


def test_matching_trivial():
    A = np.array([[-1.0, 0.5], [0.0, -2.0]])
    B = np.array([[1.0], [2.0]])
    plant = PlantModel(A, B)
    ref = ReferenceModel(A, B, ReferenceSignal("zero", m=1))
    g = solve_matching_gains(plant, ref)
    assert np.allclose(g.K_x, 0, atol=1e-15) and np.allclose(g.K_r, [[1.0]])


def test_matching_paper(paper):
    g = solve_matching_gains(paper.plant, paper.reference)
    assert np.allclose(g.K_r, np.diag([2.0, 20.2 / -4.25]), rtol=0, atol=1e-12)
    assert g.K_r[1, 1] == pytest.approx(-4.752941176470588, abs=1e-12)
    row1 = (paper.reference.A_r[4] - paper.plant.A[4]) / 10.1
    assert np.allclose(g.K_x[0], row1, atol=1e-12)
    assert np.allclose(g.K_x[0], [0, -30 / 10.1, 0, -10 / 10.1, -4, 0, 0], atol=1e-12)
    assert g.residual_x <= 1e-8 and g.residual_r <= 1e-8
    assert np.allclose(paper.plant.A + paper.plant.B @ g.K_x, paper.reference.A_r, atol=1e-9)


def test_matching_infeasible():
    plant = PlantModel(-np.eye(2), np.array([[1.0], [0.0]]))
    ref = ReferenceModel(-np.eye(2), np.array([[0.0], [1.0]]), ReferenceSignal("zero", m=1))
    with pytest.raises(MatchingInfeasible) as info:
        solve_matching_gains(plant, ref)
    assert info.value.residual_r == pytest.approx(1.0)
