"""Shared model fixtures: the canonical parameter sets used across the suite."""

import pytest

from lwf import MeasureSpec, ModelParams, SelectionFn


def atom_lambda(*pairs):
    return MeasureSpec(atoms=list(pairs), support_interval=(0.0, 1.0))


def atom_mu(*pairs):
    return MeasureSpec(atoms=list(pairs), support_interval=(-1.0, 1.0))


@pytest.fixture(scope="session")
def neutral_half():
    """sigma=0, mu=0, one neutral atom of mass 1 at 1/2 (both boundaries reachable)."""
    return ModelParams(atom_lambda((0.5, 1.0)), None, SelectionFn([0.0]))


@pytest.fixture(scope="session")
def neutral_slow():
    """Slowed neutral model: mass 0.2 at 1/2 (event rate 0.8)."""
    return ModelParams(atom_lambda((0.5, 0.2)), None, SelectionFn([0.0]))


@pytest.fixture(scope="session")
def theta2_rich():
    """Two reachable boundaries with shocks and balancing drift (main test model)."""
    return ModelParams(
        atom_lambda((0.5, 1.0)),
        atom_mu((0.3, 0.2), (-0.3, 0.2)),
        SelectionFn([1.0, -2.0]),
    )


@pytest.fixture(scope="session")
def theta0_model():
    """sigma=-2, small neutral mass: almost-sure convergence to 0."""
    return ModelParams(atom_lambda((0.5, 0.1)), None, SelectionFn([-2.0]))


@pytest.fixture(scope="session")
def theta1_model():
    return ModelParams(atom_lambda((0.5, 0.1)), None, SelectionFn([2.0]))


@pytest.fixture(scope="session")
def theta3_balancing():
    """Balancing selection 1-2x with weak neutral noise: coexistence."""
    return ModelParams(atom_lambda((0.5, 0.25)), None, SelectionFn([1.0, -2.0]))
