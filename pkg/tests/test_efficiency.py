import math

import numpy as np
import pytest

import pel
from pel import (
    Coherent,
    Fock,
    Isps,
    LossChannel,
    PartialQubit,
    apply_loss,
    generalized_efficiency,
    is_feasible,
    make_basis,
    make_state,
    multimode_efficiency,
    qubit_efficiency_formula,
)
from pel.errors import ContractViolation, PositivityError

from conftest import random_density


def test_is_feasible_examples():
    b = make_basis(1, 4)
    rho = make_state(Isps(0.7), b)
    assert is_feasible(rho, 0.7)
    assert not is_feasible(rho, 0.5)
    assert is_feasible(rho, 1.0)


def test_feasibility_monotone_in_p(rng):
    b = make_basis(1, 6)
    grid = np.linspace(0.25, 1.0, 14)
    for _ in range(4):
        rho = random_density(rng, b, support=4)
        verdicts = [is_feasible(rho, float(p)) for p in grid]
        # once feasible, stays feasible
        assert verdicts == sorted(verdicts)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_isps_efficiency(p):
    rho = make_state(Isps(p), make_basis(1, 6))
    result = generalized_efficiency(rho)
    assert result.value == pytest.approx(p, abs=1e-6)
    assert result.attained
    lo, hi = result.bracket
    assert hi - lo <= 1e-6
    assert is_feasible(rho, hi)


def test_two_photon_efficiency_is_one():
    rho = make_state(Fock(2), make_basis(1, 5))
    result = generalized_efficiency(rho)
    assert result.value == pytest.approx(1.0, abs=1e-6)
    # independent scan: infeasible strictly below one
    for p in (0.9, 0.99, 0.999):
        assert not is_feasible(rho, p)


def test_pure_states_have_unit_efficiency():
    b = make_basis(1, 5)
    for spec in [Fock(1), Fock(2), PartialQubit(0.5, 0.5)]:
        assert generalized_efficiency(make_state(spec, b)).value == pytest.approx(
            1.0, abs=1e-6
        )


def test_coherent_efficiency_reports_floor():
    rho = make_state(Coherent(0.8), make_basis(1, 12))
    result = generalized_efficiency(rho)
    assert not result.attained
    assert result.value <= 1e-3 + 1e-6
    assert result.bracket[0] == result.bracket[1] == result.value


def test_vacuum_efficiency_is_unattained_floor():
    result = generalized_efficiency(make_state(Coherent(0.0), make_basis(1, 4)))
    assert not result.attained
    assert result.value <= 1e-3 + 1e-6


def test_coherent_cutoff_stability():
    values = []
    for cutoff in (8, 12):
        rho = make_state(Coherent(0.8), make_basis(1, cutoff), tail_tol=1e-6)
        values.append(generalized_efficiency(rho).value)
    assert abs(values[0] - values[1]) < 1e-4


def test_bounded_support_cutoff_independence():
    for cutoff in (4, 6, 9):
        rho = make_state(Isps(0.63), make_basis(1, cutoff))
        assert generalized_efficiency(rho).value == pytest.approx(0.63, abs=1e-6)


def test_multimode_examples():
    b = make_basis(1, 10)
    assert multimode_efficiency(
        [make_state(Isps(0.3), b), make_state(Isps(0.8), b)]
    ) == pytest.approx(0.8, abs=1e-6)
    assert multimode_efficiency(
        [make_state(Coherent(1.0), b, tail_tol=1e-6), make_state(Isps(0.4), b)]
    ) == pytest.approx(0.4, abs=1e-6)
    assert multimode_efficiency([make_state(Isps(0.5), b)]) == pytest.approx(
        0.5, abs=1e-6
    )


def test_qubit_formula_examples():
    assert qubit_efficiency_formula(0.7, 0.0) == pytest.approx(0.7)
    assert qubit_efficiency_formula(0.5, 0.35) == pytest.approx(
        0.5 / (1.0 - 0.245), abs=1e-12
    )
    assert qubit_efficiency_formula(0.5, 0.5) == pytest.approx(1.0)
    assert qubit_efficiency_formula(0.0, 0.0) == 0.0
    with pytest.raises(PositivityError):
        qubit_efficiency_formula(0.5, 0.6)


def test_qubit_formula_matches_solver():
    basis = make_basis(1, 5)
    for p in (0.3, 0.6, 0.9):
        for frac in (0.0, 0.5, 1.0):
            q = frac * math.sqrt(p * (1.0 - p)) * np.exp(0.7j)
            formula = qubit_efficiency_formula(p, q)
            state = make_state(PartialQubit(p, q), basis)
            solved = generalized_efficiency(state, 1e-7).value
            assert abs(formula - solved) < 1e-5


def test_loss_covariance(rng):
    basis = make_basis(1, 8)
    for _ in range(3):
        rho = random_density(rng, basis, support=3)
        base = generalized_efficiency(rho, 1e-7).value
        for q in (0.5, 0.8):
            lossy = apply_loss(rho, LossChannel(q))
            scaled = generalized_efficiency(lossy, 1e-7).value
            assert abs(scaled - q * base) < 2e-7


def test_result_reports_feasible_witness(rng):
    rho = random_density(rng, make_basis(1, 6), support=3)
    result = generalized_efficiency(rho)
    assert result.witness_eigenvalue is not None
    assert result.witness_eigenvalue >= -1e-9
    assert result.cutoff_used == 6


def test_requires_single_mode_normalized_state(rng):
    joint = random_density(rng, make_basis(2, 2))
    with pytest.raises(ContractViolation):
        generalized_efficiency(joint)
    rho = make_state(Isps(0.5), make_basis(1, 3))
    with pytest.raises(ContractViolation, match="tolerance"):
        generalized_efficiency(rho, 1e-9)
