import math
import warnings

import numpy as np
import pytest

from spinwire.dynamics import (
    Channel,
    DegeneracyWarning,
    DegenerateGroundStateError,
    chain_ensemble,
    decompose,
    evolve_mixed,
    evolve_pure,
    ground_state,
    initial_state,
    thermal_state,
)
from spinwire.entanglement import concurrence_general, reduce_to_pair
from spinwire.hamiltonian import Bonds, ChainConfig, bond_operator, build_chain, build_total
from spinwire.spincore import MixedState, Operator, PureState, basis_index, pauli_at

from .conftest import random_density


def two_site(j, delta, d=0.0):
    return bond_operator(2, Bonds.path([0, 1], j, delta, d))


def ket(bits):
    v = np.zeros(1 << len(bits), dtype=complex)
    v[basis_index(bits)] = 1
    return v


def reconstruct(spec):
    v = spec.eigenvectors
    return (v * spec.eigenvalues) @ v.conj().T


def test_decompose_examples():
    assert np.allclose(decompose(pauli_at("z", 0, 1)).eigenvalues, [-1, 1])
    xx = two_site(1.0, 0.0)
    spec = decompose(xx)
    assert np.allclose(spec.eigenvalues, [-2, 0, 0, 2])
    assert np.abs(reconstruct(spec) - xx.matrix).max() < 1e-9


def test_decompose_invariants():
    h = build_total(ChainConfig(3, 1.0, 0.7, 1.1, eps=0.01)).h_total
    spec = decompose(h)
    v = spec.eigenvectors
    assert np.abs(v.conj().T @ v - np.eye(h.dim)).max() < 1e-10
    d = v.conj().T @ h.matrix @ v
    assert np.abs(d - np.diag(np.diag(d))).max() < 1e-9 * np.abs(h.matrix).max()
    assert len(spec.sector_tags) == h.dim


@pytest.mark.parametrize("n_ch", [2, 3, 4])
def test_blocked_equals_dense(n_ch):
    h = build_chain(ChainConfig(n_ch, 1.0, -0.6, 0.9))
    a = decompose(h).eigenvalues
    b = decompose(h, blocked=False).eigenvalues
    assert np.abs(a - b).max() < 1e-10


def test_decompose_rejects():
    with pytest.raises(ValueError):
        decompose(Operator(np.array([[0, 1], [0, 0]]), 1))
    mixer = Operator(pauli_at("x", 0, 2).matrix, 2, hermitian=True, conserves_sz=True)
    with pytest.raises(ValueError):
        decompose(mixer)


def test_ground_state_examples():
    gs = ground_state(two_site(1.0, 1.0))
    singlet = (ket("01") - ket("10")) / math.sqrt(2)
    assert abs(abs(np.vdot(singlet, gs.amplitudes)) - 1) < 1e-12
    with pytest.raises(DegenerateGroundStateError, match="eps"):
        ground_state(two_site(-1.0, -1.0))


def test_ground_state_phase_convention():
    h = build_chain(ChainConfig(4, 1.0, 0.3, 0.8))
    a = ground_state(h).amplitudes
    first = a[np.flatnonzero(np.abs(a) > 1e-10)[0]]
    assert first.imag == 0 and first.real > 0
    assert np.array_equal(ground_state(h).amplitudes, a)


def test_ground_state_sector():
    h = build_chain(ChainConfig(2, 1.0, -1.0))
    with pytest.raises(DegenerateGroundStateError):
        ground_state(h)
    gs = ground_state(h, sector=1)
    assert abs(abs(gs.amplitudes[1]) - 1 / math.sqrt(2)) < 1e-12


def test_evolve_pure_examples():
    xx = decompose(two_site(1.0, 0.0))
    psi0 = PureState(ket("01"), 2)
    assert np.allclose(evolve_pure(psi0, xx, 0.0).amplitudes, psi0.amplitudes)
    z0, z1 = pauli_at("z", 0, 2), pauli_at("z", 1, 2)
    for t in (0.1, 0.45, 1.3):
        st = evolve_pure(psi0, xx, t)
        assert st.expect(z0).real == pytest.approx(math.cos(4 * t), abs=1e-12)
        assert st.expect(z1).real == pytest.approx(-math.cos(4 * t), abs=1e-12)
    eig = PureState(xx.eigenvectors[:, 0], 2)
    assert abs(abs(np.vdot(eig.amplitudes, evolve_pure(eig, xx, 3.7).amplitudes)) - 1) < 1e-12


def test_evolve_dimension_mismatch():
    spec = decompose(two_site(1.0, 0.0))
    with pytest.raises(ValueError):
        evolve_pure(PureState(ket("000"), 3), spec, 1.0)
    with pytest.raises(ValueError):
        evolve_mixed(PureState(ket("000"), 3).density_matrix(), spec, 1.0)


def test_evolve_mixed_examples(rng):
    h = build_total(ChainConfig(2, 1.0, 0.4, 0.7)).h_total
    spec = decompose(h)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi = PureState(psi / np.linalg.norm(psi), 4)
    for t in (0.3, 2.0):
        a = evolve_mixed(psi.density_matrix(), spec, t).rho
        b = evolve_pure(psi, spec, t).density_matrix().rho
        assert np.abs(a - b).max() < 1e-10
    th = thermal_state(spec, 0.9)
    assert np.abs(evolve_mixed(th, spec, 5.0).rho - th.rho).max() < 1e-10
    mix = MixedState(np.eye(16) / 16, 4)
    assert np.abs(evolve_mixed(mix, spec, 5.0).rho - mix.rho).max() < 1e-12


def test_evolve_mixed_preserves_state(rng):
    spec = decompose(build_total(ChainConfig(2, 1.0, -0.3, 1.5)).h_total)
    rho = MixedState(random_density(rng, 4, rank=3), 4)
    out = evolve_mixed(rho, spec, 1.7).rho
    assert abs(np.trace(out) - 1) < 1e-10
    assert np.abs(out - out.conj().T).max() < 1e-10
    assert np.linalg.eigvalsh(out).min() > -1e-9


def test_thermal_examples():
    h = two_site(1.0, 0.0)
    assert np.allclose(thermal_state(h, 0.0).rho, np.eye(4) / 4)
    spec = decompose(h)
    th = thermal_state(h, 1.0)
    pops = np.real(np.diag(spec.eigenvectors.conj().T @ th.rho @ spec.eigenvectors))
    ref = np.array([math.e**2, 1, 1, math.e**-2])
    assert np.allclose(pops, ref / ref.sum(), atol=1e-12)
    assert abs(np.trace(th.rho) - 1) < 1e-12


def test_thermal_zero_temperature_limit():
    h = build_chain(ChainConfig(4, 1.0, 0.5, 0.5))
    gs = ground_state(h).amplitudes
    th = thermal_state(h, 1e4)
    assert np.abs(th.rho - np.outer(gs, gs.conj())).max() < 1e-6
    with pytest.raises(ValueError):
        thermal_state(h, -1.0)


def test_channel_validation():
    assert Channel.thermal(2).describe() == "thermal(beta=2)"
    with pytest.raises(ValueError):
        Channel("thermal")
    with pytest.raises(ValueError):
        Channel.thermal(-1)
    with pytest.raises(ValueError):
        Channel("hot")


def test_tie_break_warns_and_rebuilds():
    cfg = ChainConfig(4, 1.0, -1.5)
    with pytest.warns(DegeneracyWarning):
        ens = chain_ensemble(cfg, Channel.ground())
    assert ens.tie_broken and ens.cfg.eps == pytest.approx(1e-6)
    with pytest.raises(DegenerateGroundStateError):
        chain_ensemble(cfg, Channel.ground(), tie_break=False)


def test_thermal_ensemble_weights():
    ens = chain_ensemble(ChainConfig(4, 1.0, 0.2, 0.4), Channel.thermal(0.7))
    total = sum(g.weights.sum() for g in ens.groups)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert sum(len(g.weights) for g in ens.groups) == 16


@pytest.mark.parametrize("channel", [Channel.ground(), Channel.thermal(1.3)])
def test_initial_state(channel):
    cfg = ChainConfig(4, 1.0, 0.5, 0.6)
    st = initial_state(cfg, channel)
    rho = st.density_matrix().rho if isinstance(st, PureState) else st.rho
    assert abs(np.trace(rho) - 1) < 1e-12
    assert concurrence_general(reduce_to_pair(st, 0, 1)) == pytest.approx(1.0, abs=1e-10)
    # the singlet carries no magnetization: total S_z equals the chain's
    n = cfg.n_total
    sz = sum(pauli_at("z", k, n) for k in range(n))
    chain_rho = thermal_state(build_chain(cfg), 1.3).rho if channel.kind == "thermal" else None
    if chain_rho is None:
        g = ground_state(build_chain(cfg)).amplitudes
        chain_rho = np.outer(g, g.conj())
    chain_sz = sum(pauli_at("z", k, 4) for k in range(4)).matrix
    assert np.trace(rho @ sz.matrix).real == pytest.approx(np.trace(chain_rho @ chain_sz).real, abs=1e-10)


def test_initial_state_layout():
    cfg = ChainConfig(2, 1.0, 0.0)
    psi = initial_state(cfg, Channel.ground()).amplitudes
    gs = ground_state(build_chain(cfg)).amplitudes
    ref = np.kron(gs, (ket("01") - ket("10")) / math.sqrt(2))
    assert np.abs(psi - ref).max() < 1e-12


CONS_CFG = ChainConfig(4, 1.0, -0.4, 0.9)


@pytest.fixture(scope="module")
def setup():
    h = build_total(CONS_CFG).h_total
    return h, decompose(h), initial_state(CONS_CFG, Channel.ground())


class TestConservation:
    cfg = CONS_CFG

    def test_unitarity(self, setup):
        _, spec, psi = setup
        jt = abs(self.cfg.j_tilde)
        for t in (0.1 / jt, 1 / jt, 10 / jt):
            assert abs(np.linalg.norm(evolve_pure(psi, spec, t).amplitudes) - 1) < 1e-10

    def test_energy_and_magnetization(self, setup):
        h, spec, psi = setup
        n = self.cfg.n_total
        sz = sum(pauli_at("z", k, n) for k in range(n))
        e0, m0 = psi.expect(h).real, psi.expect(sz).real
        for t in (0.5, 3.0, 17.0):
            st = evolve_pure(psi, spec, t)
            assert abs(st.expect(h).real - e0) <= 1e-9 * max(1, abs(e0))
            assert abs(st.expect(sz).real - m0) < 1e-9

    def test_composition(self, setup):
        _, spec, psi = setup
        a = evolve_pure(evolve_pure(psi, spec, 0.8), spec, 2.3).amplitudes
        b = evolve_pure(psi, spec, 3.1).amplitudes
        assert np.abs(a - b).max() < 1e-9


def test_warning_category_is_user_warning():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        chain_ensemble(ChainConfig(2, 1.0, -1.0), Channel.ground())
    assert any(issubclass(w.category, UserWarning) for w in rec)
