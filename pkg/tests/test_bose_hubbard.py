import math

import numpy as np
import pytest
import scipy.sparse as sp

import aqsim
from aqsim import BasisSizeError, BoseHubbardParams
from aqsim.bose_hubbard import basis_size, hopping_matrix, onsite_pair_count

from oracles import chain_eigensystem

SQRT17 = math.sqrt(17.0)


def test_basis_enumeration_order():
    basis = aqsim.enumerate_basis(2, 2)
    assert [tuple(s) for s in basis.states] == [(2, 0), (1, 1), (0, 2)]
    assert len(basis) == 3


def test_basis_vacuum():
    basis = aqsim.enumerate_basis(3, 0)
    assert [tuple(s) for s in basis.states] == [(0, 0, 0)]


def test_basis_count():
    basis = aqsim.enumerate_basis(4, 4)
    assert len(basis) == 35 == math.comb(7, 4)
    assert all(s.sum() == 4 for s in basis.states)


def test_basis_index_bijective():
    basis = aqsim.enumerate_basis(3, 3)
    for i, state in enumerate(basis.states):
        assert basis.index(state) == i
    with pytest.raises(KeyError):
        basis.index((3, 1, 0))  # wrong total


def test_basis_cap():
    with pytest.raises(BasisSizeError):
        aqsim.enumerate_basis(30, 30)
    assert basis_size(30, 30) == math.comb(59, 30)


@pytest.mark.parametrize("hop, interaction, want", [
    (0.0, 4.0, [0.0, 4.0, 4.0]),
    (1.0, 0.0, [-2.0, 0.0, 2.0]),
    (1.0, 1.0, [(1 - SQRT17) / 2, 1.0, (1 + SQRT17) / 2]),
])
def test_two_site_closed_forms(hop, interaction, want):
    basis = aqsim.enumerate_basis(2, 2)
    h = aqsim.build_bh(BoseHubbardParams.chain(2, hop, interaction), basis)
    vals = np.linalg.eigvalsh(h.dense())
    assert np.abs(vals - np.sort(want)).max() <= 1e-12


def test_build_bh_is_hermitian_and_number_conserving():
    basis = aqsim.enumerate_basis(4, 3)
    h = aqsim.build_bh(BoseHubbardParams.chain(4, 0.7, 1.3), basis)
    m = h.matrix.tocoo()
    assert abs(h.matrix - h.matrix.getH()).max() == 0.0
    totals = basis.states.sum(axis=1)
    for r, c in zip(m.row, m.col):
        assert totals[r] == totals[c] == 3
    number_op = sp.diags(totals.astype(float))
    comm = h.matrix @ number_op - number_op @ h.matrix
    assert (abs(comm).max() if comm.nnz else 0.0) <= 1e-12


def test_geometry_site_mismatch():
    basis = aqsim.enumerate_basis(3, 2)
    with pytest.raises(ValueError):
        aqsim.build_bh(BoseHubbardParams.chain(4, 1.0, 1.0), basis)


def test_params_validation():
    with pytest.raises(ValueError):
        BoseHubbardParams(3, 1.0, 1.0, ((0, 0),))
    with pytest.raises(ValueError):
        BoseHubbardParams(3, 1.0, 1.0, ((0, 3),))
    with pytest.raises(ValueError):
        BoseHubbardParams(3, 1.0, 1.0, ((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        BoseHubbardParams.chain(2, 1.0, 0.0).j_ratio
    assert BoseHubbardParams.chain(2, 1.0, 4.0).j_ratio == 0.25


def test_plaquette_edges():
    assert len(aqsim.plaquette_edges(2, 2)) == 4
    assert len(aqsim.plaquette_edges(2, 3)) == 7
    params = BoseHubbardParams.plaquette(2, 2, 1.0, 1.0)
    assert params.n_sites == 4


def test_spectrum_invariant_under_relabeling():
    basis = aqsim.enumerate_basis(4, 4)
    chain = BoseHubbardParams.chain(4, 1.0, 2.0)
    perm = (2, 0, 3, 1)
    relabeled = BoseHubbardParams(
        4, 1.0, 2.0, tuple((perm[a], perm[b]) for a, b in chain.edges))
    va = np.linalg.eigvalsh(aqsim.build_bh(chain, basis).dense())
    vb = np.linalg.eigvalsh(aqsim.build_bh(relabeled, basis).dense())
    assert np.abs(va - vb).max() <= 1e-10


def test_free_boson_spectrum_from_single_particle_energies():
    # U = 0: every many-body level is an occupation filling of chain modes
    for sites in (2, 3, 4):
        single, _ = chain_eigensystem(sites, coupling=-1.0)  # hopping sign: -J
        for bosons in (0, 1, 2, 3):
            basis = aqsim.enumerate_basis(sites, bosons)
            h = aqsim.build_bh(BoseHubbardParams.chain(sites, 1.0, 0.0), basis)
            got = np.sort(np.linalg.eigvalsh(h.dense()))
            want = np.sort(basis.states @ np.sort(single))
            assert np.abs(got - want).max() <= 1e-8


def test_low_spectrum_diagonal_case():
    diag = sp.diags([3.0, -1.0, 2.0]).tocsr()
    h = aqsim.Hamiltonian(diag)
    vals, _ = aqsim.low_spectrum(h, 3)
    assert np.array_equal(vals, [-1.0, 2.0, 3.0])


def test_low_spectrum_ground_state_closed_form():
    basis = aqsim.enumerate_basis(2, 2)
    h = aqsim.build_bh(BoseHubbardParams.chain(2, 1.0, 1.0), basis)
    vals, vecs = aqsim.low_spectrum(h, 1)
    assert vals[0] == pytest.approx((1 - SQRT17) / 2, abs=1e-12)
    residual = np.linalg.norm(h.matrix @ vecs[:, 0] - vals[0] * vecs[:, 0])
    assert residual <= 1e-9


def test_low_spectrum_sparse_matches_dense():
    basis = aqsim.enumerate_basis(8, 6)  # 1716 states: Lanczos path
    h = aqsim.build_bh(BoseHubbardParams.chain(8, 1.0, 3.0), basis)
    vals, _ = aqsim.low_spectrum(h, 6)
    dense = np.linalg.eigvalsh(h.dense())[:6]
    assert np.abs(vals - dense).max() <= 1e-10


def test_low_spectrum_k_range():
    basis = aqsim.enumerate_basis(2, 2)
    h = aqsim.build_bh(BoseHubbardParams.chain(2, 1.0, 1.0), basis)
    with pytest.raises(ValueError):
        aqsim.low_spectrum(h, 4)


def test_condensate_fraction_mott_and_free():
    basis = aqsim.enumerate_basis(2, 2)
    mott = np.zeros(3)
    mott[basis.index((1, 1))] = 1.0
    assert aqsim.condensate_fraction(mott, basis) == pytest.approx(0.5, abs=1e-12)
    basis4 = aqsim.enumerate_basis(4, 4)
    h = aqsim.build_bh(BoseHubbardParams.chain(4, 1.0, 0.0), basis4)
    _, vecs = aqsim.low_spectrum(h, 1)
    assert aqsim.condensate_fraction(vecs[:, 0], basis4) == pytest.approx(1.0, abs=1e-9)


def test_condensate_fraction_monotone_in_interaction():
    basis = aqsim.enumerate_basis(4, 4)
    fractions = []
    for ratio in (0.0, 1.0, 2.0, 4.0, 8.0, 16.0):
        h = aqsim.build_bh(BoseHubbardParams.chain(4, 1.0, ratio), basis)
        _, vecs = aqsim.low_spectrum(h, 1)
        fractions.append(aqsim.condensate_fraction(vecs[:, 0], basis))
    assert all(a >= b - 1e-12 for a, b in zip(fractions, fractions[1:]))


def test_condensate_fraction_rejects_vacuum():
    basis = aqsim.enumerate_basis(2, 0)
    with pytest.raises(ValueError):
        aqsim.condensate_fraction(np.ones(1), basis)


def test_one_body_matrix_is_hermitian_with_trace_n():
    rng = np.random.default_rng(8)
    basis = aqsim.enumerate_basis(3, 3)
    psi = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    psi /= np.linalg.norm(psi)
    rho = aqsim.one_body_density_matrix(psi, basis)
    assert np.abs(rho - rho.conj().T).max() <= 1e-12
    assert np.trace(rho).real == pytest.approx(3.0, abs=1e-12)


def test_absorption_peak_at_drive_coupled_gap():
    # ED fixes the expected transition: the pair-count drive couples the
    # ground state to the symmetric excited state, gap sqrt(17)
    basis = aqsim.enumerate_basis(2, 2)
    params = BoseHubbardParams.chain(2, 1.0, 1.0)
    grid = np.linspace(0.4, 0.9, 26)
    spectrum = aqsim.modulation_absorption(params, basis, 0.03, grid, 60.0)
    step = grid[1] - grid[0]
    assert abs(spectrum.peak_frequency() - SQRT17 / (2 * np.pi)) <= step
    peak = spectrum.absorbed_energy.max()
    far = 10 * SQRT17 / (2 * np.pi)
    off = aqsim.modulation_absorption(params, basis, 0.03, np.array([far]), 60.0)
    assert off.absorbed_energy[0] <= 1e-3 * peak


def test_absorption_zero_drive():
    basis = aqsim.enumerate_basis(2, 2)
    params = BoseHubbardParams.chain(2, 1.0, 1.0)
    spectrum = aqsim.modulation_absorption(params, basis, 0.0,
                                           np.linspace(0.3, 0.8, 4), 20.0)
    assert np.all(spectrum.absorbed_energy <= 1e-9)


def test_absorption_validation():
    basis = aqsim.enumerate_basis(2, 2)
    params = BoseHubbardParams.chain(2, 1.0, 1.0)
    with pytest.raises(ValueError):
        aqsim.modulation_absorption(params, basis, 0.2, [0.5], 10.0)
    with pytest.raises(ValueError):
        aqsim.modulation_absorption(params, basis, 0.03, [0.5, 0.4], 10.0)
    with pytest.raises(ValueError):
        aqsim.modulation_absorption(BoseHubbardParams.chain(2, 0.0, 0.0),
                                    basis, 0.03, [0.5], 10.0)


def test_absorption_flags_unresolved_low_frequencies():
    basis = aqsim.enumerate_basis(2, 2)
    params = BoseHubbardParams.chain(2, 1.0, 1.0)
    with pytest.warns(UserWarning, match="unresolved"):
        aqsim.modulation_absorption(params, basis, 0.03, [0.01, 0.7], 20.0)


def test_drive_coupled_gap_skips_uncoupled_state():
    # first excited state (antisymmetric, gap (1+sqrt17)/2 - E0 ... ) has no
    # pair-count matrix element; the reported gap is the symmetric one
    basis = aqsim.enumerate_basis(2, 2)
    gap = aqsim.drive_coupled_gap(BoseHubbardParams.chain(2, 1.0, 1.0), basis, k=3)
    assert gap == pytest.approx(SQRT17, abs=1e-9)


def test_gap_softens_toward_crossover():
    basis = aqsim.enumerate_basis(6, 6)
    gaps = [aqsim.drive_coupled_gap(BoseHubbardParams.chain(6, j, 1.0), basis, k=8)
            for j in (0.02, 0.05, 0.1, 0.2)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_pair_count_diagonal():
    basis = aqsim.enumerate_basis(2, 2)
    assert np.array_equal(onsite_pair_count(basis), [1.0, 0.0, 1.0])
    hop = hopping_matrix(BoseHubbardParams.chain(2, 1.0, 9.9), basis)
    assert hop[basis.index((2, 0)), basis.index((1, 1))] == pytest.approx(-np.sqrt(2))
