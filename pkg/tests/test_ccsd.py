import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccinterp.ccsd import (
    AmplitudeSet,
    CcConfig,
    antisymmetrize,
    cc_energy,
    cc_residual,
    jacobian_subspace_singular_values,
    mp2_guess,
    solve_ccsd,
)
from ccinterp.errors import CcNotConverged, DegenerateDenominator
from ccinterp.fci import amplitudes_from_fci, fci_energy
from ccinterp.scf import MoIntegrals

from conftest import H2_ATOMS, single_point

H4 = [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.6)), ("H", (0.0, 0.0, 3.4)), ("H", (0.0, 0.0, 5.0))]


@pytest.fixture(scope="module")
def h4():
    return single_point(H4)


@pytest.fixture(scope="module")
def h4_solution(h4):
    return solve_ccsd(h4.mo, config=CcConfig(tol_r=1e-11, tol_e=1e-12))


def _random_amplitudes(mo, rng, scale=0.05):
    nv, no = mo.n_virt_so, mo.n_occ_so
    return AmplitudeSet(scale * rng.standard_normal((nv, no)),
                        antisymmetrize(scale * rng.standard_normal((nv, nv, no, no))))


# --- exactness for two electrons --------------------------------------------------

@pytest.mark.parametrize("fixture", ["h2", "h2_631g"])
def test_ccsd_equals_fci_for_two_electrons(fixture, request):
    p = request.getfixturevalue(fixture)
    t0 = time.perf_counter()
    sol = solve_ccsd(p.mo)
    e_fci, _, _ = fci_energy(p.mo, 2)
    assert time.perf_counter() - t0 < 10
    assert p.scf.E_hf + sol.e_corr == pytest.approx(e_fci, abs=1e-9)


def test_fci_matches_reference_engine(h2, h2_631g, reference):
    assert fci_energy(h2.mo, 2)[0] == pytest.approx(reference["h2_sto3g"]["E_fci"], abs=1e-9)
    assert fci_energy(h2_631g.mo, 2)[0] == pytest.approx(reference["h2_631g"]["E_fci"], abs=1e-9)


def test_residual_vanishes_at_fci_amplitudes(h2_631g):
    _, vec, dets = fci_energy(h2_631g.mo, 2)
    t = amplitudes_from_fci(h2_631g.mo, vec, dets)
    assert np.linalg.norm(cc_residual(t, h2_631g.mo).vector()) < 1e-10
    assert h2_631g.scf.E_hf + cc_energy(t, h2_631g.mo) == pytest.approx(fci_energy(h2_631g.mo, 2)[0], abs=1e-10)


def test_fci_start_converges_in_one_update(h2_631g):
    _, vec, dets = fci_energy(h2_631g.mo, 2)
    t = amplitudes_from_fci(h2_631g.mo, vec, dets)
    assert solve_ccsd(h2_631g.mo, guess=t).iterations <= 1


# --- reference engine --------------------------------------------------------

def test_water_correlation_energy(reference):
    r = reference["h2o_sto3g"]
    p = single_point(r["atoms"])
    sol = solve_ccsd(p.mo, config=CcConfig(tol_r=1e-10, tol_e=1e-11))
    assert sol.e_corr == pytest.approx(r["e_ccsd_corr"], abs=1e-8)


def test_mp2_energy(h2, reference):
    assert cc_energy(mp2_guess(h2.mo), h2.mo) == pytest.approx(reference["h2_sto3g"]["e_mp2"], abs=1e-10)


# --- residual properties -----------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_complex_step_matches_central_difference(h4, seed):
    """Directional derivative of Q: complex step (no cancellation) vs central differences."""
    rng = np.random.default_rng(seed)
    t = _random_amplitudes(h4.mo, rng)
    d = _random_amplitudes(h4.mo, rng, scale=1.0)
    h = 1e-20
    tc = AmplitudeSet(t.t1 + 1j * h * d.t1, t.t2 + 1j * h * d.t2)
    jd_cs = cc_residual(tc, h4.mo).vector().imag / h
    eps = 1e-5
    jd_fd = (cc_residual(t + d.scaled(eps), h4.mo).vector() - cc_residual(t - d.scaled(eps), h4.mo).vector()) / (2 * eps)
    assert np.abs(jd_cs - jd_fd).max() < 1e-6 * max(1.0, np.abs(jd_cs).max())


def test_residual_of_zero_is_integral_term(h4):
    mo = h4.mo
    r = cc_residual(AmplitudeSet.zeros(mo.n_virt_so, mo.n_occ_so), mo)
    # Q_ij^ab(0) = <ab||ij>, Q_i^a(0) = f_ai
    assert np.allclose(r.t2, mo.eri_as[mo.v, mo.v, mo.o, mo.o], atol=1e-12)
    assert np.allclose(r.t1, mo.f[mo.v, mo.o], atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_residual_preserves_antisymmetry(h4, seed):
    t = _random_amplitudes(h4.mo, np.random.default_rng(seed))
    assert cc_residual(t, h4.mo).antisymmetry_error() < 1e-12


def test_solution_properties(h4, h4_solution):
    sol = h4_solution
    assert sol.final_residual_norm < 1e-11
    assert sol.amplitudes.antisymmetry_error() < 1e-12
    assert np.linalg.norm(cc_residual(sol.amplitudes, h4.mo).vector()) < 1e-11
    assert sol.e_corr < 0


def test_jacobian_well_conditioned_at_solution(h4, h4_solution):
    sv = jacobian_subspace_singular_values(h4_solution.amplitudes, h4.mo, k=20)
    assert sv.min() > 1e-6


def test_solution_is_fixed_point(h4, h4_solution):
    again = solve_ccsd(h4.mo, guess=h4_solution.amplitudes)
    assert again.iterations <= 1
    assert again.e_corr == pytest.approx(h4_solution.e_corr, abs=1e-11)


def test_deterministic(h4):
    a, b = solve_ccsd(h4.mo), solve_ccsd(h4.mo)
    assert np.array_equal(a.amplitudes.vector(), b.amplitudes.vector())
    assert a.iterations == b.iterations


def test_without_diis_converges_to_same_point(h4, h4_solution):
    sol = solve_ccsd(h4.mo, config=CcConfig(use_diis=False, max_iter=500, tol_r=1e-11, tol_e=1e-12))
    assert sol.e_corr == pytest.approx(h4_solution.e_corr, abs=1e-10)


def test_nonantisymmetric_guess_is_symmetrized(h4, h4_solution):
    t = h4_solution.amplitudes
    skew = AmplitudeSet(t.t1, t.t2 + 1e-3 * np.random.default_rng(0).standard_normal(t.t2.shape))
    sol = solve_ccsd(h4.mo, guess=skew)
    assert sol.e_corr == pytest.approx(h4_solution.e_corr, abs=1e-9)


def test_not_converged(h4):
    with pytest.raises(CcNotConverged) as exc:
        solve_ccsd(h4.mo, config=CcConfig(max_iter=2))
    assert exc.value.iterations == 2


def test_degenerate_denominator(h2):
    mo = h2.mo
    f = mo.f.copy()
    f[np.arange(2, 4), np.arange(2, 4)] = f[0, 0]
    flat = MoIntegrals(f=f, eri_as=mo.eri_as, n_occ_so=mo.n_occ_so, n_virt_so=mo.n_virt_so,
                       e_hf=mo.e_hf, eps=np.diag(f), h=mo.h, e_nuc=mo.e_nuc)
    with pytest.raises(DegenerateDenominator):
        mp2_guess(flat)


def test_amplitude_set_vector_round_trip(h4_solution):
    t = h4_solution.amplitudes
    nv, no = t.t1.shape
    back = AmplitudeSet.from_vector(t.vector(), nv, no)
    assert np.array_equal(back.t1, t.t1) and np.array_equal(back.t2, t.t2)


def test_nearby_geometry_guess_saves_iterations(h4_solution):
    shifted = [(s, (x, y, z * 1.02)) for s, (x, y, z) in H4]
    p = single_point(shifted)
    cold = solve_ccsd(p.mo)
    warm = solve_ccsd(p.mo, guess=h4_solution.amplitudes)
    assert warm.iterations < cold.iterations
    assert warm.e_corr == pytest.approx(cold.e_corr, abs=1e-9)
