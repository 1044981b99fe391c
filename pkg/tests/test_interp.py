from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccinterp.basis import build_basis
from ccinterp.ccsd import AmplitudeSet, antisymmetrize, solve_ccsd
from ccinterp.errors import NodeFailure, NonpositiveError, ShapeMismatch, ZeroReference, GapCollapse
from ccinterp.geometry import load_trajectory
from ccinterp.interp import (
    Interpolant,
    amplitude_error,
    chebyshev_nodes,
    error_bound_check,
    grid_points,
    interpolant_from_snapshots,
    lagrange_basis,
    load_interpolant,
    mle,
    offline_build,
    online_eval,
    save_interpolant,
)
from ccinterp.scf import ScfConfig
from ccinterp.snapshot import snapshot_bytes

from conftest import traj_path


# --- nodes and Lagrange basis ------------------------------------------------

def test_nodes_d1():
    assert chebyshev_nodes(1).nodes == pytest.approx([0.5], abs=1e-15)


def test_nodes_d2():
    assert chebyshev_nodes(2).nodes == pytest.approx([(1 - np.sqrt(2) / 2) / 2, (1 + np.sqrt(2) / 2) / 2], abs=1e-15)
    assert chebyshev_nodes(2).nodes == pytest.approx([0.1464466, 0.8535534], abs=1e-7)


def test_nodes_d3_middle():
    assert chebyshev_nodes(3).nodes[1] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("d", [1, 2, 5, 12, 40])
def test_node_invariants(d):
    ns = chebyshev_nodes(d)
    assert np.all(np.diff(ns.nodes) > 0)
    assert np.all((ns.nodes > 0) & (ns.nodes < 1))
    assert np.all(np.sign(ns.bary_weights[1:]) == -np.sign(ns.bary_weights[:-1]))
    assert np.abs(ns.bary_weights).max() == pytest.approx(1.0)


def test_zero_nodes_rejected():
    with pytest.raises(ValueError):
        chebyshev_nodes(0)


@pytest.mark.parametrize("d", [1, 3, 8])
def test_kronecker_property(d):
    ns = chebyshev_nodes(d)
    for j, mu in enumerate(ns.nodes):
        assert np.array_equal(lagrange_basis(ns, mu), np.eye(d)[j])


@settings(max_examples=50)
@given(st.integers(1, 30), st.floats(0, 1))
def test_partition_of_unity(d, mu):
    assert lagrange_basis(chebyshev_nodes(d), mu).sum() == pytest.approx(1.0, abs=1e-12)


def test_cubic_reproduced_exactly():
    ns = chebyshev_nodes(4)
    f = ns.nodes ** 3
    for mu in np.random.default_rng(0).random(20):
        assert lagrange_basis(ns, mu) @ f == pytest.approx(mu ** 3, abs=1e-13)


def test_grid_includes_endpoints():
    g = grid_points()
    assert len(g) == 50 and g[0] == 0.0 and g[-1] == 1.0


# --- metrics -----------------------------------------------------------------

def _amps(scale=1.0):
    rng = np.random.default_rng(1)
    return AmplitudeSet(scale * rng.standard_normal((4, 2)), antisymmetrize(scale * rng.standard_normal((4, 4, 2, 2))))


def test_amplitude_error_examples():
    t = _amps()
    assert amplitude_error(t, t) == 0.0
    assert amplitude_error(_amps(0.0), t) == pytest.approx(1.0)
    assert amplitude_error(t.scaled(1.01), t) == pytest.approx(0.01, abs=1e-12)


def test_amplitude_error_zero_reference():
    with pytest.raises(ZeroReference):
        amplitude_error(_amps(), _amps(0.0))


def test_amplitude_error_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        amplitude_error(_amps(), AmplitudeSet(np.ones((2, 2)), np.ones((2, 2, 2, 2))))


def test_mle_examples():
    assert mle([1e-3] * 7) == pytest.approx(-3)
    assert mle([1e-2, 1e-4]) == pytest.approx(-3)
    assert mle([1.0]) == 0.0


@pytest.mark.parametrize("bad", [[], [0.0, 1.0], [-1.0], [float("nan")]])
def test_mle_rejects_nonpositive(bad):
    with pytest.raises(NonpositiveError):
        mle(bad)


# --- trajectory interpolation ------------------------------------------------

@pytest.fixture(scope="module")
def h2_traj():
    traj = load_trajectory(traj_path("h2_stretch"))
    return traj, build_basis(traj.gamma0, "sto-3g")


@pytest.fixture(scope="module")
def h2_itp(h2_traj):
    traj, basis = h2_traj
    return offline_build(traj, basis, 4)


def test_offline_build_snapshots(h2_itp):
    snaps = h2_itp.snapshots
    assert len(snaps) == 4
    assert [s.mu for s in snaps] == list(h2_itp.node_set.nodes)
    # E_hf rises monotonically as the bond is stretched beyond equilibrium
    assert np.all(np.diff([s.E_hf for s in snaps]) > 0)


def test_offline_build_deterministic(h2_traj, h2_itp):
    again = offline_build(*h2_traj, 4)
    for a, b in zip(h2_itp.snapshots, again.snapshots):
        assert snapshot_bytes(a) == snapshot_bytes(b)


def test_node_reproduction(h2_itp):
    for s in h2_itp.snapshots:
        t = online_eval(h2_itp, s.mu)
        assert np.abs(t.vector() - AmplitudeSet(s.T1, s.T2).vector()).max() < 1e-12


def test_linearity(h2_itp):
    doubled = replace(h2_itp, snapshots=tuple(replace(s, T1=2 * s.T1, T2=2 * s.T2) for s in h2_itp.snapshots))
    mu = 0.37
    st = h2_itp.target(mu)
    a, b = online_eval(h2_itp, mu, st), online_eval(doubled, mu, st)
    assert np.abs(b.vector() - 2 * a.vector()).max() < 1e-14


def test_single_node_is_transported_constant(h2_traj):
    itp = offline_build(*h2_traj, 1)
    mu = 0.8
    st = itp.target(mu)
    t = online_eval(itp, mu, st)
    s = itp.snapshots[0]
    from ccinterp.exctensor import TransformPair, cross_transform_amplitudes
    want = cross_transform_amplitudes(AmplitudeSet(s.T1, s.T2), st.tp, TransformPair.from_spatial(s.C, s.S, s.n_occ))
    assert np.abs(t.vector() - want.antisymmetrized().vector()).max() < 1e-14


def test_error_decreases_with_d(h2_traj):
    traj, basis = h2_traj
    mus = [0.13, 0.5, 0.91]
    errs = []
    for d in (2, 4, 6):
        itp = offline_build(traj, basis, d)
        e = []
        for mu in mus:
            st = itp.target(mu)
            e.append(amplitude_error(online_eval(itp, mu, st), solve_ccsd(st.mo).amplitudes))
        errs.append(max(e))
    assert errs[0] > errs[1] > errs[2]


def test_bound_at_node_and_off_node(h2_itp):
    s = h2_itp.snapshots[1]
    rep = error_bound_check(h2_itp, s.mu, AmplitudeSet(s.T1, s.T2))
    assert rep.ok and max(rep.lhs) <= 1e-10 and max(rep.rhs) <= 1e-10
    mu = 0.42
    st = h2_itp.target(mu)
    rep = error_bound_check(h2_itp, mu, solve_ccsd(st.mo).amplitudes, st)
    assert rep.ok
    assert rep.lhs[1] > 0


def test_degree_exactness_with_fixed_orbitals(h2_itp):
    """Identical (S, C) at every node and polynomial amplitudes of degree < d: exact."""
    base = h2_itp.snapshots[0]
    rng = np.random.default_rng(7)
    c1 = [rng.standard_normal(base.T1.shape) for _ in range(3)]
    c2 = [antisymmetrize(rng.standard_normal(base.T2.shape)) for _ in range(3)]
    poly = lambda c, mu: c[0] + mu * c[1] + mu ** 2 * c[2]
    snaps = tuple(replace(s, S=base.S, C=base.C, T1=poly(c1, s.mu), T2=poly(c2, s.mu)) for s in h2_itp.snapshots)
    itp = replace(h2_itp, snapshots=snaps)
    st = h2_itp.target(base.mu)   # target orbitals equal the shared node orbitals
    for mu in (0.05, 0.3, 0.77):
        t = online_eval(itp, mu, st)
        assert np.abs(t.t1 - poly(c1, mu)).max() < 1e-11
        assert np.abs(t.t2 - poly(c2, mu)).max() < 1e-11


def test_interpolant_rejects_wrong_count(h2_itp):
    with pytest.raises(ShapeMismatch):
        Interpolant(h2_itp.node_set, h2_itp.snapshots[:3], h2_itp.trajectory, h2_itp.basis, 2)


def test_save_load_round_trip(h2_itp, tmp_path):
    path = save_interpolant(h2_itp, tmp_path / "d4")
    back = load_interpolant(path, h2_itp.trajectory, basis=h2_itp.basis)
    mu = 0.61
    st = h2_itp.target(mu)
    assert np.abs(online_eval(back, mu, st).vector() - online_eval(h2_itp, mu, st).vector()).max() < 1e-13


def test_interpolant_from_snapshots_generic_weights(h2_itp):
    itp = interpolant_from_snapshots(list(reversed(h2_itp.snapshots)), h2_itp.trajectory)
    assert np.allclose(itp.node_set.bary_weights, h2_itp.node_set.bary_weights, atol=1e-12)


def test_node_failure_is_tagged(h2_traj):
    traj, basis = h2_traj
    # the gap shrinks as H2 stretches; a demanding gap_min fails at the outer nodes
    with pytest.raises(NodeFailure) as exc:
        offline_build(traj, basis, 4, scf_config=ScfConfig(gap_min=1.0))
    assert isinstance(exc.value.cause, GapCollapse)
    assert exc.value.node_index >= 1
    assert f"{exc.value.mu:.4f}"[:4] in str(exc.value)
