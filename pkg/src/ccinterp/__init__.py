"""CCSD amplitude interpolation along nuclear trajectories.

Pipeline: Gaussian integrals -> RHF -> spin-orbital CCSD at Chebyshev nodes,
then barycentric interpolation of the amplitudes after carrying them between
geometries through the AO basis.
"""

from .basis import BasisSet, build_basis, load_basis_library
from .ccsd import AmplitudeSet, CcConfig, CcSolution, cc_energy, cc_residual, mp2_guess, solve_ccsd
from .errors import CcInterpError, InputError, NumericalFailure, SnapshotError
from .exctensor import ExcTensor, TransformPair, ao_to_mo, cross_transform, mo_to_ao, n_mode_product
from .geometry import Geometry, Mode, Trajectory, load_geometry, load_trajectory, parse_geometry
from .integrals import IntegralBundle, compute_integrals
from .interp import (
    Interpolant,
    NodeSet,
    amplitude_error,
    chebyshev_nodes,
    error_bound_check,
    lagrange_basis,
    mle,
    offline_build,
    online_eval,
)
from .scf import ScfConfig, ScfSolution, mo_transform, scf_iterate
from .snapshot import Snapshot, read_snapshot, write_snapshot

__version__ = "0.1.0"
