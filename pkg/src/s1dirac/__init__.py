"""Dirac spectra of collapsing circle bundles, sector by sector."""

from .eigensolve import fourier_diff_matrix, hermitian_eigenvalues
from .geometry import (
    BaseTorus,
    BundleGeometry,
    CollapseFamily,
    ConnectionData,
    FiberProfile,
    GeometryError,
    SpinStructureSpec,
    clifford_norm,
    profile_functionals,
    torus_spin_structures,
    validate_collapse_family,
)
from .model_spectra import (
    EigenvalueList,
    circle_dirac_spectrum,
    flat_torus_spectrum,
    landau_twisted_torus_spectrum,
)
from .sectors import (
    SectorOperator,
    SpectrumTable,
    assemble_family,
    assemble_spectrum,
    build_warped_sector_operator,
    combine_constant_fiber,
    zero_order_enclosure,
)
from .theorems import (
    BoundReport,
    check_thm1_convergence,
    check_thm1_lower,
    check_thm1_upper,
    check_thm2,
    check_thm2_upper,
    check_thm3,
)
from .config import ConfigError, ExperimentConfig, parse_config
from .experiment import run_collapse_experiment
from .output import emit_results

__version__ = "0.1.0"
