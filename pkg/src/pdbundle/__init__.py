"""Primal-dual proximal bundle methods with gap certificates.

Subpackages and modules:

* ``core``: oracle contracts, composites, cuts.
* ``bundle``: cut models and their exact prox solves.
* ``pdcp``: one cutting-plane cycle on a prox subproblem.
* ``pdpb``: the outer proximal loop and the PDS baseline.
* ``cg``: conditional gradient on the dual of the prox subproblem.
* ``saddle``: CS-SPP and PB-SPP for convex-concave saddle problems.
* ``matrix_game``: the regularized sparse matrix-game benchmark.
* ``harness``: CLI, runs, checks, reports.
"""

from .bundle import initial_model, solve_model_prox, update_model
from .cg import cg_run, cg_variant_extract, duality_check, lmo_dual, wolfe_gap
from .core import (AffineOracle, Cut, LinfLinearOracle, MaxAffineOracle, SimplexIndicator,
                   SubgradientOracle, ZeroComposite, linearize, project_simplex)
from .errors import (CapabilityError, CertificationError, ConfigError, InfeasibleDualError,
                     InstanceError, PdBundleError, SolverToleranceError, UsageError)
from .matrix_game import GameInstance, exact_fz, generate_instance, to_saddle_instance
from .pdcp import PdcpConfig, certificate_value, gap_certificate, pdcp_run
from .pdpb import pdpb_gap_report, pdpb_run, pds_run
from .saddle import cs_spp_run, pb_spp_run, saddle_gap

__version__ = "0.1.0"
