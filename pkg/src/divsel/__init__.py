"""Divergence selection by maximum EDA likelihood."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .divergence import *  # noqa: F401,F403
from .divergence import __all__ as _div_all
from .quadrature import *  # noqa: F401,F403
from .quadrature import __all__ as _quad_all
from .tweedie import *  # noqa: F401,F403
from .densities import *  # noqa: F401,F403
from .densities import __all__ as _dens_all
from .estimators import *  # noqa: F401,F403
from .estimators import __all__ as _est_all
from .factorization import (
    FactorizationModel, FitConfig, Init, NmfFitter, PnmfFitter, nmf_alpha, nmf_beta, pnmf_gamma,
)
from .factorization import Kind as FactorizationKind
from .datagen import (
    DatasetSpec, atomic_write_text, block_labels, fingerprint, gen_dataset, read_matrix, write_matrix,
)
from .datagen import Kind as DatasetKind
from .report import RunReport

__all__ = sorted(set(
    ["__version__", "BACKEND", "RunReport", "FactorizationKind", "DatasetKind",
     "FactorizationModel", "FitConfig", "Init", "NmfFitter", "PnmfFitter",
     "nmf_alpha", "nmf_beta", "pnmf_gamma", "DatasetSpec", "atomic_write_text",
     "block_labels", "fingerprint", "gen_dataset", "read_matrix", "write_matrix"]
    + list(_div_all) + list(_quad_all) + list(_dens_all) + list(_est_all)
))
