"""Numerical spectral toolkit for single-atom Coulomb radial eigenproblems.

Subpackages cover the exact hydrogenic special functions (`specfun`), the
finite-difference radial operators and their relativistic square-root
variant (`radial_operator`), the reference electron density and error
budgets (`density`), spectral-cluster and perturbation experiments
(`clusters`), Riesz projectors and trace identities (`projectors`), and
empirical envelope/spacing/tail scans (`bounds_lab`).  The command-line
front end lives in `cli`.
"""

__version__ = "0.1.0"

from . import specfun
from . import radial_operator
from . import perturbation
from . import density
from . import clusters
from . import projectors
from . import bounds_lab

__all__ = [
    "specfun",
    "radial_operator",
    "perturbation",
    "density",
    "clusters",
    "projectors",
    "bounds_lab",
    "__version__",
]
