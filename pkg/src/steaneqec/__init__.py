"""Simulation of Steane-type and flag-based QEC on small stabilizer codes."""

__version__ = "0.1.0"

from .codes import StabilizerCode, Syndrome, build_lookup_table, flag_lookup_table, make_code  # noqa: E402
from .noise import NoiseModel  # noqa: E402
from .pauli import PauliString  # noqa: E402
from .stats import FidelityEstimate, wilson_bounds  # noqa: E402

__all__ = [
    "__version__",
    "FidelityEstimate",
    "NoiseModel",
    "PauliString",
    "StabilizerCode",
    "Syndrome",
    "build_lookup_table",
    "flag_lookup_table",
    "make_code",
    "wilson_bounds",
]
