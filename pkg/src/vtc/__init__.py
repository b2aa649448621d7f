"""vtc: exact variational calculus for local gauge field theories.

A symbolic engine for the variational tricomplex: graded polynomial jet
algebra, bigraded local forms with horizontal and vertical differentials,
Euler operators and homotopy inversion of total divergences, presymplectic
currents with descent, derived multibrackets, and spatial reduction along a
Cauchy foliation.  A small model language and the ``vtc`` command drive the
whole pipeline for concrete field theories.
"""

from .kernel import (
    EVEN,
    ODD,
    ROLE_ANTIFIELD,
    ROLE_FIELD,
    ROLE_SOURCE,
    FieldSpec,
    GradedScalar,
    JetOrderCapExceeded,
    Spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "EVEN",
    "ODD",
    "ROLE_ANTIFIELD",
    "ROLE_FIELD",
    "ROLE_SOURCE",
    "FieldSpec",
    "GradedScalar",
    "JetOrderCapExceeded",
    "Spectrum",
    "__version__",
]
