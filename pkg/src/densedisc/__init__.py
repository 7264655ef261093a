"""Polynomial holomorphic discs that pass through prescribed points.

Modules: ``hypgeo`` (Poincare disc), ``polymap`` (polynomial maps into C^m),
``mergelyan`` (approximation on the disc plus a segment), ``conformal``
(Riemann maps of thin neighborhoods), ``denseset`` (dense point lists),
``driver`` (stage construction and certificates), ``cli``.
"""

from .driver import RunConfig, StageCertificate, run, run_stage, verify_certificates
from .polymap import PolyMap

__all__ = ["PolyMap", "RunConfig", "StageCertificate", "run", "run_stage",
           "verify_certificates"]
__version__ = "0.1.0"
