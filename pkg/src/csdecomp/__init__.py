"""Complete 2x2 CS decomposition of partitioned unitary matrices.

``csd(CsdProblem(x, p, q))`` returns factors with
``x ~ diag(U1, U2) @ [[C, S, 0, 0], [0, 0, I, 0], [-S, C, 0, 0], [0, 0, 0, I]] @ diag(V1, V2)^*``.
"""

from .bdb import AngleSet, SignatureQuadruple, blocks, embed, extract_angles, fix_signs, materialize
from .driver import (BlockRange, CsdFactors, ResidualReport, ShiftPair, StepResult, choose_shifts,
                     cs_middle, csd, csd_step, find_block, residual_report, round_negligible)
from .errors import ConvergenceError, InvalidInputError, RejectedInputError, StructureError
from .reduction import BidiagonalizationResult, CsdProblem, bidiagonalize
from .steps import Bidiagonal, PreferredQr, SymTridiagonal, preferred_qr_explicit, qr_step, svd_step

__version__ = "0.1.0"

__all__ = [
    "AngleSet", "SignatureQuadruple", "blocks", "embed", "extract_angles", "fix_signs", "materialize",
    "BlockRange", "CsdFactors", "ResidualReport", "ShiftPair", "StepResult", "choose_shifts",
    "cs_middle", "csd", "csd_step", "find_block", "residual_report", "round_negligible",
    "ConvergenceError", "InvalidInputError", "RejectedInputError", "StructureError",
    "BidiagonalizationResult", "CsdProblem", "bidiagonalize",
    "Bidiagonal", "PreferredQr", "SymTridiagonal", "preferred_qr_explicit", "qr_step", "svd_step",
]
