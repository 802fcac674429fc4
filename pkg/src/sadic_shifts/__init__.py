"""Truncated shift operators on the Hilbert space of the s-adic tree.

The four shifts (Bunce-Deddens ``U``, Hensel ``V``, Bernoulli ``S``, Serre
``W``) act on ``H_{<=N}``, the span of tree vertices up to level ``N``.
Operator identities are compared only on columns where the truncation is
exact; see :func:`sadic_shifts.hilbert.compare`.
"""

from .adic import (
    CylinderFunction,
    TreeFunction,
    Vertex,
    cyl_eval,
    cyl_lift,
    endo_map,
    limit_deviation,
    special,
    tree_map_W,
    vertex_children,
    vertex_parent,
)
from .coeff import ConvergentSequence, XVFunction, fourier_coefficient, seq_endo, toeplitz_U, toeplitz_V, toeplitz_W
from .cuntz import (
    LineSpace,
    closed_form_correction,
    iota,
    line_generator,
    line_word,
    phi,
    phi_inv,
    toeplitz_S,
    ts_correction,
)
from .harness import CheckParams, CheckResult, emit_report, run_check, run_suite
from .hilbert import (
    TruncatedOperator,
    TruncatedSpace,
    degree_component,
    diag,
    dump,
    expectation,
    gauge_rotate,
    quadrature_expectation,
    spectral_norm,
    tail_norm,
)
from .shifts import cuntz_generator, cuntz_word, make_shift, make_shift_adjoint, matrix_unit, projection
