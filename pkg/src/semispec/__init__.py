"""Eigenvalue strings of non-selfadjoint semiclassical operators near
doubly-degenerate boundary points of the pseudospectrum."""

from semispec.symbols import (
    PolySymbol,
    CriticalPoint,
    RangeSample,
    ConeSpec,
    SymbolError,
    ParseError,
    parse_symbol,
    eval_symbol,
    gradient,
    hessian_at,
    find_real_critical_points,
    sample_range,
    exterior_cone_check,
)
from semispec.quadratics import (
    QuadForm,
    HamiltonMap,
    PositivityCertificate,
    RangeClass,
    NormalForm,
    hamilton_map,
    hamilton_eigenvalues,
    positivity_direction,
    select_mu,
    classify_range,
    range_ellipse,
    symplectic_normal_form,
)
from semispec.quantize import (
    HermiteBasisSpec,
    ChebyshevGridSpec,
    ScalingSpec,
    OperatorMatrix,
    ladder_matrices,
    weyl_quantize_hermite,
    chebyshev_schrodinger,
    scale_symbol,
)
from semispec.linalg import EigenvalueCloud, eigenvalues_dense, filter_trusted
from semispec.predict import (
    Prediction,
    FitResult,
    predict_string,
    fit_direction,
    fit_spectral_function,
)

__version__ = "0.1.0"
