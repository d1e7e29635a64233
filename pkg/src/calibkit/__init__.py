"""calibkit: evaluate the calibration of probabilistic multiclass classifiers.

Predictions are probability vectors; a lens maps them (and the labels) to a
smaller induced problem, a partition bins the induced predictions, and the
binned estimator measures the expected and worst-case distance between the
average prediction and the observed label frequencies in each bin.
Consistency resampling turns the estimate into a test of perfect
calibration and into per-bin bands for reliability diagrams.
"""

from .binning import (
    BinningSpec,
    DataDependent,
    EqualWidth1D,
    Partition,
    SimplexGrid,
    build_data_dependent_bins,
    build_equal_bins_1d,
    build_simplex_grid,
    parse_bins,
)
from .diagram import build_diagram_1d, build_diagram_simplex, render_svg
from .errors import CalibrationError, ParseError
from .estimator import (
    BinSummary,
    MiscalibrationReport,
    analytic_binned_miscalibration,
    expected_miscalibration,
    restrict_to_bins,
)
from .gmm import GmmModel, analytic_eta, simulate
from .io import parse_dataset_file, write_csv
from .lens import Lens, apply_lens, induced_outcome, induced_prediction, parse_lens
from .resample import (
    EtaStatistic,
    ResamplePlan,
    TestResult,
    bootstrap_std,
    compare,
    consistency_bands,
    consistency_resample,
    pvalue_test,
    variant_matrix,
)
from .types import DistanceKind, LabeledDataset, distance, validate_simplex

__version__ = "0.1.0"

__all__ = [
    "BinSummary", "BinningSpec", "CalibrationError", "DataDependent", "DistanceKind",
    "EqualWidth1D", "EtaStatistic", "GmmModel", "LabeledDataset", "Lens",
    "MiscalibrationReport", "ParseError", "Partition", "ResamplePlan", "SimplexGrid",
    "TestResult", "analytic_binned_miscalibration", "analytic_eta", "apply_lens",
    "bootstrap_std", "build_data_dependent_bins", "build_diagram_1d",
    "build_diagram_simplex", "build_equal_bins_1d", "build_simplex_grid", "compare",
    "consistency_bands", "consistency_resample", "distance", "expected_miscalibration",
    "induced_outcome", "induced_prediction", "parse_bins", "parse_dataset_file",
    "parse_lens", "pvalue_test", "render_svg", "restrict_to_bins", "simulate",
    "validate_simplex", "variant_matrix", "write_csv",
]
