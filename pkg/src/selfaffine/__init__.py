"""Means and covariance matrices of self-affine measures."""
from .chaos_game import EmpiricalStats, RasterImage, raster, sample
from .estimators import ChaosGameSampler, SelfAffineMoments, check_ifs
from .exceptions import (
    DimensionUnsupported,
    IndexOutOfRange,
    InvalidArgument,
    InvalidModel,
    NoConvergence,
    ParseError,
    PreconditionError,
    SingularSystem,
)
from .model import AffineMap, IfsModel, b_stats, load_ifs, parse_ifs, uniform_linear_part, validate
from .moments import (
    MomentReport,
    Path,
    covariance,
    covariance_by_iteration,
    covariance_equal_linear,
    mean,
    second_moment,
    uncorrelated_test,
)

__version__ = "0.1.0"


def bundled_example(name):
    """Filesystem path of a bundled IFS document, e.g. ``"sierpinski.json"``."""
    from importlib.resources import files

    return str(files(__name__) / "data" / name)
