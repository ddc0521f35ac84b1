from .align import AlignedSeries, DataIntegrityError, MaskSpec, align
from .calibration import CalibratedSeries, apply_calibration, calibrate_records
from .monthly import MonthStats, monthly_summary
from .report import (
    ChannelResult,
    CorrelationReport,
    build_report,
    render_text,
    report_to_dict,
    write_pairs_csv,
    write_report,
)
from .stats import (
    DegenerateFitError,
    InsufficientDataError,
    LinearFit,
    UndefinedCorrelationError,
    fit_linear_calibration,
    pearson,
    spearman,
)
