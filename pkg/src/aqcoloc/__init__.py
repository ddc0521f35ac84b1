"""Co-location pipeline for low-cost air quality sensors.

Synthetic or replayed pollutant sensors are sampled on an hourly schedule,
forwarded through a store-and-forward uplink to an append-only ingestion
store, and compared against a reference station with Pearson/Spearman
correlation and a linear calibration fit.
"""

from .sensors import PollutantKind, RawSample, SensorModel, TruthSignalParams

__version__ = "0.1.0"

__all__ = ["PollutantKind", "RawSample", "SensorModel", "TruthSignalParams", "__version__"]
