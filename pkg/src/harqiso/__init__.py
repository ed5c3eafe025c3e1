"""Analysis and simulation of isochronous HARQ-II with incremental redundancy."""
from .errors import ConvergenceError, DomainError, HarqError
from .exponent import (ChannelLandmarks, ChannelParams, ExponentPoint, beta, error_exponent,
                       esp_point, landmarks, wer_bound)
from .wer import (AnalyticSeries, CodeFamilyGeometry, GeometricSeries, TableSeries, WerSeries,
                  analytic_p, conditional_fail, estimate_ratios, geometric_p, predicted_ratio)
from .queueing import (DesignPoint, StabilityReport, classical_arq_throughput, crc_overhead,
                       departure_time, optimal_design, service_rate, stability_check)
from .blocksize import (OptimizerInputs, OptimizerResult, calibrate_operating_point,
                        estimate_theta, optimize_r, phi, scaled_block)
from .sim import SimConfig, SimMetrics, Simulator, run

__version__ = "0.1.0"
