"""Mean response time of segmented messages on a single FIFO link.

Messages with random sizes are cut into fixed-payload packets that reach
the link together, forming a batch-arrival single-server queue. The
package evaluates the closed-form mean delays, checks them by simulation
and sweeps the payload size.
"""

from .errors import (
    ConfigError,
    NoStablePointError,
    SegQueueError,
    TooFewPointsError,
    TruncationError,
    UnstableError,
)
from .msgdist import (
    Deterministic,
    Empirical,
    Exponential,
    Lognormal,
    MessageSizeDistribution,
    load_empirical,
    lognormal_from_moments,
)
from .queueing import (
    LinkParams,
    QueueingMetrics,
    Scenario,
    batch_workload_wait,
    mg1_waiting_approx,
    offered_load,
    response_time,
    service_cv,
    service_moments,
    waiting_time,
)
from .segmentation import (
    SegmentationStats,
    SeriesAccumulation,
    accumulate_series,
    edge_cdf,
    packet_cdf,
    segment_message,
    segmentation_stats,
    u_term,
)
from .sweep import SweepRow, SweepSpec, convexity_index, minimize_payload, sweep, sweep_lambdas

__version__ = "0.1.0"
