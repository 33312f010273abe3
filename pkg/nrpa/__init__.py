"""
Nested Monte Carlo search with learned playout policies.

NRPA, GNRPA and GNRPA with limited repetitions over a small problem
interface, with TSPTW and Weak Schur adapters and a seed-sweep harness.
"""

import logging

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'


class LevelTraceFilter(logging.Filter):
    """Suppress per-improvement trace records unless tracing is enabled."""

    def __init__(self, enabled=False):
        super().__init__()
        self.enabled = enabled

    def filter(self, record):
        if self.enabled:
            return True
        return not getattr(record, 'improvement_trace', False)


def configure_logging(level='INFO', trace=False):
    """Attach a single stream handler to the package logger"""
    package_logger = logging.getLogger(__name__)
    package_logger.setLevel(level)

    # Reconfiguring (tests, repeated CLI calls) replaces the previous handler
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.addFilter(LevelTraceFilter(enabled=trace))
    package_logger.addHandler(handler)
    package_logger.propagate = False
    return package_logger
