import os

from dotenv import load_dotenv

load_dotenv()


def resolve_thread_count():
    """Resolve the worker cap for seed sweeps from NPS_THREADS"""
    raw = os.environ.get('NPS_THREADS')

    # Default to every core when the variable is unset or blank
    if not raw or not raw.strip():
        return os.cpu_count() or 1

    try:
        threads = int(raw)
    except ValueError:
        return os.cpu_count() or 1

    return max(1, threads)


def resolve_bias_sign():
    """Map NRPA_BIAS_SIGN ('pos'/'neg', also '+1'/'-1') to +1 or -1"""
    raw = (os.environ.get('NRPA_BIAS_SIGN') or 'neg').strip().lower()
    if raw in ['pos', '+', '+1', '1', 'positive']:
        return 1
    return -1


class Config:
    # Worker parallelism for seed sweeps
    NPS_THREADS = resolve_thread_count()

    # Logging
    LOG_LEVEL = os.environ.get('NRPA_LOG_LEVEL', 'INFO').upper()
    TRACE_IMPROVEMENTS = os.environ.get('NRPA_TRACE', 'false').lower() in ['true', 'on', '1']

    # Search defaults (the CLI flags override these)
    DEFAULT_LEVEL = int(os.environ.get('NRPA_DEFAULT_LEVEL') or 2)
    DEFAULT_N = int(os.environ.get('NRPA_DEFAULT_N') or 100)
    DEFAULT_R = int(os.environ.get('NRPA_DEFAULT_R') or 0)
    DEFAULT_ALPHA = float(os.environ.get('NRPA_DEFAULT_ALPHA') or 1.0)
    DEFAULT_BUDGET_SECONDS = float(os.environ.get('NRPA_DEFAULT_BUDGET') or 60)

    # TSPTW distance bias sign: -1 penalises long edges, +1 is the formula as printed
    BIAS_SIGN = resolve_bias_sign()
