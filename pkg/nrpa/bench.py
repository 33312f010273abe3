"""
Benchmark harness: seed sweeps under wall-clock budgets, anytime CSVs and
side-by-side comparison of two runs.

Output of run_experiment (directory `out`):
    raw.csv    seed,elapsed,best_score,playouts   one row per best-score improvement
    curve.csv  checkpoint,mean_best_score,seeds   mean carried-forward best at 1, 2, 4, ... s
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import pandas as pd

from config import Config
from nrpa.engine import ConfigurationError, NestedSearch, SearchConfig
from nrpa.problem import SearchError, replay
from nrpa.tsptw import TsptwProblem, load_instance
from nrpa.weakschur import WeakSchurProblem, validate_partition

logger = logging.getLogger(__name__)

RAW_COLUMNS = ['seed', 'elapsed', 'best_score', 'playouts']
CURVE_COLUMNS = ['checkpoint', 'mean_best_score', 'seeds']
PROBLEMS = ('tsptw', 'weakschur')


class ComparisonError(SearchError):
    pass


@dataclass
class ExperimentSpec:
    problem: str
    search: SearchConfig
    out: Path
    instance: Optional[Path] = None
    k: Optional[int] = None
    selective: bool = True
    bias_sign: int = -1
    seed_lo: int = 1
    seed_hi: int = 1

    def __post_init__(self):
        self.out = Path(self.out)
        if self.instance is not None:
            self.instance = Path(self.instance)

    @property
    def seeds(self):
        return range(self.seed_lo, self.seed_hi + 1)

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigurationError(f'Unknown problem {self.problem!r} (expected one of: {", ".join(PROBLEMS)})')
        if self.problem == 'tsptw' and self.instance is None:
            raise ConfigurationError('tsptw needs an instance file')
        if self.problem == 'weakschur' and (self.k is None or self.k < 1):
            raise ConfigurationError('weakschur needs a positive dimension k')
        if self.seed_lo < 0 or self.seed_lo > self.seed_hi:
            raise ConfigurationError(f'seed range {self.seed_lo}..{self.seed_hi} is empty or negative')
        budget = self.search.time_budget
        if budget is None or budget <= 0:
            raise ConfigurationError('experiments need a positive time budget')
        # Check every seed of the sweep up front
        for seed in (self.seed_lo, self.seed_hi):
            replace(self.search, seed=seed).validate()
        return self


@dataclass
class SeedOutcome:
    seed: int
    records: list = field(default_factory=list)
    final_score: object = None
    playouts: int = 0
    error: Optional[str] = None

    @property
    def completed(self):
        return self.error is None


@dataclass
class ExperimentResult:
    raw: pd.DataFrame
    curve: pd.DataFrame
    outcomes: List[SeedOutcome]

    @property
    def completed(self):
        return all(outcome.completed for outcome in self.outcomes)


def build_problem(spec: ExperimentSpec):
    if spec.problem == 'tsptw':
        return TsptwProblem(load_instance(spec.instance), bias_sign=spec.bias_sign)
    return WeakSchurProblem(spec.k, selective=spec.selective)


def run_seed(spec: ExperimentSpec, seed: int) -> SeedOutcome:
    """Run one seed of the sweep; failures are captured rather than raised"""
    try:
        problem = build_problem(spec)
        search = NestedSearch(problem, replace(spec.search, seed=seed))
        result, records = search.run()
        if isinstance(problem, WeakSchurProblem):
            check = validate_partition(replay(problem, result.sequence).parts)
            if not check.valid:
                raise SearchError(f'invalid terminal partition: {check.message}')
        logger.info(f'seed {seed}: final best {problem.describe_score(result.score)}')
        return SeedOutcome(seed, records, result.score, search.playouts)
    except Exception as e:
        logger.error(f'seed {seed} failed: {e}', exc_info=True)
        return SeedOutcome(seed, error=f'{e.__class__.__name__}: {e}')


def checkpoints(budget: float) -> List[float]:
    """1, 2, 4, ... seconds up to the budget; a budget below 1 s is its own checkpoint"""
    points = []
    t = 1.0
    while t <= budget:
        points.append(t)
        t *= 2
    return points or [float(budget)]


def records_frame(outcomes: List[SeedOutcome]) -> pd.DataFrame:
    rows = []
    for outcome in sorted(outcomes, key=lambda o: o.seed):
        for record in outcome.records:
            # Exact score text (int or Decimal) goes to the CSV unchanged
            rows.append({'seed': record.seed, 'elapsed': record.elapsed_seconds,
                         'best_score': str(record.best_score), 'playouts': record.playouts})
    return pd.DataFrame(rows, columns=RAW_COLUMNS)


def _score_matrix(raw: pd.DataFrame) -> pd.DataFrame:
    """Per-seed carried-forward best score indexed by event time"""
    if raw.empty:
        return pd.DataFrame()
    frame = raw.assign(score=pd.to_numeric(raw['best_score'].astype(str)))
    wide = frame.pivot_table(index='elapsed', columns='seed', values='score', aggfunc='max')
    return wide.sort_index().ffill()


def build_curve(raw: pd.DataFrame, points: List[float]) -> pd.DataFrame:
    wide = _score_matrix(raw)
    if wide.empty:
        return pd.DataFrame({'checkpoint': points, 'mean_best_score': [float('nan')] * len(points),
                             'seeds': [0] * len(points)}, columns=CURVE_COLUMNS)
    index = sorted(set(wide.index) | set(points))
    sampled = wide.reindex(index).ffill().loc[points]
    return pd.DataFrame({
        'checkpoint': points,
        'mean_best_score': sampled.mean(axis=1, skipna=True).to_numpy(),
        'seeds': sampled.notna().sum(axis=1).astype(int).to_numpy(),
    }, columns=CURVE_COLUMNS)


def mean_step_curve(raw: pd.DataFrame) -> pd.Series:
    """Mean best score over all seeds at every event time once each seed has a record"""
    wide = _score_matrix(raw)
    if wide.empty:
        return pd.Series(dtype=float)
    # Before every seed has reported, a single early seed would set the mean alone
    return wide.dropna().mean(axis=1)


def _write_csv(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, lineterminator='\n')


def run_experiment(spec: ExperimentSpec, workers: int = None) -> ExperimentResult:
    spec.validate()
    if spec.problem == 'tsptw':
        if not spec.instance.is_file():
            raise ConfigurationError(f'instance file {spec.instance} is not readable')
        # Parse errors surface before any worker starts
        load_instance(spec.instance)

    seeds = list(spec.seeds)
    workers = min(workers or Config.NPS_THREADS, len(seeds))
    logger.info(f'Running {spec.search.algorithm.value} on {spec.problem} for seeds '
                f'{spec.seed_lo}..{spec.seed_hi} with {workers} worker(s)')

    if workers <= 1:
        outcomes = [run_seed(spec, seed) for seed in seeds]
    else:
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_seed, spec, seed): seed for seed in seeds}
            for future in as_completed(futures):
                outcomes.append(future.result())
    outcomes.sort(key=lambda o: o.seed)

    raw = records_frame(outcomes)
    curve = build_curve(raw, checkpoints(spec.search.time_budget))

    spec.out.mkdir(parents=True, exist_ok=True)
    _write_csv(raw, spec.out / 'raw.csv')
    _write_csv(curve, spec.out / 'curve.csv')
    logger.info(f'Wrote {len(raw)} records to {spec.out / "raw.csv"} and {len(curve)} checkpoints '
                f'to {spec.out / "curve.csv"}')
    return ExperimentResult(raw, curve, outcomes)


def _read_run(directory: Path, name: str) -> Optional[pd.DataFrame]:
    path = Path(directory) / name
    if not path.is_file():
        return None
    return pd.read_csv(path, dtype={'best_score': str}, float_precision='round_trip')


def _first_reach(curve: pd.Series, level: float) -> Optional[float]:
    reached = curve[curve >= level]
    if reached.empty:
        return None
    return float(reached.index[0])


def speedups(raw_a: pd.DataFrame, raw_b: pd.DataFrame) -> pd.DataFrame:
    """Time for B over time for A to first reach each mean score level both runs reach"""
    curve_a = mean_step_curve(raw_a)
    curve_b = mean_step_curve(raw_b)
    rows = []
    for level in sorted(set(curve_a.tolist()) | set(curve_b.tolist())):
        time_a = _first_reach(curve_a, level)
        time_b = _first_reach(curve_b, level)
        if time_a is None or time_b is None or time_a <= 0:
            continue
        rows.append({'score_level': level, 'time_a': time_a, 'time_b': time_b, 'ratio': time_b / time_a})
    return pd.DataFrame(rows, columns=['score_level', 'time_a', 'time_b', 'ratio'])


@dataclass
class ComparisonResult:
    table: pd.DataFrame
    speedups: pd.DataFrame


def compare(run_a_dir, run_b_dir, out=None) -> ComparisonResult:
    curve_a = _read_run(run_a_dir, 'curve.csv')
    curve_b = _read_run(run_b_dir, 'curve.csv')
    for directory, curve in ((run_a_dir, curve_a), (run_b_dir, curve_b)):
        if curve is None:
            raise ComparisonError(f'{directory} has no curve.csv')

    table = curve_a.merge(curve_b, on='checkpoint', how='inner', suffixes=('_a', '_b'))
    if table.empty:
        raise ComparisonError(f'{run_a_dir} and {run_b_dir} share no checkpoints')
    table = table[['checkpoint', 'mean_best_score_a', 'mean_best_score_b', 'seeds_a', 'seeds_b']]

    raw_a = _read_run(run_a_dir, 'raw.csv')
    raw_b = _read_run(run_b_dir, 'raw.csv')
    if raw_a is None or raw_b is None:
        logger.warning('raw.csv missing from one of the runs; speedups skipped')
        ratios = pd.DataFrame(columns=['score_level', 'time_a', 'time_b', 'ratio'])
    else:
        ratios = speedups(raw_a, raw_b)

    if out is not None:
        _write_csv(ratios, Path(out))
    return ComparisonResult(table, ratios)
