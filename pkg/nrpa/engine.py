"""
Nested search engine: biased-softmax playouts, policy adaptation and the
two level loops (fixed iterations for NRPA/GNRPA, limited repetitions for
GNRPALR), plus the top-level driver that tracks anytime records.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from nrpa.policy import Policy
from nrpa.problem import ContractViolation, DeadEndError, Problem, SearchError

logger = logging.getLogger(__name__)

MAX_SEED = (1 << 64) - 1


class ConfigurationError(SearchError):
    """Invalid search configuration, reported before any search starts"""
    pass


class BudgetExhausted(Exception):
    """Raised at a level-loop boundary once the time budget has expired"""
    pass


class Algorithm(str, Enum):
    NRPA = 'nrpa'
    GNRPA = 'gnrpa'
    GNRPALR = 'gnrpalr'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ', '.join(a.value for a in cls)
            raise ConfigurationError(f'Unknown algorithm {value!r} (expected one of: {choices})')


@dataclass
class SearchConfig:
    algorithm: Algorithm = Algorithm.GNRPA
    level: int = 2
    iterations: int = 100
    repetitions: int = 0
    alpha: float = 1.0
    bias_scale: float = 1.0
    iteration_cap: Optional[int] = None
    seed: int = 0
    time_budget: Optional[float] = None
    restart: bool = False

    def __post_init__(self):
        self.algorithm = Algorithm.parse(self.algorithm)

    @property
    def uses_repetitions(self):
        return self.algorithm is Algorithm.GNRPALR

    def validate(self):
        if not isinstance(self.level, int) or self.level < 0:
            raise ConfigurationError(f'level must be a non-negative integer, got {self.level!r}')
        if not self.uses_repetitions and (not isinstance(self.iterations, int) or self.iterations < 1):
            raise ConfigurationError(f'N must be a positive integer, got {self.iterations!r}')
        if self.uses_repetitions and (not isinstance(self.repetitions, int) or self.repetitions < 0):
            raise ConfigurationError(f'R must be a non-negative integer, got {self.repetitions!r}')
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigurationError(f'alpha must be a finite non-negative real, got {self.alpha!r}')
        if not math.isfinite(self.bias_scale):
            raise ConfigurationError(f'bias scale must be finite, got {self.bias_scale!r}')
        if self.iteration_cap is not None and (not isinstance(self.iteration_cap, int) or self.iteration_cap < 1):
            raise ConfigurationError(f'iteration cap must be a positive integer, got {self.iteration_cap!r}')
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigurationError(f'seed must be a 64-bit unsigned integer, got {self.seed!r}')
        if self.time_budget is not None and (math.isnan(self.time_budget) or self.time_budget < 0):
            raise ConfigurationError(f'time budget must be >= 0 seconds, got {self.time_budget!r}')
        if self.restart and self.time_budget is None:
            raise ConfigurationError('restart mode needs a time budget')
        return self


@dataclass(frozen=True)
class PlayoutResult:
    score: Any
    sequence: Tuple[Any, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class AnytimeRecord:
    seed: int
    elapsed_seconds: float
    best_score: Any
    playouts: int


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; one stream is shared by every level of a search"""
    return np.random.Generator(np.random.PCG64(seed))


def softmax(values) -> np.ndarray:
    logits = np.asarray(values, dtype=np.float64)
    logits = logits - logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def move_probabilities(policy: Policy, state, moves: Sequence[Any],
                       code_fn: Callable, bias_fn: Callable) -> np.ndarray:
    """p_m proportional to exp(w[code(m)] + beta_m), max-subtracted before exponentiation"""
    if not moves:
        raise DeadEndError('No legal moves to choose from')
    logits = [policy.get(code_fn(state, move)) + bias_fn(state, move) for move in moves]
    return softmax(logits)


def _zero_bias(state, move):
    return 0.0


class NestedSearch:
    """One sequential search: owns its RNG stream, counters and best-so-far."""

    def __init__(self, problem: Problem, config: SearchConfig, rng=None,
                 on_improvement: Callable = None, clock: Callable = time.monotonic):
        self.problem = problem
        self.config = config.validate()
        self.rng = rng if rng is not None else make_rng(config.seed)
        self.on_improvement = on_improvement
        self.playouts = 0
        self.best: Optional[PlayoutResult] = None
        self.records: List[AnytimeRecord] = []
        self._clock = clock
        self._started_at = clock()

        if config.algorithm is Algorithm.NRPA:
            self.bias = _zero_bias
        elif config.bias_scale == 1.0:
            self.bias = problem.bias
        else:
            scale = config.bias_scale
            self.bias = lambda state, move: scale * problem.bias(state, move)

    def elapsed(self) -> float:
        return self._clock() - self._started_at

    def move_probabilities(self, policy: Policy, state, moves) -> np.ndarray:
        return move_probabilities(policy, state, moves, self.problem.code, self.bias)

    def _sample(self, probabilities: np.ndarray) -> int:
        cumulative = np.cumsum(probabilities)
        index = int(np.searchsorted(cumulative, self.rng.random() * cumulative[-1], side='right'))
        return min(index, len(probabilities) - 1)

    def playout(self, policy: Policy) -> PlayoutResult:
        problem = self.problem
        state = problem.root()
        sequence = []
        while not problem.is_terminal(state):
            moves = problem.legal_moves(state)
            if not moves:
                score = problem.dead_end_score(state)
                if score is None:
                    raise DeadEndError(f'{problem.name}: non-terminal state without legal moves '
                                       f'after {len(sequence)} moves')
                return self._finish_playout(score, sequence)
            # Forced moves draw nothing from the stream
            if len(moves) == 1:
                move = moves[0]
            else:
                move = moves[self._sample(self.move_probabilities(policy, state, moves))]
            sequence.append(move)
            state = problem.play(state, move)
        return self._finish_playout(problem.score(state), sequence)

    def _finish_playout(self, score, sequence) -> PlayoutResult:
        self.playouts += 1
        result = PlayoutResult(score, tuple(sequence))
        if self.best is None or score > self.best.score:
            self.best = result
            elapsed = self.elapsed()
            self.records.append(AnytimeRecord(self.config.seed, elapsed, score, self.playouts))
            logger.debug(f'seed {self.config.seed}: best {self.problem.describe_score(score)} '
                         f'after {self.playouts} playouts ({elapsed:.3f}s)',
                         extra={'improvement_trace': True})
            if self.on_improvement is not None:
                self.on_improvement(elapsed, score)
        return result

    def adapt(self, policy: Policy, sequence: Sequence[Any]) -> Policy:
        """Return a new policy moved toward sequence; probabilities come from the input policy"""
        alpha = self.config.alpha
        adapted = policy.copy()
        if alpha == 0:
            return adapted

        problem = self.problem
        state = problem.root()
        for step, move in enumerate(sequence):
            moves = problem.legal_moves(state)
            if move not in moves:
                raise ContractViolation(f'Sequence not replayable: {move!r} is not legal', step=step)
            # A single legal move has p = 1 = delta, so its gradient is zero
            if len(moves) > 1:
                probabilities = self.move_probabilities(policy, state, moves)
                for candidate, p in zip(moves, probabilities):
                    delta = float(p) - (1.0 if candidate == move else 0.0)
                    adapted.add(problem.code(state, candidate), -alpha * delta)
            state = problem.play(state, move)
        return adapted

    def _check_budget(self):
        budget = self.config.time_budget
        if budget is None or self.playouts == 0:
            return
        if self.elapsed() >= budget:
            raise BudgetExhausted()

    def gnrpa(self, level: int, policy: Policy) -> PlayoutResult:
        if level == 0:
            return self.playout(policy)

        best = None
        for _ in range(self.config.iterations):
            self._check_budget()
            result = self.gnrpa(level - 1, policy)
            # Equal scores replace the stored sequence
            if best is None or result.score >= best.score:
                best = result
            policy = self.adapt(policy, best.sequence)
        return best

    def gnrpalr(self, level: int, policy: Policy) -> PlayoutResult:
        if level == 0:
            return self.playout(policy)

        limit = self.config.repetitions
        cap = self.config.iteration_cap
        best = None
        repetitions = 0
        iterations = 0
        while repetitions <= limit:
            if cap is not None and iterations >= cap:
                break
            self._check_budget()
            result = self.gnrpalr(level - 1, policy)
            iterations += 1
            # Equal scores count as repetitions and keep the stored sequence
            if best is not None and result.score == best.score:
                repetitions += 1
            if best is None or result.score > best.score:
                repetitions = 0
                best = result
            policy = self.adapt(policy, best.sequence)
        return best

    def search(self, level: int, policy: Policy) -> PlayoutResult:
        if self.config.uses_repetitions:
            return self.gnrpalr(level, policy)
        return self.gnrpa(level, policy)

    def run(self) -> Tuple[PlayoutResult, List[AnytimeRecord]]:
        config = self.config
        self._started_at = self._clock()
        result = None
        try:
            while True:
                result = self.search(config.level, Policy())
                if not config.restart:
                    break
                self._check_budget()
                logger.debug(f'seed {config.seed}: restarting top level after {self.playouts} playouts')
        except BudgetExhausted:
            logger.info(f'seed {config.seed}: time budget of {config.time_budget}s expired '
                        f'after {self.playouts} playouts')
            result = self.best
        else:
            logger.info(f'seed {config.seed}: {config.algorithm.value} level {config.level} finished '
                        f'after {self.playouts} playouts in {self.elapsed():.3f}s')

        if config.restart:
            result = self.best
        return result, list(self.records)


def run_search(problem: Problem, config: SearchConfig, on_improvement: Callable = None,
               rng=None) -> Tuple[PlayoutResult, List[AnytimeRecord]]:
    """Run one configured search and return its best result and anytime records"""
    search = NestedSearch(problem, config, rng=rng, on_improvement=on_improvement)
    return search.run()
