"""
Traveling salesman with time windows.

Instances use the Solomon-Potvin-Bengio text layout: the node count, the
travel-time matrix row by row, then one "ready due" pair per node. Node 0
is the depot; a tour leaves it, visits every other node once and returns.

Numbers are parsed as Decimal and kept as fixed-point integers at the
instance's decimal precision, so scores compare exactly.
"""

import itertools
import logging
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from nrpa.engine import PlayoutResult
from nrpa.policy import MoveCode
from nrpa.problem import ContractViolation, InstanceParseError, Problem

logger = logging.getLogger(__name__)

VIOLATION_PENALTY = 10 ** 6
BIAS_MAGNITUDE = 10.0


def _decimal_places(value: Decimal) -> int:
    exponent = value.as_tuple().exponent
    return max(0, -exponent)


class TsptwInstance:
    """Immutable TSPTW instance; safe to share between parallel searches."""

    def __init__(self, cost: Sequence[Sequence], windows: Sequence[Tuple], name: str = ''):
        n = len(cost)
        if n < 1:
            raise ValueError('An instance needs at least the depot')
        if any(len(row) != n for row in cost):
            raise ValueError(f'Cost matrix must be {n}x{n}')
        if len(windows) != n:
            raise ValueError(f'Expected {n} time windows, got {len(windows)}')

        self.name = name
        self.n = n
        self.cost = tuple(tuple(Decimal(str(value)) for value in row) for row in cost)
        self.windows = tuple((Decimal(str(ready)), Decimal(str(due))) for ready, due in windows)

        for i, row in enumerate(self.cost):
            for j, value in enumerate(row):
                if not value.is_finite() or value < 0:
                    raise ValueError(f'cost[{i}][{j}] must be finite and >= 0, got {value}')
            if row[i] != 0:
                raise ValueError(f'cost[{i}][{i}] must be 0, got {row[i]}')
        for i, (ready, due) in enumerate(self.windows):
            if not (ready.is_finite() and due.is_finite()):
                raise ValueError(f'window of node {i} must be finite')
            if ready > due:
                raise ValueError(f'window of node {i} has ready {ready} > due {due}')

        values = [value for row in self.cost for value in row]
        values += [bound for window in self.windows for bound in window]
        self.precision = max((_decimal_places(value) for value in values), default=0)
        self.scale = 10 ** self.precision

        # Fixed-point copies for the playout hot path
        self.cost_units = [[self.to_units(value) for value in row] for row in self.cost]
        self.ready_units = [self.to_units(ready) for ready, _ in self.windows]
        self.due_units = [self.to_units(due) for _, due in self.windows]
        self.cost_float = np.array([[float(value) for value in row] for row in self.cost], dtype=np.float64)

        off_diagonal = [self.cost_float[i, j] for i in range(n) for j in range(n) if i != j]
        self.min_cost = min(off_diagonal, default=0.0)
        self.max_cost = max(off_diagonal, default=0.0)

    def to_units(self, value: Decimal) -> int:
        return int(value.scaleb(self.precision))

    def from_units(self, units: int) -> Decimal:
        return Decimal(units).scaleb(-self.precision)

    def __repr__(self):
        label = f' {self.name}' if self.name else ''
        return f'<TsptwInstance{label} n={self.n}>'


def parse_instance(text: str, name: str = '') -> TsptwInstance:
    """Parse Solomon-Potvin-Bengio text; '#' comment lines and blank lines are skipped"""
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        rows.append((number, stripped.split()))

    if not rows:
        raise InstanceParseError('empty instance text')

    first_line, tokens = rows[0]
    if len(tokens) != 1:
        raise InstanceParseError(f'expected the node count alone, got {len(tokens)} tokens', line=first_line)
    try:
        n = int(tokens[0])
    except ValueError:
        raise InstanceParseError(f'node count {tokens[0]!r} is not an integer', line=first_line)
    if n < 1:
        raise InstanceParseError(f'node count must be positive, got {n}', line=first_line)

    expected = 1 + 2 * n
    if len(rows) < expected:
        last_line = rows[-1][0]
        raise InstanceParseError(f'expected {n} matrix rows and {n} window rows, '
                                 f'found {len(rows) - 1} data lines', line=last_line)
    if len(rows) > expected:
        raise InstanceParseError('unexpected data after the time windows', line=rows[expected][0])

    def _numbers(line_number, parts, count, what):
        if len(parts) != count:
            raise InstanceParseError(f'{what} needs {count} values, got {len(parts)}', line=line_number)
        values = []
        for token in parts:
            try:
                value = Decimal(token)
            except InvalidOperation:
                raise InstanceParseError(f'{token!r} is not a number', line=line_number)
            if not value.is_finite():
                raise InstanceParseError(f'{token!r} is not a finite number', line=line_number)
            values.append(value)
        return values

    cost = []
    for line_number, parts in rows[1:1 + n]:
        row = _numbers(line_number, parts, n, 'matrix row')
        if any(value < 0 for value in row):
            raise InstanceParseError('travel times must be >= 0', line=line_number)
        if row[len(cost)] != 0:
            raise InstanceParseError(f'diagonal entry of row {len(cost)} must be 0', line=line_number)
        cost.append(row)

    windows = []
    for line_number, parts in rows[1 + n:expected]:
        ready, due = _numbers(line_number, parts, 2, 'time window')
        if ready > due:
            raise InstanceParseError(f'ready time {ready} exceeds due time {due}', line=line_number)
        windows.append((ready, due))

    return TsptwInstance(cost, windows, name=name)


def load_instance(path) -> TsptwInstance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InstanceParseError(f'cannot read instance {path}: {e}')
    instance = parse_instance(text, name=path.stem)
    logger.info(f'Loaded TSPTW instance {path.name}: {instance.n} nodes, precision {instance.precision}')
    return instance


def format_instance(instance: TsptwInstance) -> str:
    lines = [str(instance.n)]
    lines += [' '.join(str(value) for value in row) for row in instance.cost]
    lines += [f'{ready} {due}' for ready, due in instance.windows]
    return '\n'.join(lines) + '\n'


def penalized_score(violations: int, cost) -> Decimal:
    """-violations * 10^6 - cost"""
    return -Decimal(violations) * VIOLATION_PENALTY - Decimal(str(cost))


class TsptwState:
    __slots__ = ('path', 'visited', 'time', 'violations', 'cost')

    def __init__(self, path, visited, time, violations, cost):
        self.path = path
        self.visited = visited
        self.time = time
        self.violations = violations
        self.cost = cost

    @property
    def last(self):
        return self.path[-1]

    def __repr__(self):
        return f'<TsptwState path={self.path} violations={self.violations} cost_units={self.cost}>'


class TsptwProblem(Problem):
    """TSPTW adapter; moves are node indices, the depot (0) closes the tour."""

    name = 'tsptw'

    def __init__(self, instance: TsptwInstance, bias_sign: int = -1):
        if bias_sign not in (1, -1):
            raise ValueError(f'bias sign must be +1 or -1, got {bias_sign!r}')
        self.instance = instance
        self.bias_sign = bias_sign
        self._all_visited = (1 << instance.n) - 1
        spread = instance.max_cost - instance.min_cost
        self._bias_factor = bias_sign * BIAS_MAGNITUDE / spread if spread > 0 else 0.0

    def root(self) -> TsptwState:
        return TsptwState((0,), 1, self.instance.ready_units[0], 0, 0)

    def is_terminal(self, state: TsptwState) -> bool:
        return state.visited == self._all_visited and len(state.path) == self.instance.n + 1

    def legal_moves(self, state: TsptwState) -> List[int]:
        if state.visited == self._all_visited:
            return [] if len(state.path) > self.instance.n else [0]
        visited = state.visited
        return [node for node in range(1, self.instance.n) if not (visited >> node) & 1]

    def play(self, state: TsptwState, node: int) -> TsptwState:
        instance = self.instance
        if state.visited == self._all_visited:
            if node != 0 or len(state.path) > instance.n:
                raise ContractViolation(f'Only the depot return is legal after all nodes, got {node}')
        elif not 0 < node < instance.n or (state.visited >> node) & 1:
            raise ContractViolation(f'Node {node} is already visited or out of range')

        edge = instance.cost_units[state.last][node]
        arrival = state.time + edge
        violations = state.violations
        # Inclusive due time: arriving exactly at due is feasible
        if arrival > instance.due_units[node]:
            violations += 1
        # Waiting is free; only the edge counts toward cost
        time = max(arrival, instance.ready_units[node])
        return TsptwState(state.path + (node,), state.visited | (1 << node), time, violations, state.cost + edge)

    def score(self, state: TsptwState) -> Decimal:
        if not self.is_terminal(state):
            raise ContractViolation('TSPTW score is only defined on closed tours')
        instance = self.instance
        units = -state.violations * VIOLATION_PENALTY * instance.scale - state.cost
        return instance.from_units(units)

    def tour_cost(self, state: TsptwState) -> Decimal:
        return self.instance.from_units(state.cost)

    def code(self, state: TsptwState, node: int) -> MoveCode:
        return state.last * self.instance.n + node

    def bias(self, state: TsptwState, node: int) -> float:
        distance = self.instance.cost_float[state.last, node]
        return self._bias_factor * (distance - self.instance.min_cost)

    def describe_score(self, score) -> str:
        violations = int(-score // VIOLATION_PENALTY) if score < 0 else 0
        return f'{score} (~{violations} violations)'


def random_instance(n: int, seed: int, grid: int = 100, slack: int = 30) -> TsptwInstance:
    """Random Euclidean instance whose windows admit a hidden random tour"""
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    rng = np.random.default_rng(seed)
    points = rng.integers(0, grid, size=(n, 2))
    cost = [[int(round(float(np.hypot(*(points[i] - points[j]))))) if i != j else 0 for j in range(n)]
            for i in range(n)]

    order = [int(node) for node in rng.permutation(np.arange(1, n))]
    windows = [None] * n
    time = 0
    previous = 0
    for node in order:
        time += cost[previous][node]
        ready = max(0, time - int(rng.integers(0, slack + 1)))
        due = time + int(rng.integers(0, slack + 1))
        windows[node] = (ready, due)
        time = max(time, ready)
        previous = node
    horizon = time + cost[previous][0] + grid * n
    windows[0] = (0, horizon)
    return TsptwInstance(cost, windows, name=f'random-{n}-{seed}')


def solve_exhaustive(problem: TsptwProblem) -> PlayoutResult:
    """Optimum over every permutation of the customers; practical for n <= 9"""
    n = problem.instance.n
    best = None
    for order in itertools.permutations(range(1, n)):
        state = problem.root()
        for node in order:
            state = problem.play(state, node)
        state = problem.play(state, 0)
        score = problem.score(state)
        if best is None or score > best.score:
            best = PlayoutResult(score, tuple(order) + (0,))
    return best
