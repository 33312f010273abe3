"""
Problem interface for the nested search engine.

A problem adapter exposes the root state, legal moves, a pure transition,
the terminal test, an exact score (higher is better), a stable move code
and an additive softmax bias. Moves and states are opaque to the engine.
"""

from typing import Any, List, Optional, Sequence

from nrpa.policy import MoveCode


class SearchError(Exception):
    """Base class for errors raised by the engine and the problem adapters"""
    pass


class ContractViolation(SearchError):
    """A caller broke a precondition (illegal move, non-terminal scoring, ...)"""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f'{message} (step {step})'
        super().__init__(message)


class DeadEndError(SearchError):
    """A non-terminal state has no legal moves and the problem defines no dead-end score"""
    pass


class InstanceParseError(SearchError):
    """Instance text could not be parsed; carries the 1-based line number when known"""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class Problem:
    """Base class for problem adapters - override the abstract methods in subclasses"""

    name = 'problem'

    def root(self) -> Any:
        raise NotImplementedError

    def legal_moves(self, state) -> List[Any]:
        raise NotImplementedError

    def play(self, state, move) -> Any:
        raise NotImplementedError

    def is_terminal(self, state) -> bool:
        raise NotImplementedError

    def score(self, state):
        raise NotImplementedError

    def code(self, state, move) -> MoveCode:
        raise NotImplementedError

    def bias(self, state, move) -> float:
        """Additive softmax bias; problems without a heuristic keep the default 0"""
        return 0.0

    def dead_end_score(self, state) -> Optional[Any]:
        """Score for a non-terminal state without moves, or None to make it a hard error"""
        return None

    def describe_score(self, score) -> str:
        return str(score)


def replay(problem: Problem, sequence: Sequence[Any]):
    """Apply a move sequence from the root state, checking legality at every step"""
    state = problem.root()
    for step, move in enumerate(sequence):
        if problem.is_terminal(state):
            raise ContractViolation(f'Move {move!r} played after a terminal state', step=step)
        if move not in problem.legal_moves(state):
            raise ContractViolation(f'Illegal move {move!r} for {problem.name}', step=step)
        state = problem.play(state, move)
    return state
