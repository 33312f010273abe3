"""Policy table: move codes mapped to learned softmax weights."""

import math
from typing import Dict, Iterable, Iterator, Tuple

# Move codes are 64-bit unsigned integers produced by the problem adapters
MoveCode = int

MAX_MOVE_CODE = (1 << 64) - 1


class Policy:
    """Weights indexed by move code. Absent codes read as 0 and reading never inserts."""

    __slots__ = ('_weights',)

    def __init__(self, weights: Dict[MoveCode, float] = None):
        self._weights = dict(weights) if weights else {}

    def get(self, code: MoveCode) -> float:
        return self._weights.get(code, 0.0)

    def __getitem__(self, code: MoveCode) -> float:
        return self._weights.get(code, 0.0)

    def __setitem__(self, code: MoveCode, weight: float):
        if not math.isfinite(weight):
            raise ValueError(f'Policy weight for code {code} must be finite, got {weight}')
        self._weights[code] = weight

    def add(self, code: MoveCode, delta: float):
        self[code] = self._weights.get(code, 0.0) + delta

    def weights_for(self, codes: Iterable[MoveCode]):
        weights = self._weights
        return [weights.get(code, 0.0) for code in codes]

    def copy(self) -> 'Policy':
        return Policy(self._weights)

    def items(self) -> Iterator[Tuple[MoveCode, float]]:
        return iter(self._weights.items())

    def __contains__(self, code: MoveCode) -> bool:
        return code in self._weights

    def __len__(self):
        return len(self._weights)

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        # Stored zeros and absent codes read identically
        codes = set(self._weights) | set(other._weights)
        return all(self.get(code) == other.get(code) for code in codes)

    def __repr__(self):
        return f'<Policy {len(self._weights)} codes>'
