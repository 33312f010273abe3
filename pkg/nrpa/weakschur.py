"""
Weak Schur problem: place 1, 2, 3, ... into k parts so that no part holds
z = x + y for two distinct members x < y. The score of a terminal
partition is the last integer placed before the next one fits nowhere.

Each part keeps two bitsets: its members, and the sums of distinct
member pairs ("forbidden"). Placing x into a part adds members << x to
its forbidden set, so legality of the next integer is one bit test per part.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

from nrpa.policy import MoveCode
from nrpa.problem import ContractViolation, Problem

# Move code layout: part in the high 8 bits, integer in the next 28, previous in the low 28
PART_BITS = 8
VALUE_BITS = 28
MAX_PARTS = (1 << PART_BITS) - 1
MAX_VALUE = (1 << VALUE_BITS) - 1


class SchurState:
    __slots__ = ('k', 'parts', 'members', 'forbidden', 'next', 'last_placed', 'previous_part')

    def __init__(self, k, parts, members, forbidden, next_value, previous_part):
        self.k = k
        self.parts = parts
        self.members = members
        self.forbidden = forbidden
        self.next = next_value
        self.last_placed = next_value - 1
        self.previous_part = previous_part

    def admits(self, part: int) -> bool:
        return not (self.forbidden[part] >> self.next) & 1

    def __repr__(self):
        return f'<SchurState k={self.k} last={self.last_placed} parts={self.parts}>'


class PartitionCheck(NamedTuple):
    valid: bool
    violation: Optional[Tuple[int, int, int, int]] = None
    message: str = ''


class WeakSchurProblem(Problem):
    """Weak Schur adapter; the selective rule keeps runs of consecutive integers together."""

    name = 'weakschur'

    def __init__(self, k: int, selective: bool = True):
        if not isinstance(k, int) or k < 1:
            raise ValueError(f'Weak Schur dimension must be a positive integer, got {k!r}')
        if k > MAX_PARTS + 1:
            raise ValueError(f'Weak Schur dimension {k} exceeds the {MAX_PARTS + 1} parts a move code can hold')
        self.k = k
        self.selective = selective

    def root(self) -> SchurState:
        empty = (0,) * self.k
        return SchurState(self.k, ((),) * self.k, empty, empty, 1, -1)

    def admissible_parts(self, state: SchurState) -> List[int]:
        return [part for part in range(state.k) if state.admits(part)]

    def legal_moves(self, state: SchurState) -> List[int]:
        previous = state.previous_part
        if self.selective and previous >= 0 and state.admits(previous):
            return [previous]
        return self.admissible_parts(state)

    def is_terminal(self, state: SchurState) -> bool:
        return not any(state.admits(part) for part in range(state.k))

    def play(self, state: SchurState, part: int) -> SchurState:
        if not 0 <= part < state.k:
            raise ContractViolation(f'Part {part} out of range for k={state.k}')
        if not state.admits(part):
            raise ContractViolation(f'{state.next} is a sum of two members of part {part}')

        value = state.next
        members = list(state.members)
        forbidden = list(state.forbidden)
        parts = list(state.parts)

        forbidden[part] |= members[part] << value
        members[part] |= 1 << value
        parts[part] = parts[part] + (value,)
        return SchurState(state.k, tuple(parts), tuple(members), tuple(forbidden), value + 1, part)

    def score(self, state: SchurState) -> int:
        return state.last_placed

    def code(self, state: SchurState, part: int) -> MoveCode:
        value = state.next
        contents = state.parts[part]
        previous = contents[-1] if contents else 0
        if value > MAX_VALUE:
            raise ValueError(f'Integer {value} exceeds the encodable range (max {MAX_VALUE})')
        return (part << (2 * VALUE_BITS)) | (value << VALUE_BITS) | previous

    def partition_sequence(self, parts: Sequence[Sequence[int]]) -> List[int]:
        """Part indices placing 1, 2, ... in order, for replaying a given partition"""
        owner = {}
        for index, part in enumerate(parts):
            for value in part:
                owner[value] = index
        return [owner[value] for value in range(1, len(owner) + 1)]


def validate_partition(parts: Sequence[Sequence[int]], check_cover: bool = True) -> PartitionCheck:
    """Check the distinct-pair sum-free rule in every part, then consecutive coverage of 1..max"""
    for index, part in enumerate(parts):
        members = sorted(part)
        seen = set()
        for z in members:
            for x in sorted(seen):
                y = z - x
                if y > x and y in seen:
                    return PartitionCheck(False, (x, y, z, index), f'{x} + {y} = {z} in part {index}')
            seen.add(z)

    if check_cover:
        values = [value for part in parts for value in part]
        if len(values) != len(set(values)):
            duplicates = sorted({value for value in values if values.count(value) > 1})
            return PartitionCheck(False, None, f'integers placed twice: {duplicates}')
        expected = set(range(1, max(values, default=0) + 1))
        missing = sorted(expected - set(values))
        if missing or any(value < 1 for value in values):
            return PartitionCheck(False, None, f'partition does not cover 1..{max(values, default=0)}: '
                                               f'missing {missing}')

    return PartitionCheck(True)
