from __future__ import annotations

import cmath
import logging
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from enum import Enum
from types import MappingProxyType
from typing import TypeVar

import attrs
from attrs.validators import deep_iterable, deep_mapping, ge, instance_of, le

from mzi_pigeonhole._errors import InvalidInputError

logger = logging.getLogger(__name__)

MAX_PARTICLES = 20
HALF_PI = math.pi / 2

E = TypeVar("E", bound=Enum)

_QUARTER_TURNS = (complex(1, 0), complex(0, 1), complex(-1, 0), complex(0, -1))


class Arm(Enum):
    L = "L"
    R = "R"


class Detector(Enum):
    A = "A"
    B = "B"


def _parse_labels(value: str | Iterable[E | str], enum_cls: type[E]) -> tuple[E, ...]:
    try:
        return tuple(
            label if isinstance(label, enum_cls) else enum_cls(str(label).strip().upper())
            for label in value
        )
    except ValueError as e:
        msg = f"cannot read {value!r} as a sequence of {enum_cls.__name__} labels"
        logger.error(msg)
        raise InvalidInputError(msg) from e


def _check_particle_count(_instance: object, _attribute: attrs.Attribute, value: tuple) -> None:
    if not 1 <= len(value) <= MAX_PARTICLES:
        msg = f"particle count must lie in [1, {MAX_PARTICLES}], got {len(value)}"
        logger.error(msg)
        raise InvalidInputError(msg)


@attrs.frozen
class ArmAssignment:
    """One branch of the product superposition: the arm taken by each particle.

    The canonical word has particle 0 as its most significant bit and a set
    bit for the R arm, so counting words from 0 walks the branches in the
    order LLL, LLR, LRL, ... .
    """

    arms: tuple[Arm, ...] = attrs.field(
        converter=lambda value: _parse_labels(value, Arm),
        validator=[deep_iterable(instance_of(Arm), instance_of(tuple)), _check_particle_count],
    )

    @classmethod
    def from_word(cls, word: int, n: int) -> ArmAssignment:
        if not 0 <= word < 2**n:
            msg = f"{word = } is not an {n}-bit word"
            logger.error(msg)
            raise InvalidInputError(msg)
        return cls(tuple(Arm.R if (word >> (n - 1 - i)) & 1 else Arm.L for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.arms)

    @property
    def word(self) -> int:
        return sum(1 << (self.n - 1 - i) for i, arm in enumerate(self.arms) if arm is Arm.R)

    @property
    def n_right(self) -> int:
        return self.arms.count(Arm.R)

    def complement(self) -> ArmAssignment:
        return ArmAssignment(tuple(Arm.L if arm is Arm.R else Arm.R for arm in self.arms))

    def companions(self, particle: int) -> frozenset[int]:
        arm = self.arms[particle]
        return frozenset(j for j, other in enumerate(self.arms) if other is arm and j != particle)

    def structure(self) -> CompanionStructure:
        return CompanionStructure.from_assignment(self)

    def __str__(self) -> str:
        return "".join(arm.value for arm in self.arms)


@attrs.frozen
class DetectorPattern:
    detectors: tuple[Detector, ...] = attrs.field(
        converter=lambda value: _parse_labels(value, Detector),
        validator=[
            deep_iterable(instance_of(Detector), instance_of(tuple)),
            _check_particle_count,
        ],
    )

    @property
    def n(self) -> int:
        return len(self.detectors)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.detectors)) == 1

    def __str__(self) -> str:
        return "".join(detector.value for detector in self.detectors)


@attrs.frozen(order=True)
class CompanionStructure:
    """Unordered split of the particles into the group sharing each arm.

    ``code`` is the canonical word of the representative assignment that
    sends particle 0 along L, so codes run over ``[0, 2**(n-1))``.
    """

    n: int = attrs.field(validator=[instance_of(int), ge(1), le(MAX_PARTICLES)])
    code: int = attrs.field(validator=instance_of(int))

    @code.validator
    def _check_code(self, _attribute: attrs.Attribute, value: int) -> None:
        if not 0 <= value < 2 ** (self.n - 1):
            msg = f"{value = } is not a canonical partition code for n={self.n}"
            logger.error(msg)
            raise InvalidInputError(msg)

    @classmethod
    def from_assignment(cls, assignment: ArmAssignment) -> CompanionStructure:
        word = assignment.word
        if assignment.arms[0] is Arm.R:
            word ^= (1 << assignment.n) - 1
        return cls(assignment.n, word)

    @classmethod
    def parse(cls, text: str) -> CompanionStructure:
        """Read the 1-based rendering, e.g. ``"{12|3}"`` (single-digit labels only)."""
        blocks = [block for block in text.strip().strip("{}").split("|") if block]
        labels = [int(char) - 1 for block in blocks for char in block]
        n = len(labels)
        if len(blocks) > 2 or sorted(labels) != list(range(n)):  # noqa: PLR2004
            msg = f"{text!r} is not a two-arm partition of particles 1..n"
            logger.error(msg)
            raise InvalidInputError(msg)
        right = next((b for b in blocks if "1" not in b), "")
        arms = [Arm.R if str(i + 1) in right else Arm.L for i in range(n)]
        return ArmAssignment(arms).structure()

    def representative(self) -> ArmAssignment:
        return ArmAssignment.from_word(self.code, self.n)

    def companions(self, particle: int) -> frozenset[int]:
        return self.representative().companions(particle)

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        arms = self.representative().arms
        groups = [
            tuple(i for i, arm in enumerate(arms) if arm is side) for side in (Arm.L, Arm.R)
        ]
        return tuple(sorted((g for g in groups if g), key=lambda g: (-len(g), g[0])))

    def __str__(self) -> str:
        return "{" + "|".join("".join(str(i + 1) for i in block) for block in self.blocks()) + "}"


def _as_pattern(pattern: DetectorPattern | str) -> DetectorPattern:
    return pattern if isinstance(pattern, DetectorPattern) else DetectorPattern(pattern)


def _sorted_proxy(
    coefficients: Mapping[CompanionStructure, complex],
) -> MappingProxyType[CompanionStructure, complex]:
    return MappingProxyType({key: complex(coefficients[key]) for key in sorted(coefficients)})


@attrs.frozen
class PostSelectedState:
    """Net amplitude of every companion structure after detector projection.

    Normalisation factors are omitted; probabilities are normalised once the
    state is turned into a density.
    """

    n: int = attrs.field(validator=[instance_of(int), ge(1), le(MAX_PARTICLES)])
    pattern: DetectorPattern = attrs.field(converter=_as_pattern)
    chi: float = attrs.field(converter=float)
    coefficients: MappingProxyType[CompanionStructure, complex] = attrs.field(
        converter=_sorted_proxy,
        validator=deep_mapping(
            key_validator=instance_of(CompanionStructure),
            value_validator=instance_of(complex),
            mapping_validator=instance_of(MappingProxyType),
        ),
    )

    @property
    def groups(self) -> tuple[CompanionStructure, ...]:
        return tuple(self.coefficients)

    @property
    def nonzero_groups(self) -> tuple[CompanionStructure, ...]:
        return tuple(g for g, c in self.coefficients.items() if c != 0)

    def coefficient(self, structure: CompanionStructure | str) -> complex:
        if isinstance(structure, str):
            structure = CompanionStructure.parse(structure)
        return self.coefficients[structure]


def phase_factor(chi: float) -> complex:
    """``exp(i chi)``, exact when ``chi`` is a whole number of quarter turns."""
    quarter_turns = chi / HALF_PI
    nearest = round(quarter_turns)
    if math.isclose(quarter_turns, nearest, rel_tol=0.0, abs_tol=1e-12):
        return _QUARTER_TURNS[nearest % 4]
    return cmath.exp(1j * chi)


def enumerate_assignments(n: int) -> Iterator[ArmAssignment]:
    if not 1 <= n <= MAX_PARTICLES:
        msg = f"particle count must lie in [1, {MAX_PARTICLES}], got {n = }"
        logger.error(msg)
        raise InvalidInputError(msg)
    for word in range(2**n):
        yield ArmAssignment.from_word(word, n)


def predetection_coefficient(assignment: ArmAssignment, chi: float) -> complex:
    """Amplitude of one branch just after the phase shifter on the R arm."""
    shifted = phase_factor(chi)
    coefficient = complex(1, 0)
    for _ in range(assignment.n_right):
        coefficient *= shifted
    return coefficient


def branch_coefficient(
    assignment: ArmAssignment, pattern: DetectorPattern | str, chi: float
) -> complex:
    """Amplitude with which one branch reaches the given detector pattern.

    The second beam splitter sends ``L + R`` to detector A and ``L - R`` to
    detector B.
    """
    pattern = _as_pattern(pattern)
    if assignment.n != pattern.n:
        msg = f"assignment {assignment} and pattern {pattern} differ in particle count"
        logger.error(msg)
        raise InvalidInputError(msg)

    shifted = phase_factor(chi)
    coefficient = complex(1, 0)
    for arm, detector in zip(assignment.arms, pattern.detectors, strict=True):
        if arm is Arm.R:
            coefficient *= shifted if detector is Detector.A else -shifted
    return coefficient


def expand_postselected(n: int, pattern: DetectorPattern | str, chi: float) -> PostSelectedState:
    """Expand all ``2**n`` branches and sum each with its arm complement.

    Groups whose two branches cancel are kept with coefficient 0.
    """
    pattern = _as_pattern(pattern)
    if pattern.n != n:
        msg = f"pattern {pattern} does not describe {n = } particles"
        logger.error(msg)
        raise InvalidInputError(msg)

    logger.info(f"expanding {n = } {pattern = !s} {chi = }")
    sums: dict[CompanionStructure, complex] = {}
    members: Counter[CompanionStructure] = Counter()
    for assignment in enumerate_assignments(n):
        key = assignment.structure()
        sums[key] = sums.get(key, complex(0, 0)) + branch_coefficient(assignment, pattern, chi)
        members[key] += 1

    if len(sums) != 2 ** (n - 1) or set(members.values()) != {2}:
        msg = f"branch grouping produced {len(sums)} groups for {n = }"
        logger.error(msg)
        raise InvalidInputError(msg)
    return PostSelectedState(n=n, pattern=pattern, chi=chi, coefficients=sums)


def verify_classical_php(assignment: ArmAssignment, n_arms: int = 2) -> bool:
    """True when the branch respects the classical pigeonhole principle."""
    if assignment.n <= n_arms:
        return True
    return max(Counter(assignment.arms).values()) >= 2  # noqa: PLR2004


def format_complex(value: complex) -> str:
    """Compact ``a+bi`` text with the shortest exact float digits."""
    real = f"{value.real + 0.0:.17g}"
    imag = f"{abs(value.imag) + 0.0:.17g}"
    if value.imag == 0:
        return real
    if value.real == 0:
        return f"{'-' if value.imag < 0 else ''}{imag}i"
    return f"{real}{'-' if value.imag < 0 else '+'}{imag}i"


def render_state(state: PostSelectedState) -> str:
    lines = [f"pattern {state.pattern}  n={state.n}  chi={state.chi!r}"]
    width = max(len(str(group)) for group in state.groups)
    lines.extend(
        f"{group!s:<{width}}  {format_complex(coefficient)}"
        for group, coefficient in state.coefficients.items()
    )
    return "\n".join(lines) + "\n"
