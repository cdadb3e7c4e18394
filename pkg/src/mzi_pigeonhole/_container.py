from __future__ import annotations

import logging
from collections.abc import Callable, Hashable, Iterable
from enum import Enum, auto
from typing import TypeAlias

import attrs
from attrs.validators import deep_iterable, instance_of

from mzi_pigeonhole._adapters import FakeAdapter, RealAdapter
from mzi_pigeonhole._registries import ReadFn, WriteFn, standardise_key

logger = logging.getLogger(__name__)


class _FnType(Enum):
    READ = auto()
    WRITE = auto()


class Domain(Enum):
    """One per subcommand; each only sees the formats it may produce."""

    BRANCHES = "branches"
    DENSITY = "density"
    SWEEP = "sweep"
    FEASIBILITY = "feasibility"
    VERIFY = "verify"


DomainFns: TypeAlias = dict[Hashable, dict[_FnType, dict[Hashable, ReadFn | WriteFn]]]


def _to_domain(domain: Hashable) -> Hashable:
    if isinstance(domain, str):
        try:
            return Domain(domain.strip().lower())
        except ValueError:
            return domain.strip().lower()
    return domain


@attrs.define
class Container:
    """Registry and factory for domain-scoped adapters.

    A subcommand asks for the adapter of its own :class:`Domain` and can only
    read and write the formats registered there, e.g. ``feasibility`` writes
    JSON reports and nothing else.
    """

    domains: Iterable = attrs.field(validator=deep_iterable(member_validator=instance_of(Hashable)))
    domain_fns: DomainFns = attrs.field(init=False)

    def __attrs_post_init__(self) -> None:
        self.domain_fns = {
            _to_domain(domain): {_FnType.READ: {}, _FnType.WRITE: {}} for domain in self.domains
        }

    def add_domain(self, domain: Hashable) -> None:
        self.domain_fns[_to_domain(domain)] = {_FnType.READ: {}, _FnType.WRITE: {}}

    def _fns(self, domain: Hashable, fn_type: _FnType) -> dict[Hashable, ReadFn | WriteFn]:
        domain = _to_domain(domain)
        if domain not in self.domain_fns:
            msg = f"unknown domain {domain!r}; add it before registering or requesting adapters"
            logger.error(msg)
            raise KeyError(msg)
        return self.domain_fns[domain][fn_type]

    def register_domain_read_fn(self, domain: Hashable, key: Hashable) -> Callable:
        """Register a read function to a domain; decorators stack across domains."""
        fns = self._fns(domain, _FnType.READ)
        key = standardise_key(key)

        def wrapper(func: ReadFn) -> ReadFn:
            logger.info(f"registering read fn {domain = } {key = } {func = }")
            fns[key] = func
            return func

        return wrapper

    def register_domain_write_fn(self, domain: Hashable, key: Hashable) -> Callable:
        """Register a write function to a domain; decorators stack across domains."""
        fns = self._fns(domain, _FnType.WRITE)
        key = standardise_key(key)

        def wrapper(func: WriteFn) -> WriteFn:
            logger.info(f"registering write fn {domain = } {key = } {func = }")
            fns[key] = func
            return func

        return wrapper

    def get_real_adapter(self, domain: Hashable) -> RealAdapter:
        return RealAdapter(
            read_fns=self._fns(domain, _FnType.READ),
            write_fns=self._fns(domain, _FnType.WRITE),
        )

    def get_fake_adapter(self, domain: Hashable, files: dict | None = None) -> FakeAdapter:
        """In-memory adapter with the same registered formats as the real one.

        .. code-block:: python

            adapter = get_fake_adapter(Domain.SWEEP)
            main(["sweep", "--out", "curve.csv"], adapter=adapter)
            assert adapter.get("curve.csv").startswith("d,x1,y1")
        """
        return FakeAdapter(
            read_fns=self._fns(domain, _FnType.READ),
            write_fns=self._fns(domain, _FnType.WRITE),
            files=files or {},
        )


DEFAULT_CONTAINER = Container(domains=list(Domain))


def add_domain(domain: Hashable) -> None:
    return DEFAULT_CONTAINER.add_domain(domain)


def register_domain_read_fn(domain: Hashable, key: Hashable) -> Callable:
    return DEFAULT_CONTAINER.register_domain_read_fn(domain, key)


def register_domain_write_fn(domain: Hashable, key: Hashable) -> Callable:
    return DEFAULT_CONTAINER.register_domain_write_fn(domain, key)


def get_real_adapter(domain: Hashable) -> RealAdapter:
    return DEFAULT_CONTAINER.get_real_adapter(domain)


def get_fake_adapter(domain: Hashable, files: dict | None = None) -> FakeAdapter:
    return DEFAULT_CONTAINER.get_fake_adapter(domain, files)
