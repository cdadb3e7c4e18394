from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from mzi_pigeonhole._container import Domain, register_domain_read_fn, register_domain_write_fn
from mzi_pigeonhole._registries import OutputFormat, register_read_fn, register_write_fn


@register_read_fn(OutputFormat.JSON)
@register_domain_read_fn(Domain.VERIFY, OutputFormat.JSON)
def read_json(path: str | Path, **kwargs: dict[str, Any]) -> dict:
    return json.loads(Path(path).read_text(), **kwargs)


@register_write_fn(OutputFormat.JSON)
@register_domain_write_fn(Domain.BRANCHES, OutputFormat.JSON)
@register_domain_write_fn(Domain.SWEEP, OutputFormat.JSON)
@register_domain_write_fn(Domain.FEASIBILITY, OutputFormat.JSON)
@register_domain_write_fn(Domain.VERIFY, OutputFormat.JSON)
def write_json(data: dict, path: str | Path, **kwargs: dict[str, Any]) -> None:
    """Sorted keys and a fixed indent keep reports byte-identical between runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, **kwargs) + "\n")


@register_write_fn(OutputFormat.CSV)
@register_write_fn(OutputFormat.GNUPLOT)
@register_write_fn(OutputFormat.TEXT)
@register_domain_write_fn(Domain.BRANCHES, OutputFormat.TEXT)
@register_domain_write_fn(Domain.DENSITY, OutputFormat.CSV)
@register_domain_write_fn(Domain.DENSITY, OutputFormat.GNUPLOT)
@register_domain_write_fn(Domain.SWEEP, OutputFormat.CSV)
@register_domain_write_fn(Domain.SWEEP, OutputFormat.GNUPLOT)
def write_text(data: str, path: str | Path, **_kwargs: dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as f:
        f.write(data)


@register_write_fn(OutputFormat.PGM)
@register_domain_write_fn(Domain.DENSITY, OutputFormat.PGM)
def write_bytes(data: bytes, path: str | Path, **_kwargs: dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
