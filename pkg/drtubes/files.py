"""CSV writers for curves and benchmark tables.

Writers follow one pattern: entering the context writes the header row,
`write_batch` writes the rows of one item, and `write_complete` does both
for an iterable of items. This allows both batched and streaming output.
"""

import abc
import csv
import io
from typing import Any, Iterable, List, Sequence, Tuple

import numpy as np

from drtubes import formatters
from drtubes.benchmark import BenchmarkRow, PowerCurve


class TableFileBase(abc.ABC):
    columns: Tuple[str, ...] = ...

    def __init__(self, stream: io.TextIOBase) -> None:
        """Initialize the table writer.

        Args:
            stream:
                The stream on which to write the table,
                e.g. a file handle or io.StringIO()
        """
        self.stream = stream
        self._writer = csv.writer(stream, lineterminator="\n")

    def __enter__(self) -> "TableFileBase":
        self.write_header()
        return self

    def __exit__(self, exc_type, exc_value, exc_tb) -> None:
        self.stream.flush()

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(stream={self.stream})"

    def write_header(self) -> None:
        self._writer.writerow(self.columns)

    @abc.abstractmethod
    def _make_rows(self, item: Any) -> List[List[str]]:
        """Format one item as table rows."""

    def write_batch(self, item: Any) -> None:
        self._writer.writerows(self._make_rows(item))

    def write_complete(self, items: Iterable[Any]) -> None:
        with self:
            for item in items:
                self.write_batch(item)


class ShapeCurveFile(TableFileBase):
    """Long-format zero-one standardized shape curves: one row per (curve, dose)."""

    columns = ("curve", "dose", "value")

    def _make_rows(self, item: Tuple[str, np.ndarray, np.ndarray]) -> List[List[str]]:
        label, doses, values = item
        return [[label, formatters.number(z), formatters.number(v)] for z, v in zip(doses, values)]


class PowerCurveFile(TableFileBase):
    """Long-format power curves: the LR test and each locally optimal test against the true gamma."""

    columns = ("curve", "gamma", "arc", "power", "mc_se")

    def _make_rows(self, item: PowerCurve) -> List[List[str]]:
        rows = []
        for i, (gamma, arc) in enumerate(zip(item.gamma, item.arc)):
            est = item.lr[i]
            rows.append(
                ["LR", formatters.number(gamma), formatters.number(arc), formatters.number(est.value), formatters.number(est.se)]
            )
        for j, local_gamma in enumerate(item.local_gamma):
            label = f"optimal gamma={local_gamma:.4g}"
            for i, (gamma, arc) in enumerate(zip(item.gamma, item.arc)):
                rows.append(
                    [label, formatters.number(gamma), formatters.number(arc), formatters.number(item.local[i, j]), "0.0"]
                )
        return rows


class BenchmarkFile(TableFileBase):
    """Powers in percent, one row per (target power, scenario), laid out like a power table."""

    def __init__(self, stream: io.TextIOBase, comparators: Sequence[str] = ("1", "2", "3", "4")) -> None:
        super().__init__(stream)
        self.columns = ("power", "scenario", "LR", *comparators, "MCP-Mod", "LR_mc_se", "MCP-Mod_mc_se")
        self.n_local = len(comparators)

    def _make_rows(self, item: BenchmarkRow) -> List[List[str]]:
        if len(item.local) != self.n_local:
            msg = f"row has {len(item.local)} locally optimal powers, expected {self.n_local}"
            raise ValueError(msg)
        return [
            [
                f"{100 * item.target_power:.0f}",
                item.scenario,
                formatters.percent(item.lr.value),
                *[formatters.percent(v) for v in item.local],
                formatters.percent(item.mcpmod),
                formatters.percent(item.lr.se, 2),
                formatters.percent(item.mcpmod_se, 2),
            ]
        ]
