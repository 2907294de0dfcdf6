"""Result files: CSV tables, gnuplot scripts and the run manifest."""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from . import constants as C

logger = logging.getLogger(__name__)


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a table as UTF-8 CSV with LF line endings and 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        float_format=C.CSV_FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
    )
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    size: int
    sha256: str

    def to_line(self) -> str:
        return f"{self.path}\t{self.size}\t{self.sha256}"

    @classmethod
    def from_line(cls, line: str) -> "ManifestEntry":
        path, size, digest = line.rstrip("\n").split("\t")
        return cls(path, int(size), digest)


@dataclass
class RunManifest:
    """Emitted artifacts of one CLI run with their sizes and hashes."""

    subcommand: str
    output_dir: Path
    config_path: Optional[Path] = None
    seed: Optional[int] = None
    entries: List[ManifestEntry] = field(default_factory=list)

    def record(self, path: Union[str, Path]) -> ManifestEntry:
        path = Path(path)
        entry = ManifestEntry(
            path=path.relative_to(self.output_dir).as_posix()
            if path.is_relative_to(self.output_dir) else path.as_posix(),
            size=path.stat().st_size,
            sha256=file_digest(path),
        )
        self.entries.append(entry)
        return entry

    def header_lines(self) -> List[str]:
        lines = [f"# subcommand: {self.subcommand}"]
        if self.config_path is not None:
            lines.append(f"# config: {self.config_path}")
        if self.seed is not None:
            lines.append(f"# seed: {self.seed}")
        return lines

    def write(self, filename: str = C.MANIFEST_FILENAME) -> Path:
        path = self.output_dir / filename
        text = "\n".join(self.header_lines() + [e.to_line() for e in self.entries]) + "\n"
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info(f"Manifest with {len(self.entries)} artifacts written to {path}")
        return path

    def verify(self) -> List[str]:
        """Paths whose size or hash no longer match."""
        stale = []
        for entry in self.entries:
            target = self.output_dir / entry.path
            if not target.exists() or target.stat().st_size != entry.size or file_digest(target) != entry.sha256:
                stale.append(entry.path)
        return stale


def read_manifest(path: Union[str, Path]) -> List[ManifestEntry]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ManifestEntry.from_line(line) for line in lines if line and not line.startswith("#")]


def gnuplot_script(
    csv_name: str,
    columns: Sequence[str],
    x_column: str,
    y_column: str,
    strategies: Sequence[str],
    title: str = "",
    log_x: bool = False,
) -> str:
    """Gnuplot script drawing ``y_column`` against ``x_column``, one line per strategy."""
    position = {name: k + 1 for k, name in enumerate(columns)}
    x, y, s = position[x_column], position[y_column], position["strategy"]
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x_column}'",
        f"set ylabel '{y_column}'",
        "set grid",
        "set terminal pngcairo size 800,600",
        f"set output '{Path(csv_name).stem}_{y_column}.png'",
    ]
    if title:
        lines.append(f"set title '{title}'")
    if log_x:
        lines.append("set logscale x")
    plots = [
        f"'{csv_name}' using (strcol({s}) eq '{name}' ? ${x} : 1/0):{y} with linespoints title '{name}'"
        for name in strategies
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path
