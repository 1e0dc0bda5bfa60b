"""Run artifacts: trajectory and event CSVs, text summaries, batch tables and pi dumps.

All files are UTF-8 with LF line endings. Floats use repr, the shortest
text that parses back to the same value.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import zstandard as zstd

from ..core.models import RunSummary, Seconds, SIMULTANEITY_TOLERANCE


logger = logging.getLogger(__name__)

TRAJECTORIES_FILE = "trajectories.csv"
EVENTS_FILE = "events.csv"
SUMMARY_FILE = "summary.txt"
BATCH_FILE = "batch.csv"
HISTOGRAM_FILE = "final_values_histogram.csv"
CHECKS_FILE = "checks.txt"
PI_DIR = "pi"


class StorageError(Exception):
    """Raised when an artifact cannot be written or read."""
    pass


def format_float(value: float) -> str:
    return repr(float(value))


def format_optional(value: Optional[float]) -> str:
    return "none" if value is None else format_float(value)


def sample_times(horizon: Seconds, sample_dt: Seconds, event_times: Iterable[Seconds]) -> List[Seconds]:
    """Multiples of sample_dt up to the horizon, the horizon itself and every event time."""
    count = int(np.floor(horizon / sample_dt + 1e-9)) + 1
    grid = [k * sample_dt for k in range(count) if k * sample_dt <= horizon]
    merged = sorted(set(grid) | {float(horizon)} | {float(t) for t in event_times if t <= horizon})
    times: List[Seconds] = []
    for t in merged:
        if times and t - times[-1] <= SIMULTANEITY_TOLERANCE:
            continue
        times.append(t)
    times[-1] = float(horizon)
    return times


class RunWriter:
    """Writes the artifacts of one run (or one batch) into a directory."""

    def __init__(self, output_dir: Path, compression_level: int = 3):
        """Initialize the writer.

        Args:
            output_dir: Directory receiving the files; created if missing
            compression_level: Zstandard level for pi dumps (1-22)
        """
        self.output_dir = Path(output_dir)
        self.compression_level = max(1, min(22, compression_level))
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"cannot create output directory {self.output_dir}: {e}") from e
        self.compressor = zstd.ZstdCompressor(level=self.compression_level, write_checksum=True)
        self.decompressor = zstd.ZstdDecompressor()

    def _write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
        path = self.output_dir / name
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise StorageError(f"failed to write {path}: {e}") from e
        logger.debug(f"wrote {path}")
        return path

    def write_trajectories(self, result) -> Path:
        """trajectories.csv: t, x_1..x_n on the sampling grid plus event times."""
        scenario = result.scenario
        times = sample_times(scenario.horizon, scenario.sample_dt, result.events.times)
        header = ["t"] + [f"x_{i + 1}" for i in range(scenario.n)]
        rows = ([format_float(t)] + [format_float(v) for v in result.state_at(t)] for t in times)
        return self._write_rows(TRAJECTORIES_FILE, header, rows)

    def write_events(self, result) -> Path:
        """events.csv: one row per update with its received set and the read times used."""
        rows = []
        for event in result.events:
            for agent, k in event.updates:
                update = result.updates[(agent, k)]
                rows.append([
                    format_float(update.time),
                    str(agent + 1),
                    ";".join(str(j + 1) for j in sorted(update.received)),
                    ";".join(format_float(r.read_time) for r in update.reads),
                ])
        return self._write_rows(EVENTS_FILE, ["t", "agent", "received_set", "read_times"], rows)

    def write_summary(self, summary: RunSummary, extra: Sequence[Tuple[str, str]] = ()) -> Path:
        """summary.txt as key=value lines."""
        path = self.output_dir / SUMMARY_FILE
        lines = [f"{key}={value}" for key, value in list(summary.as_items()) + list(extra)]
        self._write_text(path, "\n".join(lines) + "\n")
        return path

    def write_batch(self, summaries: Sequence[RunSummary]) -> Path:
        """batch.csv: one row per seed."""
        rows = [
            [str(s.seed), format_float(s.final_value), format_float(s.final_spread), format_optional(s.consensus_time)]
            for s in summaries
        ]
        return self._write_rows(BATCH_FILE, ["seed", "final_value", "final_spread", "consensus_time"], rows)

    def write_histogram(self, values: Sequence[float], bins: int = 20) -> Path:
        """Histogram of final values as bin edges and counts."""
        counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
        rows = [
            [format_float(edges[b]), format_float(edges[b + 1]), str(int(counts[b]))]
            for b in range(len(counts))
        ]
        return self._write_rows(HISTOGRAM_FILE, ["bin_left", "bin_right", "count"], rows)

    def write_checks(self, checks: Sequence[Tuple[str, bool, str]]) -> Path:
        """checks.txt: PASS/FAIL lines per criterion."""
        path = self.output_dir / CHECKS_FILE
        lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
        self._write_text(path, "\n".join(lines) + ("\n" if lines else ""))
        return path

    def write_pi_dumps(self, pis: Sequence, compress: bool = False) -> List[Path]:
        """One row-major CSV per event step, optionally zstandard-compressed."""
        pi_dir = self.output_dir / PI_DIR
        pi_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for k, pi in enumerate(pis):
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerows([format_float(v) for v in row] for row in pi.assemble())
            data = buffer.getvalue().encode("utf-8")
            name = f"pi_{k:06d}.csv"
            if compress:
                data = self.compressor.compress(data)
                name += ".zst"
            path = pi_dir / name
            try:
                path.write_bytes(data)
            except OSError as e:
                raise StorageError(f"failed to write {path}: {e}") from e
            paths.append(path)
        logger.info(f"dumped {len(paths)} pi matrices to {pi_dir}")
        return paths

    def read_pi_dump(self, path: Path) -> np.ndarray:
        """Load a pi dump back into a dense matrix."""
        data = Path(path).read_bytes()
        if str(path).endswith(".zst"):
            try:
                data = self.decompressor.decompress(data)
            except zstd.ZstdError as e:
                raise StorageError(f"corrupt pi dump {path}: {e}") from e
        rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
        return np.array([[float(v) for v in row] for row in rows])

    def _write_text(self, path: Path, text: str) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise StorageError(f"failed to write {path}: {e}") from e
