import csv
from pathlib import Path

import numpy as np

from geo_lqr.dtos import BVPSolution, TrajectoryLog
from geo_lqr.utils import fmt_num

RIGID_BODY_HEADERS = (
    "t",
    "r11",
    "r12",
    "r13",
    "r21",
    "r22",
    "r23",
    "r31",
    "r32",
    "r33",
    "wx",
    "wy",
    "wz",
    "tau_x",
    "tau_y",
    "tau_z",
    "dist",
    "lyap",
    "value",
    "hamiltonian",
)
DIAGNOSTIC_COLUMNS = ("dist", "lyap", "value", "hamiltonian")
FLUSH_EVERY = 1000


def sample_indices(n: int, decimation: int) -> list[int]:
    """Every ``decimation``-th index of ``range(n)``, always ending at ``n - 1``."""
    if decimation < 1:
        raise ValueError(f"decimation must be >= 1, got {decimation}")
    idx = list(range(0, n, decimation))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _write_rows(path: Path, headers, rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([fmt_num(x) for x in row])
            count += 1
            if count % FLUSH_EVERY == 0:
                f.flush()
    return count


def write_trajectory(path: Path, log: TrajectoryLog, decimation: int = 10) -> int:
    """Write a rigid-body log with the fixed column contract; returns the row count.

    Diagnostic channels missing from ``log.diagnostics`` are left empty.
    """

    def rows():
        for i in sample_indices(len(log), decimation):
            s = log.states[i]
            extra = [
                log.diagnostics[c][i] if c in log.diagnostics else None
                for c in DIAGNOSTIC_COLUMNS
            ]
            yield [log.times[i], *np.ravel(s.r), *s.w, *log.torques[i], *extra]

    return _write_rows(Path(path), RIGID_BODY_HEADERS, rows())


def flat_headers(n: int, q_size: int | None = None) -> list[str]:
    return [
        "t",
        *(f"q{i + 1}" for i in range(q_size or n)),
        *(f"v{i + 1}" for i in range(n)),
        *(f"u{i + 1}" for i in range(n)),
        "clearance",
        "hamiltonian",
    ]


def write_flat_trajectory(
    path: Path,
    sol: BVPSolution,
    clearance: np.ndarray,
    hamiltonian: np.ndarray | None = None,
    decimation: int = 10,
) -> int:
    """Write a BVP solution as ``t, q.., v.., u.., clearance, hamiltonian``.

    Rotations are flattened row-major into ``q1..q9``.
    """
    n = sol.v.shape[-1]
    q_size = int(np.prod(sol.q.shape[1:]))

    def rows():
        for i in sample_indices(len(sol.times), decimation):
            h = None if hamiltonian is None else hamiltonian[i]
            yield [sol.times[i], *np.ravel(sol.q[i]), *sol.v[i], *sol.u[i], clearance[i], h]

    return _write_rows(Path(path), flat_headers(n, q_size), rows())
