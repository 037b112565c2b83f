"""Atomic artifact directories and the CSV/JSON formats written into them."""

import csv
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from gradflow.errors import InvalidInputError
from gradflow.models.certificates import SampleCloud
from gradflow.models.serialization import json_safe
from gradflow.models.trajectory import CSV_COLUMNS, Trajectory

logger = logging.getLogger(__name__)


class ExperimentWriter:
    """Writes the files of one experiment into a staging directory."""

    def __init__(self, path: Path):
        self.path = path
        self.files: List[str] = []

    def file(self, name: str) -> Path:
        self.files.append(name)
        return self.path / name

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.file(name)
        text = json.dumps(json_safe(payload), indent=2, sort_keys=True, allow_nan=False)
        path.write_text(text + "\n", encoding='utf-8')
        return path

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self.file(name)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
        return path

    def write_trajectory(self, traj: Trajectory, distances: Optional[Sequence[float]], p: float,
                         solver: str, params: Dict[str, Any], stem: str = 'trajectory') -> Path:
        """trajectory.csv (t, energy, slope, dist_to_equilibrium) and its manifest sidecar."""
        path = self.write_rows(f'{stem}.csv', CSV_COLUMNS, traj.to_rows(distances))
        self.write_json(f'{stem}.manifest.json', traj.manifest(p, solver, params))
        return path

    def write_snapshots(self, name: str, snapshots: Sequence[Tuple[float, np.ndarray]]) -> Path:
        """Long-format field snapshots: t, index columns, value."""
        if not snapshots:
            return self.write_rows(name, ('t', 'value'), [])
        dims = np.ndim(snapshots[0][1])
        header = ('t',) + tuple(f'i{d}' for d in range(dims)) + ('value',)

        def rows():
            for t, values in snapshots:
                for idx, value in np.ndenumerate(values):
                    yield (repr(float(t)),) + tuple(idx) + (repr(float(value)),)

        return self.write_rows(name, header, rows())


class ArtifactStore:
    """
    Root directory holding one subdirectory per experiment.

    Each experiment is staged in a hidden sibling directory and renamed into
    place when it finishes; a failure removes the staging directory.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    @contextmanager
    def experiment(self, name: str) -> Iterator[ExperimentWriter]:
        self.root.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f'.{name}-', dir=self.root))
        try:
            yield ExperimentWriter(staging)
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise
        final = self.root / name
        if final.exists():
            shutil.rmtree(final)
        os.replace(staging, final)
        logger.info("Artifacts written to %s", final)

    def path(self, name: str) -> Path:
        return self.root / name


def load_cloud_csv(path: Union[str, Path]) -> SampleCloud:
    """
    Read a sample cloud from CSV.

    Required columns are r, g and dist; any columns named x0, x1, ... are read
    as coordinates, otherwise the row index stands in for the state.

    Raises:
        InvalidInputError: On a missing file, missing columns or non-numeric cells
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Cloud file not found: {path}")
    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames or []
        missing = [c for c in ('r', 'g', 'dist') if c not in fields]
        if missing:
            raise InvalidInputError(f"Cloud file {path} lacks columns: {', '.join(missing)}")
        coords = sorted((c for c in fields if c.startswith('x') and c[1:].isdigit()), key=lambda c: int(c[1:]))
        r, g, dist, points = [], [], [], []
        try:
            for row in reader:
                r.append(float(row['r']))
                g.append(float(row['g']))
                dist.append(float(row['dist']))
                points.append([float(row[c]) for c in coords])
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"Non-numeric cell in {path}: {exc}") from None
    pts = np.array(points) if coords else np.arange(len(r))
    return SampleCloud(points=pts, r=np.array(r), g=np.array(g), dist=np.array(dist), source='csv')


def write_cloud_csv(path: Union[str, Path], cloud: SampleCloud) -> Path:
    path = Path(path)
    pts = np.atleast_2d(np.asarray(cloud.points, dtype=float))
    coords = [f'x{i}' for i in range(pts.shape[1])] if pts.ndim == 2 and pts.shape[0] == len(cloud) else []
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['r', 'g', 'dist'] + coords)
        for k in range(len(cloud)):
            extra = [repr(float(v)) for v in pts[k]] if coords else []
            writer.writerow([repr(float(cloud.r[k])), repr(float(cloud.g[k])), repr(float(cloud.dist[k]))] + extra)
    return path
