"""Deterministic CSV/JSON emission.

Files are written atomically (temp file + rename in the target directory),
floats are rendered with 15 significant digits and a dot decimal separator,
and column order is fixed by the caller, so identical runs produce byte
identical outputs regardless of thread count.
"""

import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import OutputExistsError

META_NAME = "meta.json"


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if np.isnan(x):
            return "nan"
        return format(float(x), ".15g")
    return str(x)


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns, rows):
    """rows: iterable of sequences aligned with the column names."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    _atomic_write(path, json.dumps(_canonical(payload), indent=2, sort_keys=True) + "\n")


def content_hash(payload):
    """Stable sha256 over the canonical JSON form of the resolved inputs."""
    blob = json.dumps(_canonical(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def prepare_out_dir(out_dir, force=False):
    """Create out_dir; refuse to reuse a directory with previous results."""
    os.makedirs(out_dir, exist_ok=True)
    marker = os.path.join(out_dir, META_NAME)
    if os.path.exists(marker) and not force:
        raise OutputExistsError(
            f"{out_dir} already holds results ({META_NAME} present); use --force to overwrite")
    return out_dir


def write_trajectory_csv(path, trajectory, omega, extra_columns=()):
    """Trajectory CSV with the standard header t_us, omega_t_over_2pi, ..."""
    cols = ["t_us", "omega_t_over_2pi"]
    names = [n for n in ("neel", "sigma_1", "sigma_2", "sigma_ns",
                         "fidelity_z2p", "fidelity_z2m", "fidelity_zero")
             if n in trajectory.observables]
    names += [n for n in trajectory.observables if n not in names]
    cols += names
    cycles = omega / (2.0 * np.pi)
    rows = []
    for i, t in enumerate(trajectory.times):
        row = [t, t * cycles] + [trajectory.observables[n][i] for n in names]
        rows.append(row)
    write_csv(path, cols, rows)


def write_meta(out_dir, config_echo, threads, extra=None):
    from . import __version__

    payload = {
        "version": __version__,
        "threads": int(threads),
        "config": _canonical(config_echo),
        "inputs_hash": content_hash(config_echo),
    }
    if extra:
        payload.update(_canonical(extra))
    write_json(os.path.join(out_dir, META_NAME), payload)
