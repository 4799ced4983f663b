"""File formats: WSTR binary arrays, CSV exports, basis bundles and mesh files.

WSTR layout (little endian): magic ``b"WSTR"``, u32 version (1), u64 n_space,
u64 n_time, f64 dt, then ``(n_time + 1) * n_space`` f64 values stored column
by column (the initial state first). A plain matrix with ``c`` columns is
stored with ``n_time = c - 1`` and ``dt = 0``.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .burgers_fom import Trajectory
from .hyper import GnatWeights, ResidualBasis, SampleMesh
from .subspaces import InitialGuessModel, SubwindowBasis, WindowBasis
from .windows import WindowPlan

MAGIC = b"WSTR"
VERSION = 1
_HEADER = struct.Struct("<4sIQQd")


class FormatError(ValueError):
    pass


def write_wstr(path, array, dt=0.0):
    a = np.asarray(array, dtype="<f8")
    if a.ndim != 2 or a.shape[1] < 1:
        raise ValueError("WSTR payload must be a matrix with at least one column")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1] - 1, float(dt)))
        fh.write(a.ravel(order="F").tobytes())


def read_wstr(path):
    """Returns ``(array, dt)`` with array of shape (n_space, n_time + 1)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, n_space, n_time, dt = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        count = n_space * (n_time + 1)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count:
        raise FormatError(f"{path}: expected {count} values, found {data.size}")
    return data.reshape((n_space, n_time + 1), order="F").astype(float), dt


def write_trajectory(path, traj):
    write_wstr(path, traj.full, traj.dt)


def read_trajectory(path):
    full, dt = read_wstr(path)
    return Trajectory.from_full(full, dt)


def write_matrix(path, m):
    write_wstr(path, np.atleast_2d(m))


def read_matrix(path):
    return read_wstr(path)[0]


def write_trajectory_csv(path, traj, x=None):
    x = np.arange(traj.n_space) if x is None else np.asarray(x)
    full = traj.full
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "u"])
        for n, t in enumerate(traj.times):
            for i in range(traj.n_space):
                w.writerow([repr(float(t)), repr(float(x[i])), repr(float(full[i, n]))])


def write_convergence_csv(path, solution):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "iteration", "grad_norm", "residual_norm", "step_norm", "lambda"])
        w.writerows(solution.convergence_rows())


def _write_manifest(path, entries):
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def _read_manifest(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def _plan_text(plan):
    return ";".join(",".join(str(s) for s in subs) for subs in plan.windows)


def _plan_from_text(dt, text):
    return WindowPlan(dt, tuple(tuple(int(s) for s in w.split(",")) for w in text.split(";")))


def _write_sub(directory, prefix, sub, entries):
    write_matrix(directory / f"{prefix}_phi.wstr", sub.spatial)
    for i, psi in enumerate(sub.temporal):
        write_matrix(directory / f"{prefix}_psi{i}.wstr", psi)
    entries[f"{prefix}.n_s"] = sub.spatial.shape[1]
    entries[f"{prefix}.n_t"] = ",".join(str(c) for c in sub.temporal_counts)


def _read_sub(directory, prefix, manifest):
    phi = read_matrix(directory / f"{prefix}_phi.wstr")
    n_s = int(manifest[f"{prefix}.n_s"])
    psis = [read_matrix(directory / f"{prefix}_psi{i}.wstr") for i in range(n_s)]
    return SubwindowBasis(phi, psis)


def save_state_bundle(directory, plan, bases, guess, e_s, e_t):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = {"kind": "state", "dt": repr(plan.dt), "plan": _plan_text(plan),
               "l_w": repr(plan.window_length), "l_s": repr(plan.subwindow_length),
               "e_s": repr(e_s), "e_t": repr(e_t), "n_space": bases[0].n_space,
               "guess": "nearest" if guess.nearest_neighbor else "affine"}
    for k, basis in enumerate(bases):
        for m, sub in enumerate(basis.sub_bases):
            prefix = f"k{k}_m{m}"
            _write_sub(d, prefix, sub, entries)
            write_matrix(d / f"{prefix}_pi.wstr", sub.matrix())
        if guess.nearest_neighbor:
            write_matrix(d / f"guess_k{k}.wstr", guess.targets[k])
        else:
            write_matrix(d / f"guess_k{k}.wstr", guess.coefficients[k])
    write_matrix(d / "guess_features.wstr", guess.features)
    _write_manifest(d / "manifest.txt", entries)


def load_state_bundle(directory):
    """Returns ``(plan, bases, guess, manifest)``."""
    d = Path(directory)
    man = _read_manifest(d / "manifest.txt")
    if man.get("kind") != "state":
        raise FormatError(f"{d}: not a state basis bundle")
    plan = _plan_from_text(float(man["dt"]), man["plan"])
    bases = [WindowBasis([_read_sub(d, f"k{k}_m{m}", man) for m in range(plan.n_sub(k))])
             for k in range(plan.n_windows)]
    features = read_matrix(d / "guess_features.wstr")
    stored = [read_matrix(d / f"guess_k{k}.wstr") for k in range(plan.n_windows)]
    if man["guess"] == "nearest":
        guess = InitialGuessModel(None, features, stored, True)
    else:
        guess = InitialGuessModel(stored, features, None, False)
    return plan, bases, guess, man


def save_residual_bundle(directory, plan, residual_bases, meshes, e_rs, e_rt):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = {"kind": "residual", "dt": repr(plan.dt), "plan": _plan_text(plan),
               "e_rs": repr(e_rs), "e_rt": repr(e_rt), "n_space": residual_bases[0].n_space}
    for k, rb in enumerate(residual_bases):
        entries[f"k{k}.n_sub"] = len(rb.sub_bases)
        for m, sub in enumerate(rb.sub_bases):
            _write_sub(d, f"k{k}_m{m}", sub, entries)
        write_matrix(d / f"k{k}_pi.wstr", rb.matrix)
    _write_manifest(d / "manifest.txt", entries)
    write_meshes(d / "mesh.txt", meshes)


def load_residual_bundle(directory):
    """Returns ``(plan, residual_bases, meshes, weights)``."""
    d = Path(directory)
    man = _read_manifest(d / "manifest.txt")
    if man.get("kind") != "residual":
        raise FormatError(f"{d}: not a residual basis bundle")
    plan = _plan_from_text(float(man["dt"]), man["plan"])
    n_space = int(man["n_space"])
    rbs = []
    for k in range(plan.n_windows):
        subs = [_read_sub(d, f"k{k}_m{m}", man) for m in range(int(man[f"k{k}.n_sub"]))]
        rbs.append(ResidualBasis(subs, read_matrix(d / f"k{k}_pi.wstr"), n_space))
    meshes = read_meshes(d / "mesh.txt", n_space)
    weights = [GnatWeights(mesh, rb) for mesh, rb in zip(meshes, rbs)]
    return plan, rbs, meshes, weights


def write_meshes(path, meshes):
    with open(path, "w") as fh:
        for k, mesh in enumerate(meshes):
            fh.write(f"window {k}\n")
            fh.write("t: " + " ".join(str(int(t)) for t in mesh.times) + "\n")
            fh.write("s: " + " ".join(str(int(s)) for s in mesh.cells) + "\n")


def read_meshes(path, n_space):
    meshes, times = [], None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("window"):
                times = None
            elif line.startswith("t:"):
                times = np.array(line[2:].split(), dtype=int)
            elif line.startswith("s:"):
                if times is None:
                    raise FormatError(f"{path}: 's:' line without preceding 't:' line")
                meshes.append(SampleMesh(times, np.array(line[2:].split(), dtype=int), n_space))
            else:
                raise FormatError(f"{path}: unexpected line {line!r}")
    return meshes
