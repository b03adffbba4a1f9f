"""File formats shared by the pipeline stages.

Four artefact kinds, all plain text so that external tools can regenerate
figures from them:

* matrices: CSV with a ``# rows cols`` header line (debugging dumps);
* sampled trajectories: CSV with header ``t, y_1, ..., y_{n_y}`` plus a JSON
  sidecar holding the provenance (seed, sampling time, disturbance and attack
  settings) -- the contract between the training and design stages;
* residual traces: CSV with header ``t, r, energy, alarm``;
* filter artefacts: a small key/value text file carrying the filter
  coefficients at 17 significant digits together with a hash of the model
  configuration it was designed against.  Loading re-verifies the hash and
  the structural invariants, so a stale artefact fails loudly instead of
  producing silently wrong residuals.

Floats are written with ``%.17g`` everywhere, which round-trips IEEE doubles
exactly and keeps reruns byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .design import FilterDesign
from .errors import ConfigError
from .lti import StackedSystem
from .shiftpoly import pole_polynomial

FILTER_FORMAT_TAG = "residual-filter-v1"
NULL_RESIDUAL_TOL = 1e-6


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# --- matrix CSV ---------------------------------------------------------------


def save_matrix(path: str | Path, mat: np.ndarray) -> None:
    """Write a 2-D array as CSV with a ``# rows cols`` header line."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.ndim != 2:
        raise ValueError("save_matrix expects a 2-D array")
    lines = [f"# {mat.shape[0]} {mat.shape[1]}"]
    for row in mat:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path: str | Path) -> np.ndarray:
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("#"):
        raise ConfigError(f"{path}: missing '# rows cols' header")
    try:
        rows, cols = (int(tok) for tok in text[0][1:].split())
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed header {text[0]!r}") from exc
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != rows:
        raise ConfigError(f"{path}: header promises {rows} rows, found {len(body)}")
    out = np.empty((rows, cols))
    for i, ln in enumerate(body):
        vals = ln.split(",")
        if len(vals) != cols:
            raise ConfigError(f"{path}: row {i} has {len(vals)} values, expected {cols}")
        out[i] = [float(v) for v in vals]
    return out


# --- trajectory CSV + sidecar -------------------------------------------------


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta.json")


def save_trajectory(path: str | Path, t: np.ndarray, y: np.ndarray, meta: dict) -> None:
    """Write samples as ``t, y_1..y_ny`` CSV and the provenance sidecar.

    ``y`` is (n_y, T) to match the rest of the code base; rows of the CSV are
    time instants.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != t.size:
        raise ValueError("y must be (n_y, len(t))")
    header = "t," + ",".join(f"y_{i + 1}" for i in range(y.shape[0]))
    lines = [header]
    for k in range(t.size):
        lines.append(",".join([_fmt(t[k])] + [_fmt(v) for v in y[:, k]]))
    Path(path).write_text("\n".join(lines) + "\n")
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_trajectory(path: str | Path) -> tuple[np.ndarray, np.ndarray, dict]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("t,"):
        raise ConfigError(f"{path}: missing trajectory header")
    n_y = len(lines[0].split(",")) - 1
    body = [ln for ln in lines[1:] if ln.strip()]
    t = np.empty(len(body))
    y = np.empty((n_y, len(body)))
    for k, ln in enumerate(body):
        vals = [float(v) for v in ln.split(",")]
        if len(vals) != n_y + 1:
            raise ConfigError(f"{path}: row {k} has {len(vals)} columns, expected {n_y + 1}")
        t[k] = vals[0]
        y[:, k] = vals[1:]
    meta_file = sidecar_path(path)
    meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    return t, y, meta


def save_residual_trace(
    path: str | Path,
    t: np.ndarray,
    r: np.ndarray,
    energy: np.ndarray,
    alarm: np.ndarray,
) -> None:
    lines = ["t,r,energy,alarm"]
    for k in range(len(t)):
        lines.append(
            ",".join([_fmt(t[k]), _fmt(r[k]), _fmt(energy[k]), str(int(alarm[k]))])
        )
    Path(path).write_text("\n".join(lines) + "\n")


# --- filter artefact ----------------------------------------------------------


def model_config_hash(cfg: dict) -> str:
    """Canonical digest of a model configuration dict.

    Sorted-key compact JSON makes the digest independent of dict insertion
    order; any numeric change to the model changes the digest.
    """
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def save_filter(
    path: str | Path,
    design: FilterDesign,
    model_hash: str,
    calibration: dict | None = None,
) -> None:
    """Persist a design plus the detector calibration that travels with it.

    Carrying ``calibration`` (tau_star, margin, window, warmup) inside the
    artefact keeps the test phase honest: it needs the artefact and fresh
    simulations, never the raw training data.
    """
    lines = [
        FILTER_FORMAT_TAG,
        f"d_n: {design.d_n}",
        f"pole: {_fmt(design.pole)}",
        f"n_r: {design.n_r}",
        f"mode: {design.mode}",
        f"track_steady_state: {int(design.track_steady_state)}",
        f"objective: {_fmt(design.objective)}",
        f"model_hash: {model_hash}",
        "branch: " + json.dumps(design.branch, sort_keys=True),
        "calibration: " + json.dumps(calibration or {}, sort_keys=True),
        "a_coeffs: " + " ".join(_fmt(v) for v in design.a_coeffs),
        "nbar: " + " ".join(_fmt(v) for v in design.nbar),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_filter(
    path: str | Path,
    expected_hash: str | None = None,
    stacked: StackedSystem | None = None,
) -> tuple[FilterDesign, str]:
    """Read a filter artefact back and re-verify everything checkable.

    ``expected_hash`` guards against applying a filter to a model it was not
    designed for; ``stacked`` additionally re-checks the unknown-input
    decoupling (the left-null-space membership of the coefficients).
    """
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != FILTER_FORMAT_TAG:
        raise ConfigError(f"{path}: not a {FILTER_FORMAT_TAG} artefact")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, val = ln.partition(":")
        fields[key.strip()] = val.strip()
    try:
        d_n = int(fields["d_n"])
        pole = float(fields["pole"])
        n_r = int(fields["n_r"])
        mode = fields["mode"]
        track = bool(int(fields["track_steady_state"]))
        objective = float(fields["objective"])
        model_hash = fields["model_hash"]
        branch = json.loads(fields["branch"])
        calibration = json.loads(fields.get("calibration", "{}"))
        a_coeffs = np.array([float(v) for v in fields["a_coeffs"].split()])
        nbar = np.array([float(v) for v in fields["nbar"].split()])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed filter artefact: {exc}") from exc

    if nbar.size != (d_n + 1) * n_r:
        raise ConfigError(
            f"{path}: coefficient vector has {nbar.size} entries, "
            f"expected {(d_n + 1) * n_r}"
        )
    expected_a = pole_polynomial(pole, d_n)
    if a_coeffs.shape != expected_a.shape or not np.allclose(
        a_coeffs, expected_a, atol=1e-12, rtol=0.0
    ):
        raise ConfigError(f"{path}: denominator does not match pole {pole}, degree {d_n}")
    if abs(float(np.sum(a_coeffs)) - 1.0) > 1e-9:
        raise ConfigError(f"{path}: denominator is not normalised to a(1) = 1")
    if expected_hash is not None and model_hash != expected_hash:
        raise ConfigError(
            f"{path}: artefact was designed against a different model "
            f"configuration (hash {model_hash[:12]}.. != {expected_hash[:12]}..)"
        )
    if stacked is not None:
        if stacked.n_vars != nbar.size or stacked.d_n != d_n:
            raise ConfigError(f"{path}: artefact does not match the stacked system shape")
        null_resid = float(np.max(np.abs(nbar @ stacked.barH)))
        if null_resid > NULL_RESIDUAL_TOL:
            raise ConfigError(
                f"{path}: coefficients violate unknown-input decoupling "
                f"(residual {null_resid:.3e})"
            )
    design = FilterDesign(
        nbar=nbar,
        d_n=d_n,
        pole=pole,
        a_coeffs=a_coeffs,
        n_r=n_r,
        mode=mode,
        objective=objective,
        branch=branch,
        track_steady_state=track,
        diagnostics={"calibration": calibration},
    )
    return design, model_hash
