"""File formats: model documents, ensemble CSV with spec sidecar, BIC and projection reports, manifests."""

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .ppca import PpcaModel
from .synth import DataEnsemble, SyntheticSpec

MODEL_FORMAT_VERSION = 1


class FormatError(ValueError):
    """A document could not be parsed or has an unsupported version."""


def _num(x):
    return format(float(x), ".17g")


def atomic_write(path, data):
    """Write text or bytes to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dumps(doc):
    # json emits repr() floats, which round-trip exactly
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


# -- models -----------------------------------------------------------------

def model_to_dict(model):
    prov = dict(model.provenance)
    prov.setdefault("seed", None)
    # no wall-clock time: replayed runs must produce identical bytes
    prov.setdefault("created", f"probrom {__version__}")
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "d": model.d,
        "m": model.m,
        "n": model.n,
        "mu": model.mu.tolist(),
        "phi": model.phi.T.tolist(),
        "sigma2_w": model.sigma2_w.tolist(),
        "sigma2_eps": float(model.sigma2_eps),
        "eigenvalues": model.eigenvalues.tolist(),
        "logL": float(model.logL),
        "clamped": list(model.clamped),
        "diagnostics": list(model.diagnostics),
        "provenance": prov,
    }


def model_from_dict(doc):
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version {version!r}")
    try:
        phi = np.array(doc["phi"], dtype=np.float64).T
        model = PpcaModel(
            mu=doc["mu"],
            phi=phi,
            sigma2_w=doc["sigma2_w"],
            sigma2_eps=float(doc["sigma2_eps"]),
            eigenvalues=doc["eigenvalues"],
            n=int(doc["n"]),
            logL=float(doc["logL"]),
            clamped=tuple(doc.get("clamped", ())),
            diagnostics=tuple(doc.get("diagnostics", ())),
            provenance=dict(doc.get("provenance", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc
    if (model.d, model.m) != (doc["d"], doc["m"]):
        raise FormatError("model document d/m do not match array shapes")
    return model


def save_model(model, path):
    return atomic_write(path, _dumps(model_to_dict(model)))


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a JSON document ({exc})") from exc
    return model_from_dict(doc)


# -- specs and ensembles ----------------------------------------------------

def load_spec(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a JSON document ({exc})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: spec must be a JSON object")
    try:
        return SyntheticSpec.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_spec(spec, path):
    return atomic_write(path, _dumps(spec.to_dict()))


def spec_sidecar(path):
    path = Path(path)
    return path.with_name(path.stem + ".spec.json")


def _csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
    return buf.getvalue()


def save_ensemble(ensemble, path, include_truth=True):
    """One realization per row; ``truth_*`` and ``w_*`` columns follow when present.

    A ``<stem>.spec.json`` sidecar records the generating spec, if known.
    """
    Y = np.asarray(ensemble.realizations)
    d = Y.shape[1]
    blocks = [Y]
    header = [f"y_{i}" for i in range(d)]
    if include_truth and ensemble.truth is not None:
        blocks.append(ensemble.truth)
        header += [f"truth_{i}" for i in range(d)]
    if include_truth and ensemble.latents is not None:
        blocks.append(ensemble.latents)
        header += [f"w_{j}" for j in range(ensemble.latents.shape[1])]
    table = np.hstack(blocks)
    text = _csv_text(header, ([_num(v) for v in row] for row in table))
    atomic_write(path, text)
    if ensemble.spec is not None:
        save_spec(ensemble.spec, spec_sidecar(path))
    return Path(path)


def load_ensemble(path):
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip().split(",")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed ensemble CSV ({exc})") from exc
    if table.size == 0 or table.shape[1] != len(header):
        raise FormatError(f"{path}: row width does not match header")
    cols = {name: i for i, name in enumerate(header)}

    def block(prefix):
        idx = [cols[c] for c in header if c.startswith(prefix)]
        return table[:, idx] if idx else None

    Y = block("y_")
    if Y is None:
        # bare numeric CSV without our column naming
        Y, truth, latents = table, None, None
    else:
        truth, latents = block("truth_"), block("w_")
    sidecar = spec_sidecar(path)
    spec = load_spec(sidecar) if sidecar.exists() else None
    return DataEnsemble(realizations=Y, truth=truth, latents=latents, spec=spec)


# -- reports ----------------------------------------------------------------

def bic_csv(table):
    return _csv_text(["m", "f_bic"], ([str(m), _num(f)] for m, f in table.to_rows()))


def spectrum_csv(eigenvalues, predicted=None):
    header = ["index", "eigenvalue"] + (["predicted"] if predicted is not None else [])
    rows = []
    for i, lam in enumerate(eigenvalues):
        row = [str(i + 1), _num(lam)]
        if predicted is not None:
            row.append(_num(predicted[i]))
        rows.append(row)
    return _csv_text(header, rows)


def projection_csv(results, errors=None):
    """Rows ``index, method, sigma2_eps_T, iterations, converged, error_vs_truth, w_0..``."""
    m = results[0].w_map.shape[0] if results else 0
    header = ["index", "method", "sigma2_eps_T", "iterations", "converged", "error_vs_truth"]
    header += [f"w_{j}" for j in range(m)]
    rows = []
    for k, res in enumerate(results):
        err = "" if errors is None else _num(errors[k])
        row = [str(k), res.method, _num(res.sigma2_eps_T), str(res.iterations),
               str(res.converged).lower(), err]
        row += [_num(v) for v in res.w_map]
        rows.append(row)
    return _csv_text(header, rows)


def read_csv_columns(path):
    """Read a report CSV into ``{column: list of str}``."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        out = {name: [] for name in reader.fieldnames}
        for row in reader:
            for k, v in row.items():
                out[k].append(v)
    return out


def write_manifest(path, command, argv, inputs=(), outputs=(), **extra):
    """Record everything needed to replay a run, with digests of inputs and outputs."""
    doc = {
        "command": command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    doc.update(extra)
    return atomic_write(path, _dumps(doc))
