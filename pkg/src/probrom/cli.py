"""Command-line interface: ``probrom {generate,fit,select,project,reproduce,replay}``."""

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, ppca
from .bench import load_criteria, reproduce
from .io import (
    FormatError,
    atomic_write,
    bic_csv,
    load_ensemble,
    load_model,
    load_spec,
    projection_csv,
    save_ensemble,
    save_model,
    spec_sidecar,
    spectrum_csv,
    write_manifest,
)
from .projection import GAUSSIAN, L2, project_batch, reconstruction_error
from .selection import select_model
from .synth import generate

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_ACCEPTANCE = 0, 2, 3, 4

log = logging.getLogger("probrom")


def _manifest_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def _sibling(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def cmd_generate(args, argv):
    spec = load_spec(args.spec)
    overrides = {k: getattr(args, k) for k in ("seed", "n") if getattr(args, k) is not None}
    if overrides:
        spec = type(spec).from_dict({**spec.to_dict(), **overrides})
    ens = generate(spec)
    save_ensemble(ens, args.out, include_truth=not args.no_truth)
    outputs = [args.out, spec_sidecar(args.out)]
    write_manifest(_manifest_path(args.out), "generate", argv, inputs=[args.spec], outputs=outputs,
                   seed=spec.seed, spec=spec.to_dict(), version=__version__)
    print(f"wrote {ens.n} x {ens.d} ensemble to {args.out}")


def _provenance(ens, seed):
    prov = {"seed": seed if seed is not None else (ens.spec.seed if ens.spec else None)}
    if ens.spec is not None:
        prov["generator_spec"] = ens.spec.to_dict()
    return prov


def cmd_fit(args, argv):
    ens = load_ensemble(args.data)
    model = ppca.fit(ens.realizations, args.m, provenance=_provenance(ens, args.seed))
    save_model(model, args.out)
    spectrum = _sibling(args.out, ".spectrum.csv")
    atomic_write(spectrum, spectrum_csv(model.eigenvalues))
    write_manifest(_manifest_path(args.out), "fit", argv, inputs=[args.data], outputs=[args.out, spectrum],
                   version=__version__)
    print(f"m={model.m} sigma2_eps={model.sigma2_eps:.6g}")


def cmd_select(args, argv):
    ens = load_ensemble(args.data)
    model, table = select_model(ens.realizations, args.m_max, provenance=_provenance(ens, args.seed))
    save_model(model, args.out)
    bic_path, spectrum = _sibling(args.out, ".bic.csv"), _sibling(args.out, ".spectrum.csv")
    atomic_write(bic_path, bic_csv(table))
    atomic_write(spectrum, spectrum_csv(model.eigenvalues))
    write_manifest(_manifest_path(args.out), "select", argv, inputs=[args.data],
                   outputs=[args.out, bic_path, spectrum], selected_m=table.selected_m, version=__version__)
    for diag in model.diagnostics:
        log.warning("diagnostic: %s", diag)
    print(f"selected m={table.selected_m} sigma2_eps={model.sigma2_eps:.6g}")


def cmd_project(args, argv):
    model = load_model(args.model)
    ens = load_ensemble(args.trial)
    if ens.d != model.d:
        raise ValueError(f"trial dimension {ens.d} does not match model dimension {model.d}")
    methods = {"gaussian": [GAUSSIAN], "l2": [L2], "both": [GAUSSIAN, L2]}[args.method]
    results, errors = [], []
    summary = {"n": ens.n, "methods": {}}
    for method in methods:
        res = project_batch(model, ens.realizations, method, args.tol, args.max_iter)
        results += res
        entry = {
            "mean_sigma2_eps_T": float(np.mean([r.sigma2_eps_T for r in res])),
            "converged": int(sum(r.converged for r in res)),
            "max_iterations": int(max(r.iterations for r in res)),
        }
        if ens.truth is not None:
            err = [reconstruction_error(t, r.reconstruction) for t, r in zip(ens.truth, res)]
            errors += err
            entry["mean_error"] = float(np.mean(err))
        summary["methods"][method] = entry
    # per-method indices restart at 0
    text = projection_csv(results, errors if ens.truth is not None else None)
    lines = text.splitlines(keepends=True)
    body = [lines[0]]
    for k, line in enumerate(lines[1:]):
        idx, rest = line.split(",", 1)
        body.append(f"{k % ens.n},{rest}")
    atomic_write(args.out, "".join(body))
    summary_path = _sibling(args.out, ".summary.json")
    atomic_write(summary_path, json.dumps(summary, indent=2) + "\n")
    write_manifest(_manifest_path(args.out), "project", argv, inputs=[args.model, args.trial],
                   outputs=[args.out, summary_path], version=__version__)
    for method, entry in summary["methods"].items():
        extra = f" mean_error={entry['mean_error']:.4f}" if "mean_error" in entry else ""
        print(f"{method}: mean sigma2_eps_T={entry['mean_sigma2_eps_T']:.5g}{extra}")


def cmd_reproduce(args, argv):
    criteria = load_criteria(args.criteria)
    if args.tol is not None:
        criteria["projection_tol"] = args.tol
    if args.max_iter is not None:
        criteria["projection_max_iter"] = args.max_iter
    results = reproduce(args.out_dir, seed=args.seed, criteria=criteria, n_seeds=args.n_seeds)
    out = Path(args.out_dir)
    outputs = sorted(p for p in out.iterdir() if p.suffix in (".csv", ".svg"))
    write_manifest(out / "manifest.json", "reproduce", argv, outputs=outputs, version=__version__)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"acceptance failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


@contextmanager
def _cwd(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def cmd_replay(args, argv):
    doc = json.loads(Path(args.manifest).read_text())
    with _cwd(doc.get("cwd", ".")):
        return main(doc["argv"])


def build_parser():
    p = argparse.ArgumentParser(prog="probrom", description=__doc__)
    p.add_argument("--version", action="version", version=f"probrom {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic ensemble from a spec document")
    g.add_argument("spec")
    g.add_argument("out")
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--no-truth", action="store_true", help="omit truth and latent columns")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit a PPCA model at a fixed dimension")
    f.add_argument("data")
    f.add_argument("out")
    f.add_argument("--m", type=int, required=True)
    f.add_argument("--seed", type=int)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("select", help="select the model dimension by BIC and fit")
    s.add_argument("data")
    s.add_argument("out")
    s.add_argument("--m-max", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_select)

    pr = sub.add_parser("project", help="project trial data onto a model")
    pr.add_argument("model")
    pr.add_argument("trial")
    pr.add_argument("out")
    pr.add_argument("--method", choices=("gaussian", "l2", "both"), default="both")
    pr.add_argument("--tol", type=float, default=1e-10)
    pr.add_argument("--max-iter", type=int, default=500)
    pr.set_defaults(func=cmd_project)

    r = sub.add_parser("reproduce", help="run the full model-problem study and acceptance gate")
    r.add_argument("out_dir")
    r.add_argument("--seed", type=int)
    r.add_argument("--n-seeds", type=int)
    r.add_argument("--tol", type=float, help="projection tolerance (default 1e-10)")
    r.add_argument("--max-iter", type=int, help="projection iteration cap (default 500)")
    r.add_argument("--criteria", help="tolerance document (defaults to the packaged one)")
    r.set_defaults(func=cmd_reproduce)

    rp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv) or EXIT_OK
    except (FormatError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
