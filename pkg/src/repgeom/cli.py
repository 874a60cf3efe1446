"""Command-line interface.

Every command writes its outputs plus a ``meta.json`` sidecar into
``--out``. The sidecar records the fully resolved configuration, so
``repgeom rerun OUT/meta.json --out OTHER`` reproduces the same files.

Exit codes: 0 success, 1 usage error, 2 data error. Failures print one line
``ErrorClass: message`` on stderr.
"""
import argparse
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from ._accel import default_backend, resolve_backend
from .alignment import (
    DEFAULT_LAMBDA_GRID,
    AlignmentConfig,
    align_models,
    encode,
    reference_alignment,
)
from .errors import RepgeomError
from .intrinsic_dim import (
    correlation_dimension,
    default_epsilons,
    id_dataset,
    local_id,
    scale_sweep,
    subsample_id,
)
from .noise_ceiling import (
    NC_FLOOR,
    TrialCounts,
    ceiling,
    ceiling_from_trials,
    effective_noise,
    normalize_alignment,
)
from .stats import bin_by, grouped_summary, pearson, spearman, within_group_alignment
from .synthetic import (
    SWISS_ROLL_HEIGHT,
    SWISS_ROLL_T,
    ManifoldSpec,
    ZooSpec,
    linear_teacher,
    repeated_trials,
    sample_manifold,
    synth_zoo,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DEFAULTS = {
    "pcs": 300,
    "test_fraction": 0.2,
    "folds": 5,
    "k": 100,
    "neighborhood": 1000,
    "subsample": 1000,
    "bins": 4,
    "lambda_grid": list(DEFAULT_LAMBDA_GRID),
    "nc_floor": NC_FLOOR,
}

# per-command notes recorded in the sidecar
METHOD_NOTES = {
    "ceiling": "S2 = max(0, var(image means) - pooled trial variance / harmonic-mean repeats), "
               "expressed in units of pooled trial variance",
    "align brain": AlignmentConfig().as_dict()["cv_scheme"],
    "align models": AlignmentConfig().as_dict()["cv_scheme"],
    "align reference": "reference = highest accuracy, ties to smallest name",
    "synth manifold": f"swiss roll t in [{SWISS_ROLL_T[0]!r}, {SWISS_ROLL_T[1]!r}], "
                      f"height in [0, {SWISS_ROLL_HEIGHT!r}]",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------- arg helpers


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _lambda_grid(text):
    """``a,b,c`` or ``logspace:LO:HI:N`` (base-10 exponents)."""
    if text.startswith("logspace:"):
        try:
            lo, hi, n = text.split(":")[1:]
            return [float(v) for v in np.logspace(float(lo), float(hi), int(n))]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad logspace spec {text!r}") from None
    return _floats(text)


def _path(text):
    return str(Path(text).resolve())


# ---------------------------------------------------------------- commands


def _align_cfg(a):
    return AlignmentConfig(
        n_components=a.pcs,
        lambda_grid=tuple(a.lambda_grid),
        inner_folds=a.folds,
        outer_folds=a.folds,
        test_fraction=a.test_frac,
        seed=a.seed,
        lambda_mode=a.lambda_mode.replace("-", "_"),
        standardize=a.standardize,
    )


def _per_point_rows(est, rows):
    return [[int(r), v] for r, v in zip(rows, est.per_point)]


def cmd_id_estimate(a, out):
    Z = rio.read_matrix(a.embeddings)
    if a.mode == "global":
        est = id_dataset(Z, a.k, a.estimator, a.aggregate, backend=a.backend)
        rows = np.arange(Z.shape[0])
    elif a.mode == "local-knn":
        est = local_id(Z, a.seed, a.neighborhood, a.k, a.estimator, a.aggregate, backend=a.backend)
        rows = est.meta.pop("indices")
    else:
        est = subsample_id(Z, a.subsample, a.seed, a.k, a.estimator, a.aggregate, backend=a.backend)
        rows = est.meta.pop("indices")
    rio.write_table(out / "per_point.csv", ["row", "estimate"], _per_point_rows(est, rows))
    summary = {"estimator": est.estimator, "K": est.K, "mode": est.mode, "value": est.value,
               "n_evaluated": est.n_evaluated, "n_excluded": est.n_excluded, "meta": est.meta}
    rio.write_json(out / "summary.json", summary)
    print(format(est.value, ".17g"))
    return ["per_point.csv", "summary.json"]


def cmd_id_sweep(a, out):
    Z = rio.read_matrix(a.embeddings)
    curve = scale_sweep(Z, a.k_list, a.estimator, a.aggregate, backend=a.backend)
    rio.write_table(out / "curve.csv", ["K", "estimate", "n_excluded"],
                    [[int(k), v, d.n_excluded]
                     for k, v, d in zip(curve.K_values, curve.estimates, curve.details)])
    for k, v in zip(curve.K_values, curve.estimates):
        print(f"{int(k)}\t{v:.17g}")
    return ["curve.csv"]


def cmd_id_correlation_dim(a, out):
    Z = rio.read_matrix(a.embeddings)
    eps = a.epsilons if a.epsilons else default_epsilons(Z, seed=a.seed)
    res = correlation_dimension(Z, eps, seed=a.seed, backend=a.backend)
    rio.write_table(out / "correlation_integral.csv", ["epsilon", "C", "used"],
                    [[e, c, bool(u)] for e, c, u in zip(res.epsilons, res.C, res.used)])
    rio.write_json(out / "summary.json", {"slope": res.slope, "intercept": res.intercept,
                                          "n_pairs": res.n_pairs, "sampled": res.sampled})
    print(format(res.slope, ".17g"))
    return ["correlation_integral.csv", "summary.json"]


def _read_ceilings(path, n):
    p = Path(path)
    if p.suffix.lower() == ".csv":
        rows = rio.read_table(p)
        if not rows or "nc" not in rows[0]:
            raise RepgeomError(f"{p}: ceiling table needs an 'nc' column")
        nc = np.array([float(r["nc"]) for r in rows])
    else:
        nc = rio.read_matrix(p).ravel()
    return nc


def _write_alignment(path, res):
    norm = res.ceiling_normalized
    cols = ["target", "r2", "lambda"] + (["ceiling_normalized"] if norm is not None else [])
    rows = []
    for j, (r2, lam) in enumerate(zip(res.per_target_r2, res.chosen_lambdas)):
        row = [j, r2, lam]
        if norm is not None:
            row.append(norm[j])
        rows.append(row)
    rio.write_table(path, cols, rows)


def _result_summary(res):
    d = {"mean_r2": res.mean, "median_r2": res.median,
         "n_targets": int(res.per_target_r2.size),
         "constant_targets": [int(v) for v in res.constant_targets]}
    if res.ceiling_normalized is not None:
        finite = res.ceiling_normalized[~np.isnan(res.ceiling_normalized)]
        d.update(normalized_mean=float(np.mean(finite)) if finite.size else None,
                 normalized_median=float(np.median(finite)) if finite.size else None,
                 n_ceiling_excluded=res.n_ceiling_excluded)
    return d


def cmd_align_brain(a, out):
    X = rio.read_matrix(a.embeddings)
    Y = rio.read_matrix(a.responses)
    cfg = _align_cfg(a)
    res = encode(X, Y, cfg)
    if a.ceilings:
        res = normalize_alignment(res, _read_ceilings(a.ceilings, Y.shape[1]))
    _write_alignment(out / "per_target.csv", res)
    rio.write_json(out / "summary.json", dict(_result_summary(res), config=cfg.as_dict(),
                                              test_indices=res.split.test_indices))
    print(format(res.median, ".17g"))
    return ["per_target.csv", "summary.json"]


def cmd_align_models(a, out):
    A = rio.read_matrix(a.a)
    B = rio.read_matrix(a.b)
    cfg = _align_cfg(a)
    res = align_models(A, B, cfg)
    _write_alignment(out / "a_to_b.csv", res.a_to_b)
    _write_alignment(out / "b_to_a.csv", res.b_to_a)
    rio.write_json(out / "summary.json", {"score": res.score,
                                          "a_to_b": _result_summary(res.a_to_b),
                                          "b_to_a": _result_summary(res.b_to_a),
                                          "config": cfg.as_dict()})
    print(format(res.score, ".17g"))
    return ["a_to_b.csv", "b_to_a.csv", "summary.json"]


def cmd_align_reference(a, out):
    manifest = rio.load_manifest(a.manifest)
    accs = manifest.accuracies()
    embeddings = {}
    for e in manifest.entries:
        if e.embedding_path is None:
            raise RepgeomError(f"entry {e.name!r}: no embedding_path")
    if len(manifest.entries) >= 2:
        embeddings = {e.name: rio.read_matrix(e.embedding_path) for e in manifest.entries}
    cfg = _align_cfg(a)
    table = reference_alignment(accs, embeddings, cfg)
    rio.write_table(out / "reference.csv", ["model", "accuracy", "score"],
                    [[n, accs[n], s] for n, s in table.rows])
    rio.write_json(out / "summary.json", {"reference": table.reference, "tie": table.tie,
                                          "config": cfg.as_dict()})
    for n, s in table.rows:
        print(f"{n}\t{s:.17g}")
    return ["reference.csv", "summary.json"]


def cmd_ceiling(a, out):
    cols = ["target", "n_eff", "s2", "nc"]
    rows = []
    if a.trials:
        for i, path in enumerate(a.trials):
            T = rio.read_matrix(path, allow_nan=True)
            res = ceiling_from_trials(T)
            rows.append([i, res.n_eff, res.s2, res.nc])
    else:
        if a.counts is None or a.s2 is None:
            raise UsageError("ceiling needs --trials, or both --counts and --s2")
        if len(a.counts) != 3:
            raise UsageError("--counts takes three integers A,B,C")
        n_eff = effective_noise(TrialCounts(*a.counts))
        rows.append([0, n_eff, a.s2, ceiling(a.s2, n_eff)])
    rio.write_table(out / "ceiling.csv", cols, rows)
    for r in rows:
        print(f"{r[0]}\tn_eff={r[1]:.17g}\tnc={r[3]:.17g}")
    return ["ceiling.csv"]


def _column(rows, name, path):
    if not rows:
        raise RepgeomError(f"{path}: table has no rows")
    if name not in rows[0]:
        raise RepgeomError(f"{path}: no column {name!r}")
    return np.array([float(r[name]) for r in rows])


def _label(row, i):
    for key in ("name", "model"):
        if key in row:
            return row[key]
    return i


def cmd_stats_correlate(a, out):
    rows = rio.read_table(a.table)
    x = _column(rows, a.x, a.table)
    y = _column(rows, a.y, a.table)
    methods = ["pearson", "spearman"] if a.method == "both" else [a.method]
    fns = {"pearson": pearson, "spearman": spearman}
    reps = [fns[m](x, y, permutation=a.permutations > 0, seed=a.seed,
                   n_perm=max(a.permutations, 1)) for m in methods]
    rio.write_table(out / "correlation.csv", ["method", "r", "p", "n", "p_method"],
                    [[r.method, r.r, r.p, r.n, r.p_method] for r in reps])
    for r in reps:
        print(f"{r.method}\tr={r.r:.17g}\tp={r.p:.17g}\tn={r.n}")
    return ["correlation.csv"]


def cmd_stats_bin(a, out):
    rows = rio.read_table(a.table)
    v = _column(rows, a.x, a.table)
    g = bin_by(v, a.bins)
    rio.write_table(out / "bins.csv", ["item", a.x, "bin"],
                    [[_label(r, i), v[i], int(g.labels[i])] for i, r in enumerate(rows)])
    rio.write_json(out / "summary.json", {"boundaries": g.boundaries, "n_bins": g.n_bins,
                                          "sizes": np.bincount(g.labels, minlength=g.n_bins)})
    return ["bins.csv", "summary.json"]


def cmd_stats_within_group(a, out):
    S = rio.read_matrix(a.matrix, allow_nan=True)
    rows = rio.read_table(a.table)
    g = bin_by(_column(rows, a.x, a.table), a.bins)
    groups = within_group_alignment(S, g)
    rio.write_table(out / "within_group.csv", ["bin", "n_pairs", "mean"],
                    [[b, vals.size, mean] for b, (vals, mean) in enumerate(groups)])
    detail = []
    for b in range(g.n_bins):
        members = g.members(b)
        for k, (i, j) in enumerate((i, j) for ii, i in enumerate(members) for j in members[ii + 1:]):
            detail.append([b, int(i), int(j), groups[b][0][k]])
    rio.write_table(out / "within_group_values.csv", ["bin", "i", "j", "value"], detail)
    for b, (vals, mean) in enumerate(groups):
        print(f"{b}\t{mean:.17g}")
    return ["within_group.csv", "within_group_values.csv"]


def cmd_stats_grouped(a, out):
    rows = rio.read_table(a.table)
    groups, diffs = grouped_summary(rows, a.key)
    rio.write_table(out / "grouped.csv", ["group", "column", "n", "mean", "median"],
                    [[g, c, s["n"], s["mean"], s["median"]]
                     for g, cols in groups.items() for c, s in cols.items()])
    rio.write_table(out / "differences.csv", ["group_a", "group_b", "column", "difference"],
                    [[g1, g2, c, d] for (g1, g2), cols in diffs.items() for c, d in cols.items()])
    return ["grouped.csv", "differences.csv"]


def cmd_synth_manifold(a, out):
    spec = ManifoldSpec(a.kind.replace("-", "_"), a.dim, a.ambient, a.n, a.noise, a.seed)
    rio.write_matrix(sample_manifold(spec), out / "manifold.rgm")
    return ["manifold.rgm"]


def cmd_synth_teacher(a, out):
    X = rio.read_matrix(a.embeddings)
    t = linear_teacher(X, a.targets, a.noise, a.seed, fraction=a.fraction)
    rio.write_matrix(t.Y, out / "responses.rgm")
    rio.write_matrix(t.W_true, out / "weights.rgm")
    rio.write_table(out / "explainable_fraction.csv", ["target", "fraction"],
                    list(enumerate(t.explainable_fraction)))
    return ["responses.rgm", "weights.rgm", "explainable_fraction.csv"]


def cmd_synth_trials(a, out):
    files, truth = [], []
    for j in range(a.targets):
        ts = repeated_trials(a.images, a.counts, a.s2, a.noise_var, seed=a.seed + j)
        name = f"trials_{j:03d}.rgm"
        rio.write_matrix(ts.trials, out / name)
        files.append(name)
        truth.append([j, ts.counts.A, ts.counts.B, ts.counts.C, ts.n_eff, ts.true_ceiling])
    rio.write_table(out / "truth.csv", ["target", "A", "B", "C", "n_eff", "true_ceiling"], truth)
    return files + ["truth.csv"]


def cmd_synth_zoo(a, out):
    spread = a.spread if len(a.spread) != 1 else a.spread[0]
    spec = ZooSpec(n_models=a.models, base_dim=a.base_dim, ambient_dim=a.ambient,
                   id_spread=tuple(spread) if isinstance(spread, list) else spread,
                   coupling=a.coupling, n_samples=a.samples, seed=a.seed)
    zoo = synth_zoo(spec)
    files = []
    entries = []
    for e in zoo.manifest:
        rel = f"embeddings/{e['name']}.rgm"
        rio.write_matrix(zoo.embeddings[e["name"]], out / rel)
        files.append(rel)
        entries.append(dict(e, embedding_path=rel))
    rio.write_json(out / "manifest.json", {"models": entries})
    rio.write_table(out / "truth.csv", ["name", "noise_level", "planted_accuracy"],
                    [[t["name"], t["noise_level"], t["planted_accuracy"]] for t in zoo.truth])
    return files + ["manifest.json", "truth.csv"]


# ------------------------------------------------------------------ parser


def _common(p, seed=True, backend=False, out=True):
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if backend:
        p.add_argument("--backend", choices=["numpy", "numba", "kdtree"], default=None,
                       help="k-NN kernel (default: numba unless REPGEOM_DISABLE_NUMBA is set)")
    if out:
        p.add_argument("--out", default="repgeom_out", help="output directory")


def _align_flags(p):
    p.add_argument("--pcs", type=int, default=DEFAULTS["pcs"])
    p.add_argument("--test-frac", type=float, default=DEFAULTS["test_fraction"])
    p.add_argument("--lambda-grid", type=_lambda_grid, default=list(DEFAULT_LAMBDA_GRID),
                   help="comma list or logspace:LO:HI:N")
    p.add_argument("--folds", type=int, default=DEFAULTS["folds"],
                   help="CV folds for penalty selection")
    p.add_argument("--lambda-mode", choices=["per-target", "shared"], default="per-target")
    p.add_argument("--standardize", action="store_true", help="scale features before PCA")
    _common(p)


def _id_flags(p):
    p.add_argument("--embeddings", type=_path, required=True)
    p.add_argument("--estimator", choices=["mle", "mom", "mada"], default="mle")
    p.add_argument("--aggregate", choices=["mean", "harmonic"], default="mean")


def build_parser():
    parser = _Parser(prog="repgeom", description="Intrinsic dimension and alignment toolkit.")
    parser.add_argument("--version", action="version", version=f"repgeom {__version__}")
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = top.add_parser("id", help="intrinsic dimension").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("estimate")
    _id_flags(p)
    p.add_argument("--k", type=int, default=DEFAULTS["k"])
    p.add_argument("--mode", choices=["global", "local-knn", "random-subsample"], default="global")
    p.add_argument("--neighborhood", type=int, default=DEFAULTS["neighborhood"])
    p.add_argument("--subsample", type=int, default=DEFAULTS["subsample"])
    _common(p, backend=True)
    p.set_defaults(func=cmd_id_estimate)
    p = g.add_parser("sweep")
    _id_flags(p)
    p.add_argument("--k-list", type=_ints, default=[10, 20, 50, 100, 200, 500, 1000])
    _common(p, seed=False, backend=True)
    p.set_defaults(func=cmd_id_sweep)
    p = g.add_parser("correlation-dim")
    p.add_argument("--embeddings", type=_path, required=True)
    p.add_argument("--epsilons", type=_floats, default=None,
                   help="comma list; default spans low quantiles of pair distances")
    _common(p, backend=True)
    p.set_defaults(func=cmd_id_correlation_dim)

    g = top.add_parser("align", help="alignment pipelines").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("brain")
    p.add_argument("--embeddings", type=_path, required=True)
    p.add_argument("--responses", type=_path, required=True)
    p.add_argument("--ceilings", type=_path, default=None,
                   help="per-target noise ceilings (CSV with 'nc' column, or RGM vector)")
    _align_flags(p)
    p.set_defaults(func=cmd_align_brain)
    p = g.add_parser("models")
    p.add_argument("--a", type=_path, required=True)
    p.add_argument("--b", type=_path, required=True)
    _align_flags(p)
    p.set_defaults(func=cmd_align_models)
    p = g.add_parser("reference")
    p.add_argument("--manifest", type=_path, required=True)
    _align_flags(p)
    p.set_defaults(func=cmd_align_reference)

    p = top.add_parser("ceiling", help="noise ceilings")
    p.add_argument("--trials", type=_path, nargs="+", default=None,
                   help="RGM trial matrices (repeats x images, NaN for absent repeats)")
    p.add_argument("--counts", type=_ints, default=None, help="A,B,C")
    p.add_argument("--s2", type=float, default=None)
    _common(p, seed=False)
    p.set_defaults(func=cmd_ceiling, cmd=None)

    g = top.add_parser("stats", help="analysis battery").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("correlate")
    p.add_argument("--table", type=_path, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--method", choices=["pearson", "spearman", "both"], default="both")
    p.add_argument("--permutations", type=int, default=0,
                   help="permutation count for p-values; 0 uses the t approximation")
    _common(p)
    p.set_defaults(func=cmd_stats_correlate)
    p = g.add_parser("bin")
    p.add_argument("--table", type=_path, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--bins", type=int, default=DEFAULTS["bins"])
    _common(p, seed=False)
    p.set_defaults(func=cmd_stats_bin)
    p = g.add_parser("within-group")
    p.add_argument("--matrix", type=_path, required=True, help="square score matrix")
    p.add_argument("--table", type=_path, required=True, help="one row per matrix index")
    p.add_argument("--x", required=True, help="column to bin by")
    p.add_argument("--bins", type=int, default=DEFAULTS["bins"])
    _common(p, seed=False)
    p.set_defaults(func=cmd_stats_within_group)
    p = g.add_parser("grouped")
    p.add_argument("--table", type=_path, required=True)
    p.add_argument("--key", required=True)
    _common(p, seed=False)
    p.set_defaults(func=cmd_stats_grouped)

    g = top.add_parser("synth", help="synthetic data").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("manifold")
    p.add_argument("--kind", choices=["hypercube", "sphere", "swiss-roll", "gaussian"],
                   default="hypercube")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--ambient", type=int, default=10)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--noise", type=float, default=0.0)
    _common(p)
    p.set_defaults(func=cmd_synth_manifold)
    p = g.add_parser("teacher")
    p.add_argument("--embeddings", type=_path, required=True)
    p.add_argument("--targets", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--fraction", type=float, default=None,
                   help="target explainable fraction; overrides --noise")
    _common(p)
    p.set_defaults(func=cmd_synth_teacher)
    p = g.add_parser("trials")
    p.add_argument("--images", type=int, default=500)
    p.add_argument("--counts", type=_floats, default=[1.0, 1.0, 1.0],
                   help="relative shares of images shown 3,2,1 times")
    p.add_argument("--s2", type=float, default=1.0)
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--targets", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_synth_trials)
    p = g.add_parser("zoo")
    p.add_argument("--models", type=int, default=20)
    p.add_argument("--base-dim", type=int, default=4)
    p.add_argument("--ambient", type=int, default=12)
    p.add_argument("--samples", type=int, default=1500)
    p.add_argument("--spread", type=_floats, default=[0.5],
                   help="max noise level, or one level per model")
    p.add_argument("--coupling", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_synth_zoo)

    p = top.add_parser("rerun", help="repeat a run from its meta.json sidecar")
    p.add_argument("sidecar", type=_path)
    p.add_argument("--out", default=None, help="output directory (default: the recorded one)")
    p.set_defaults(func=None, cmd=None)
    return parser


def _command_name(ns):
    return " ".join(v for v in (ns.group, ns.cmd) if v)


def _handlers():
    parser = build_parser()
    table = {}
    for action in parser._subparsers._group_actions:
        for gname, gparser in action.choices.items():
            sub = [a for a in gparser._actions if isinstance(a, argparse._SubParsersAction)]
            if not sub:
                table[gname] = gparser.get_default("func")
                continue
            for cname, cparser in sub[0].choices.items():
                table[f"{gname} {cname}"] = cparser.get_default("func")
    return table


def _versions():
    import scipy

    try:
        import numba
        nb = numba.__version__
    except ImportError:  # pragma: no cover
        nb = None
    return {"repgeom": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": nb}


def execute(command, config, out):
    """Run one command from a resolved config dict and write its sidecar."""
    func = _handlers().get(command)
    if func is None:
        raise UsageError(f"unknown command {command!r}")
    ns = argparse.Namespace(**config)
    if "backend" in config:
        ns.backend = resolve_backend(config["backend"])
        config = dict(config, backend=ns.backend)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = func(ns, out)
    rio.write_json(out / "meta.json", {
        "command": command,
        "config": config,
        "outputs": outputs,
        "defaults": DEFAULTS,
        "notes": METHOD_NOTES.get(command, ""),
        "versions": _versions(),
        "default_backend": default_backend(),
    })
    return outputs


def _config_from(ns):
    skip = {"func", "group", "cmd", "out"}
    return {k: v for k, v in vars(ns).items() if k not in skip}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = build_parser().parse_args(argv)
        if ns.group == "rerun":
            meta = json.loads(Path(ns.sidecar).read_text(encoding="utf-8"))
            out = ns.out if ns.out is not None else Path(ns.sidecar).parent
            execute(meta["command"], meta["config"], out)
        else:
            execute(_command_name(ns), _config_from(ns), ns.out)
    except UsageError as exc:
        print(f"UsageError: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (RepgeomError, OSError, ValueError, KeyError) as exc:
        print(f"{type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _one_line(exc):
    return " ".join(str(exc).split())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
