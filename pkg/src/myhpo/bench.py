"""Benchmark harness: experiment configs, budgeted runs, summaries, curves.

An experiment is described by a flat key-value text file (``key = value``
per line, ``#`` comments). It names one problem, a shared gradient budget,
a repetition count, and any number of solver blocks; every parameter has a
documented default that is echoed into the resolved-config log and into
each trace header, so no run depends on a hidden value.

Schema (defaults in parentheses):

    problem.kind            synthetic | csv | idx            (required)
    problem.loss            least_squares (default) | logistic
    problem.n, problem.d    synthetic: table size            (required)
    problem.kappa           synthetic condition number       (10000.0)
    problem.noise_std       synthetic target noise           (0.1)
    problem.path            csv: file path                   (required)
    problem.target          csv: target column name          (required)
    problem.images/labels   idx: file paths                  (required)
    problem.class_a/class_b map two raw labels to +1/-1      (optional; csv/idx)
    problem.train_fraction  (0.5)    problem.val_fraction    (0.25)
    problem.counts          "n_train,n_val,n_test", overrides fractions
    problem.stratified      true | false                     (false)
    budget_n_g              shared gradient budget           (required, >= 2)
    repetitions             (1)
    seed                    base seed; run r uses seed + r   (0)
    output_dir              (bench_out)
    solver[i].name          sho | myhpo_c | myhpo_bt | myhpo_full | random | grid
    solver[i].label         column label                     (name)
    solver[i].<param>       see SOLVER_DEFAULTS below

Bi-level solvers stop before exceeding the budget. Search blocks train
each of their ``n_s`` candidates for ``n_t`` steps with ``n_t`` defaulting
to ``budget_n_g // 2`` (the bi-level outer-iteration count), so ``n_s = 2``
spends exactly the shared budget and larger ``n_s`` deliberately
oversubscribes it; the oversubscription is visible in the trace ledger.

Each (solver, repetition) pair writes one ``*.trace.csv`` file. Rerunning
a config reproduces the files byte for byte.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .data import (
    RawTable,
    SplitSpec,
    SyntheticSpec,
    load_csv,
    load_idx,
    make_classification,
    split,
    synthesize,
)
from .model import LEAST_SQUARES, LOGISTIC, LossSpec
from .moreau import MyhpoConfig, MyhpoState, myhpo_run
from .rng import PRNG_ID
from .search import (
    CandidateEval,
    SearchConfig,
    grid_candidates,
    random_candidates,
    search_run,
)
from .sho import ShoConfig, ShoState, sho_run
from .trace import RunTrace, TraceRow


class SchemaError(ValueError):
    """A config key is missing, unknown, or holds an invalid value."""

    def __init__(self, key: str, reason: str):
        self.key = key
        super().__init__(f"{key}: {reason}")


class UnknownSolver(ValueError):
    """A solver block names an unregistered solver."""


SOLVER_NAMES = ("sho", "myhpo_c", "myhpo_bt", "myhpo_full", "random", "grid")

# per-solver parameter defaults; None means "budget_n_g // 2 at resolve time"
SOLVER_DEFAULTS = {
    "sho": {
        "alpha": 0.01, "beta": 0.01, "sigma": 1e-4,
        "lambda0": -1.0, "max_iters": None,
    },
    "myhpo": {
        "rho": 1.0, "alpha": 0.05, "beta": 0.1, "delta": 0.5,
        "lambda0": -1.0, "eps_tol": 1e-10, "max_iters": None,
        "max_halvings": 30, "inner_tol": 1e-8, "inner_max_iters": 500,
        "fresh_w_gradient": False,
    },
    "search": {
        "lo": -10.0, "hi": 5.0, "n_s": 2, "n_t": None, "alpha_train": 0.001,
    },
}

_PROBLEM_DEFAULTS = {
    "loss": LEAST_SQUARES,
    "kappa": 10000.0,
    "noise_std": 0.1,
    "train_fraction": 0.5,
    "val_fraction": 0.25,
    "stratified": False,
}


@dataclass
class SolverBlock:
    name: str
    label: str
    params: dict


@dataclass
class ExperimentConfig:
    problem: dict
    budget_n_g: int
    repetitions: int
    seed: int
    output_dir: str
    solvers: list[SolverBlock]
    resolved: dict = field(default_factory=dict)
    config_hash: str = ""


def _parse_flat(text: str) -> dict[str, str]:
    flat: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SchemaError(f"line {line_no}", f"expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key in flat:
            raise SchemaError(key, "duplicate key")
        flat[key] = value
    return flat


def _coerce(key: str, value, kind):
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError):
        raise SchemaError(key, f"cannot read {value!r} as {kind.__name__}") from None


_PROBLEM_TYPES = {
    "kind": str, "loss": str, "n": int, "d": int, "kappa": float,
    "noise_std": float, "path": str, "target": str, "images": str,
    "labels": str, "class_a": float, "class_b": float,
    "train_fraction": float, "val_fraction": float, "counts": str,
    "stratified": bool,
}

_SOLVER_TYPES = {
    "name": str, "label": str,
    "alpha": float, "beta": float, "delta": float, "sigma": float, "rho": float,
    "lambda0": float, "eps_tol": float, "max_iters": int, "max_halvings": int,
    "inner_tol": float, "inner_max_iters": int, "fresh_w_gradient": bool,
    "lo": float, "hi": float, "n_s": int, "n_t": int, "alpha_train": float,
}


def _defaults_for(name: str) -> dict:
    if name == "sho":
        return dict(SOLVER_DEFAULTS["sho"])
    if name.startswith("myhpo"):
        return dict(SOLVER_DEFAULTS["myhpo"])
    return dict(SOLVER_DEFAULTS["search"])


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and resolve a config from its text; see the module docstring."""
    flat = _parse_flat(text)

    problem: dict = {}
    solver_raw: dict[int, dict] = {}
    top: dict = {}
    for key, value in flat.items():
        if key.startswith("problem."):
            sub = key[len("problem."):]
            if sub not in _PROBLEM_TYPES:
                raise SchemaError(key, "unknown problem key")
            problem[sub] = _coerce(key, value, _PROBLEM_TYPES[sub])
        elif key.startswith("solver["):
            head, _, sub = key.partition("].")
            idx_text = head[len("solver["):]
            if not sub or not idx_text.isdigit():
                raise SchemaError(key, "expected solver[<index>].<param>")
            if sub not in _SOLVER_TYPES:
                raise SchemaError(key, "unknown solver key")
            solver_raw.setdefault(int(idx_text), {})[sub] = _coerce(
                key, value, _SOLVER_TYPES[sub]
            )
        elif key in ("budget_n_g", "repetitions", "seed"):
            top[key] = _coerce(key, value, int)
        elif key == "output_dir":
            top[key] = value
        else:
            raise SchemaError(key, "unknown key")

    if "budget_n_g" not in top:
        raise SchemaError("budget_n_g", "required")
    budget = top["budget_n_g"]
    if budget < 2:
        raise SchemaError("budget_n_g", f"must be at least 2, got {budget}")
    repetitions = top.get("repetitions", 1)
    if repetitions < 1:
        raise SchemaError("repetitions", f"must be at least 1, got {repetitions}")
    seed = top.get("seed", 0)
    output_dir = top.get("output_dir", "bench_out")

    problem = _resolve_problem(problem)
    solvers = _resolve_solvers(solver_raw, budget)

    resolved = {"budget_n_g": budget, "repetitions": repetitions,
                "seed": seed, "output_dir": output_dir}
    for k, v in sorted(problem.items()):
        resolved[f"problem.{k}"] = v
    for i, block in enumerate(solvers):
        resolved[f"solver[{i}].name"] = block.name
        resolved[f"solver[{i}].label"] = block.label
        for k, v in sorted(block.params.items()):
            resolved[f"solver[{i}].{k}"] = v
    # output_dir is echoed but not hashed: it does not influence results,
    # so the same experiment in two directories produces identical traces
    digest = hashlib.sha256(
        "\n".join(f"{k} = {v}" for k, v in sorted(resolved.items())
                  if k != "output_dir").encode()
    ).hexdigest()[:12]

    return ExperimentConfig(
        problem=problem, budget_n_g=budget, repetitions=repetitions, seed=seed,
        output_dir=output_dir, solvers=solvers, resolved=resolved, config_hash=digest,
    )


def parse_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _resolve_problem(problem: dict) -> dict:
    if "kind" not in problem:
        raise SchemaError("problem.kind", "required")
    kind = problem["kind"]
    if kind not in ("synthetic", "csv", "idx"):
        raise SchemaError("problem.kind", f"unknown kind {kind!r}")
    out = dict(_PROBLEM_DEFAULTS)
    out.update(problem)
    if out["loss"] not in (LEAST_SQUARES, LOGISTIC):
        raise SchemaError("problem.loss", f"unknown loss {out['loss']!r}")
    required = {"synthetic": ("n", "d"), "csv": ("path", "target"),
                "idx": ("images", "labels")}[kind]
    for key in required:
        if key not in out:
            raise SchemaError(f"problem.{key}", f"required for kind {kind}")
    has_classes = "class_a" in out or "class_b" in out
    if has_classes and not ("class_a" in out and "class_b" in out):
        raise SchemaError("problem.class_a", "class_a and class_b must be given together")
    if kind == "synthetic" and has_classes:
        raise SchemaError("problem.class_a", "class mapping does not apply to synthetic data")
    if kind == "synthetic" and out["loss"] == LOGISTIC:
        raise SchemaError("problem.loss", "the synthetic generator produces regression targets")
    if out["loss"] == LOGISTIC and kind != "synthetic" and not has_classes:
        raise SchemaError("problem.class_a", "logistic problems need a class pair")
    if "counts" in out:
        parts = str(out["counts"]).split(",")
        if len(parts) != 3:
            raise SchemaError("problem.counts", "expected three comma-separated counts")
        out["counts"] = tuple(_coerce("problem.counts", p.strip(), int) for p in parts)
    # drop keys that do not apply to this kind so the echo stays honest
    scoped = {"synthetic": ("n", "d", "kappa", "noise_std"),
              "csv": ("path", "target", "class_a", "class_b"),
              "idx": ("images", "labels", "class_a", "class_b")}[kind]
    common = ("kind", "loss", "train_fraction", "val_fraction", "counts", "stratified")
    return {k: v for k, v in out.items() if k in scoped + common}


def _resolve_solvers(solver_raw: dict[int, dict], budget: int) -> list[SolverBlock]:
    if not solver_raw:
        raise SchemaError("solver[0].name", "at least one solver block is required")
    indices = sorted(solver_raw)
    if indices != list(range(len(indices))):
        raise SchemaError(f"solver[{indices[-1]}]", "solver indices must be contiguous from 0")
    blocks = []
    labels = set()
    for i in indices:
        raw = solver_raw[i]
        if "name" not in raw:
            raise SchemaError(f"solver[{i}].name", "required")
        name = raw.pop("name")
        if name not in SOLVER_NAMES:
            raise UnknownSolver(f"solver[{i}].name: {name!r} is not one of {SOLVER_NAMES}")
        label = raw.pop("label", name)
        if label in labels:
            raise SchemaError(f"solver[{i}].label", f"duplicate label {label!r}")
        labels.add(label)
        params = _defaults_for(name)
        for key, value in raw.items():
            if key not in params:
                raise SchemaError(f"solver[{i}].{key}", f"not a parameter of {name}")
            params[key] = value
        for key in ("max_iters", "n_t"):
            if key in params and params[key] is None:
                params[key] = budget // 2
        blocks.append(SolverBlock(name=name, label=label, params=params))
    return blocks


_TABLE_CACHE: dict[tuple, RawTable] = {}


def _load_table(problem: dict, run_seed: int) -> RawTable:
    kind = problem["kind"]
    if kind == "synthetic":
        return synthesize(SyntheticSpec(
            n=problem["n"], d=problem["d"], kappa=problem["kappa"],
            noise_std=problem["noise_std"], seed=run_seed,
        ))
    key = (kind, problem.get("path"), problem.get("target"),
           problem.get("images"), problem.get("labels"))
    if key not in _TABLE_CACHE:
        if kind == "csv":
            _TABLE_CACHE[key] = load_csv(problem["path"], problem["target"])
        else:
            _TABLE_CACHE[key] = load_idx(problem["images"], problem["labels"])
    table = _TABLE_CACHE[key]
    if "class_a" in problem:
        table = make_classification(table, problem["class_a"], problem["class_b"])
    return table


def _build_problem(problem: dict, run_seed: int):
    table = _load_table(problem, run_seed)
    spec = LossSpec(problem["loss"])
    split_spec = SplitSpec(
        train_fraction=problem["train_fraction"],
        val_fraction=problem["val_fraction"],
        counts=problem.get("counts"),
        seed=run_seed,
        stratified=problem["stratified"],
    )
    train, val, test = split(table, split_spec)
    meta = {f"problem.{k}": v for k, v in sorted(problem.items())}
    meta.update({
        "loss": problem["loss"],
        "split_sizes": f"{train.n}/{val.n}/{test.n}",
        "var_train": repr(float(np.var(train.y))),
        "var_val": repr(float(np.var(val.y))),
        "var_test": repr(float(np.var(test.y))),
    })
    return spec, train, val, test, meta


def _rank(c: CandidateEval):
    return c.rank_key()


def _search_trace(block: SolverBlock, result, scfg: SearchConfig,
                  label: str, seed: int, meta: dict) -> RunTrace:
    """Incumbent trace: row i reports the best candidate seen so far."""
    trace = RunTrace(solver=block.name, label=label, seed=seed, meta=meta,
                     prng=PRNG_ID if block.name == "random" else None)
    best = None
    n_grad = 0
    for i, cand in enumerate(result.candidates, start=1):
        n_grad += scfg.n_t
        if best is None or _rank(cand) < _rank(best):
            best = cand
        trace.append(TraceRow(
            iter=i, n_grad=n_grad, lam=best.lam,
            train_loss=best.train_loss, val_loss=best.val_loss,
            test_loss=best.test_loss,
        ))
    trace.diverged = result.winner.diverged
    return trace


def _run_block(block: SolverBlock, spec, train, val, test,
               budget: int, run_seed: int, rep: int, block_index: int,
               base_meta: dict, config_hash: str) -> RunTrace:
    p = block.params
    meta = dict(base_meta)
    meta.update({
        "block_index": block_index,
        "repetition": rep,
        "run_seed": run_seed,
        "config_hash": config_hash,
    })
    if block.name == "sho":
        cfg = ShoConfig(alpha=p["alpha"], beta=p["beta"], sigma=p["sigma"],
                        max_iters=p["max_iters"], seed=run_seed)
        init = ShoState.initial(train.d, lam0=p["lambda0"])
        return sho_run(init, spec, train, val, cfg, budget,
                       test=test, label=block.label, meta=meta)
    if block.name.startswith("myhpo"):
        variant = {"myhpo_c": "simplified_constant",
                   "myhpo_bt": "simplified_backtracking",
                   "myhpo_full": "full"}[block.name]
        cfg = MyhpoConfig(
            rho=p["rho"], alpha=p["alpha"], beta=p["beta"], delta=p["delta"],
            variant=variant, max_iters=p["max_iters"], eps_tol=p["eps_tol"],
            max_halvings=p["max_halvings"], inner_tol=p["inner_tol"],
            inner_max_iters=p["inner_max_iters"],
            fresh_w_gradient=p["fresh_w_gradient"],
        )
        init = MyhpoState.initial(train.d, lam0=p["lambda0"])
        return myhpo_run(init, spec, train, val, cfg, budget,
                         test=test, label=block.label, meta=meta, seed=run_seed)
    scfg = SearchConfig(lo=p["lo"], hi=p["hi"], n_s=p["n_s"], n_t=p["n_t"],
                        alpha_train=p["alpha_train"], seed=run_seed)
    candidates = grid_candidates(scfg) if block.name == "grid" else random_candidates(scfg)
    meta.update({k: p[k] for k in ("lo", "hi", "n_s", "n_t", "alpha_train")})
    meta["budget"] = budget
    result = search_run(spec, candidates, train, val, test, scfg)
    meta["diverged_candidates"] = sum(c.diverged for c in result.candidates)
    return _search_trace(block, result, scfg, block.label, run_seed, meta)


def _safe_name(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "-" for ch in label)


def run_experiment(cfg: ExperimentConfig, write: bool = True):
    """Run every solver block for every repetition under the shared budget.

    Returns ``(traces, summary)``. With ``write=True`` each trace lands in
    ``cfg.output_dir`` as ``<label>__rep<r>.trace.csv`` next to the
    resolved-config log; rerunning reproduces the files byte for byte.
    A failing solver block never aborts the experiment: the failure is
    recorded in its trace note instead.
    """
    traces: list[RunTrace] = []
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        log_path = os.path.join(cfg.output_dir, "config_resolved.txt")
        with open(log_path, "w", encoding="utf-8") as fh:
            for k, v in sorted(cfg.resolved.items()):
                fh.write(f"{k} = {v}\n")
            fh.write(f"config_hash = {cfg.config_hash}\n")
    for rep in range(cfg.repetitions):
        run_seed = cfg.seed + rep
        spec, train, val, test, base_meta = _build_problem(cfg.problem, run_seed)
        base_meta["budget_n_g"] = cfg.budget_n_g
        for i, block in enumerate(cfg.solvers):
            try:
                trace = _run_block(block, spec, train, val, test, cfg.budget_n_g,
                                   run_seed, rep, i, base_meta, cfg.config_hash)
            except Exception as exc:  # keep the experiment alive
                trace = RunTrace(solver=block.name, label=block.label, seed=run_seed,
                                 meta=dict(base_meta, block_index=i, repetition=rep,
                                           run_seed=run_seed, config_hash=cfg.config_hash),
                                 diverged=True, note=f"aborted: {type(exc).__name__}: {exc}")
            traces.append(trace)
            if write:
                fname = f"{_safe_name(block.label)}__rep{rep:03d}.trace.csv"
                trace.write_csv(os.path.join(cfg.output_dir, fname))
    return traces, summarize_traces(traces)


@dataclass
class SolverSummary:
    label: str
    solver: str
    runs: int
    train_mean: float
    train_std: float
    val_mean: float
    val_std: float
    test_mean: float
    test_std: float
    mean_iters: float
    diverged: int


@dataclass
class SummaryTable:
    entries: list[SolverSummary]


def _final_values(trace: RunTrace):
    row = trace.final_finite_row()
    if row is None:
        return math.nan, math.nan, math.nan, 0
    test = row.test_loss if row.test_loss is not None else math.nan
    return row.train_loss, row.val_loss, test, row.iter


def _normalizers(trace: RunTrace):
    if trace.meta.get("loss") == LEAST_SQUARES:
        return (float(trace.meta["var_train"]), float(trace.meta["var_val"]),
                float(trace.meta["var_test"]))
    return 1.0, 1.0, 1.0


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def summarize_traces(traces: list[RunTrace]) -> SummaryTable:
    """Aggregate final losses per solver label, in block order.

    Regression losses are divided by the matching split's target variance
    (taken from the trace header) before averaging. A diverged run
    contributes its last finite row; a rowless trace contributes NaN.
    """
    def order_key(trace: RunTrace):
        return (int(trace.meta.get("block_index", 0)), int(trace.meta.get("repetition", 0)))

    groups: dict[str, list[RunTrace]] = {}
    for trace in sorted(traces, key=order_key):
        groups.setdefault(trace.label, []).append(trace)

    entries = []
    for label, group in groups.items():
        finals = {"train": [], "val": [], "test": []}
        iters = []
        for trace in group:
            tr, vl, te, it = _final_values(trace)
            nt, nv, ns = _normalizers(trace)
            finals["train"].append(tr / nt)
            finals["val"].append(vl / nv)
            finals["test"].append(te / ns)
            iters.append(float(it))
        train_mean, train_std = _mean_std(finals["train"])
        val_mean, val_std = _mean_std(finals["val"])
        test_mean, test_std = _mean_std(finals["test"])
        entries.append(SolverSummary(
            label=label, solver=group[0].solver, runs=len(group),
            train_mean=train_mean, train_std=train_std,
            val_mean=val_mean, val_std=val_std,
            test_mean=test_mean, test_std=test_std,
            mean_iters=float(np.mean(iters)) if iters else 0.0,
            diverged=sum(t.diverged for t in group),
        ))
    return SummaryTable(entries=entries)


def _fmt_cell(mean: float, std: float) -> str:
    if math.isnan(mean):
        return "n/a"
    return f"{mean * 100:.2f} ± {std * 100:.2f}"


def render_summary(table: SummaryTable, fmt: str = "aligned-text") -> str:
    """Render the summary grid: solver columns, loss rows, values x 1e-2."""
    labels = [e.label for e in table.entries]
    rows = [
        ["train (x1e-2)"] + [_fmt_cell(e.train_mean, e.train_std) for e in table.entries],
        ["val (x1e-2)"] + [_fmt_cell(e.val_mean, e.val_std) for e in table.entries],
        ["test (x1e-2)"] + [_fmt_cell(e.test_mean, e.test_std) for e in table.entries],
        ["mean iters"] + [f"{e.mean_iters:.1f}" for e in table.entries],
        ["diverged"] + [str(e.diverged) for e in table.entries],
        ["runs"] + [str(e.runs) for e in table.entries],
    ]
    header = ["metric"] + labels
    if fmt == "csv":
        return "\n".join(",".join(cells) for cells in [header] + rows) + "\n"
    if fmt != "aligned-text":
        raise ValueError(f"unknown summary format {fmt!r}")
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells))
             for cells in [header] + rows]
    return "\n".join(lines) + "\n"


def emit_summary(table: SummaryTable, fmt: str, path) -> str:
    """Write the rendered summary to ``path`` and return the path."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_summary(table, fmt))
    return str(path)


def render_curves(traces: list[RunTrace], x_axis: str = "n_grad") -> str:
    """Long-format CSV of per-iteration losses, ready for plotting tools.

    The ``diverged`` flag is set on the last recorded row of a diverged
    run; everything after that point was truncated.
    """
    if x_axis not in ("iter", "n_grad"):
        raise ValueError(f"x_axis must be 'iter' or 'n_grad', got {x_axis!r}")
    lines = ["solver,seed,x,train_loss,val_loss,diverged"]
    for trace in traces:
        for i, row in enumerate(trace.rows):
            flag = "true" if trace.diverged and i == len(trace.rows) - 1 else "false"
            x = row.iter if x_axis == "iter" else row.n_grad
            lines.append(f"{trace.label},{trace.seed},{x},"
                         f"{row.train_loss!r},{row.val_loss!r},{flag}")
    return "\n".join(lines) + "\n"


def emit_curves(traces: list[RunTrace], x_axis: str, path) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_curves(traces, x_axis))
    return str(path)


def read_traces(directory) -> list[RunTrace]:
    """Load every ``*.trace.csv`` under ``directory`` in deterministic order."""
    names = sorted(n for n in os.listdir(directory) if n.endswith(".trace.csv"))
    return [RunTrace.read_csv(os.path.join(directory, n)) for n in names]


def load_reference_results() -> list[dict]:
    """Published benchmark numbers shipped for side-by-side comparison.

    These values are quoted from the original publication of the
    algorithms benchmarked here; they are display-only context and are
    never recomputed or asserted against.
    """
    import csv as _csv

    text = resources.files("myhpo").joinpath("reference_results.csv").read_text()
    reader = _csv.DictReader(text.splitlines())
    return list(reader)


def render_reference(dataset: str | None = None) -> str:
    rows = load_reference_results()
    if dataset is not None:
        matching = [r for r in rows if r["dataset"] == dataset]
        if not matching:
            names = sorted({r["dataset"] for r in rows})
            raise ValueError(f"unknown reference dataset {dataset!r}; have {names}")
        rows = matching
    cols = ["dataset", "method", "setting", "train", "val", "test", "n_g"]
    grid = [cols] + [[r[c] for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in grid) for i in range(len(cols))]
    body = "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in grid
    )
    return "published reference values (x1e-2), not recomputed:\n" + body + "\n"
