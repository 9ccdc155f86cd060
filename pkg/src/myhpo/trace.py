"""Per-iteration run traces and their CSV serialization.

A trace is the complete record of one solver run: header metadata (solver
name, label, seed, PRNG identifier, divergence flag, and every parameter
that influenced the run) followed by one row per iteration. Residual and
dual-norm columns are filled only by the consensus solver; other solvers
leave them empty. ``loss_eval_count`` counts merit-function evaluations
made by backtracking; plain loss evaluations recorded for reporting are
not algorithm cost and are not counted.

On disk a trace is a CSV file whose leading lines are ``# key = value``
comments, followed by the fixed column header. Floats are written with
``repr`` so rereading is bit-exact and rerunning a config reproduces
byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TRACE_COLUMNS = (
    "iter",
    "n_grad",
    "lambda",
    "train_loss",
    "val_loss",
    "test_loss",
    "r_norm",
    "s_norm",
    "u_norm",
    "loss_eval_count",
)


@dataclass
class TraceRow:
    iter: int
    n_grad: int
    lam: float
    train_loss: float
    val_loss: float
    test_loss: float | None = None
    r_norm: float | None = None
    s_norm: float | None = None
    u_norm: float | None = None
    loss_eval_count: int = 0

    def as_cells(self) -> list[str]:
        return [
            str(self.iter),
            str(self.n_grad),
            repr(self.lam),
            repr(self.train_loss),
            repr(self.val_loss),
            "" if self.test_loss is None else repr(self.test_loss),
            "" if self.r_norm is None else repr(self.r_norm),
            "" if self.s_norm is None else repr(self.s_norm),
            "" if self.u_norm is None else repr(self.u_norm),
            str(self.loss_eval_count),
        ]


def _cell_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)


@dataclass
class RunTrace:
    solver: str
    label: str
    seed: int
    meta: dict = field(default_factory=dict)
    prng: str | None = None
    diverged: bool = False
    note: str = ""
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        if self.rows and row.n_grad <= self.rows[-1].n_grad:
            raise ValueError("n_grad must be strictly increasing")
        self.rows.append(row)

    @property
    def final_row(self) -> TraceRow | None:
        return self.rows[-1] if self.rows else None

    def final_finite_row(self) -> TraceRow | None:
        """Last row whose train and validation losses are finite."""
        import math

        for row in reversed(self.rows):
            if math.isfinite(row.train_loss) and math.isfinite(row.val_loss):
                return row
        return None

    def write_csv(self, path):
        lines = [
            f"# solver = {self.solver}",
            f"# label = {self.label}",
            f"# seed = {self.seed}",
            f"# prng = {self.prng or ''}",
            f"# diverged = {'true' if self.diverged else 'false'}",
            f"# note = {self.note}",
        ]
        for key in sorted(self.meta):
            lines.append(f"# meta.{key} = {self.meta[key]}")
        lines.append(",".join(TRACE_COLUMNS))
        for row in self.rows:
            lines.append(",".join(row.as_cells()))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path) -> "RunTrace":
        header: dict[str, str] = {}
        meta: dict[str, str] = {}
        rows: list[TraceRow] = []
        saw_columns = False
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    key, _, value = body.partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key.startswith("meta."):
                        meta[key[len("meta."):]] = value
                    else:
                        header[key] = value
                    continue
                if not saw_columns:
                    if tuple(line.split(",")) != TRACE_COLUMNS:
                        raise ValueError(f"unexpected trace columns in {path}")
                    saw_columns = True
                    continue
                cells = line.split(",")
                rows.append(
                    TraceRow(
                        iter=int(cells[0]),
                        n_grad=int(cells[1]),
                        lam=float(cells[2]),
                        train_loss=float(cells[3]),
                        val_loss=float(cells[4]),
                        test_loss=_cell_float(cells[5]),
                        r_norm=_cell_float(cells[6]),
                        s_norm=_cell_float(cells[7]),
                        u_norm=_cell_float(cells[8]),
                        loss_eval_count=int(cells[9]),
                    )
                )
        trace = cls(
            solver=header.get("solver", ""),
            label=header.get("label", ""),
            seed=int(header.get("seed", "0")),
            meta=meta,
            prng=header.get("prng") or None,
            diverged=header.get("diverged", "false") == "true",
            note=header.get("note", ""),
        )
        trace.rows = rows
        return trace
