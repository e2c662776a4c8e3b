"""
Evaluation output: an aligned table for the terminal and one JSON record per image
"""
import json
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.table import Table

from hct_sod.models.reports import EvaluationSummary
from hct_sod.utilities.file_handler import PathLike, ensure_dir


def summary_table(summary: EvaluationSummary) -> Table:
    table = Table(title=f"Saliency metrics ({summary.images} images)")
    table.add_column("id", justify="left")
    for name in ("MAE", "maxF", "S", "Emax"):
        table.add_column(name, justify="right")
    for row in summary.per_image:
        table.add_row(row.id, f"{row.mae:.4f}", f"{row.maxF:.4f}", f"{row.S:.4f}", f"{row.Emax:.4f}")
    table.add_section()
    table.add_row("mean", f"{summary.mae:.4f}", f"{summary.max_f:.4f}",
                  f"{summary.s_measure:.4f}", f"{summary.e_max:.4f}", style="bold")
    return table


def render_table(summary: EvaluationSummary, console: Optional[Console] = None) -> str:
    """Print the table and return its plain-text rendering"""
    console = console or Console(record=True)
    console.print(summary_table(summary))
    return console.export_text() if console.record else ""


def write_metrics_jsonl(summary: EvaluationSummary, path: PathLike) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in summary.per_image:
            f.write(json.dumps(row.model_dump()) + "\n")
    return path


def write_report(summary: EvaluationSummary, out_dir: PathLike, console: Optional[Console] = None) -> Path:
    """metrics.jsonl plus summary.txt (the aligned table) under out_dir"""
    out_dir = ensure_dir(out_dir)
    write_metrics_jsonl(summary, out_dir / "metrics.jsonl")
    text = render_table(summary, console or Console(record=True, width=100))
    (out_dir / "summary.txt").write_text(text, encoding="utf-8")
    return out_dir
