# views/report.py - terminal rendering of tables and the verification report

from __future__ import annotations

import pandas as pd
from rich.console import Console
from rich.table import Table

from models.report import CheckStatus, VerificationReport

STATUS_STYLE = {
    CheckStatus.PASS: "green",
    CheckStatus.FAIL: "red",
    CheckStatus.ERROR: "bold magenta",
}


def render_report(console: Console, report: VerificationReport) -> None:
    table = Table(title="Verification", show_lines=False)
    table.add_column("check")
    table.add_column("status")
    table.add_column("measured", justify="right")
    table.add_column("bound", justify="right")
    table.add_column("detail", overflow="fold")
    for r in report.get_all():
        style = STATUS_STYLE[r.status]
        table.add_row(r.name, f"[{style}]{r.status.value}[/]", f"{r.measured:.3e}", f"{r.bound:.3e}", r.detail)
    console.print(table)
    counts = report.counts_by_status()
    console.print(" • ".join(f"{k}: {v}" for k, v in counts.items()))


def render_frame(console: Console, frame: pd.DataFrame, title: str, max_rows: int = 12) -> None:
    """First and last rows of a numeric table."""
    table = Table(title=f"{title} ({len(frame)} rows)")
    for col in frame.columns:
        table.add_column(str(col), justify="right")
    if len(frame) > max_rows:
        half = max_rows // 2
        shown = pd.concat([frame.head(half), frame.tail(max_rows - half)])
    else:
        shown = frame
    for _, row in shown.iterrows():
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
    console.print(table)
