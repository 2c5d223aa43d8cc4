"""Figure rendering for sweep results.

One PNG per experiment kind, derived from the same aggregate tables that go
to CSV, so the figures and the delimited output always agree.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first

from .experiments import SweepResult, Table  # noqa: E402


def _num(s: str) -> float:
    return float(s) if s not in ("", None) else float("nan")


def _group_rows(table: Table, key_cols: list[str]) -> dict[tuple, list[dict]]:
    groups: dict[tuple, list[dict]] = {}
    for row in table.to_dicts():
        key = tuple(row.get(c, "") for c in key_cols)
        groups.setdefault(key, []).append(row)
    return groups


def _label(key_cols: list[str], key: tuple) -> str:
    parts = [f"{c}={v}" for c, v in zip(key_cols, key) if v != ""]
    return ", ".join(parts) if parts else "all"


def _line_figure(table: Table, key_cols: list[str], x_col: str, y_col: str,
                 xlabel: str, ylabel: str, path: Path,
                 logy: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for key, rows in sorted(_group_rows(table, key_cols).items()):
        xs = [_num(r[x_col]) for r in rows]
        ys = [_num(r[y_col]) for r in rows]
        order = sorted(range(len(xs)), key=xs.__getitem__)
        ax.plot([xs[i] for i in order], [ys[i] for i in order],
                marker="o", markersize=3.5, linewidth=1.2,
                label=_label(key_cols, key))
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if len(ax.get_lines()) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def _plot_coherence(result: SweepResult, outdir: Path) -> list[Path]:
    paths = []
    if "exceedance" in result.tables:
        paths.append(_line_figure(
            result.tables["exceedance"],
            ["mt", "mr", "n", "waveform", "delta_theta"], "mu0", "prob",
            "coherence threshold", "exceedance probability",
            outdir / "coherence_exceedance.png"))
    return paths


def _plot_recovery(result: SweepResult, outdir: Path) -> list[Path]:
    return [_line_figure(
        result.tables["summary"],
        ["waveform", "targets", "delta_theta", "snr_db"],
        "m_per_df_actual", "phi_mean",
        "samples per degree of freedom", "mean relative recovery error",
        outdir / "recovery_error.png", logy=True)]


def _plot_doa(result: SweepResult, outdir: Path) -> list[Path]:
    table = result.tables["summary"]
    key_cols = ["waveform", "snr_db"]
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for key, rows in sorted(_group_rows(table, key_cols).items()):
        xs = [_num(r["delta_theta"]) for r in rows]
        order = sorted(range(len(xs)), key=xs.__getitem__)
        xs = [xs[i] for i in order]
        for col, style, tag in (("resolution_prob", "-", "completed"),
                                ("resolution_prob_full", "--", "full data")):
            ys = [_num(rows[i][col]) for i in order]
            ax.plot(xs, ys, style, marker="o", markersize=3.5,
                    linewidth=1.2, label=f"{_label(key_cols, key)} ({tag})")
    ax.set_xlabel("DOA separation (deg)")
    ax.set_ylabel("resolution probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "doa_resolution.png"
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return [path]


def _plot_scheme_compare(result: SweepResult, outdir: Path) -> list[Path]:
    return [_line_figure(
        result.tables["summary"], ["scheme", "delta_theta"],
        "size", "phi_mean",
        "transmitters / samples per pulse", "mean relative recovery error",
        outdir / "scheme_compare.png", logy=True)]


def _plot_wave_spectrum(result: SweepResult, outdir: Path) -> list[Path]:
    table = result.tables["spectrum"]
    power_cols = [c for c in table.columns if c.startswith("power_")]
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    rows = table.to_dicts()
    omega = [_num(r["omega"]) for r in rows]
    for col in power_cols:
        ax.plot(omega, [_num(r[col]) for r in rows], linewidth=1.0,
                label=col.removeprefix("power_"))
    ax.set_xlabel("spatial frequency")
    ax.set_ylabel("max column power")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "wave_spectrum.png"
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return [path]


_PLOTTERS = {
    "coherence": _plot_coherence,
    "recovery": _plot_recovery,
    "doa": _plot_doa,
    "scheme_compare": _plot_scheme_compare,
    "wave_spectrum": _plot_wave_spectrum,
}


def render_figures(result: SweepResult, outdir: str | Path) -> list[Path]:
    """Render the figures for a sweep result; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return _PLOTTERS[result.config.kind](result, outdir)
