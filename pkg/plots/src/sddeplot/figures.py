"""Render figures from the convergence-study CSV files.

Two plots are supported: fitted strong order against noise correlation
(one marker per correlation value with the group standard deviation as
the error bar, schemes overlaid), and the log-log RMS-error-versus-step
diagnostic with a least-squares line per correlation value.

Every plotted data value is taken verbatim from the CSV; the only
derived quantities are the slope and intercept of the diagnostic's
guide line, which the error table does not carry.  Both plot functions
return the plotted data so callers can verify the round trip.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(Exception):
    """Input CSV is empty or does not carry the expected columns."""


@dataclass(frozen=True)
class FigureSpec:
    """Presentation settings for one rendered figure.

    Parameters
    ----------
    out_path : str
        Image file to write; the extension selects the format
        (``.svg`` recommended).
    xlabel, ylabel, title : str
        Axis labels and title; empty strings select plot defaults.
    scheme : str or None
        If set, plot only rows whose scheme column matches.
    """

    out_path: str
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    scheme: str | None = None


@dataclass(frozen=True)
class OrderSeries:
    """Fitted orders for one scheme, sorted by correlation."""

    scheme: str
    rho: tuple[float, ...]
    gamma: tuple[float, ...]
    gamma_std: tuple[float, ...]


@dataclass(frozen=True)
class ErrorSeries:
    """RMS errors for one (scheme, correlation), sorted by step size.

    ``slope`` and ``log_intercept`` describe the least-squares line
    through (log dt, log rms_error); they are None when fewer than two
    positive points are available.
    """

    scheme: str
    rho: float
    dt: tuple[float, ...]
    rms_error: tuple[float, ...]
    slope: float | None
    log_intercept: float | None


def _read_rows(path, required) -> list[dict[str, str]]:
    """Read a CSV as dicts, failing loudly on schema problems."""
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        missing = sorted(set(required) - set(reader.fieldnames))
        if missing:
            raise SchemaError(f"{path}: missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _to_float(path, row, column) -> float:
    try:
        return float(row[column])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad value {row[column]!r} in column "
                          f"{column!r}") from exc


def _select_scheme(path, rows, scheme):
    if scheme is None:
        return rows
    picked = [row for row in rows if row["scheme"] == scheme]
    if not picked:
        raise SchemaError(f"{path}: no rows for scheme {scheme!r}")
    return picked


def plot_order_vs_rho(orders_path, spec: FigureSpec) -> dict[str, OrderSeries]:
    """Draw fitted order against correlation with group error bars.

    Parameters
    ----------
    orders_path : path-like
        An ``orders.csv`` as written by the study CLI (columns
        ``scheme,rho,gamma,gamma_std`` at least).
    spec : FigureSpec
        Output path and presentation settings.

    Returns
    -------
    dict
        Scheme name mapped to the plotted :class:`OrderSeries`; values
        are the CSV contents verbatim, sorted by correlation.  Rows
        whose ``gamma`` is not finite (no usable fit) are skipped.
    """
    rows = _select_scheme(orders_path,
                          _read_rows(orders_path,
                                     ("scheme", "rho", "gamma", "gamma_std")),
                          spec.scheme)
    grouped: dict[str, list[tuple[float, float, float]]] = {}
    for row in rows:
        gamma = _to_float(orders_path, row, "gamma")
        if not math.isfinite(gamma):
            continue
        grouped.setdefault(row["scheme"], []).append(
            (_to_float(orders_path, row, "rho"), gamma,
             _to_float(orders_path, row, "gamma_std")))
    if not grouped:
        raise SchemaError(f"{orders_path}: no rows with a finite order")

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    result = {}
    for scheme, points in grouped.items():
        points.sort()
        rho, gamma, std = (tuple(col) for col in zip(*points))
        ax.errorbar(rho, gamma, yerr=std, marker="o", capsize=3,
                    linestyle="-", label=scheme)
        result[scheme] = OrderSeries(scheme, rho, gamma, std)
    ax.set_xlabel(spec.xlabel or "noise correlation rho")
    ax.set_ylabel(spec.ylabel or "fitted strong order gamma")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    Path(spec.out_path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path)
    plt.close(fig)
    return result


def plot_loglog_errors(errors_path,
                       spec: FigureSpec) -> dict[tuple[str, float], ErrorSeries]:
    """Draw the log-log RMS error against step size, one series per
    (scheme, correlation), each with a least-squares guide line.

    Parameters
    ----------
    errors_path : path-like
        An ``errors.csv`` as written by the study CLI (columns
        ``scheme,rho,dt,rms_error`` at least).  The per-group rows all
        repeat the ensemble RMS, so duplicate (scheme, rho, dt) entries
        collapse to the first occurrence.
    spec : FigureSpec
        Output path and presentation settings.

    Returns
    -------
    dict
        ``(scheme, rho)`` mapped to the plotted :class:`ErrorSeries`.
    """
    rows = _select_scheme(errors_path,
                          _read_rows(errors_path,
                                     ("scheme", "rho", "dt", "rms_error")),
                          spec.scheme)
    series: dict[tuple[str, float], dict[float, float]] = {}
    for row in rows:
        key = (row["scheme"], _to_float(errors_path, row, "rho"))
        dt = _to_float(errors_path, row, "dt")
        series.setdefault(key, {}).setdefault(
            dt, _to_float(errors_path, row, "rms_error"))

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    result = {}
    for (scheme, rho), by_dt in series.items():
        dt = tuple(sorted(by_dt))
        rms = tuple(by_dt[step] for step in dt)
        positive = [(a, b) for a, b in zip(dt, rms)
                    if b > 0 and math.isfinite(b)]
        slope = intercept = None
        if len(positive) >= 2:
            x = np.log([a for a, _ in positive])
            y = np.log([b for _, b in positive])
            slope, intercept = (float(v) for v in np.polyfit(x, y, 1))
        marks = ax.plot([a for a, _ in positive], [b for _, b in positive],
                        "o", label=f"{scheme}, rho={rho:g}")
        if slope is not None:
            ends = np.array([positive[0][0], positive[-1][0]])
            ax.plot(ends, np.exp(intercept) * ends ** slope, "--",
                    color=marks[0].get_color(), linewidth=1)
        result[(scheme, rho)] = ErrorSeries(scheme, rho, dt, rms,
                                            slope, intercept)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel or "step size dt")
    ax.set_ylabel(spec.ylabel or "RMS strong error")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    Path(spec.out_path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path)
    plt.close(fig)
    return result
