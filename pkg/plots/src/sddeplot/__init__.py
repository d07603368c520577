"""Presentation layer for the convergence-study CSV files: the
order-versus-correlation figure with group error bars and the log-log
error diagnostic.  Reads files only; never recomputes the statistics it
displays."""

__version__ = "0.1.0"

from .figures import (ErrorSeries, FigureSpec, OrderSeries, SchemaError,
                      plot_loglog_errors, plot_order_vs_rho)

__all__ = [
    "__version__",
    "ErrorSeries", "FigureSpec", "OrderSeries", "SchemaError",
    "plot_loglog_errors", "plot_order_vs_rho",
]
