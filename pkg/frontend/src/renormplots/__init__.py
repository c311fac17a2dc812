"""Figure rendering for experiment trace CSVs and run manifests."""

from .figures import (
    DETAIL_WINDOW,
    KINDS,
    TRACE_COLUMNS,
    VELOCITY_COLUMNS,
    FigureSpec,
    RenderResult,
    SchemaError,
    load_table,
    render,
    spec_from_dict,
)

__all__ = [
    "DETAIL_WINDOW",
    "KINDS",
    "TRACE_COLUMNS",
    "VELOCITY_COLUMNS",
    "FigureSpec",
    "RenderResult",
    "SchemaError",
    "load_table",
    "render",
    "spec_from_dict",
]
