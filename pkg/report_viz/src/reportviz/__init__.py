"""reportviz: figure regeneration from aggregate trace CSVs."""

from .render import FigureSpec, render
from .schema import AggregateTable, SchemaError, read_aggregate_csv

__version__ = "0.1.0"
