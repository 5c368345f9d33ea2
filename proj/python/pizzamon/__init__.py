"""Pizza fridge monitoring simulator: simulate runs, verify artifacts, price and size them."""

from ._pizzamon import (
    PizzamonError,
    cost,
    energy_savings,
    parse_duration,
    simulate,
    verify_ledger,
    verify_report,
)

__all__ = [
    "PizzamonError",
    "cost",
    "energy_savings",
    "parse_duration",
    "simulate",
    "verify_ledger",
    "verify_report",
]
