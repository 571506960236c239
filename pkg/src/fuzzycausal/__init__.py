"""Classical and fuzzy average treatment effects with a Mamdani inference engine."""

__version__ = "0.1.0"
