"""Classical common-cause models of EPR correlations."""

__version__ = "0.1.0"
