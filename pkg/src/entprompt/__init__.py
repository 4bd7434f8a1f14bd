"""Entity-balanced multi-modal prompting for report generation, at desk scale."""

__version__ = "0.1.0"
