"""FR2 downlink link-adaptation simulator and drive-test statistics."""

__version__ = "0.1.0"
