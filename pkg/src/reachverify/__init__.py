"""Set-based safety verification of vehicle motion with a learned one-step reachability operator."""

__version__ = "0.1.0"
