"""Hidden-policy attribute-based encryption with offline/online encryption
and cloud-side policy updates."""

__version__ = "0.1.0"
