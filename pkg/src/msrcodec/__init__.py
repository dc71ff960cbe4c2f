"""Multi-stream residual speech codec and token TTS toolkit."""

__version__ = "0.1.0"
