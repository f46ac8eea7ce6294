"""Process-verified evaluation harness for tool-using multimodal agents."""

__version__ = "0.1.0"
