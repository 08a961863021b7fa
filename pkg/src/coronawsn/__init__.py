"""Corona-clustered WSN lifetime simulator and receiver-side sparse image denoiser."""

__version__ = "0.1.0"
