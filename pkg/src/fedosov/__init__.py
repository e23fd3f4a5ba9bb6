"""Truncated Fedosov quantization of End(E) with a Hermitian involution."""
