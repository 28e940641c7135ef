"""Core runtime: settings, errors, tensors, RNG and checkpoint container."""
