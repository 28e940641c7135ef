"""Training, evaluation, verification, visualization and downstream services."""
