"""Result writers for trajectories, event logs, summaries and matrix dumps."""
