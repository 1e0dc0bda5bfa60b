"""Schedules, topology processes and the event-driven simulator."""
