"""Test suite for Async Consensus Sim."""
