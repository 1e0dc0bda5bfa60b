"""Tests for the verification layer."""
