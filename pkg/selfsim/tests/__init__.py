"""Tests for the selfsim package."""
