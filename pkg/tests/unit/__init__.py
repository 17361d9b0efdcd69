"""Unit tests for apitc modules."""
