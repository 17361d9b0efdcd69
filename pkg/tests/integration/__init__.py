"""Corpus-scale acceptance tests for apitc."""
