"""Test suite for the apitc workbench."""
