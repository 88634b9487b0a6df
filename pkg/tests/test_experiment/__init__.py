"""This module contains all tests for the experiment commands."""
