"""This module contains all tests for the GMF backbone."""
