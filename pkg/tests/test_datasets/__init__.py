"""This module contains all tests for the interaction datasets of dcfrec."""
