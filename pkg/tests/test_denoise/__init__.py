"""This module contains all tests for the denoising trainers."""
