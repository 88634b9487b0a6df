"""Reference values shared across dcfrec."""
