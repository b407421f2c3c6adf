"""Environment defaults and run-config loading."""
