"""One runner per CLI subcommand; each returns artifacts and check verdicts."""
