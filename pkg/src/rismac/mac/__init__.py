"""MAC protocol implementations: centralized, distributed and hybrid."""
