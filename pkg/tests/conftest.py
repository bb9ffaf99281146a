# Ensures the tests directory itself is importable (for the toyworld helpers).
