"""Command-line interface components."""