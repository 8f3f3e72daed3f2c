"""Command-line layer: config models, scene building, subcommands"""
