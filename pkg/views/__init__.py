"""
Views module for the command-line front end.
Each module implements one subcommand as a ``show_*(args) -> int`` function.
"""
