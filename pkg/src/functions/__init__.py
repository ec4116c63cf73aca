"""
Functions module - training, evaluation and the status-dict entry points
the CLI tools render
"""
